// Copyright 2026 The pilotwave Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at

//     http://www.apache.org/licenses/LICENSE-2.0

// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/**
 * @file
 * Particle dynamics driven by a wavefunction: the standard guidance law,
 * divergence-free modifications of it, Born resampling and Nelson-type
 * diffusion. Includes ensemble sampling and trajectory integration over a
 * stored sequence of guidance snapshots.
 */

#pragma once

#include "pilotwave/grid.hpp"
#include "pilotwave/sampling.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace pw {

/// Disc excluded from a field's domain.
struct Singularity {
    Position center = Position::Zero();
    double radius = 0.0;
};

/// Closed-form current density j (units of |psi|^2 * velocity) with
/// vanishing divergence away from its singularities.
struct DivergenceFreeField {
    std::string label = "zero";
    std::function<Eigen::Vector2d(const Position &)> rule = [](const Position &) {
        return Eigen::Vector2d::Zero().eval();
    };
    std::vector<Singularity> singularities;

    [[nodiscard]] Eigen::Vector2d operator()(const Position &p) const { return rule(p); }
    [[nodiscard]] bool excludes(const Position &p) const;
};

/// Accepted fields have max-norm divergence below this on the working grid.
inline constexpr double kDivergenceTolerance = 1e-6;

[[nodiscard]] DivergenceFreeField zero_field();
/// j = amplitude * (-(y - cy), x - cx) / |r - c|^2, excluded within
/// `exclusion_radius` of the centre.
[[nodiscard]] DivergenceFreeField rotational_field(double amplitude, const Position &center,
                                                  double exclusion_radius);
/// Circulating current j = amplitude * (dG/dy, -dG/dx) with stream function
/// G = exp(-d^T M d), d = r - center. Divergence-free everywhere; with M
/// steeper than the density's own Gaussian form, j/|psi|^2 stays bounded.
[[nodiscard]] DivergenceFreeField gaussian_vortex(double amplitude, const Position &center,
                                                 const Eigen::Matrix2d &shape);
/// Shear current j = amplitude * exp(-(y - x - offset)^2 / 2 width^2) * (1, 1).
/// Divergence-free because it depends on y - x only and points along (1, 1).
/// On a particle-pointer plane it carries a net flux across every line of
/// constant x while staying bounded across the pointer direction.
[[nodiscard]] DivergenceFreeField diagonal_shear(double amplitude, double width,
                                                double offset = 0.0);
/// Constant current along x; the only divergence-free choice in 1D.
[[nodiscard]] DivergenceFreeField uniform_current(double jx);

/// Largest |div j| over grid nodes outside the singularity discs, from a
/// five-point centred difference of the closed-form rule. The probe step
/// shrinks with the distance to the nearest singularity.
[[nodiscard]] double max_divergence(const DivergenceFreeField &field, const Grid &grid);

struct StandardLaw {};
struct ModifiedLaw {
    DivergenceFreeField current;
};
struct BornResamplingLaw {
    double resample_dt = 0.1;
};
struct NelsonLaw {
    double diffusivity = 0.5;
};

using DynamicsLaw = std::variant<StandardLaw, ModifiedLaw, BornResamplingLaw, NelsonLaw>;

/// Modified law after checking the divergence gate on `grid`.
[[nodiscard]] DynamicsLaw make_modified(DivergenceFreeField current, const Grid &grid);
[[nodiscard]] DynamicsLaw make_born_resampling(double resample_dt);
[[nodiscard]] DynamicsLaw make_nelson(double diffusivity);

[[nodiscard]] std::string law_name(const DynamicsLaw &law);
[[nodiscard]] bool is_stochastic(const DynamicsLaw &law);

/// Guidance data derived from one wavefunction at time t.
struct GuidanceSnapshot {
    double t = 0.0;
    Eigen::VectorXd density;
    Eigen::MatrixXd velocity; ///< (hbar/m) grad S per node, size() x dims
    Eigen::MatrixXd osmotic;  ///< grad ln|psi|^2, empty unless requested
    std::vector<std::uint8_t> defined;
};

struct GuidanceOptions {
    double relative_cutoff = kDefaultDensityCutoff;
    bool osmotic = false;
    /// Axes carrying a kinetic term; the velocity along other axes is zero.
    std::vector<int> kinetic_axes{0, 1};
};

[[nodiscard]] GuidanceSnapshot make_snapshot(const WaveFunction &psi, double t,
                                             const GuidanceOptions &options = {});

/// Point evaluation of the guidance data.
struct GuidanceSample {
    bool defined = false;
    Eigen::Vector2d velocity = Eigen::Vector2d::Zero();
    Eigen::Vector2d osmotic = Eigen::Vector2d::Zero();
    double density = 0.0;
};

/// Time-ordered guidance snapshots on one grid. Interpolation is bilinear in
/// space and linear in time. Shared read-only between threads.
class GuidanceSequence {
  public:
    GuidanceSequence(Grid grid, double mass, double hbar, std::vector<GuidanceSnapshot> snapshots);

    /// Snapshots of psi evolved by `evolve(previous, dt)` at t0 + k * dt.
    static GuidanceSequence
    from_evolution(const WaveFunction &psi0, double t0, double dt, int count,
                   const std::function<WaveFunction(const WaveFunction &, double)> &evolve,
                   const GuidanceOptions &options = {});

    [[nodiscard]] const Grid &grid() const { return grid_; }
    [[nodiscard]] double mass() const { return mass_; }
    [[nodiscard]] double hbar() const { return hbar_; }
    [[nodiscard]] const std::vector<GuidanceSnapshot> &snapshots() const { return snapshots_; }
    [[nodiscard]] double t_begin() const { return snapshots_.front().t; }
    [[nodiscard]] double t_end() const { return snapshots_.back().t; }
    [[nodiscard]] bool has_osmotic() const { return snapshots_.front().osmotic.size() != 0; }

    [[nodiscard]] GuidanceSample at(double t, const Position &p) const;
    [[nodiscard]] GuidanceSample at_snapshot(std::size_t index, const Position &p) const;
    /// Index of the snapshot stored at time t, if any.
    [[nodiscard]] std::optional<std::size_t> snapshot_index(double t) const;
    /// Sampler for |psi|^2 of a stored snapshot; built on first use.
    [[nodiscard]] const DensitySampler &sampler(std::size_t index) const;
    /// Builds every sampler up front so later calls are read-only.
    void prepare_samplers() const;

  private:
    Grid grid_;
    double mass_;
    double hbar_;
    std::vector<GuidanceSnapshot> snapshots_;
    mutable std::vector<std::shared_ptr<DensitySampler>> samplers_;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<Position> positions;
    std::string law;
    std::uint64_t seed = 0;

    [[nodiscard]] const Position &final_position() const { return positions.back(); }
    /// Position recorded at time t (exact stamp match).
    [[nodiscard]] std::optional<Position> position_at(double t) const;
};

struct TrajectoryFailure {
    std::size_t index = 0;
    std::string kind;
    std::string message;
};

struct Ensemble {
    std::vector<Trajectory> trajectories;
    std::string sampling = "born";
    std::uint64_t base_seed = 0;
    std::vector<TrajectoryFailure> failures;
    /// Index of each trajectory in the originally sampled ensemble.
    std::vector<std::size_t> member_index;
};

struct IntegrationOptions {
    double dt = 0.01;
    /// Local error tolerance of the step-doubling control (length units).
    double tolerance = 1e-7;
    /// Maximum number of step halvings below dt.
    int max_depth = 12;
    /// Velocity evaluations allowed per trajectory.
    long max_evaluations = 5'000'000;
    /// Record every `record_stride` steps (the endpoints are always kept).
    int record_stride = 1;
    /// Consecutive undefined evaluations tolerated before left-support.
    int undefined_patience = 3;
};

/// Velocity of `law` at x for the given wavefunction.
[[nodiscard]] Eigen::Vector2d velocity_at(const DynamicsLaw &law, const WaveFunction &psi,
                                          const Position &x,
                                          double relative_cutoff = kDefaultDensityCutoff);
/// Same, evaluated from stored guidance data.
[[nodiscard]] std::optional<Eigen::Vector2d> law_velocity(const DynamicsLaw &law,
                                                          const GuidanceSample &sample,
                                                          const Position &x);

/// n i.i.d. draws from |psi|^2. Member i uses the stream stream_seed(seed, i).
[[nodiscard]] Ensemble sample_initial(const WaveFunction &psi, std::size_t n, std::uint64_t seed);

/// Integrates one trajectory from (t0, x0) to t1. Deterministic laws use
/// classic RK4 with step-doubling refinement; Nelson uses Euler-Maruyama;
/// Born resampling redraws the position every resample_dt. Backward
/// integration (t1 < t0) is supported for deterministic laws.
[[nodiscard]] Trajectory integrate(const DynamicsLaw &law, const GuidanceSequence &guidance,
                                   const Position &x0, double t0, double t1,
                                   const IntegrationOptions &options, std::uint64_t seed = 0);

/// Integrates every member of `initial` (one position each at t0) in
/// parallel. Failed members are reported in `failures` and omitted.
[[nodiscard]] Ensemble integrate_ensemble(const DynamicsLaw &law, const GuidanceSequence &guidance,
                                          const Ensemble &initial, double t0, double t1,
                                          const IntegrationOptions &options);

struct DoubleSlitConfig {
    Axis x_axis{-25.6, 25.6, 512};
    Axis y_axis{-12.8, 25.6, 256};
    double slit_separation = 3.0;
    double packet_width_x = 0.5;
    double packet_width_y = 1.0;
    double start_y = 0.0;
    double longitudinal_k = 4.0;
    double screen_y = 6.0;
    double t_final = 2.0;
    double snapshot_dt = 0.05;
    std::size_t n = 10000;
    std::uint64_t seed = 1;
    IntegrationOptions integration{};
    double mass = 1.0;
    double hbar = 1.0;

    /// Time at which the packet's longitudinal centre reaches the screen.
    [[nodiscard]] double screen_time() const;
    void validate() const;
};

struct ScreenRecord {
    std::size_t id = 0;
    Position at_screen_time = Position::Zero();
    bool crossed = false;
    double crossing_x = 0.0;
    double crossing_t = 0.0;
};

struct DoubleSlitRun {
    Ensemble ensemble;
    std::vector<ScreenRecord> screen;
    std::shared_ptr<const GuidanceSequence> guidance;
    double screen_time = 0.0;
};

/// The initial two-packet state.
[[nodiscard]] WaveFunction double_slit_state(const DoubleSlitConfig &config);
/// Guidance snapshots of the freely evolving two-packet state.
[[nodiscard]] std::shared_ptr<const GuidanceSequence>
double_slit_guidance(const DoubleSlitConfig &config, bool osmotic);

[[nodiscard]] DoubleSlitRun run_double_slit(const DynamicsLaw &law, const DoubleSlitConfig &config);
/// Variant reusing precomputed guidance for the same config.
[[nodiscard]] DoubleSlitRun run_double_slit(const DynamicsLaw &law, const DoubleSlitConfig &config,
                                            std::shared_ptr<const GuidanceSequence> guidance);

} // namespace pw
