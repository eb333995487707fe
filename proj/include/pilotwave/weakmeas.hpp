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
 * Weak position measurement followed by a delayed strong measurement:
 * von Neumann pointer coupling, post-selected pointer statistics, the
 * operational velocity built from them, and the comparison of weak values
 * with the actual earlier positions of the particles.
 */

#pragma once

#include "pilotwave/dynamics.hpp"
#include "pilotwave/grid.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace pw {

/// Gaussian pointer phi(y) ~ exp(-y^2 / 4 sigma^2) on its own axis.
struct PointerModel {
    double sigma = 2.0;
    Axis y_axis{-32.0, 32.0, 256};
};

/// sigma must be at least this many system-grid spacings.
inline constexpr double kMinPointerSpacings = 8.0;
/// Largest delay accepted by the operational velocity fit.
inline constexpr double kMaxWeakDelay = 0.5;

/// Joint (x, y) state of particle and pointer. Only x carries a kinetic term.
struct CompoundState {
    WaveFunction psi;
    double t = 0.0;
};

/// Psi(x, y, 0) = psi(x) phi(y - x).
[[nodiscard]] CompoundState couple(const WaveFunction &system, const PointerModel &pointer);
/// Free evolution along x for time tau; the pointer coordinate is untouched.
[[nodiscard]] CompoundState evolve_compound(const CompoundState &state, double tau);

/// Conditional pointer mean E(y | x = node) for every x node of the state.
[[nodiscard]] Eigen::VectorXd conditional_pointer_mean(const CompoundState &state);

/// Finite-sigma weak value at X: the pointer mean predicted by the system
/// wavefunction alone, Re sum f_a* f_b x_b g_ab / Re sum f_a* f_b g_ab with
/// f = row X of exp(-i tau H0) applied to psi and g_ab = exp(-(x_a-x_b)^2/8 sigma^2).
[[nodiscard]] double smoothed_weak_value(const WaveFunction &system, double sigma, double tau,
                                         double X);
/// sigma -> infinity limit: Re <X|U x|psi> / <X|U psi> with U = exp(-i tau H0).
[[nodiscard]] Complex ideal_weak_value(const WaveFunction &system, double tau, double X);

struct WeakBin {
    double lo = 0.0;
    double hi = 0.0;
    /// Grid node at the bin centre; the analytic point value refers to it.
    double center = 0.0;
    std::size_t population = 0;
    /// Mean strong-measurement result X_tau over the bin.
    double x_mean = 0.0;
    /// Bin-averaged conditional pointer mean.
    double pointer_mean = 0.0;
    double pointer_se = 0.0;
    /// Mean of (X_tau - y) and its error; numerator of the velocity estimate.
    double lag_mean = 0.0;
    double lag_se = 0.0;
    /// Analytic mode: E(y | x = center) at the centre node.
    double point_pointer_mean = 0.0;
    bool low_statistics = false;
};

enum class WeakMode { Analytic, MonteCarlo };

struct WeakRun {
    WeakMode mode = WeakMode::Analytic;
    double tau = 0.0;
    double sigma = 0.0;
    std::string law;
    std::uint64_t seed = 0;
    std::size_t n = 0;
    std::size_t min_population = 200;
    std::vector<WeakBin> bins;
};

/// Bins of width `width` centred on grid nodes covering [lo, hi].
[[nodiscard]] std::vector<double> node_centred_edges(const Axis &axis, double lo, double hi,
                                                    double width);

[[nodiscard]] WeakRun weak_run_analytic(const WaveFunction &system, const PointerModel &pointer,
                                        double tau, const std::vector<double> &edges);

enum class SamplingMode {
    /// (X_tau, y) drawn from |Psi_tau|^2; x(0) by integrating backwards.
    Conditional,
    /// (x(0), y(0)) drawn from |Psi_0|^2 and integrated forwards to tau.
    Forward,
};

struct MonteCarloOptions {
    std::size_t n = 100000;
    std::uint64_t seed = 1;
    SamplingMode sampling = SamplingMode::Conditional;
    std::size_t min_population = 200;
    int bootstrap_resamples = 200;
    /// Guidance snapshots and integration steps per delay tau.
    int snapshots_per_delay = 10;
    int steps_per_delay = 20;
    double tolerance = 1e-7;
};

/// One run of the protocol: readouts plus the particle's actual x(0).
struct MatchedRecord {
    std::size_t id = 0;
    double x_tau = 0.0;
    double pointer = 0.0;
    double x0 = 0.0;
};

struct MatchedEnsemble {
    std::string law;
    std::uint64_t seed = 0;
    double tau = 0.0;
    std::vector<MatchedRecord> records;
    std::vector<TrajectoryFailure> failures;
};

struct WeakMonteCarlo {
    WeakRun run;
    MatchedEnsemble ensemble;
};

/// `law` acts in the compound (x, y) configuration space; a ModifiedLaw's
/// current is a field on that plane.
[[nodiscard]] WeakMonteCarlo weak_run_monte_carlo(const WaveFunction &system,
                                                  const PointerModel &pointer,
                                                  const DynamicsLaw &law, double tau,
                                                  const std::vector<double> &edges,
                                                  const MonteCarloOptions &options);

struct VelocityProbe {
    double x = 0.0;
    double velocity = 0.0;
    double se = 0.0;
    /// Largest |residual| of the linear fit over the ladder.
    double residual = 0.0;
    double slope = 0.0;
    bool defined = true;
};

struct OperationalVelocityField {
    std::vector<double> taus;
    std::vector<VelocityProbe> probes;
    std::string mode;
};

/// Per-bin weighted linear fit of lag/tau against tau, extrapolated to 0.
/// Analytic runs use the centre-node values. Probes whose bin is flagged in
/// any run are marked undefined. Raises nonlinearity-detected when a
/// residual exceeds threshold + 3 SE.
[[nodiscard]] OperationalVelocityField operational_velocity(const std::vector<WeakRun> &runs,
                                                            double nonlinearity_threshold = 0.05);

struct CorBin {
    double center = 0.0;
    std::size_t population = 0;
    double weak_value = 0.0;
    double actual_x0 = 0.0;
    double delta = 0.0;
    double delta_se = 0.0;
    bool significant = false;
};

struct CorReport {
    std::string law;
    double tau = 0.0;
    std::vector<CorBin> bins;
    std::size_t failures = 0;

    /// Fraction of populated bins with |delta| > 3 SE.
    [[nodiscard]] double significant_fraction() const;
};

/// Delta = E(y | X_tau) - mean x(0) per populated bin, with paired bootstrap SE.
[[nodiscard]] CorReport cor_test(const WeakRun &run, const MatchedEnsemble &ensemble,
                                 int bootstrap_resamples = 200);

struct LadderFit {
    double intercept = 0.0;
    double intercept_se = 0.0;
    double slope = 0.0;
    double max_residual = 0.0;
};

/// Weighted least squares y = a + b t (+ c t^2 when degree is 2). Empty or
/// non-positive errors mean unit weights, and then the intercept error is zero.
[[nodiscard]] LadderFit fit_ladder(const std::vector<double> &t, const std::vector<double> &y,
                                   const std::vector<double> &se, int degree = 1);

void write_weak_run_csv(const WeakRun &run, const CorReport *cor, const std::string &path);
void write_velocity_csv(const OperationalVelocityField &field, const std::vector<double> &reference,
                        const std::string &path);

} // namespace pw
