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
 * Two counter-propagating packets meeting in an interference region, with
 * a which-arm record made of spin sites along each arm. Compares the arm a
 * particle actually took with the arm its record reports.
 */

#pragma once

#include "pilotwave/dynamics.hpp"
#include "pilotwave/grid.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace pw {

enum class RecordMode {
    /// Spins flip without any configurational trace; the particle sees the
    /// full superposition.
    SpinOnly,
    /// Records are configurationally distinct; the branches decohere.
    Configurational,
};

enum class Arm { L, R };

[[nodiscard]] std::string to_string(Arm arm);

struct SurrealConfig {
    // Unequal branch weights break the mirror symmetry; the overlap fringes
    // (wavenumber 2k) then have to be resolved by the bilinear guidance.
    Axis axis{-48.0, 48.0, 2048};
    /// phi_1 starts at -offset moving right (L arm); phi_2 mirrors it.
    double offset = 8.0;
    double wavenumber = 4.0;
    double width = 1.0;
    Complex weight_l = 1.0 / std::sqrt(2.0);
    Complex weight_r = 1.0 / std::sqrt(2.0);
    /// Spin-site positions along each arm; only their count matters for the
    /// dynamics, which is the point of the record-neutrality check.
    std::vector<double> sites_l;
    std::vector<double> sites_r;
    RecordMode mode = RecordMode::SpinOnly;
    double t_final = 6.0;
    double snapshot_dt = 0.05;
    std::size_t n = 10000;
    std::uint64_t seed = 1;
    IntegrationOptions integration{};
    double mass = 1.0;
    double hbar = 1.0;

    void validate() const;
};

/// Overlap integral of |phi_1| |phi_2| below which packets count as disjoint.
inline constexpr double kDisjointOverlap = 1e-10;
/// Overlap above which the interference region has been entered.
inline constexpr double kCheckpointOverlap = 1e-6;

/// Evolved branch packets and the guidance they generate.
struct EffectiveState {
    RecordMode mode = RecordMode::SpinOnly;
    std::vector<double> times;
    /// Normalized branch packets phi_1, phi_2 at each time (unweighted).
    std::vector<WaveFunction> branch_l;
    std::vector<WaveFunction> branch_r;
    /// Spin-only: guidance of w_l phi_1 + w_r phi_2. Configurational: null.
    std::shared_ptr<const GuidanceSequence> joint;
    /// Configurational: guidance of each branch separately.
    std::shared_ptr<const GuidanceSequence> guide_l;
    std::shared_ptr<const GuidanceSequence> guide_r;
    /// Last snapshot time with branch overlap <= kCheckpointOverlap.
    double checkpoint = 0.0;

    /// The particle's wavefunction at snapshot k (spin-only mode).
    [[nodiscard]] WaveFunction joint_state(std::size_t k, const SurrealConfig &config) const;
};

[[nodiscard]] EffectiveState build_effective_state(const SurrealConfig &config);

struct SpinRecord {
    std::vector<bool> flipped_l;
    std::vector<bool> flipped_r;
    double readout_time = 0.0;
};

struct SurrealOutcome {
    std::size_t id = 0;
    Trajectory trajectory;
    Arm traversed = Arm::L;
    Arm recorded = Arm::L;
    Arm final_side = Arm::L;
    bool crossed_axis = false;
    SpinRecord record;
};

struct SurrealRun {
    std::vector<SurrealOutcome> outcomes;
    std::vector<TrajectoryFailure> failures;
    double checkpoint = 0.0;
    /// Largest |v| at x = 0 over all snapshots (spin-only mode).
    double max_axis_velocity = 0.0;
};

[[nodiscard]] SurrealRun run_surreal(const SurrealConfig &config);

struct FlipStatistics {
    std::size_t n = 0;
    double fraction_l = 0.0;
    /// fraction_l +- 3 binomial standard deviations.
    double lower = 0.0;
    double upper = 0.0;
    bool degenerate = false;
    double agreement = 0.0; ///< recorded == traversed rate
};

[[nodiscard]] FlipStatistics flip_statistics(const std::vector<SurrealOutcome> &outcomes);

void write_surreal_csv(const SurrealRun &run, const std::string &path);

} // namespace pw
