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

#include "pilotwave/surreal.hpp"

#include "pilotwave/error.hpp"
#include "pilotwave/rng.hpp"

#include <cmath>
#include <cstdio>
#include <optional>

namespace pw {

namespace {

constexpr double kTimeSlack = 1e-9;

double overlap(const WaveFunction &a, const WaveFunction &b) {
    return a.amplitudes().cwiseAbs().dot(b.amplitudes().cwiseAbs()) * a.grid().cell_volume();
}

bool divides(double whole, double part) {
    const double r = whole / part;
    return std::abs(r - std::round(r)) <= 1e-6 * std::max(1.0, r);
}

Arm side_of(double x) { return x < 0.0 ? Arm::L : Arm::R; }

} // namespace

std::string to_string(Arm arm) { return arm == Arm::L ? "L" : "R"; }

void SurrealConfig::validate() const {
    if (!(width > 0.0) || !(wavenumber > 0.0) || !(offset > 0.0))
        raise(ErrorKind::ConfigInvalid, "width, wavenumber and offset must be positive");
    const double w2 = std::norm(weight_l) + std::norm(weight_r);
    if (std::abs(w2 - 1.0) > 1e-9 || std::norm(weight_l) == 0.0 || std::norm(weight_r) == 0.0)
        raise(ErrorKind::ConfigInvalid, "branch weights must be non-zero with |w_l|^2 + |w_r|^2 = 1");
    if (sites_l.size() != sites_r.size())
        raise(ErrorKind::ConfigInvalid, "spin sites must come in mirrored pairs");
    for (std::size_t i = 0; i < sites_l.size(); ++i)
        if (!(sites_l[i] < 0.0) || std::abs(sites_l[i] + sites_r[i]) > 1e-12)
            raise(ErrorKind::ConfigInvalid,
                  "spin sites must sit at mirrored positions, L sites on the negative side");
    if (!(t_final > 0.0) || !(snapshot_dt > 0.0) || !divides(t_final, snapshot_dt))
        raise(ErrorKind::ConfigInvalid, "snapshot_dt must divide t_final");
    if (!(integration.dt > 0.0) || !divides(snapshot_dt, integration.dt))
        raise(ErrorKind::ConfigInvalid, "integration dt must divide snapshot_dt");
}

WaveFunction EffectiveState::joint_state(std::size_t k, const SurrealConfig &config) const {
    return superpose(branch_l[k], branch_r[k], config.weight_l, config.weight_r);
}

EffectiveState build_effective_state(const SurrealConfig &config) {
    config.validate();
    const Grid grid = Grid::line(config.axis);
    const WaveFunction phi_l = make_gaussian_packet(grid, -config.offset, config.width,
                                                    config.wavenumber, config.mass, config.hbar);
    const WaveFunction phi_r = make_gaussian_packet(grid, config.offset, config.width,
                                                    -config.wavenumber, config.mass, config.hbar);
    const double initial = overlap(phi_l, phi_r);
    if (!(initial < kDisjointOverlap))
        raise(ErrorKind::PacketsNotDisjoint,
              "initial packet overlap " + std::to_string(initial) + " is not below 1e-10");

    EffectiveState state;
    state.mode = config.mode;
    const int count = static_cast<int>(std::lround(config.t_final / config.snapshot_dt)) + 1;
    bool entered = false;
    for (int k = 0; k < count; ++k) {
        const double t = k * config.snapshot_dt;
        state.times.push_back(t);
        state.branch_l.push_back(free_evolve_axis(phi_l, 0, t));
        state.branch_r.push_back(free_evolve_axis(phi_r, 0, t));
        if (!entered && overlap(state.branch_l.back(), state.branch_r.back()) > kCheckpointOverlap)
            entered = true;
        if (!entered)
            state.checkpoint = t;
    }

    auto sequence = [&](auto &&make) {
        std::vector<GuidanceSnapshot> snaps;
        for (int k = 0; k < count; ++k)
            snaps.push_back(make_snapshot(make(static_cast<std::size_t>(k)), state.times[k]));
        return std::make_shared<const GuidanceSequence>(grid, config.mass, config.hbar,
                                                        std::move(snaps));
    };
    if (config.mode == RecordMode::SpinOnly) {
        state.joint = sequence([&](std::size_t k) { return state.joint_state(k, config); });
    } else {
        state.guide_l = sequence([&](std::size_t k) { return state.branch_l[k]; });
        state.guide_r = sequence([&](std::size_t k) { return state.branch_r[k]; });
    }
    return state;
}

SurrealRun run_surreal(const SurrealConfig &config) {
    const EffectiveState state = build_effective_state(config);
    SurrealRun run;
    run.checkpoint = state.checkpoint;
    const std::size_t last = state.times.size() - 1;

    if (config.mode == RecordMode::SpinOnly) {
        const Position axis_point(0.0, 0.0);
        for (std::size_t k = 0; k <= last; ++k) {
            const GuidanceSample s = state.joint->at_snapshot(k, axis_point);
            if (s.defined)
                run.max_axis_velocity = std::max(run.max_axis_velocity, std::abs(s.velocity.x()));
        }
    }

    // Branch density |w phi|^2 at x, linearly interpolated between nodes.
    const Grid &grid = state.branch_l.front().grid();
    auto branch_density = [&](const WaveFunction &phi, Complex w, double x) {
        const Axis &a = grid.x();
        const double u = (x - a.lo) / a.spacing();
        const int i = std::clamp(static_cast<int>(std::floor(u)), 0, a.n - 1);
        const double f = std::clamp(u - i, 0.0, 1.0);
        const double r0 = std::norm(phi.amplitudes()[i]);
        const double r1 = std::norm(phi.amplitudes()[(i + 1) % a.n]);
        return std::norm(w) * ((1 - f) * r0 + f * r1);
    };

    if (config.n == 0)
        return run;
    const WaveFunction psi0 = state.joint_state(0, config);
    const Ensemble initial = sample_initial(psi0, config.n, config.seed);
    std::vector<std::optional<SurrealOutcome>> slots(config.n);
    std::vector<std::optional<TrajectoryFailure>> errors(config.n);
    const auto count = static_cast<long>(config.n);
#pragma omp parallel for schedule(dynamic, 16)
    for (long i = 0; i < count; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        const Position x0 = initial.trajectories[idx].positions.front();
        try {
            SurrealOutcome out;
            out.id = idx;
            Arm guide = Arm::L;
            const GuidanceSequence *g = state.joint.get();
            if (config.mode == RecordMode::Configurational) {
                guide = branch_density(state.branch_l[0], config.weight_l, x0.x()) >=
                                branch_density(state.branch_r[0], config.weight_r, x0.x())
                            ? Arm::L
                            : Arm::R;
                g = guide == Arm::L ? state.guide_l.get() : state.guide_r.get();
            }
            out.trajectory = integrate(StandardLaw{}, *g, x0, 0.0, config.t_final,
                                       config.integration, stream_seed(config.seed, idx));
            const auto at_checkpoint = out.trajectory.position_at(state.checkpoint);
            if (!at_checkpoint)
                raise(ErrorKind::InvalidArgument, "checkpoint is not a recorded time");
            out.traversed = side_of(at_checkpoint->x());
            const double xf = out.trajectory.final_position().x();
            out.final_side = side_of(xf);
            for (std::size_t s = 1; s < out.trajectory.positions.size(); ++s)
                if (side_of(out.trajectory.positions[s].x()) !=
                    side_of(out.trajectory.positions[s - 1].x()))
                    out.crossed_axis = true;
            // The L-track spins flip in the phi_1 branch. The read-out finds
            // the branch that carries the final configuration.
            if (config.mode == RecordMode::Configurational)
                out.recorded = guide;
            else
                out.recorded = branch_density(state.branch_l[last], config.weight_l, xf) >=
                                       branch_density(state.branch_r[last], config.weight_r, xf)
                                   ? Arm::L
                                   : Arm::R;
            out.record.readout_time = config.t_final;
            out.record.flipped_l.assign(config.sites_l.size(), out.recorded == Arm::L);
            out.record.flipped_r.assign(config.sites_r.size(), out.recorded == Arm::R);
            slots[idx] = std::move(out);
        } catch (const Error &e) {
            errors[idx] = TrajectoryFailure{idx, std::string(pw::to_string(e.kind())), e.what()};
        }
    }
    for (std::size_t i = 0; i < config.n; ++i) {
        if (slots[i])
            run.outcomes.push_back(std::move(*slots[i]));
        else
            run.failures.push_back(*errors[i]);
    }
    return run;
}

FlipStatistics flip_statistics(const std::vector<SurrealOutcome> &outcomes) {
    if (outcomes.empty())
        raise(ErrorKind::InvalidArgument, "flip statistics need at least one outcome");
    FlipStatistics s;
    s.n = outcomes.size();
    std::size_t l = 0, agree = 0;
    for (const auto &o : outcomes) {
        l += o.recorded == Arm::L ? 1 : 0;
        agree += o.recorded == o.traversed ? 1 : 0;
    }
    const double n = static_cast<double>(s.n);
    s.fraction_l = static_cast<double>(l) / n;
    s.agreement = static_cast<double>(agree) / n;
    const double sd = std::sqrt(s.fraction_l * (1.0 - s.fraction_l) / n);
    s.lower = std::max(0.0, s.fraction_l - 3.0 * sd);
    s.upper = std::min(1.0, s.fraction_l + 3.0 * sd);
    s.degenerate = s.n < 2 || l == 0 || l == s.n;
    return s;
}

void write_surreal_csv(const SurrealRun &run, const std::string &path) {
    std::FILE *f = std::fopen(path.c_str(), "w");
    if (!f)
        raise(ErrorKind::Io, "cannot open " + path);
    std::fputs("id,x0,traversed_arm,recorded_arm,final_side,reflected,crossed_axis\n", f);
    for (const auto &o : run.outcomes) {
        std::fprintf(f, "%zu,%.12g,%s,%s,%s,%d,%d\n", o.id, o.trajectory.positions.front().x(),
                     to_string(o.traversed).c_str(), to_string(o.recorded).c_str(),
                     to_string(o.final_side).c_str(), o.traversed == o.final_side ? 1 : 0,
                     o.crossed_axis ? 1 : 0);
    }
    std::fclose(f);
}

} // namespace pw
