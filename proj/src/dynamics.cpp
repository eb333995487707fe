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

#include "pilotwave/dynamics.hpp"

#include "pilotwave/error.hpp"
#include "pilotwave/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>

namespace pw {

namespace {

constexpr double kTimeSlack = 1e-9;

// Lower node, fractional offset and upper node (periodic) of a coordinate.
struct Cell {
    int i0, i1;
    double f;
};

Cell locate(const Axis &axis, double coord) {
    const double u = (coord - axis.lo) / axis.spacing();
    int i = static_cast<int>(std::floor(u));
    double f = u - i;
    if (i < 0) {
        i = 0;
        f = 0.0;
    } else if (i >= axis.n) {
        i = axis.n - 1;
        f = 1.0;
    }
    return {i, (i + 1) % axis.n, f};
}

double distance_to_singularities(const DivergenceFreeField &field, const Position &p) {
    double d = std::numeric_limits<double>::infinity();
    for (const auto &s : field.singularities)
        d = std::min(d, (p - s.center).norm());
    return d;
}

} // namespace

bool DivergenceFreeField::excludes(const Position &p) const {
    return std::any_of(singularities.begin(), singularities.end(), [&](const Singularity &s) {
        return (p - s.center).norm() < s.radius;
    });
}

DivergenceFreeField zero_field() { return {}; }

DivergenceFreeField rotational_field(double amplitude, const Position &center,
                                     double exclusion_radius) {
    if (!(exclusion_radius > 0.0))
        raise(ErrorKind::InvalidArgument, "exclusion radius must be positive");
    DivergenceFreeField field;
    field.label = "rotational";
    field.rule = [amplitude, center](const Position &p) {
        const Eigen::Vector2d r = p - center;
        const double r2 = r.squaredNorm();
        return Eigen::Vector2d(-amplitude * r.y() / r2, amplitude * r.x() / r2);
    };
    field.singularities.push_back({center, exclusion_radius});
    return field;
}

DivergenceFreeField gaussian_vortex(double amplitude, const Position &center,
                                    const Eigen::Matrix2d &shape) {
    if (!shape.isApprox(shape.transpose()) || shape.selfadjointView<Eigen::Lower>().eigenvalues().minCoeff() <= 0.0)
        raise(ErrorKind::InvalidArgument, "vortex shape must be symmetric positive definite");
    DivergenceFreeField field;
    field.label = "gaussian-vortex";
    field.rule = [amplitude, center, shape](const Position &p) {
        const Eigen::Vector2d d = p - center;
        const Eigen::Vector2d md = shape * d;
        const double g = std::exp(-d.dot(md));
        // grad G = -2 G M d; j = A (dG/dy, -dG/dx)
        return Eigen::Vector2d(-2.0 * amplitude * g * md.y(), 2.0 * amplitude * g * md.x());
    };
    return field;
}

DivergenceFreeField diagonal_shear(double amplitude, double width, double offset) {
    if (!(width > 0.0))
        raise(ErrorKind::InvalidArgument, "shear width must be positive");
    DivergenceFreeField field;
    field.label = "diagonal-shear";
    field.rule = [amplitude, width, offset](const Position &p) {
        const double s = p.y() - p.x() - offset;
        const double g = amplitude * std::exp(-s * s / (2 * width * width));
        return Eigen::Vector2d(g, g);
    };
    return field;
}

DivergenceFreeField uniform_current(double jx) {
    DivergenceFreeField field;
    field.label = "uniform";
    field.rule = [jx](const Position &) { return Eigen::Vector2d(jx, 0.0); };
    return field;
}

double max_divergence(const DivergenceFreeField &field, const Grid &grid) {
    double spacing = grid.x().spacing();
    if (grid.dims() == 2)
        spacing = std::min(spacing, grid.y().spacing());
    double worst = 0.0;
    for (Eigen::Index k = 0; k < grid.size(); ++k) {
        const Position p = grid.point(k);
        if (field.excludes(p))
            continue;
        const double h = 1e-3 * std::min(spacing, distance_to_singularities(field, p));
        double div = 0.0;
        for (int d = 0; d < grid.dims(); ++d) {
            Position e = Position::Zero();
            e[d] = h;
            div += (-field(p + 2 * e)[d] + 8 * field(p + e)[d] - 8 * field(p - e)[d] +
                    field(p - 2 * e)[d]) /
                   (12 * h);
        }
        worst = std::max(worst, std::abs(div));
    }
    return worst;
}

DynamicsLaw make_modified(DivergenceFreeField current, const Grid &grid) {
    const double div = max_divergence(current, grid);
    if (!(div < kDivergenceTolerance))
        raise(ErrorKind::DivergenceCheckFailed,
              "field '" + current.label + "' has divergence " + std::to_string(div));
    return ModifiedLaw{std::move(current)};
}

DynamicsLaw make_born_resampling(double resample_dt) {
    if (!(resample_dt > 0.0))
        raise(ErrorKind::InvalidArgument, "resample_dt must be positive");
    return BornResamplingLaw{resample_dt};
}

DynamicsLaw make_nelson(double diffusivity) {
    if (!(diffusivity > 0.0))
        raise(ErrorKind::InvalidArgument, "diffusivity must be positive");
    return NelsonLaw{diffusivity};
}

std::string law_name(const DynamicsLaw &law) {
    static constexpr const char *names[] = {"standard", "modified", "born-resampling", "nelson"};
    return names[law.index()];
}

bool is_stochastic(const DynamicsLaw &law) {
    return std::holds_alternative<BornResamplingLaw>(law) || std::holds_alternative<NelsonLaw>(law);
}

GuidanceSnapshot make_snapshot(const WaveFunction &psi, double t, const GuidanceOptions &options) {
    const Grid &grid = psi.grid();
    const auto n = static_cast<std::size_t>(grid.size());
    GuidanceSnapshot snap;
    snap.t = t;
    snap.density = psi.density();
    const double threshold = options.relative_cutoff * snap.density.maxCoeff();
    snap.defined.assign(n, 0);
    for (std::size_t k = 0; k < n; ++k)
        snap.defined[k] = snap.density[static_cast<Eigen::Index>(k)] > threshold ? 1 : 0;
    snap.velocity = Eigen::MatrixXd::Zero(grid.size(), grid.dims());
    if (options.osmotic)
        snap.osmotic = Eigen::MatrixXd::Zero(grid.size(), grid.dims());
    const double scale = psi.hbar() / psi.mass();
    for (int d : options.kinetic_axes) {
        if (d >= grid.dims())
            continue;
        const Eigen::VectorXcd dpsi = spectral_derivative(psi, d);
        for (Eigen::Index k = 0; k < grid.size(); ++k) {
            if (!snap.defined[static_cast<std::size_t>(k)])
                continue;
            const Complex c = std::conj(psi.amplitudes()[k]) * dpsi[k];
            snap.velocity(k, d) = scale * c.imag() / snap.density[k];
            if (options.osmotic)
                snap.osmotic(k, d) = 2.0 * c.real() / snap.density[k];
        }
    }
    return snap;
}

GuidanceSequence::GuidanceSequence(Grid grid, double mass, double hbar,
                                   std::vector<GuidanceSnapshot> snapshots)
    : grid_(std::move(grid)), mass_(mass), hbar_(hbar), snapshots_(std::move(snapshots)) {
    if (snapshots_.empty())
        raise(ErrorKind::InvalidArgument, "guidance needs at least one snapshot");
    for (std::size_t i = 1; i < snapshots_.size(); ++i)
        if (!(snapshots_[i].t > snapshots_[i - 1].t))
            raise(ErrorKind::InvalidArgument, "snapshot times must increase");
    for (const auto &s : snapshots_)
        if (s.density.size() != grid_.size())
            raise(ErrorKind::GridMismatch, "snapshot does not match the grid");
    samplers_.resize(snapshots_.size());
}

GuidanceSequence GuidanceSequence::from_evolution(
    const WaveFunction &psi0, double t0, double dt, int count,
    const std::function<WaveFunction(const WaveFunction &, double)> &evolve,
    const GuidanceOptions &options) {
    if (count < 1 || !(dt > 0.0))
        raise(ErrorKind::InvalidArgument, "need count >= 1 snapshots and dt > 0");
    std::vector<GuidanceSnapshot> snaps;
    snaps.reserve(static_cast<std::size_t>(count));
    WaveFunction psi = psi0;
    for (int i = 0; i < count; ++i) {
        if (i > 0)
            psi = evolve(psi, dt);
        snaps.push_back(make_snapshot(psi, t0 + i * dt, options));
    }
    return {psi0.grid(), psi0.mass(), psi0.hbar(), std::move(snaps)};
}

GuidanceSample GuidanceSequence::at_snapshot(std::size_t index, const Position &p) const {
    const GuidanceSnapshot &s = snapshots_[index];
    const Cell cx = locate(grid_.x(), p.x());
    Cell cy{0, 0, 0.0};
    if (grid_.dims() == 2)
        cy = locate(grid_.y(), p.y());
    const Eigen::Index corners[4] = {grid_.index(cx.i0, cy.i0), grid_.index(cx.i1, cy.i0),
                                     grid_.index(cx.i0, cy.i1), grid_.index(cx.i1, cy.i1)};
    const double weights[4] = {(1 - cx.f) * (1 - cy.f), cx.f * (1 - cy.f), (1 - cx.f) * cy.f,
                               cx.f * cy.f};
    GuidanceSample out;
    const int corner_count = grid_.dims() == 2 ? 4 : 2;
    for (int c = 0; c < corner_count; ++c)
        if (!s.defined[static_cast<std::size_t>(corners[c])])
            return out;
    out.defined = true;
    for (int c = 0; c < corner_count; ++c) {
        const Eigen::Index k = corners[c];
        out.density += weights[c] * s.density[k];
        for (int d = 0; d < grid_.dims(); ++d) {
            out.velocity[d] += weights[c] * s.velocity(k, d);
            if (s.osmotic.size() != 0)
                out.osmotic[d] += weights[c] * s.osmotic(k, d);
        }
    }
    return out;
}

GuidanceSample GuidanceSequence::at(double t, const Position &p) const {
    if (t < t_begin() - kTimeSlack || t > t_end() + kTimeSlack)
        raise(ErrorKind::InvalidArgument, "time outside the guidance sequence");
    if (snapshots_.size() == 1)
        return at_snapshot(0, p);
    auto it = std::upper_bound(snapshots_.begin(), snapshots_.end(), t,
                               [](double v, const GuidanceSnapshot &s) { return v < s.t; });
    std::size_t b = static_cast<std::size_t>(it - snapshots_.begin());
    b = std::clamp<std::size_t>(b, 1, snapshots_.size() - 1);
    const std::size_t a = b - 1;
    const double w = std::clamp((t - snapshots_[a].t) / (snapshots_[b].t - snapshots_[a].t), 0.0, 1.0);
    if (w == 0.0)
        return at_snapshot(a, p);
    if (w == 1.0)
        return at_snapshot(b, p);
    const GuidanceSample sa = at_snapshot(a, p);
    if (!sa.defined)
        return sa;
    const GuidanceSample sb = at_snapshot(b, p);
    if (!sb.defined)
        return sb;
    GuidanceSample out;
    out.defined = true;
    out.density = (1 - w) * sa.density + w * sb.density;
    out.velocity = (1 - w) * sa.velocity + w * sb.velocity;
    out.osmotic = (1 - w) * sa.osmotic + w * sb.osmotic;
    return out;
}

std::optional<std::size_t> GuidanceSequence::snapshot_index(double t) const {
    for (std::size_t i = 0; i < snapshots_.size(); ++i)
        if (std::abs(snapshots_[i].t - t) < kTimeSlack)
            return i;
    return std::nullopt;
}

const DensitySampler &GuidanceSequence::sampler(std::size_t index) const {
    static std::mutex guard;
    std::lock_guard lock(guard);
    if (!samplers_[index])
        samplers_[index] = std::make_shared<DensitySampler>(grid_, snapshots_[index].density);
    return *samplers_[index];
}

void GuidanceSequence::prepare_samplers() const {
    for (std::size_t i = 0; i < snapshots_.size(); ++i)
        (void)sampler(i);
}

std::optional<Position> Trajectory::position_at(double t) const {
    for (std::size_t i = 0; i < times.size(); ++i)
        if (std::abs(times[i] - t) < kTimeSlack)
            return positions[i];
    return std::nullopt;
}

std::optional<Eigen::Vector2d> law_velocity(const DynamicsLaw &law, const GuidanceSample &sample,
                                            const Position &x) {
    if (std::holds_alternative<BornResamplingLaw>(law))
        return Eigen::Vector2d::Zero().eval();
    if (!sample.defined)
        return std::nullopt;
    if (const auto *m = std::get_if<ModifiedLaw>(&law)) {
        if (!(sample.density > 0.0))
            return std::nullopt;
        return (sample.velocity + m->current(x) / sample.density).eval();
    }
    if (const auto *n = std::get_if<NelsonLaw>(&law))
        return (sample.velocity + n->diffusivity * sample.osmotic).eval();
    return sample.velocity;
}

Eigen::Vector2d velocity_at(const DynamicsLaw &law, const WaveFunction &psi, const Position &x,
                            double relative_cutoff) {
    if (std::holds_alternative<BornResamplingLaw>(law))
        raise(ErrorKind::InvalidArgument, "born resampling has no particle velocity");
    if (const auto *m = std::get_if<ModifiedLaw>(&law); m && m->current.excludes(x))
        raise(ErrorKind::SingularityHit, "point lies inside an excluded disc");
    if (!psi.grid().contains(x))
        raise(ErrorKind::UndefinedAtNode, "point outside the grid");
    GuidanceOptions options;
    options.relative_cutoff = relative_cutoff;
    options.osmotic = std::holds_alternative<NelsonLaw>(law);
    const GuidanceSequence single(psi.grid(), psi.mass(), psi.hbar(),
                                  {make_snapshot(psi, 0.0, options)});
    const auto v = law_velocity(law, single.at(0.0, x), x);
    if (!v)
        raise(ErrorKind::UndefinedAtNode, "density below cutoff near the point");
    return *v;
}

Ensemble sample_initial(const WaveFunction &psi, std::size_t n, std::uint64_t seed) {
    Ensemble out;
    out.sampling = "born";
    out.base_seed = seed;
    out.trajectories.resize(n);
    out.member_index.resize(n);
    if (n == 0)
        return out;
    const DensitySampler sampler(psi.grid(), psi.density());
    const auto count = static_cast<long>(n);
#pragma omp parallel for schedule(static)
    for (long i = 0; i < count; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        Rng rng = make_stream(seed, idx);
        Trajectory &tr = out.trajectories[idx];
        tr.times = {0.0};
        tr.positions = {sampler.sample(rng)};
        tr.law = "initial";
        tr.seed = stream_seed(seed, idx);
        out.member_index[idx] = idx;
    }
    return out;
}

namespace {

class Evaluator {
  public:
    Evaluator(const DynamicsLaw &law, const GuidanceSequence &guidance,
              const IntegrationOptions &options)
        : law_(law), guidance_(guidance), options_(options),
          modified_(std::get_if<ModifiedLaw>(&law)) {}

    Eigen::Vector2d operator()(double t, const Position &x) {
        if (++evaluations_ > options_.max_evaluations)
            raise(ErrorKind::StepBudgetExhausted, "velocity evaluation budget exhausted");
        if (modified_ && modified_->current.excludes(x))
            raise(ErrorKind::SingularityHit, "trajectory entered an excluded disc");
        std::optional<Eigen::Vector2d> v;
        if (guidance_.grid().contains(x))
            v = law_velocity(law_, guidance_.at(t, x), x);
        if (v) {
            undefined_run_ = 0;
            last_ = *v;
            return *v;
        }
        if (++undefined_run_ >= options_.undefined_patience)
            raise(ErrorKind::LeftSupport, "trajectory left the region of defined density");
        return last_;
    }

  private:
    const DynamicsLaw &law_;
    const GuidanceSequence &guidance_;
    const IntegrationOptions &options_;
    const ModifiedLaw *modified_;
    long evaluations_ = 0;
    int undefined_run_ = 0;
    Eigen::Vector2d last_ = Eigen::Vector2d::Zero();
};

Position rk4(Evaluator &f, double t, const Position &x, double h) {
    const Eigen::Vector2d k1 = f(t, x);
    const Eigen::Vector2d k2 = f(t + h / 2, x + h / 2 * k1);
    const Eigen::Vector2d k3 = f(t + h / 2, x + h / 2 * k2);
    const Eigen::Vector2d k4 = f(t + h, x + h * k3);
    return x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
}

// Step doubling: accept the two-half-step result when it agrees with the
// full step to within tolerance, otherwise recurse on each half.
Position adaptive_step(Evaluator &f, double t, const Position &x, double h,
                       const IntegrationOptions &options, int depth) {
    const Position full = rk4(f, t, x, h);
    const Position mid = rk4(f, t, x, h / 2);
    const Position two = rk4(f, t + h / 2, mid, h / 2);
    if ((two - full).norm() <= options.tolerance || depth >= options.max_depth)
        return two + (two - full) / 15.0;
    const Position first = adaptive_step(f, t, x, h / 2, options, depth + 1);
    return adaptive_step(f, t + h / 2, first, h / 2, options, depth + 1);
}

int step_count(double t0, double t1, double dt) {
    const double span = std::abs(t1 - t0);
    const double ratio = span / dt;
    const double rounded = std::round(ratio);
    if (std::abs(ratio - rounded) > 1e-6 * std::max(1.0, ratio))
        raise(ErrorKind::InvalidArgument, "dt must divide the integration interval");
    return static_cast<int>(rounded);
}

} // namespace

Trajectory integrate(const DynamicsLaw &law, const GuidanceSequence &guidance, const Position &x0,
                     double t0, double t1, const IntegrationOptions &options, std::uint64_t seed) {
    if (!(options.dt > 0.0))
        raise(ErrorKind::InvalidArgument, "dt must be positive");
    if (options.record_stride < 1)
        raise(ErrorKind::InvalidArgument, "record stride must be at least 1");
    const bool backward = t1 < t0;
    if (backward && is_stochastic(law))
        raise(ErrorKind::InvalidArgument, "stochastic laws integrate forward only");
    for (double t : {t0, t1})
        if (t < guidance.t_begin() - kTimeSlack || t > guidance.t_end() + kTimeSlack)
            raise(ErrorKind::InvalidArgument, "integration interval outside the guidance data");
    if (!guidance.grid().contains(x0))
        raise(ErrorKind::LeftSupport, "initial position outside the grid");

    const int steps = step_count(t0, t1, options.dt);
    const double h = steps == 0 ? 0.0 : (t1 - t0) / steps;
    Trajectory tr;
    tr.law = law_name(law);
    tr.seed = seed;
    tr.times.reserve(static_cast<std::size_t>(steps / options.record_stride + 2));
    tr.positions.reserve(tr.times.capacity());
    tr.times.push_back(t0);
    tr.positions.push_back(x0);

    // Backward runs are stored in increasing time order at the end.
    auto record = [&](int i, double t, const Position &x) {
        if (i % options.record_stride == 0 || i == steps) {
            tr.times.push_back(t);
            tr.positions.push_back(x);
        }
    };

    Position x = x0;
    const bool one_dim = guidance.grid().dims() == 1;
    if (const auto *born = std::get_if<BornResamplingLaw>(&law)) {
        const double ratio = born->resample_dt / std::abs(h == 0.0 ? options.dt : h);
        const int every = static_cast<int>(std::round(ratio));
        if (every < 1 || std::abs(ratio - every) > 1e-6 * ratio)
            raise(ErrorKind::InvalidArgument, "resample_dt must be a multiple of dt");
        Rng rng(seed);
        for (int i = 1; i <= steps; ++i) {
            const double t = t0 + i * h;
            if (i % every == 0) {
                const auto idx = guidance.snapshot_index(t);
                if (!idx)
                    raise(ErrorKind::InvalidArgument, "resampling time has no stored snapshot");
                x = guidance.sampler(*idx).sample(rng);
            }
            record(i, t, x);
        }
    } else if (const auto *nelson = std::get_if<NelsonLaw>(&law)) {
        if (!guidance.has_osmotic())
            raise(ErrorKind::InvalidArgument, "nelson dynamics needs osmotic guidance data");
        Rng rng(seed);
        Evaluator drift(law, guidance, options);
        const double kick = std::sqrt(2.0 * nelson->diffusivity * h);
        for (int i = 1; i <= steps; ++i) {
            const double t = t0 + (i - 1) * h;
            Eigen::Vector2d noise(standard_normal(rng), 0.0);
            if (!one_dim)
                noise.y() = standard_normal(rng);
            x = x + drift(t, x) * h + kick * noise;
            if (!guidance.grid().contains(x))
                raise(ErrorKind::LeftSupport, "trajectory left the grid");
            record(i, t + h, x);
        }
    } else {
        Evaluator f(law, guidance, options);
        for (int i = 1; i <= steps; ++i) {
            const double t = t0 + (i - 1) * h;
            x = adaptive_step(f, t, x, h, options, 0);
            if (one_dim)
                x.y() = 0.0;
            if (!guidance.grid().contains(x))
                raise(ErrorKind::LeftSupport, "trajectory left the grid");
            record(i, t + h, x);
        }
    }
    if (backward) {
        std::reverse(tr.times.begin(), tr.times.end());
        std::reverse(tr.positions.begin(), tr.positions.end());
    }
    return tr;
}

Ensemble integrate_ensemble(const DynamicsLaw &law, const GuidanceSequence &guidance,
                            const Ensemble &initial, double t0, double t1,
                            const IntegrationOptions &options) {
    if (std::holds_alternative<BornResamplingLaw>(law))
        guidance.prepare_samplers();
    const std::size_t n = initial.trajectories.size();
    std::vector<std::optional<Trajectory>> slots(n);
    std::vector<std::optional<TrajectoryFailure>> errors(n);
    const auto count = static_cast<long>(n);
#pragma omp parallel for schedule(dynamic, 16)
    for (long i = 0; i < count; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        const std::size_t member = initial.member_index.empty() ? idx : initial.member_index[idx];
        const std::uint64_t seed = stream_seed(initial.base_seed ^ 0x5bd1e995ULL, member);
        try {
            slots[idx] = integrate(law, guidance, initial.trajectories[idx].positions.front(), t0,
                                   t1, options, seed);
        } catch (const Error &e) {
            errors[idx] = TrajectoryFailure{member, std::string(to_string(e.kind())), e.what()};
        }
    }
    Ensemble out;
    out.sampling = initial.sampling;
    out.base_seed = initial.base_seed;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t member = initial.member_index.empty() ? i : initial.member_index[i];
        if (slots[i]) {
            out.trajectories.push_back(std::move(*slots[i]));
            out.member_index.push_back(member);
        } else {
            out.failures.push_back(*errors[i]);
        }
    }
    return out;
}

double DoubleSlitConfig::screen_time() const {
    return (screen_y - start_y) * mass / (hbar * longitudinal_k);
}

void DoubleSlitConfig::validate() const {
    if (!(longitudinal_k > 0.0))
        raise(ErrorKind::ConfigInvalid, "longitudinal_k must be positive");
    if (!(screen_y > start_y))
        raise(ErrorKind::ConfigInvalid, "screen must lie ahead of the packets");
    if (!(screen_y >= y_axis.lo && screen_y < y_axis.hi))
        raise(ErrorKind::ConfigInvalid, "screen plane outside the grid");
    if (!(snapshot_dt > 0.0) || !(t_final > 0.0))
        raise(ErrorKind::ConfigInvalid, "t_final and snapshot_dt must be positive");
    const double ts = screen_time();
    if (ts > t_final + kTimeSlack)
        raise(ErrorKind::ConfigInvalid, "packets do not reach the screen before t_final");
    const double r = t_final / snapshot_dt;
    if (std::abs(r - std::round(r)) > 1e-6 * r)
        raise(ErrorKind::ConfigInvalid, "snapshot_dt must divide t_final");
    const double q = t_final / integration.dt;
    if (std::abs(q - std::round(q)) > 1e-6 * q)
        raise(ErrorKind::ConfigInvalid, "integration dt must divide t_final");
    const double s = ts / integration.dt;
    if (std::abs(s - std::round(s)) > 1e-6 * std::max(1.0, s))
        raise(ErrorKind::ConfigInvalid, "integration dt must divide the screen time");
}

WaveFunction double_slit_state(const DoubleSlitConfig &config) {
    const Grid grid = Grid::plane(config.x_axis, config.y_axis);
    const Eigen::Vector2d width(config.packet_width_x, config.packet_width_y);
    const Eigen::Vector2d k(0.0, config.longitudinal_k);
    const double half = config.slit_separation / 2;
    const WaveFunction left = make_gaussian_packet(grid, Position(-half, config.start_y), width, k,
                                                   config.mass, config.hbar);
    const WaveFunction right = make_gaussian_packet(grid, Position(half, config.start_y), width, k,
                                                    config.mass, config.hbar);
    const double w = 1.0 / std::sqrt(2.0);
    return superpose(left, right, w, w);
}

std::shared_ptr<const GuidanceSequence> double_slit_guidance(const DoubleSlitConfig &config,
                                                             bool osmotic) {
    config.validate();
    const WaveFunction psi0 = double_slit_state(config);
    const int count = static_cast<int>(std::round(config.t_final / config.snapshot_dt)) + 1;
    GuidanceOptions options;
    options.osmotic = osmotic;
    return std::make_shared<const GuidanceSequence>(GuidanceSequence::from_evolution(
        psi0, 0.0, config.snapshot_dt, count,
        [](const WaveFunction &psi, double dt) { return propagate(psi, FreeSpace{}, dt, 1); },
        options));
}

DoubleSlitRun run_double_slit(const DynamicsLaw &law, const DoubleSlitConfig &config) {
    return run_double_slit(law, config,
                           double_slit_guidance(config, std::holds_alternative<NelsonLaw>(law)));
}

DoubleSlitRun run_double_slit(const DynamicsLaw &law, const DoubleSlitConfig &config,
                              std::shared_ptr<const GuidanceSequence> guidance) {
    config.validate();
    if (std::holds_alternative<NelsonLaw>(law) && !guidance->has_osmotic())
        raise(ErrorKind::InvalidArgument, "nelson dynamics needs osmotic guidance data");
    DoubleSlitRun run;
    run.guidance = guidance;
    run.screen_time = config.screen_time();
    if (config.n == 0) {
        run.ensemble.base_seed = config.seed;
        return run;
    }
    const WaveFunction psi0 = double_slit_state(config);
    const Ensemble initial = sample_initial(psi0, config.n, config.seed);
    run.ensemble = integrate_ensemble(law, *guidance, initial, 0.0, config.t_final,
                                      config.integration);
    run.screen.reserve(run.ensemble.trajectories.size());
    for (std::size_t i = 0; i < run.ensemble.trajectories.size(); ++i) {
        const Trajectory &tr = run.ensemble.trajectories[i];
        ScreenRecord rec;
        rec.id = run.ensemble.member_index[i];
        const auto at = tr.position_at(run.screen_time);
        if (!at)
            raise(ErrorKind::InvalidArgument, "screen time is not a recorded time stamp");
        rec.at_screen_time = *at;
        for (std::size_t s = 1; s < tr.positions.size(); ++s) {
            const double ya = tr.positions[s - 1].y() - config.screen_y;
            const double yb = tr.positions[s].y() - config.screen_y;
            if (ya < 0.0 && yb >= 0.0) {
                const double f = ya / (ya - yb);
                rec.crossed = true;
                rec.crossing_x = tr.positions[s - 1].x() + f * (tr.positions[s].x() - tr.positions[s - 1].x());
                rec.crossing_t = tr.times[s - 1] + f * (tr.times[s] - tr.times[s - 1]);
                break;
            }
        }
        run.screen.push_back(rec);
    }
    return run;
}

} // namespace pw
