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

#include "pilotwave/weakmeas.hpp"

#include "pilotwave/error.hpp"
#include "pilotwave/rng.hpp"
#include "pilotwave/stats.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <optional>

namespace pw {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_system(const WaveFunction &system) {
    if (system.grid().dims() != 1)
        raise(ErrorKind::InvalidArgument, "the measured system must live on a 1D grid");
}

int nearest_node(const Axis &axis, double x) {
    const int i = static_cast<int>(std::lround((x - axis.lo) / axis.spacing()));
    if (i < 0 || i >= axis.n)
        raise(ErrorKind::InvalidArgument, "point outside the system grid");
    return i;
}

// Column moments of |Psi|^2 over y: M0(x) and M1(x) = integral of y |Psi|^2.
std::pair<Eigen::VectorXd, Eigen::VectorXd> column_moments(const WaveFunction &psi) {
    const Grid &grid = psi.grid();
    const double dy = grid.y().spacing();
    Eigen::VectorXd m0 = Eigen::VectorXd::Zero(grid.nx());
    Eigen::VectorXd m1 = Eigen::VectorXd::Zero(grid.nx());
    for (int iy = 0; iy < grid.ny(); ++iy) {
        const double y = grid.y().coord(iy);
        for (int ix = 0; ix < grid.nx(); ++ix) {
            const double r = std::norm(psi.amplitudes()[grid.index(ix, iy)]) * dy;
            m0[ix] += r;
            m1[ix] += y * r;
        }
    }
    return {m0, m1};
}

// Integrals of f and x f over [lo, hi) for f linear between the nodes.
std::pair<double, double> integrate_linear(const Axis &axis, const Eigen::VectorXd &f, double lo,
                                           double hi) {
    const double h = axis.spacing();
    double s0 = 0.0, s1 = 0.0;
    for (int i = 0; i + 1 < axis.n; ++i) {
        const double xa = axis.coord(i);
        const double a = std::max(lo, xa);
        const double b = std::min(hi, xa + h);
        if (!(b > a))
            continue;
        const double slope = (f[i + 1] - f[i]) / h;
        const double c = f[i] - slope * xa; // f = c + slope x on this cell
        s0 += c * (b - a) + slope * (b * b - a * a) / 2;
        s1 += c * (b * b - a * a) / 2 + slope * (b * b * b - a * a * a) / 3;
    }
    return {s0, s1};
}

double se_or_nan(const std::vector<double> &values, int resamples, std::uint64_t seed) {
    if (values.size() < 10)
        return kNaN;
    return bootstrap_se(values, resamples, seed);
}

} // namespace

CompoundState couple(const WaveFunction &system, const PointerModel &pointer) {
    check_system(system);
    const Axis &xa = system.grid().x();
    if (!(pointer.sigma >= kMinPointerSpacings * xa.spacing()))
        raise(ErrorKind::WidthTooSmall, "pointer sigma must be at least " +
                                            std::to_string(kMinPointerSpacings) +
                                            " system-grid spacings");
    const Grid grid = Grid::plane(xa, pointer.y_axis);
    const double norm = std::pow(2.0 * std::numbers::pi * pointer.sigma * pointer.sigma, -0.25);
    Eigen::VectorXcd a(grid.size());
    for (int iy = 0; iy < grid.ny(); ++iy) {
        const double y = grid.y().coord(iy);
        for (int ix = 0; ix < grid.nx(); ++ix) {
            const double u = y - xa.coord(ix);
            a[grid.index(ix, iy)] = system.amplitudes()[ix] * norm *
                                    std::exp(-u * u / (4 * pointer.sigma * pointer.sigma));
        }
    }
    double edge = 0.0;
    for (int ix = 0; ix < grid.nx(); ++ix)
        edge = std::max({edge, std::abs(a[grid.index(ix, 0)]), std::abs(a[grid.index(ix, grid.ny() - 1)])});
    WaveFunction psi(grid, std::move(a), system.mass(), system.hbar());
    if (edge >= kBoundaryGuard)
        raise(ErrorKind::GridOverflow, "pointer packet reaches the edge of the pointer grid");
    return {std::move(psi), 0.0};
}

CompoundState evolve_compound(const CompoundState &state, double tau) {
    if (tau < 0.0)
        raise(ErrorKind::InvalidArgument, "delay must be non-negative");
    return {free_evolve_axis(state.psi, 0, tau), state.t + tau};
}

Eigen::VectorXd conditional_pointer_mean(const CompoundState &state) {
    const auto [m0, m1] = column_moments(state.psi);
    Eigen::VectorXd out(m0.size());
    for (Eigen::Index i = 0; i < m0.size(); ++i)
        out[i] = m0[i] > 0.0 ? m1[i] / m0[i] : kNaN;
    return out;
}

double smoothed_weak_value(const WaveFunction &system, double sigma, double tau, double X) {
    check_system(system);
    const Axis &axis = system.grid().x();
    const int ix = nearest_node(axis, X);
    // Row X of the discrete free propagator; it is symmetric, so this is
    // the propagated unit vector at X.
    Eigen::VectorXcd unit = Eigen::VectorXcd::Zero(axis.n);
    unit[ix] = 1.0;
    const Eigen::VectorXcd row = free_evolve_axis(system.with_amplitudes(unit), 0, tau).amplitudes();
    const Eigen::VectorXcd f = row.cwiseProduct(system.amplitudes());
    const double scale = 1.0 / (8.0 * sigma * sigma);
    double num = 0.0, den = 0.0;
    for (int a = 0; a < axis.n; ++a) {
        if (f[a] == Complex(0.0))
            continue;
        for (int b = 0; b < axis.n; ++b) {
            const double d = axis.coord(a) - axis.coord(b);
            const double g = std::exp(-d * d * scale);
            const double w = (std::conj(f[a]) * f[b]).real() * g;
            num += w * axis.coord(b);
            den += w;
        }
    }
    return num / den;
}

Complex ideal_weak_value(const WaveFunction &system, double tau, double X) {
    check_system(system);
    const Axis &axis = system.grid().x();
    const int ix = nearest_node(axis, X);
    const Eigen::VectorXcd xpsi = axis.coords().cwiseProduct(system.amplitudes());
    const Complex num = free_evolve_axis(system.with_amplitudes(xpsi), 0, tau).amplitudes()[ix];
    const Complex den = free_evolve_axis(system, 0, tau).amplitudes()[ix];
    if (std::abs(den) < 1e-300)
        raise(ErrorKind::OrthogonalSelection, "post-selected amplitude vanishes");
    return num / den;
}

std::vector<double> node_centred_edges(const Axis &axis, double lo, double hi, double width) {
    if (!(width >= 2 * axis.spacing() * (1 - 1e-12)))
        raise(ErrorKind::InvalidArgument, "bin width must be at least two grid spacings");
    const int first = static_cast<int>(std::ceil((lo - axis.lo) / axis.spacing() - 1e-9));
    const int last = static_cast<int>(std::floor((hi - axis.lo) / axis.spacing() + 1e-9));
    const double step = width / axis.spacing();
    const int stride = static_cast<int>(std::lround(step));
    if (std::abs(step - stride) > 1e-9)
        raise(ErrorKind::InvalidArgument, "bin width must be a whole number of grid spacings");
    std::vector<double> edges;
    for (int i = first; i <= last; i += stride) {
        const double c = axis.coord(i);
        if (edges.empty())
            edges.push_back(c - width / 2);
        edges.push_back(c + width / 2);
    }
    return edges;
}

WeakRun weak_run_analytic(const WaveFunction &system, const PointerModel &pointer, double tau,
                          const std::vector<double> &edges) {
    const Axis &axis = system.grid().x();
    if (edges.size() < 2)
        raise(ErrorKind::InvalidArgument, "need at least one bin");
    const CompoundState state = evolve_compound(couple(system, pointer), tau);
    const auto [m0, m1] = column_moments(state.psi);
    WeakRun run;
    run.mode = WeakMode::Analytic;
    run.tau = tau;
    run.sigma = pointer.sigma;
    run.law = "none";
    for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
        const double lo = edges[b], hi = edges[b + 1];
        if (!(hi - lo >= 2 * axis.spacing() * (1 - 1e-12)))
            raise(ErrorKind::InvalidArgument, "bin width must be at least two grid spacings");
        WeakBin bin;
        bin.lo = lo;
        bin.hi = hi;
        const int ic = nearest_node(axis, (lo + hi) / 2);
        bin.center = axis.coord(ic);
        const auto [p0, px] = integrate_linear(axis, m0, lo, hi);
        const auto [q0, qx] = integrate_linear(axis, m1, lo, hi);
        (void)qx;
        bin.x_mean = p0 > 0.0 ? px / p0 : kNaN;
        bin.pointer_mean = p0 > 0.0 ? q0 / p0 : kNaN;
        bin.lag_mean = bin.x_mean - bin.pointer_mean;
        bin.point_pointer_mean = m0[ic] > 0.0 ? m1[ic] / m0[ic] : kNaN;
        bin.low_statistics = !(p0 > 0.0);
        run.bins.push_back(bin);
    }
    return run;
}

WeakMonteCarlo weak_run_monte_carlo(const WaveFunction &system, const PointerModel &pointer,
                                    const DynamicsLaw &law, double tau,
                                    const std::vector<double> &edges,
                                    const MonteCarloOptions &options) {
    if (!(tau > 0.0))
        raise(ErrorKind::InvalidArgument, "Monte-Carlo runs need a positive delay");
    if (edges.size() < 2)
        raise(ErrorKind::InvalidArgument, "need at least one bin");
    if (options.snapshots_per_delay < 1 || options.steps_per_delay < 1)
        raise(ErrorKind::InvalidArgument, "snapshot and step counts must be positive");
    const bool nelson = std::holds_alternative<NelsonLaw>(law);
    const bool born = std::holds_alternative<BornResamplingLaw>(law);
    if (nelson && options.sampling == SamplingMode::Conditional)
        raise(ErrorKind::InvalidArgument,
              "diffusive trajectories cannot be traced backwards; use forward sampling");

    const CompoundState start = couple(system, pointer);
    GuidanceOptions gopt;
    gopt.kinetic_axes = {0};
    gopt.osmotic = nelson;
    const int count = options.snapshots_per_delay;
    std::vector<GuidanceSnapshot> snaps;
    for (int k = 0; k <= count; ++k) {
        const double t = tau * k / count;
        snaps.push_back(make_snapshot(free_evolve_axis(start.psi, 0, t), t, gopt));
    }
    const GuidanceSequence guidance(start.psi.grid(), system.mass(), system.hbar(), std::move(snaps));
    const DensitySampler &at_zero = guidance.sampler(0);
    const DensitySampler &at_tau = guidance.sampler(static_cast<std::size_t>(count));

    IntegrationOptions iopt;
    iopt.dt = tau / options.steps_per_delay;
    iopt.tolerance = options.tolerance;
    iopt.record_stride = options.steps_per_delay;

    // Each rung of a tau-ladder gets its own streams; the ladder fit assumes
    // independent errors across tau.
    const std::uint64_t run_seed = stream_seed(options.seed, std::bit_cast<std::uint64_t>(tau));
    const std::size_t n = options.n;
    std::vector<std::optional<MatchedRecord>> slots(n);
    std::vector<std::optional<TrajectoryFailure>> errors(n);
    const auto total = static_cast<long>(n);
#pragma omp parallel for schedule(dynamic, 64)
    for (long i = 0; i < total; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        Rng rng = make_stream(run_seed, idx);
        try {
            MatchedRecord rec;
            rec.id = idx;
            if (options.sampling == SamplingMode::Conditional) {
                const Position readout = at_tau.sample(rng);
                rec.x_tau = readout.x();
                rec.pointer = readout.y();
                if (born) {
                    rec.x0 = at_zero.sample(rng).x();
                } else {
                    const Trajectory tr = integrate(law, guidance, readout, tau, 0.0, iopt);
                    rec.x0 = tr.positions.front().x();
                }
            } else {
                const Position origin = at_zero.sample(rng);
                rec.x0 = origin.x();
                Position end;
                if (born) {
                    end = at_tau.sample(rng);
                } else {
                    const Trajectory tr =
                        integrate(law, guidance, origin, 0.0, tau, iopt, rng());
                    end = tr.final_position();
                }
                rec.x_tau = end.x();
                rec.pointer = end.y();
            }
            slots[idx] = rec;
        } catch (const Error &e) {
            errors[idx] = TrajectoryFailure{idx, std::string(to_string(e.kind())), e.what()};
        }
    }

    WeakMonteCarlo out;
    out.ensemble.law = law_name(law);
    out.ensemble.seed = options.seed;
    out.ensemble.tau = tau;
    for (std::size_t i = 0; i < n; ++i) {
        if (slots[i])
            out.ensemble.records.push_back(*slots[i]);
        else
            out.ensemble.failures.push_back(*errors[i]);
    }

    WeakRun &run = out.run;
    run.mode = WeakMode::MonteCarlo;
    run.tau = tau;
    run.sigma = pointer.sigma;
    run.law = law_name(law);
    run.seed = options.seed;
    run.n = n;
    run.min_population = options.min_population;
    const std::size_t nbins = edges.size() - 1;
    std::vector<std::vector<double>> xs(nbins), ys(nbins);
    for (const auto &rec : out.ensemble.records) {
        const auto it = std::upper_bound(edges.begin(), edges.end(), rec.x_tau);
        if (it == edges.begin() || it == edges.end())
            continue;
        const auto b = static_cast<std::size_t>(it - edges.begin() - 1);
        xs[b].push_back(rec.x_tau);
        ys[b].push_back(rec.pointer);
    }
    run.bins.resize(nbins);
    const auto bins_total = static_cast<long>(nbins);
#pragma omp parallel for schedule(dynamic, 1)
    for (long bl = 0; bl < bins_total; ++bl) {
        const auto b = static_cast<std::size_t>(bl);
        WeakBin &bin = run.bins[b];
        bin.lo = edges[b];
        bin.hi = edges[b + 1];
        bin.center = (bin.lo + bin.hi) / 2;
        bin.population = xs[b].size();
        bin.low_statistics = bin.population < options.min_population;
        bin.point_pointer_mean = kNaN;
        if (bin.population == 0) {
            bin.x_mean = bin.pointer_mean = bin.lag_mean = bin.pointer_se = bin.lag_se = kNaN;
            continue;
        }
        std::vector<double> lag(xs[b].size());
        for (std::size_t k = 0; k < lag.size(); ++k)
            lag[k] = xs[b][k] - ys[b][k];
        bin.x_mean = mean(xs[b]);
        bin.pointer_mean = mean(ys[b]);
        bin.lag_mean = mean(lag);
        bin.pointer_se = se_or_nan(ys[b], options.bootstrap_resamples,
                                   stream_seed(options.seed ^ 0x7e1a11ULL, b));
        bin.lag_se = se_or_nan(lag, options.bootstrap_resamples,
                               stream_seed(options.seed ^ 0x1a6ULL, b));
    }
    return out;
}

LadderFit fit_ladder(const std::vector<double> &t, const std::vector<double> &y,
                     const std::vector<double> &se, int degree) {
    if (degree < 1 || degree > 2)
        raise(ErrorKind::InvalidArgument, "ladder fits are linear or quadratic");
    const auto m = static_cast<Eigen::Index>(t.size());
    if (y.size() != t.size() || m < degree + 1)
        raise(ErrorKind::InvalidArgument, "ladder fit needs more points than coefficients");
    const bool weighted = se.size() == t.size() && std::all_of(se.begin(), se.end(), [](double s) {
                              return s > 0.0 && std::isfinite(s);
                          });
    Eigen::MatrixXd design(m, degree + 1);
    Eigen::VectorXd rhs(m), w(m);
    for (Eigen::Index k = 0; k < m; ++k) {
        const auto i = static_cast<std::size_t>(k);
        w[k] = weighted ? 1.0 / (se[i] * se[i]) : 1.0;
        for (int p = 0; p <= degree; ++p)
            design(k, p) = std::pow(t[i], p);
        rhs[k] = y[i];
    }
    const Eigen::MatrixXd normal = design.transpose() * w.asDiagonal() * design;
    const Eigen::LDLT<Eigen::MatrixXd> solver(normal);
    if (solver.info() != Eigen::Success || !(std::abs(solver.vectorD().minCoeff()) > 0.0))
        raise(ErrorKind::InvalidArgument, "ladder fit needs distinct abscissae");
    const Eigen::VectorXd coef = solver.solve(design.transpose() * w.asDiagonal() * rhs);
    LadderFit fit;
    fit.intercept = coef[0];
    fit.slope = coef[1];
    if (weighted) {
        const Eigen::MatrixXd cov = solver.solve(Eigen::MatrixXd::Identity(degree + 1, degree + 1));
        fit.intercept_se = std::sqrt(cov(0, 0));
    }
    const Eigen::VectorXd residual = rhs - design * coef;
    fit.max_residual = residual.cwiseAbs().maxCoeff();
    return fit;
}

OperationalVelocityField operational_velocity(const std::vector<WeakRun> &runs,
                                              double nonlinearity_threshold) {
    if (runs.empty())
        raise(ErrorKind::InvalidArgument, "no weak runs supplied");
    std::vector<double> taus;
    for (const auto &r : runs) {
        if (!(r.tau > 0.0) || r.tau > kMaxWeakDelay)
            raise(ErrorKind::InvalidArgument, "delays must lie in (0, " +
                                                  std::to_string(kMaxWeakDelay) + "]");
        if (r.mode != runs.front().mode || r.bins.size() != runs.front().bins.size())
            raise(ErrorKind::InvalidArgument, "runs must share mode and binning");
        if (std::find(taus.begin(), taus.end(), r.tau) == taus.end())
            taus.push_back(r.tau);
    }
    if (taus.size() < 3)
        raise(ErrorKind::InvalidArgument, "need at least three distinct delays");
    const bool analytic = runs.front().mode == WeakMode::Analytic;

    OperationalVelocityField field;
    for (const auto &r : runs)
        field.taus.push_back(r.tau);
    field.mode = analytic ? "analytic" : "monte-carlo";
    for (std::size_t b = 0; b < runs.front().bins.size(); ++b) {
        VelocityProbe probe;
        probe.x = runs.front().bins[b].center;
        std::vector<double> t, v, se;
        for (const auto &r : runs) {
            const WeakBin &bin = r.bins[b];
            if (bin.center != probe.x)
                raise(ErrorKind::InvalidArgument, "runs must share binning");
            const double lag = analytic ? bin.center - bin.point_pointer_mean : bin.lag_mean;
            const double err = analytic ? 0.0 : bin.lag_se;
            if (bin.low_statistics || !std::isfinite(lag) || (!analytic && !std::isfinite(err)))
                probe.defined = false;
            t.push_back(r.tau);
            v.push_back(lag / r.tau);
            se.push_back(err / r.tau);
        }
        if (!probe.defined) {
            probe.velocity = probe.se = probe.residual = probe.slope = kNaN;
            field.probes.push_back(probe);
            continue;
        }
        const LadderFit fit = fit_ladder(t, v, analytic ? std::vector<double>{} : se);
        probe.velocity = fit.intercept;
        probe.se = fit.intercept_se;
        probe.slope = fit.slope;
        probe.residual = fit.max_residual;
        const double allowance =
            nonlinearity_threshold + 3.0 * (analytic ? 0.0 : *std::max_element(se.begin(), se.end()));
        if (probe.residual > allowance)
            raise(ErrorKind::NonlinearityDetected,
                  "fit residual " + std::to_string(probe.residual) + " at x = " +
                      std::to_string(probe.x) + " exceeds " + std::to_string(allowance));
        field.probes.push_back(probe);
    }
    return field;
}

double CorReport::significant_fraction() const {
    if (bins.empty())
        return 0.0;
    const auto hits = std::count_if(bins.begin(), bins.end(), [](const CorBin &b) { return b.significant; });
    return static_cast<double>(hits) / static_cast<double>(bins.size());
}

CorReport cor_test(const WeakRun &run, const MatchedEnsemble &ensemble, int bootstrap_resamples) {
    if (run.mode != WeakMode::MonteCarlo)
        raise(ErrorKind::UnmatchedEnsemble, "the comparison needs a Monte-Carlo run");
    if (ensemble.tau != run.tau || ensemble.seed != run.seed || ensemble.law != run.law)
        raise(ErrorKind::UnmatchedEnsemble, "ensemble was not produced by this run");
    std::vector<double> edges;
    for (const auto &b : run.bins) {
        if (edges.empty())
            edges.push_back(b.lo);
        edges.push_back(b.hi);
    }
    std::vector<std::vector<double>> pointer(run.bins.size()), origin(run.bins.size());
    for (const auto &rec : ensemble.records) {
        const auto it = std::upper_bound(edges.begin(), edges.end(), rec.x_tau);
        if (it == edges.begin() || it == edges.end())
            continue;
        const auto b = static_cast<std::size_t>(it - edges.begin() - 1);
        pointer[b].push_back(rec.pointer);
        origin[b].push_back(rec.x0);
    }
    CorReport report;
    report.law = run.law;
    report.tau = run.tau;
    report.failures = ensemble.failures.size();
    for (std::size_t b = 0; b < run.bins.size(); ++b) {
        const WeakBin &bin = run.bins[b];
        if (pointer[b].size() != bin.population)
            raise(ErrorKind::UnmatchedEnsemble, "bin populations disagree with the ensemble");
        if (bin.low_statistics)
            continue;
        std::vector<double> diff(pointer[b].size());
        for (std::size_t k = 0; k < diff.size(); ++k)
            diff[k] = pointer[b][k] - origin[b][k];
        CorBin c;
        c.center = bin.center;
        c.population = bin.population;
        c.weak_value = bin.pointer_mean;
        c.actual_x0 = mean(origin[b]);
        c.delta = mean(diff);
        c.delta_se = se_or_nan(diff, bootstrap_resamples, stream_seed(run.seed ^ 0xc02ULL, b));
        c.significant = std::abs(c.delta) > 3.0 * c.delta_se;
        report.bins.push_back(c);
    }
    return report;
}

void write_weak_run_csv(const WeakRun &run, const CorReport *cor, const std::string &path) {
    std::FILE *f = std::fopen(path.c_str(), "w");
    if (!f)
        raise(ErrorKind::Io, "cannot open " + path);
    std::fputs("bin_center,population,x_mean,pointer_mean,pointer_se,point_pointer_mean,"
               "low_statistics,actual_x0_mean,delta,delta_se,delta_over_se\n",
               f);
    for (const auto &bin : run.bins) {
        std::fprintf(f, "%.10g,%zu,%.12g,%.12g,%.6g,%.12g,%d", bin.center, bin.population,
                     bin.x_mean, bin.pointer_mean, bin.pointer_se, bin.point_pointer_mean,
                     bin.low_statistics ? 1 : 0);
        const CorBin *match = nullptr;
        if (cor)
            for (const auto &c : cor->bins)
                if (c.center == bin.center)
                    match = &c;
        if (match)
            std::fprintf(f, ",%.12g,%.12g,%.6g,%.6g\n", match->actual_x0, match->delta,
                         match->delta_se, match->delta / match->delta_se);
        else
            std::fputs(",,,,\n", f);
    }
    std::fclose(f);
}

void write_velocity_csv(const OperationalVelocityField &field, const std::vector<double> &reference,
                        const std::string &path) {
    std::FILE *f = std::fopen(path.c_str(), "w");
    if (!f)
        raise(ErrorKind::Io, "cannot open " + path);
    std::fputs("x,v_weak,se,v_standard_guidance,residual\n", f);
    for (std::size_t i = 0; i < field.probes.size(); ++i) {
        const auto &p = field.probes[i];
        const double ref = i < reference.size() ? reference[i] : kNaN;
        std::fprintf(f, "%.10g,%.12g,%.6g,%.12g,%.6g\n", p.x, p.velocity, p.se, ref, p.residual);
    }
    std::fclose(f);
}

} // namespace pw
