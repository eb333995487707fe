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

#include "pilotwave/error.hpp"
#include "pilotwave/weakmeas.hpp"

#include "doctest.h"

#include <cmath>

using namespace pw;

namespace {

ErrorKind kind_of(auto &&fn) {
    try {
        fn();
    } catch (const Error &e) {
        return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::Io;
}

// Closed-form E(y | X) for a Gaussian system psi ~ exp(-(x-c)^2/4s^2 + ikx)
// coupled to a Gaussian pointer of width sigma and freely evolved for tau
// (hbar = m = 1). Each y slice psi(x') phi(y - x') is exp(-a x'^2 + b x')
// up to a y-dependent factor, and such a Gaussian evolves in closed form.
double gaussian_pointer_mean(double c, double s, double k, double sigma, double tau, double X) {
    const Complex I(0, 1);
    const double a = 1 / (4 * s * s) + 1 / (4 * sigma * sigma);
    const Complex d = 1.0 + 2.0 * I * a * tau;
    double num = 0.0, den = 0.0;
    const double h = sigma / 200;
    for (double y = X - 12 * sigma - 6 * s; y <= X + 12 * sigma + 6 * s; y += h) {
        const Complex b = I * k + c / (2 * s * s) + y / (2 * sigma * sigma);
        const Complex log_amp = -y * y / (4 * sigma * sigma) + (-a * X * X + b * X + I * b * b * tau / 2.0) / d;
        const double w = std::exp(2 * log_amp.real());
        num += y * w;
        den += w;
    }
    return num / den;
}

Grid line_grid() { return Grid::line({-16, 16, 256}); }

PointerModel pointer(double sigma) { return {sigma, {-32, 32, 256}}; }

} // namespace

TEST_CASE("coupling") {
    const Grid g = line_grid();
    const WaveFunction psi = make_gaussian_packet(g, 0.5, 1.0, 1.0);
    const CompoundState st = couple(psi, pointer(1.5));
    CHECK(std::abs(st.psi.norm() - 1.0) < 1e-9);
    const Grid &cg = st.psi.grid();
    const Eigen::VectorXd rho = st.psi.density();
    const Eigen::VectorXd cond = conditional_pointer_mean(st);
    for (int ix : {110, 128, 140}) {
        double m0 = 0, m1 = 0, m2 = 0;
        for (int iy = 0; iy < cg.ny(); ++iy) {
            const double y = cg.y().coord(iy), w = rho[cg.index(ix, iy)];
            m0 += w;
            m1 += w * y;
            m2 += w * y * y;
        }
        const double mean = m1 / m0;
        CHECK(mean == doctest::Approx(g.x().coord(ix)).epsilon(1e-9));
        CHECK(cond[ix] == doctest::Approx(mean).epsilon(1e-9));
        CHECK(m2 / m0 - mean * mean == doctest::Approx(1.5 * 1.5).epsilon(1e-6));
    }
    CHECK(kind_of([&] { (void)couple(psi, pointer(0.5)); }) == ErrorKind::WidthTooSmall);
    CHECK(kind_of([&] { (void)couple(psi, PointerModel{1.5, {-8, 8, 128}}); }) == ErrorKind::GridOverflow);
}

TEST_CASE("compound evolution") {
    const Grid g = line_grid();
    const WaveFunction psi = make_gaussian_packet(g, 0.0, 1.0, 1.5);
    const CompoundState st = couple(psi, pointer(1.5));
    const CompoundState same = evolve_compound(st, 0.0);
    CHECK((same.psi.amplitudes() - st.psi.amplitudes()).cwiseAbs().maxCoeff() == 0.0);

    SUBCASE("product state keeps its pointer marginal") {
        const Grid cg = st.psi.grid();
        Eigen::VectorXcd amp(cg.size());
        for (int ix = 0; ix < cg.nx(); ++ix)
            for (int iy = 0; iy < cg.ny(); ++iy)
                amp[cg.index(ix, iy)] =
                    psi.amplitudes()[ix] * std::exp(-std::pow(cg.y().coord(iy) - 1.0, 2) / (4 * 2.25));
        const CompoundState product{WaveFunction(cg, amp).normalized(), 0.0};
        const CompoundState out = evolve_compound(product, 0.5);
        const Eigen::VectorXd a = product.psi.density(), b = out.psi.density();
        double worst = 0.0;
        for (int iy = 0; iy < cg.ny(); ++iy) {
            double ma = 0, mb = 0;
            for (int ix = 0; ix < cg.nx(); ++ix) {
                ma += a[cg.index(ix, iy)];
                mb += b[cg.index(ix, iy)];
            }
            worst = std::max(worst, std::abs(ma - mb) * cg.cell_volume());
        }
        CHECK(worst < 1e-9);
    }
    SUBCASE("x marginal matches slice-wise propagation") {
        const CompoundState out = evolve_compound(st, 0.5);
        const Grid &cg = st.psi.grid();
        Eigen::VectorXd marginal = Eigen::VectorXd::Zero(cg.nx());
        const Eigen::VectorXd rho = out.psi.density();
        for (int ix = 0; ix < cg.nx(); ++ix)
            for (int iy = 0; iy < cg.ny(); ++iy)
                marginal[ix] += rho[cg.index(ix, iy)] * cg.y().spacing();
        Eigen::VectorXd oracle = Eigen::VectorXd::Zero(cg.nx());
        for (int iy = 0; iy < cg.ny(); ++iy) {
            Eigen::VectorXcd slice(cg.nx());
            for (int ix = 0; ix < cg.nx(); ++ix)
                slice[ix] = st.psi.amplitudes()[cg.index(ix, iy)];
            if (slice.norm() == 0.0)
                continue;
            const WaveFunction s = free_evolve_axis(WaveFunction(g, slice), 0, 0.5);
            oracle += s.density() * cg.y().spacing();
        }
        CHECK((marginal - oracle).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("analytic weak run against the Gaussian closed form") {
    const Grid g = line_grid();
    const double c = 0.5, s = 1.2, k = 1.0, sigma = 1.5;
    const WaveFunction psi = make_gaussian_packet(g, c, s, k);
    const auto edges = node_centred_edges(g.x(), -2.0, 3.0, 4 * g.x().spacing());
    for (double tau : {0.05, 0.2}) {
        const WeakRun run = weak_run_analytic(psi, pointer(sigma), tau, edges);
        REQUIRE(!run.bins.empty());
        for (const auto &bin : run.bins) {
            CHECK(bin.point_pointer_mean ==
                  doctest::Approx(gaussian_pointer_mean(c, s, k, sigma, tau, bin.center)).epsilon(1e-7));
            // Weak-value identity for the finite-width pointer.
            CHECK(std::abs(smoothed_weak_value(psi, sigma, tau, bin.center) - bin.point_pointer_mean) < 1e-5);
        }
    }
    SUBCASE("immediately after coupling the pointer reads the position") {
        // Velocities here stay below 0.6, so the lag is under 0.6 tau.
        const WaveFunction slow = make_gaussian_packet(g, c, s, 0.3);
        const WeakRun run = weak_run_analytic(slow, pointer(sigma), 1e-4, edges);
        for (const auto &bin : run.bins)
            CHECK(std::abs(bin.point_pointer_mean - bin.center) < 1e-4);
    }
    SUBCASE("uniform flow lags the pointer by k tau") {
        const Grid big = Grid::line({-32, 32, 512});
        const WaveFunction wide = make_gaussian_packet(big, 0.0, 2.5, 2.0);
        const WeakRun run = weak_run_analytic(wide, pointer(sigma), 0.05,
                                              node_centred_edges(big.x(), -2.0, 3.0, 4 * big.x().spacing()));
        for (const auto &bin : run.bins)
            if (std::abs(bin.center) < 1e-12)
                CHECK(std::abs(bin.point_pointer_mean - (bin.center - 2.0 * 0.05)) < 1e-4);
    }
    SUBCASE("symmetric state") {
        const double r = 1 / std::sqrt(2.0);
        const WaveFunction sym =
            superpose(make_gaussian_packet(g, -2, 1.0, 0.0), make_gaussian_packet(g, 2, 1.0, 0.0), r, r);
        const WeakRun run = weak_run_analytic(sym, pointer(sigma), 0.3, edges);
        bool found = false;
        for (const auto &bin : run.bins)
            if (std::abs(bin.center) < 1e-12) {
                found = true;
                CHECK(std::abs(bin.point_pointer_mean) < 1e-6);
                CHECK(std::abs(bin.pointer_mean) < 1e-6);
            }
        CHECK(found);
    }
    SUBCASE("the ideal weak value is the large-sigma limit") {
        const double ideal = ideal_weak_value(psi, 0.2, 1.0).real();
        const double a = smoothed_weak_value(psi, 20.0, 0.2, 1.0), b = smoothed_weak_value(psi, 80.0, 0.2, 1.0);
        CHECK(std::abs(b - ideal) < std::abs(a - ideal));
        CHECK(std::abs(b - ideal) < 1e-3);
    }
}

TEST_CASE("operational velocity") {
    const Grid g = Grid::line({-32, 32, 512});
    const WaveFunction psi = make_gaussian_packet(g, 0.0, 2.0, 1.5);
    const auto edges = node_centred_edges(g.x(), -3.0, 3.0, 4 * g.x().spacing());
    std::vector<WeakRun> runs;
    for (double tau : {0.025, 0.05, 0.1, 0.2})
        runs.push_back(weak_run_analytic(psi, pointer(1.5), tau, edges));
    const OperationalVelocityField field = operational_velocity(runs);
    REQUIRE(!field.probes.empty());
    for (const auto &p : field.probes) {
        REQUIRE(p.defined);
        // Guidance velocity of a free Gaussian at t = 0 is exactly k.
        CHECK(std::abs(p.velocity - 1.5) < 2e-3);
    }
    CHECK(kind_of([&] { (void)operational_velocity({runs[0], runs[1]}); }) == ErrorKind::InvalidArgument);

    // Hand-built Monte-Carlo ladders.
    auto synthetic = [](double tau, double lag) {
        WeakRun r;
        r.mode = WeakMode::MonteCarlo;
        r.tau = tau;
        WeakBin b;
        b.lo = -0.5;
        b.hi = 0.5;
        b.population = 1000;
        b.lag_mean = lag;
        b.lag_se = 1e-3;
        r.bins.push_back(b);
        return r;
    };
    std::vector<WeakRun> linear, curved;
    for (double tau : {0.1, 0.2, 0.3}) {
        linear.push_back(synthetic(tau, 2.0 * tau));
        curved.push_back(synthetic(tau, tau + 50.0 * tau * tau * tau));
    }
    CHECK(operational_velocity(linear).probes[0].velocity == doctest::Approx(2.0));
    CHECK(kind_of([&] { (void)operational_velocity(curved); }) == ErrorKind::NonlinearityDetected);
    std::vector<WeakRun> too_long = linear;
    too_long.push_back(synthetic(0.8, 1.6));
    CHECK(kind_of([&] { (void)operational_velocity(too_long); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("Monte-Carlo weak runs") {
    const Grid g = line_grid();
    const WaveFunction psi = make_gaussian_packet(g, 0.0, 1.0, 1.0);
    const PointerModel pm = pointer(1.0);
    const auto edges = node_centred_edges(g.x(), -2.0, 2.0, 4 * g.x().spacing());
    MonteCarloOptions opts;
    opts.n = 20000;
    opts.seed = 5;
    const double tau = 0.1;
    const WeakRun analytic = weak_run_analytic(psi, pm, tau, edges);
    const WeakMonteCarlo mc = weak_run_monte_carlo(psi, pm, StandardLaw{}, tau, edges, opts);
    REQUIRE(mc.run.bins.size() == analytic.bins.size());
    std::size_t populated = 0, agree = 0;
    for (std::size_t i = 0; i < analytic.bins.size(); ++i) {
        const WeakBin &m = mc.run.bins[i];
        if (m.low_statistics)
            continue;
        ++populated;
        agree += std::abs(m.pointer_mean - analytic.bins[i].pointer_mean) <= 3 * m.pointer_se ? 1 : 0;
    }
    CHECK(populated >= 5);
    CHECK(static_cast<double>(agree) >= 0.95 * static_cast<double>(populated));

    SUBCASE("matched records and the standard-law null") {
        CHECK(mc.ensemble.records.size() + mc.ensemble.failures.size() == opts.n);
        const CorReport rep = cor_test(mc.run, mc.ensemble);
        CHECK(rep.bins.size() == populated);
        CHECK(rep.significant_fraction() <= 0.05 + 1e-12);
        MatchedEnsemble wrong = mc.ensemble;
        wrong.tau = 0.2;
        CHECK(kind_of([&] { (void)cor_test(mc.run, wrong); }) == ErrorKind::UnmatchedEnsemble);
        wrong = mc.ensemble;
        wrong.records.clear();
        CHECK(kind_of([&] { (void)cor_test(mc.run, wrong); }) == ErrorKind::UnmatchedEnsemble);
    }
    SUBCASE("determinism") {
        const WeakMonteCarlo again = weak_run_monte_carlo(psi, pm, StandardLaw{}, tau, edges, opts);
        for (std::size_t i = 0; i < mc.run.bins.size(); ++i) {
            CHECK(again.run.bins[i].population == mc.run.bins[i].population);
            if (!mc.run.bins[i].low_statistics)
                CHECK(again.run.bins[i].pointer_mean == mc.run.bins[i].pointer_mean);
        }
    }
    SUBCASE("tiny ensembles are flagged") {
        MonteCarloOptions tiny = opts;
        tiny.n = 10;
        const WeakMonteCarlo t = weak_run_monte_carlo(psi, pm, StandardLaw{}, tau, edges, tiny);
        for (const auto &b : t.run.bins)
            CHECK(b.low_statistics);
    }
    SUBCASE("nelson cannot be run backwards") {
        CHECK(kind_of([&] { (void)weak_run_monte_carlo(psi, pm, make_nelson(0.5), tau, edges, opts); }) ==
              ErrorKind::InvalidArgument);
    }
}

TEST_CASE("ladder fit") {
    const std::vector<double> t = {0.025, 0.05, 0.1, 0.2};
    std::vector<double> y, quad;
    for (double x : t) {
        y.push_back(0.3 + 2.0 * x);
        quad.push_back(-0.1 + 0.5 * x + 3.0 * x * x);
    }
    const LadderFit lin = fit_ladder(t, y, {});
    CHECK(lin.intercept == doctest::Approx(0.3));
    CHECK(lin.slope == doctest::Approx(2.0));
    CHECK(lin.max_residual < 1e-12);
    CHECK(lin.intercept_se == 0.0);
    const LadderFit q = fit_ladder(t, quad, {}, 2);
    CHECK(q.intercept == doctest::Approx(-0.1));
    CHECK(q.slope == doctest::Approx(0.5));

    // Closed-form weighted least-squares intercept error.
    const std::vector<double> se = {0.01, 0.02, 0.02, 0.05};
    double sw = 0, swt = 0, swtt = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double w = 1 / (se[i] * se[i]);
        sw += w;
        swt += w * t[i];
        swtt += w * t[i] * t[i];
    }
    const LadderFit w = fit_ladder(t, y, se);
    CHECK(w.intercept_se == doctest::Approx(std::sqrt(swtt / (sw * swtt - swt * swt))).epsilon(1e-10));
}
