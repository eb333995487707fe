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
#include "pilotwave/stats.hpp"

#include "doctest.h"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <numeric>

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

// Free evolution sampled every `dt` up to count snapshots.
GuidanceSequence free_guidance(const WaveFunction &psi0, double dt, int count, GuidanceOptions opts = {}) {
    return GuidanceSequence::from_evolution(
        psi0, 0.0, dt, count, [](const WaveFunction &psi, double step) { return free_evolve_axis(psi, 0, step); },
        opts);
}

// Closed-form Bohmian trajectory of a free Gaussian (hbar = m = 1).
double gaussian_trajectory(double x0, double center, double sigma0, double k, double t) {
    const double s = std::sqrt(1.0 + std::pow(t / (2 * sigma0 * sigma0), 2));
    return center + k * t + (x0 - center) * s;
}

WaveFunction two_packets_1d(const Grid &g, double d) {
    const double r = 1 / std::sqrt(2.0);
    return superpose(make_gaussian_packet(g, -d, 0.7, 0.0), make_gaussian_packet(g, d, 0.7, 0.0), r, r);
}

} // namespace

TEST_CASE("divergence gate") {
    const Grid g = Grid::plane({-8, 8, 64}, {-8, 8, 64});
    CHECK(max_divergence(zero_field(), g) == 0.0);
    CHECK(max_divergence(rotational_field(1.0, Position(0.3, 0.1), 0.3), g) < kDivergenceTolerance);
    Eigen::Matrix2d shape;
    shape << 1.0, -0.5, -0.5, 0.5;
    CHECK(max_divergence(gaussian_vortex(1.0, Position(0, -1), shape), g) < kDivergenceTolerance);
    CHECK(max_divergence(diagonal_shear(0.1, 0.7, 0.5), g) < kDivergenceTolerance);
    CHECK(max_divergence(uniform_current(0.2), g) < kDivergenceTolerance);

    DivergenceFreeField source;
    source.label = "source";
    source.rule = [](const Position &p) { return Eigen::Vector2d(p.x(), 0.0); };
    CHECK(max_divergence(source, g) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(kind_of([&] { (void)make_modified(source, g); }) == ErrorKind::DivergenceCheckFailed);

    CHECK(kind_of([] { (void)make_born_resampling(0.0); }) == ErrorKind::InvalidArgument);
    CHECK(kind_of([] { (void)make_nelson(-1.0); }) == ErrorKind::InvalidArgument);
    CHECK(law_name(make_nelson(0.5)) == "nelson");
    CHECK(is_stochastic(make_born_resampling(0.1)));
    CHECK_FALSE(is_stochastic(StandardLaw{}));
}

TEST_CASE("velocity at a point") {
    const Grid g = Grid::plane({-16, 16, 128}, {-16, 16, 128});
    const WaveFunction psi = make_gaussian_packet(g, Position::Zero(), {1.5, 1.5}, {2.0, 0.0});

    SUBCASE("plane-wave factor") {
        const Eigen::Vector2d v = velocity_at(StandardLaw{}, psi, Position(0.37, -0.81));
        CHECK(std::abs(v.x() - 2.0) < 1e-5);
        CHECK(std::abs(v.y()) < 1e-5);
    }
    SUBCASE("rotational current adds j / density") {
        const Position node(g.x().coord(g.nx() / 2 + 16), g.y().coord(g.ny() / 2));
        REQUIRE(node.x() == doctest::Approx(4.0));
        const DynamicsLaw law = make_modified(rotational_field(1.0, node - Position(1.0, 0.0), 0.1), g);
        const double rho = psi.density()[g.index(g.nx() / 2 + 16, g.ny() / 2)];
        const Eigen::Vector2d v0 = velocity_at(StandardLaw{}, psi, node);
        const Eigen::Vector2d v1 = velocity_at(law, psi, node);
        CHECK(v1.x() == doctest::Approx(v0.x()).epsilon(1e-12));
        CHECK(v1.y() - v0.y() == doctest::Approx(1.0 / rho).epsilon(1e-10));
    }
    SUBCASE("zero current is the standard law bit for bit") {
        const DynamicsLaw law = make_modified(zero_field(), g);
        for (const Position p : {Position(0.1, 0.2), Position(-1.3, 2.7), Position(3.0, -0.5)}) {
            const Eigen::Vector2d a = velocity_at(StandardLaw{}, psi, p), b = velocity_at(law, psi, p);
            CHECK(a.x() == b.x());
            CHECK(a.y() == b.y());
        }
    }
    SUBCASE("errors") {
        const DynamicsLaw law = make_modified(rotational_field(1.0, Position(1, 1), 0.2), g);
        CHECK(kind_of([&] { (void)velocity_at(law, psi, Position(1.05, 1.0)); }) == ErrorKind::SingularityHit);
        const WaveFunction narrow = make_gaussian_packet(g, Position::Zero(), {1.0, 1.0}, {0.0, 0.0});
        CHECK(kind_of([&] { (void)velocity_at(StandardLaw{}, narrow, Position(12.0, 12.0)); }) ==
              ErrorKind::UndefinedAtNode);
    }
}

TEST_CASE("initial sampling") {
    const Grid g = Grid::line({-20, 20, 512});
    const WaveFunction psi = two_packets_1d(g, 5.0);
    const Ensemble e = sample_initial(psi, 100000, 3);
    REQUIRE(e.trajectories.size() == 100000);
    int left = 0;
    for (const auto &t : e.trajectories)
        left += t.final_position().x() < 0 ? 1 : 0;
    CHECK(std::abs(left - 50000) <= 3 * std::sqrt(100000 * 0.25));

    const Ensemble one = sample_initial(psi, 1, 4);
    REQUIRE(one.trajectories.size() == 1);
    const double x = one.trajectories[0].final_position().x();
    CHECK(std::min(std::abs(x - 5), std::abs(x + 5)) < 6 * 0.7);

    const Ensemble a = sample_initial(psi, 1000, 9), b = sample_initial(psi, 1000, 9);
    for (std::size_t i = 0; i < 1000; ++i)
        CHECK(a.trajectories[i].final_position() == b.trajectories[i].final_position());
}

TEST_CASE("deterministic integration against the free-Gaussian trajectory") {
    const Grid g = Grid::line({-30, 30, 1024});
    const double sigma0 = 1.0, k = 1.0, center = -2.0;
    const WaveFunction psi0 = make_gaussian_packet(g, center, sigma0, k);
    const GuidanceSequence guide = free_guidance(psi0, 0.05, 41);
    const GuidanceSequence fine = free_guidance(psi0, 0.025, 81);
    IntegrationOptions opts;
    for (double x0 : {-2.0, -3.1, -0.4}) {
        const Trajectory tr = integrate(StandardLaw{}, guide, Position(x0, 0.0), 0.0, 2.0, opts);
        CHECK(tr.times.back() == doctest::Approx(2.0));
        const double coarse_err = std::abs(tr.final_position().x() - gaussian_trajectory(x0, center, sigma0, k, 2.0));
        CHECK(coarse_err < 1e-3);
        const auto mid = tr.position_at(1.0);
        REQUIRE(mid);
        CHECK(std::abs(mid->x() - gaussian_trajectory(x0, center, sigma0, k, 1.0)) < 1e-3);
        // Linear interpolation between snapshots is second order in their spacing.
        const Trajectory tf = integrate(StandardLaw{}, fine, Position(x0, 0.0), 0.0, 2.0, opts);
        const double fine_err = std::abs(tf.final_position().x() - gaussian_trajectory(x0, center, sigma0, k, 2.0));
        if (coarse_err > 1e-6)
            CHECK(coarse_err / fine_err == doctest::Approx(4.0).epsilon(0.25));
    }
    // Displacement of the packet centre is k t.
    const Trajectory c = integrate(StandardLaw{}, guide, Position(center, 0.0), 0.0, 2.0, opts);
    CHECK(std::abs(c.final_position().x() - center - 2.0) < 1e-3);
    // Backward integration retraces the path.
    const Trajectory back = integrate(StandardLaw{}, guide, c.final_position(), 2.0, 0.0, opts);
    REQUIRE(back.times.front() == doctest::Approx(0.0));
    CHECK(std::abs(back.positions.front().x() - center) < 1e-6);

    CHECK(kind_of([&] { (void)integrate(StandardLaw{}, guide, Position(0, 0), 0.0, 1.005, opts); }) ==
          ErrorKind::InvalidArgument);
    CHECK(kind_of([&] { (void)integrate(make_nelson(0.5), guide, Position(0, 0), 1.0, 0.0, opts); }) ==
          ErrorKind::InvalidArgument);
    CHECK(kind_of([&] { (void)integrate(StandardLaw{}, guide, Position(25.0, 0.0), 0.0, 1.0, opts); }) ==
          ErrorKind::LeftSupport);
}

TEST_CASE("no crossing for a symmetric two-packet state") {
    const Grid g = Grid::line({-30, 30, 1024});
    const GuidanceSequence guide = free_guidance(two_packets_1d(g, 3.0), 0.05, 61);
    // The oracle: the velocity field is antisymmetric about x = 0.
    for (std::size_t k : {10, 30, 60})
        for (double x : {0.3, 1.7, 4.2}) {
            const GuidanceSample a = guide.at_snapshot(k, Position(x, 0)), b = guide.at_snapshot(k, Position(-x, 0));
            if (a.defined && b.defined)
                CHECK(a.velocity.x() == doctest::Approx(-b.velocity.x()).epsilon(1e-8));
        }
    const Ensemble init = sample_initial(two_packets_1d(g, 3.0), 300, 5);
    IntegrationOptions opts;
    opts.record_stride = 5;
    const Ensemble out = integrate_ensemble(StandardLaw{}, guide, init, 0.0, 3.0, opts);
    CHECK(out.failures.empty());
    std::vector<std::size_t> order(out.trajectories.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) {
        return out.trajectories[a].positions[0].x() < out.trajectories[b].positions[0].x();
    });
    bool ordered = true, crossed = false;
    for (std::size_t s = 0; s < out.trajectories[0].times.size(); ++s) {
        for (std::size_t i = 1; i < order.size(); ++i)
            ordered = ordered && out.trajectories[order[i - 1]].positions[s].x() <=
                                     out.trajectories[order[i]].positions[s].x();
        for (const auto &tr : out.trajectories)
            crossed = crossed || (tr.positions[0].x() < 0) != (tr.positions[s].x() < 0);
    }
    CHECK(ordered);
    CHECK_FALSE(crossed);
}

TEST_CASE("stochastic laws are equivariant") {
    const Grid g = Grid::line({-30, 30, 1024});
    const WaveFunction psi0 = two_packets_1d(g, 3.0);
    GuidanceOptions osm;
    osm.osmotic = true;
    const GuidanceSequence guide = free_guidance(psi0, 0.05, 21, osm);
    const Ensemble init = sample_initial(psi0, 10000, 21);
    const GridDensity1D final_density{g.x(), guide.snapshots().back().density};
    IntegrationOptions opts;
    opts.record_stride = 100;

    SUBCASE("born resampling") {
        const Ensemble out = integrate_ensemble(make_born_resampling(0.25), guide, init, 0.0, 1.0, opts);
        REQUIRE(out.failures.empty());
        std::vector<double> xs;
        for (const auto &t : out.trajectories)
            xs.push_back(t.final_position().x());
        CHECK(ks_against_density(xs, final_density).p_value > 0.01);
    }
    SUBCASE("nelson diffusion") {
        const Ensemble out = integrate_ensemble(make_nelson(0.5), guide, init, 0.0, 1.0, opts);
        CHECK(out.failures.size() < 10);
        std::vector<double> xs;
        for (const auto &t : out.trajectories)
            xs.push_back(t.final_position().x());
        CHECK(ks_against_density(xs, final_density).p_value > 0.01);
    }
}

TEST_CASE("ensembles do not depend on the thread count") {
    const Grid g = Grid::line({-30, 30, 1024});
    const WaveFunction psi0 = two_packets_1d(g, 3.0);
    GuidanceOptions osm;
    osm.osmotic = true;
    const GuidanceSequence guide = free_guidance(psi0, 0.05, 21, osm);
    const Ensemble init = sample_initial(psi0, 200, 8);
    IntegrationOptions opts;
    const int saved = omp_get_max_threads();
    for (const DynamicsLaw &law : {DynamicsLaw{StandardLaw{}}, make_nelson(0.5), make_born_resampling(0.25)}) {
        omp_set_num_threads(1);
        const Ensemble a = integrate_ensemble(law, guide, init, 0.0, 1.0, opts);
        omp_set_num_threads(3);
        const Ensemble b = integrate_ensemble(law, guide, init, 0.0, 1.0, opts);
        REQUIRE(a.trajectories.size() == b.trajectories.size());
        bool same = true;
        for (std::size_t i = 0; i < a.trajectories.size(); ++i)
            same = same && a.trajectories[i].positions == b.trajectories[i].positions;
        CHECK(same);
    }
    omp_set_num_threads(saved);
}

TEST_CASE("singularity and failure bookkeeping") {
    const Grid g = Grid::plane({-16, 16, 128}, {-16, 16, 128});
    const WaveFunction psi = make_gaussian_packet(g, Position::Zero(), {1.5, 1.5}, {1.0, 0.0});
    const GuidanceSequence guide = GuidanceSequence::from_evolution(
        psi, 0.0, 0.1, 11, [](const WaveFunction &p, double dt) { return propagate(p, FreeSpace{}, dt, 1); });
    const DynamicsLaw law = make_modified(rotational_field(0.5, Position(0.5, 0.0), 0.3), g);
    IntegrationOptions opts;
    CHECK(kind_of([&] { (void)integrate(law, guide, Position(0.6, 0.0), 0.0, 1.0, opts); }) ==
          ErrorKind::SingularityHit);
    Ensemble init;
    for (const Position p : {Position(-1.0, 1.0), Position(0.55, 0.05), Position(1.0, -1.0)}) {
        Trajectory t;
        t.times = {0.0};
        t.positions = {p};
        init.trajectories.push_back(t);
    }
    const Ensemble out = integrate_ensemble(law, guide, init, 0.0, 1.0, opts);
    CHECK(out.trajectories.size() == 2);
    REQUIRE(out.failures.size() == 1);
    CHECK(out.failures[0].index == 1);
    CHECK(out.failures[0].kind == "singularity-hit");
    CHECK(out.member_index == std::vector<std::size_t>{0, 2});
}

TEST_CASE("double-slit run with an empty ensemble") {
    DoubleSlitConfig cfg;
    cfg.n = 0;
    const DoubleSlitRun run = run_double_slit(StandardLaw{}, cfg);
    CHECK(run.ensemble.trajectories.empty());
    CHECK(run.screen.empty());
    CHECK(run.screen_time == doctest::Approx(1.5));
    DoubleSlitConfig bad = cfg;
    bad.screen_y = 40.0;
    CHECK(kind_of([&] { bad.validate(); }) == ErrorKind::ConfigInvalid);
}
