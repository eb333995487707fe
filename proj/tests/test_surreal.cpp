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
#include "pilotwave/surreal.hpp"

#include "doctest.h"

#include <cmath>

using namespace pw;

namespace {

SurrealConfig small_config(RecordMode mode, std::size_t n = 1000) {
    SurrealConfig c;
    c.mode = mode;
    c.n = n;
    c.seed = 3;
    for (int i = 0; i < 10; ++i) {
        c.sites_l.push_back(-4.0 - 0.5 * i);
        c.sites_r.push_back(4.0 + 0.5 * i);
    }
    return c;
}

ErrorKind kind_of(auto &&fn) {
    try {
        fn();
    } catch (const Error &e) {
        return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::Io;
}

} // namespace

TEST_CASE("configuration checks") {
    SurrealConfig c = small_config(RecordMode::SpinOnly);
    c.weight_l = 0.9;
    CHECK(kind_of([&] { c.validate(); }) == ErrorKind::ConfigInvalid);
    c = small_config(RecordMode::SpinOnly);
    c.sites_r.pop_back();
    CHECK(kind_of([&] { c.validate(); }) == ErrorKind::ConfigInvalid);
    c = small_config(RecordMode::SpinOnly);
    c.offset = 1.0;
    CHECK(kind_of([&] { (void)build_effective_state(c); }) == ErrorKind::PacketsNotDisjoint);
}

TEST_CASE("spin-only effective state") {
    const SurrealConfig with_sites = small_config(RecordMode::SpinOnly);
    SurrealConfig without = with_sites;
    without.sites_l.clear();
    without.sites_r.clear();
    const EffectiveState a = build_effective_state(with_sites), b = build_effective_state(without);
    REQUIRE(a.joint);
    REQUIRE(a.joint->snapshots().size() == b.joint->snapshots().size());
    bool identical = true;
    for (std::size_t k = 0; k < a.joint->snapshots().size(); ++k) {
        const auto &sa = a.joint->snapshots()[k], &sb = b.joint->snapshots()[k];
        identical = identical && sa.density == sb.density && sa.velocity == sb.velocity;
    }
    CHECK(identical);

    // Oracle: the plain free two-packet superposition.
    const Grid g = Grid::line(with_sites.axis);
    const double r = 1 / std::sqrt(2.0);
    const WaveFunction plain = superpose(make_gaussian_packet(g, -8.0, 1.0, 4.0), make_gaussian_packet(g, 8.0, 1.0, -4.0),
                                         r, r);
    const std::size_t k = 40; // t = 2, packets on top of each other
    CHECK(a.times[k] == doctest::Approx(2.0));
    const WaveFunction joint = a.joint_state(k, with_sites);
    const WaveFunction expect = free_evolve_axis(plain, 0, 2.0);
    CHECK((joint.amplitudes() - expect.amplitudes()).cwiseAbs().maxCoeff() < 1e-10);

    // In the overlap the velocity mixes both branches: it is neither +k nor -k.
    const GuidanceSample s = a.joint->at_snapshot(k, Position(0.3, 0.0));
    REQUIRE(s.defined);
    CHECK(std::abs(s.velocity.x() - 4.0) > 0.1);
    CHECK(std::abs(s.velocity.x() + 4.0) > 0.1);
    CHECK(a.checkpoint < 2.0);
}

TEST_CASE("spin-only dichotomy") {
    const SurrealRun run = run_surreal(small_config(RecordMode::SpinOnly));
    CHECK(run.failures.empty());
    CHECK(run.max_axis_velocity <= 1e-8);
    REQUIRE(run.outcomes.size() == 1000);
    bool reflected = true;
    for (const auto &o : run.outcomes) {
        const bool left = o.trajectory.positions.front().x() < 0;
        for (const auto &p : o.trajectory.positions)
            reflected = reflected && ((p.x() < 0) == left);
        CHECK(o.recorded != o.traversed);
    }
    CHECK(reflected);
    const FlipStatistics st = flip_statistics(run.outcomes);
    CHECK(st.agreement == 0.0);
    CHECK(st.lower <= 0.5);
    CHECK(st.upper >= 0.5);
    CHECK_FALSE(st.degenerate);
}

TEST_CASE("configurational dichotomy") {
    const SurrealRun run = run_surreal(small_config(RecordMode::Configurational));
    CHECK(run.failures.empty());
    REQUIRE(run.outcomes.size() == 1000);
    for (const auto &o : run.outcomes) {
        CHECK(o.recorded == o.traversed);
        CHECK(o.crossed_axis);
    }
    CHECK(flip_statistics(run.outcomes).agreement == 1.0);
}

TEST_CASE("branch weights set the record fractions") {
    SurrealConfig c = small_config(RecordMode::SpinOnly, 2000);
    c.weight_l = std::sqrt(0.8);
    c.weight_r = std::sqrt(0.2);
    const FlipStatistics st = flip_statistics(run_surreal(c).outcomes);
    const double sd = std::sqrt(0.8 * 0.2 / 2000);
    CHECK(std::abs(st.fraction_l - 0.8) <= 3 * sd);

    const SurrealRun one = run_surreal(small_config(RecordMode::SpinOnly, 1));
    const FlipStatistics s1 = flip_statistics(one.outcomes);
    CHECK((s1.fraction_l == 0.0 || s1.fraction_l == 1.0));
    CHECK(s1.degenerate);
    CHECK_THROWS_AS((void)flip_statistics({}), Error);
}
