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
#include "pilotwave/rng.hpp"
#include "pilotwave/sampling.hpp"
#include "pilotwave/stats.hpp"

#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace pw;

namespace {

// Brute-force sup |F_a - F_b| over all sample points.
double brute_ks(std::vector<double> a, std::vector<double> b) {
    std::vector<double> all = a;
    all.insert(all.end(), b.begin(), b.end());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double d = 0.0;
    for (double x : all) {
        const double fa = static_cast<double>(std::upper_bound(a.begin(), a.end(), x) - a.begin()) / a.size();
        const double fb = static_cast<double>(std::upper_bound(b.begin(), b.end(), x) - b.begin()) / b.size();
        d = std::max(d, std::abs(fa - fb));
    }
    return d;
}

std::vector<double> normals(std::size_t n, std::uint64_t seed, double mu = 0.0, double sd = 1.0) {
    Rng rng(seed);
    std::vector<double> v(n);
    for (auto &x : v)
        x = mu + sd * standard_normal(rng);
    return v;
}

GridDensity1D gaussian_density(const Axis &axis, double mu, double sd) {
    Eigen::VectorXd v(axis.n);
    for (int i = 0; i < axis.n; ++i)
        v[i] = std::exp(-0.5 * std::pow((axis.coord(i) - mu) / sd, 2));
    return {axis, v};
}

} // namespace

TEST_CASE("kolmogorov tail probability") {
    // Tabulated values of the Kolmogorov distribution.
    CHECK(kolmogorov_survival(0.5) == doctest::Approx(0.963945).epsilon(1e-5));
    CHECK(kolmogorov_survival(1.0) == doctest::Approx(0.269999).epsilon(1e-5));
    CHECK(kolmogorov_survival(1.36) == doctest::Approx(0.049483).epsilon(1e-4));
    CHECK(kolmogorov_survival(0.0) == 1.0);
    CHECK(kolmogorov_survival(5.0) < 1e-20);
}

TEST_CASE("two-sample KS") {
    const auto a = normals(300, 1), b = normals(200, 2, 0.3);
    const KsResult r = ks_two_sample(a, b);
    CHECK(r.statistic == doctest::Approx(brute_ks(a, b)).epsilon(1e-12));
    CHECK(r.effective_n == doctest::Approx(300.0 * 200 / 500));

    const KsResult same = ks_two_sample(a, a);
    CHECK(same.statistic == 0.0);
    CHECK(same.p_value == 1.0);

    std::vector<double> lo(100), hi(100);
    std::iota(lo.begin(), lo.end(), 0.0);
    std::iota(hi.begin(), hi.end(), 1000.0);
    CHECK(ks_two_sample(lo, hi).statistic == 1.0);

    std::vector<double> small(49, 0.0);
    CHECK_THROWS_AS((void)ks_two_sample(small, a), Error);

    // Ties across samples are handled as steps of the empirical CDFs.
    std::vector<double> t1 = {0, 0, 1, 1, 2}, t2 = {0, 1, 1, 1, 2};
    std::vector<double> t1s, t2s;
    for (int r = 0; r < 20; ++r) {
        t1s.insert(t1s.end(), t1.begin(), t1.end());
        t2s.insert(t2s.end(), t2.begin(), t2.end());
    }
    CHECK(ks_two_sample(t1s, t2s).statistic == doctest::Approx(0.2));
}

TEST_CASE("two-sample KS calibration under the null") {
    const Grid g = Grid::line({-10, 10, 256});
    Eigen::VectorXd rho(256);
    for (int i = 0; i < 256; ++i) {
        const double x = g.x().coord(i);
        rho[i] = std::exp(-(x - 1) * (x - 1)) + 0.5 * std::exp(-(x + 2) * (x + 2) / 2);
    }
    const DensitySampler sampler(g, rho);
    int passed = 0;
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<double> a(10000), b(10000);
        for (std::size_t i = 0; i < a.size(); ++i) {
            Rng ra = make_stream(2 * rep, i), rb = make_stream(2 * rep + 1, i);
            a[i] = sampler.sample(ra).x();
            b[i] = sampler.sample(rb).x();
        }
        passed += ks_two_sample(a, b).p_value > 0.01 ? 1 : 0;
    }
    CHECK(passed >= 99);
}

TEST_CASE("KS against a grid density") {
    const Axis axis{-10, 10, 512};
    const GridDensity1D gauss = gaussian_density(axis, 0.5, 1.3);
    CHECK(gauss.cdf(-20) == 0.0);
    CHECK(gauss.cdf(10) == 1.0);
    CHECK(gauss.cdf(0.5) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(gauss.cdf(0.5 + 1.3) == doctest::Approx(0.841345).epsilon(1e-4));

    const auto good = normals(10000, 3, 0.5, 1.3);
    CHECK(ks_against_density(good, gauss).p_value > 0.01);

    Rng rng(4);
    std::vector<double> uniform(10000);
    for (auto &x : uniform)
        x = -3 + 6 * uniform01(rng);
    CHECK(ks_against_density(uniform, gauss).p_value < 1e-6);

    // All samples in a region the density does not cover.
    std::vector<double> far(500, 9.5);
    CHECK(ks_against_density(far, gaussian_density(axis, -5, 0.5)).statistic > 0.99);
}

TEST_CASE("marginal of a product density") {
    const Grid g = Grid::plane({-8, 8, 64}, {-4, 4, 64});
    Eigen::VectorXd rho(g.size());
    for (int ix = 0; ix < g.nx(); ++ix)
        for (int iy = 0; iy < g.ny(); ++iy)
            rho[g.index(ix, iy)] =
                std::exp(-std::pow(g.x().coord(ix) - 1, 2)) * std::exp(-std::pow(g.y().coord(iy), 2) / 0.5);
    const GridDensity1D mx = marginal(g, rho, 0);
    CHECK(mx.axis.n == 64);
    CHECK(mx.cdf(1.0) == doctest::Approx(0.5).epsilon(1e-6));
    const GridDensity1D my = marginal(g, rho, 1);
    CHECK(my.cdf(0.0) == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("bootstrap standard error") {
    std::vector<double> constant(100, 2.5);
    CHECK(bootstrap_se(constant, 200, 1) == 0.0);
    const auto z = normals(10000, 5);
    const double se = bootstrap_se(z, 200, 9);
    CHECK(se == doctest::Approx(0.01).epsilon(0.2));
    CHECK(bootstrap_se(z, 200, 9) == se);
    std::vector<double> one = {1.0};
    CHECK_THROWS_AS((void)bootstrap_se(one, 200, 1), Error);
}

TEST_CASE("histogram") {
    const Histogram h = make_histogram(std::vector<double>{-1, 0, 0.5, 0.99, 1, 1.5, 2, 7}, uniform_edges(0, 2, 2));
    REQUIRE(h.counts.size() == 2);
    CHECK(h.counts[0] == 3);
    CHECK(h.counts[1] == 2);
    CHECK(h.total == 5);
    CHECK(h.density()[0] == doctest::Approx(3.0 / 5));
    CHECK(mean(std::vector<double>{1, 2, 3, 6}) == doctest::Approx(3.0));
}
