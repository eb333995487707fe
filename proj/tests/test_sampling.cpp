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

#include "pilotwave/rng.hpp"
#include "pilotwave/sampling.hpp"
#include "pilotwave/stats.hpp"

#include "doctest.h"

#include <cmath>

using namespace pw;

namespace {

// Exact CDF of the linearly interpolated node density, integrated cell by
// cell in closed form.
double linear_cdf(const Axis &axis, const Eigen::VectorXd &rho, double x) {
    const double h = axis.spacing();
    double total = 0.0, below = 0.0;
    for (int i = 0; i < axis.n; ++i) {
        const double r0 = rho[i], r1 = rho[(i + 1) % axis.n];
        const double a = axis.coord(i);
        total += 0.5 * (r0 + r1) * h;
        const double u = std::clamp((x - a) / h, 0.0, 1.0);
        below += h * (r0 * u + 0.5 * (r1 - r0) * u * u);
    }
    return below / total;
}

} // namespace

TEST_CASE("inverse of a linear cell") {
    for (const auto [r0, r1] : {std::pair{1.0, 1.0}, {0.0, 2.0}, {2.0, 0.0}, {0.3, 1.7}, {1e-9, 1.0}}) {
        for (double frac : {0.0, 0.1, 0.5, 0.9, 1.0}) {
            const double target = frac * 0.5 * (r0 + r1);
            const double u = invert_linear_cell(r0, r1, target);
            CHECK(u >= 0.0);
            CHECK(u <= 1.0);
            CHECK(r0 * u + 0.5 * (r1 - r0) * u * u == doctest::Approx(target).epsilon(1e-10));
        }
    }
}

TEST_CASE("1D sampler reproduces the interpolated density") {
    const Axis axis{-4, 4, 64};
    const Grid g = Grid::line(axis);
    Eigen::VectorXd rho(64);
    for (int i = 0; i < 64; ++i) {
        const double x = axis.coord(i);
        rho[i] = std::exp(-2 * (x - 1) * (x - 1)) + 0.3 * std::exp(-(x + 1.5) * (x + 1.5)) + (i == 40 ? 0.5 : 0.0);
    }
    const DensitySampler sampler(g, rho);
    const int n = 200000;
    std::vector<double> xs(n);
    for (int i = 0; i < n; ++i) {
        Rng rng = make_stream(11, i);
        xs[i] = sampler.sample(rng).x();
    }
    std::sort(xs.begin(), xs.end());
    double d = 0.0;
    for (int i = 0; i < n; ++i) {
        const double f = linear_cdf(axis, rho, xs[i]);
        d = std::max({d, std::abs(f - static_cast<double>(i) / n), std::abs(f - static_cast<double>(i + 1) / n)});
    }
    CHECK(kolmogorov_survival(std::sqrt(static_cast<double>(n)) * d) > 0.01);
}

TEST_CASE("2D sampler marginals and correlation") {
    const Grid g = Grid::plane({-6, 6, 64}, {-6, 6, 64});
    Eigen::VectorXd rho(g.size());
    // Correlated Gaussian: the y-conditional depends on x.
    for (int ix = 0; ix < g.nx(); ++ix)
        for (int iy = 0; iy < g.ny(); ++iy) {
            const double x = g.x().coord(ix), y = g.y().coord(iy);
            rho[g.index(ix, iy)] = std::exp(-(x * x - 1.2 * x * y + y * y) / 1.28);
        }
    const DensitySampler sampler(g, rho);
    const int n = 50000;
    std::vector<double> xs(n), ys(n);
    double sxy = 0.0;
    for (int i = 0; i < n; ++i) {
        Rng rng = make_stream(12, i);
        const Position p = sampler.sample(rng);
        xs[i] = p.x();
        ys[i] = p.y();
        sxy += p.x() * p.y();
    }
    CHECK(ks_against_density(xs, marginal(g, rho, 0)).p_value > 0.01);
    CHECK(ks_against_density(ys, marginal(g, rho, 1)).p_value > 0.01);
    // Covariance of exp(-(x^2 - 1.2xy + y^2)/(2(1-0.6^2))) is 0.6.
    CHECK(sxy / n == doctest::Approx(0.6).epsilon(0.05));
}

TEST_CASE("streams are reproducible and distinct") {
    Rng a = make_stream(5, 17), b = make_stream(5, 17), c = make_stream(5, 18);
    const auto va = a(), vb = b(), vc = c();
    CHECK(va == vb);
    CHECK(va != vc);
    CHECK(stream_seed(1, 0) != stream_seed(0, 1));
}
