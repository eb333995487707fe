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

#include "pilotwave/stats.hpp"

#include "pilotwave/error.hpp"
#include "pilotwave/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pw {

double kolmogorov_survival(double lambda) {
    if (lambda < 1e-3)
        return 1.0;
    const double a2 = -2.0 * lambda * lambda;
    double sum = 0.0, sign = 1.0, previous = 0.0;
    for (int k = 1; k <= 200; ++k) {
        const double term = sign * std::exp(a2 * k * k);
        sum += term;
        if (std::abs(term) <= 1e-12 * std::abs(previous) || std::abs(term) <= 1e-300)
            return std::clamp(2.0 * sum, 0.0, 1.0);
        sign = -sign;
        previous = term;
    }
    // Series fails to converge only for tiny lambda, where Q -> 1.
    return 1.0;
}

namespace {

KsResult finish(double d, double ne) {
    const double root = std::sqrt(ne);
    return {d, kolmogorov_survival((root + 0.12 + 0.11 / root) * d), ne};
}

} // namespace

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
    if (a.size() < kMinKsSample || b.size() < kMinKsSample)
        raise(ErrorKind::SampleTooSmall, "two-sample KS needs at least 50 values per sample");
    std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    const double na = static_cast<double>(sa.size()), nb = static_cast<double>(sb.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < sa.size() && j < sb.size()) {
        const double v = std::min(sa[i], sb[j]);
        while (i < sa.size() && sa[i] == v)
            ++i;
        while (j < sb.size() && sb[j] == v)
            ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return finish(d, na * nb / (na + nb));
}

double GridDensity1D::total() const { return values.sum() * axis.spacing(); }

double GridDensity1D::cdf(double x) const {
    if (x < axis.lo)
        return 0.0;
    if (x >= axis.hi)
        return 1.0;
    const double h = axis.spacing();
    const int n = axis.n;
    const double u = (x - axis.lo) / h;
    const int cell = std::min(static_cast<int>(u), n - 1);
    const double s = u - cell;
    double acc = 0.0;
    for (int i = 0; i < cell; ++i)
        acc += 0.5 * (values[i] + values[(i + 1) % n]);
    const double r0 = values[cell], r1 = values[(cell + 1) % n];
    acc += r0 * s + 0.5 * (r1 - r0) * s * s;
    return std::clamp(acc * h / total(), 0.0, 1.0);
}

KsResult ks_against_density(std::span<const double> sample, const GridDensity1D &density) {
    if (sample.size() < kMinKsSample)
        raise(ErrorKind::SampleTooSmall, "KS against a density needs at least 50 values");
    if (!(density.total() > 0.0))
        raise(ErrorKind::InvalidArgument, "reference density integrates to zero");
    std::vector<double> s(sample.begin(), sample.end());
    std::sort(s.begin(), s.end());
    const double n = static_cast<double>(s.size());

    // Cumulative cell masses, so each CDF lookup is O(1).
    const Axis &ax = density.axis;
    const double h = ax.spacing();
    const double total = density.total();
    std::vector<double> cum(static_cast<std::size_t>(ax.n) + 1, 0.0);
    for (int i = 0; i < ax.n; ++i)
        cum[i + 1] = cum[i] + 0.5 * (density.values[i] + density.values[(i + 1) % ax.n]) * h;
    auto cdf = [&](double x) {
        if (x < ax.lo)
            return 0.0;
        if (x >= ax.hi)
            return 1.0;
        const double u = (x - ax.lo) / h;
        const int cell = std::min(static_cast<int>(u), ax.n - 1);
        const double t = u - cell;
        const double r0 = density.values[cell], r1 = density.values[(cell + 1) % ax.n];
        return std::clamp((cum[cell] + (r0 * t + 0.5 * (r1 - r0) * t * t) * h) / total, 0.0, 1.0);
    };

    double d = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double f = cdf(s[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return finish(d, n);
}

GridDensity1D marginal(const Grid &grid, const Eigen::VectorXd &density, int axis) {
    if (density.size() != grid.size())
        raise(ErrorKind::GridMismatch, "density size does not match grid");
    if (grid.dims() == 1) {
        if (axis != 0)
            raise(ErrorKind::InvalidArgument, "1D grid has only axis 0");
        return {grid.x(), density};
    }
    const Axis &keep = grid.axis(axis);
    const double other = grid.axis(1 - axis).spacing();
    Eigen::VectorXd m = Eigen::VectorXd::Zero(keep.n);
    for (int iy = 0; iy < grid.ny(); ++iy)
        for (int ix = 0; ix < grid.nx(); ++ix)
            m[axis == 0 ? ix : iy] += density[grid.index(ix, iy)] * other;
    return {keep, m};
}

double bootstrap_se(std::span<const double> values, int resamples, std::uint64_t seed) {
    if (values.size() < 10)
        raise(ErrorKind::SampleTooSmall, "bootstrap needs at least 10 values");
    if (resamples < 200)
        raise(ErrorKind::InvalidArgument, "bootstrap needs at least 200 resamples");
    Rng rng(splitmix64(seed));
    const std::size_t n = values.size();
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    double s1 = 0.0, s2 = 0.0;
    for (int r = 0; r < resamples; ++r) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            acc += values[pick(rng)];
        const double m = acc / static_cast<double>(n);
        s1 += m;
        s2 += m * m;
    }
    const double mu = s1 / resamples;
    return std::sqrt(std::max(0.0, (s2 / resamples - mu * mu) * resamples / (resamples - 1.0)));
}

std::vector<double> Histogram::density() const {
    std::vector<double> d(counts.size(), 0.0);
    if (total == 0)
        return d;
    for (std::size_t i = 0; i < counts.size(); ++i)
        d[i] = static_cast<double>(counts[i]) / (static_cast<double>(total) * (edges[i + 1] - edges[i]));
    return d;
}

Histogram make_histogram(std::span<const double> values, std::vector<double> edges) {
    if (edges.size() < 2)
        raise(ErrorKind::InvalidArgument, "histogram needs at least one bin");
    for (std::size_t i = 1; i < edges.size(); ++i)
        if (!(edges[i] > edges[i - 1]))
            raise(ErrorKind::InvalidArgument, "histogram edges must be strictly increasing");
    Histogram h{std::move(edges), {}, 0};
    h.counts.assign(h.edges.size() - 1, 0);
    for (double v : values) {
        if (!(v >= h.edges.front() && v < h.edges.back()))
            continue;
        const auto it = std::upper_bound(h.edges.begin(), h.edges.end(), v);
        ++h.counts[static_cast<std::size_t>(it - h.edges.begin() - 1)];
        ++h.total;
    }
    return h;
}

std::vector<double> uniform_edges(double lo, double hi, int bins) {
    std::vector<double> e(static_cast<std::size_t>(bins) + 1);
    for (int i = 0; i <= bins; ++i)
        e[i] = lo + (hi - lo) * i / bins;
    return e;
}

double mean(std::span<const double> values) {
    if (values.empty())
        return 0.0;
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

} // namespace pw
