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
 * Statistical checks shared by the experiments: Kolmogorov-Smirnov tests,
 * bootstrap standard errors and histograms.
 */

#pragma once

#include "pilotwave/grid.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace pw {

/// Both KS variants require at least this many samples per side.
inline constexpr std::size_t kMinKsSample = 50;

struct KsResult {
    double statistic = 0.0;
    /// Asymptotic Kolmogorov tail probability with the Stephens small-sample
    /// correction lambda = (sqrt(n_e) + 0.12 + 0.11/sqrt(n_e)) * D.
    double p_value = 1.0;
    double effective_n = 0.0;
};

/// Q_KS(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2).
[[nodiscard]] double kolmogorov_survival(double lambda);

[[nodiscard]] KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

/// Density sampled on the nodes of a periodic axis. Between nodes the
/// density is linear, so the node-level CDF is the trapezoid rule.
struct GridDensity1D {
    Axis axis;
    Eigen::VectorXd values;

    [[nodiscard]] double total() const;
    /// Normalized CDF at x; 0 below lo and 1 at or above hi.
    [[nodiscard]] double cdf(double x) const;
};

[[nodiscard]] KsResult ks_against_density(std::span<const double> sample, const GridDensity1D &density);

/// Marginal of a grid density along one axis (the other axis is summed out).
[[nodiscard]] GridDensity1D marginal(const Grid &grid, const Eigen::VectorXd &density, int axis);

/// Bootstrap standard error of the mean.
[[nodiscard]] double bootstrap_se(std::span<const double> values, int resamples, std::uint64_t seed);

struct Histogram {
    std::vector<double> edges;
    std::vector<std::int64_t> counts;
    std::int64_t total = 0;

    /// counts / (total * width) per bin.
    [[nodiscard]] std::vector<double> density() const;
};

/// Values outside [edges.front(), edges.back()) are not counted; `total`
/// is the number of counted values.
[[nodiscard]] Histogram make_histogram(std::span<const double> values, std::vector<double> edges);
[[nodiscard]] std::vector<double> uniform_edges(double lo, double hi, int bins);

[[nodiscard]] double mean(std::span<const double> values);

} // namespace pw
