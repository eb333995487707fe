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

#pragma once

#include "pilotwave/grid.hpp"
#include "pilotwave/rng.hpp"

#include <vector>

namespace pw {

/// Exact sampler for the continuous density obtained by linear (1D) or
/// bilinear (2D) interpolation of node values on a periodic grid.
/// Draws x from the marginal by inverse CDF, then y from the conditional.
class DensitySampler {
  public:
    DensitySampler(const Grid &grid, const Eigen::VectorXd &density);

    [[nodiscard]] Position sample(Rng &rng) const;
    [[nodiscard]] const Grid &grid() const { return grid_; }

  private:
    Grid grid_;
    Eigen::VectorXd density_;
    std::vector<double> marginal_;        // node values of the x-marginal
    std::vector<double> marginal_cum_;    // cumulative cell masses, size nx + 1
    std::vector<double> column_cum_;      // per column cumulative y-cell masses, nx * (ny + 1)
};

/// Position inside [0, 1) of a linear-density cell with endpoint values
/// r0, r1 whose partial mass (in units of cell width) equals `target`.
[[nodiscard]] double invert_linear_cell(double r0, double r1, double target);

} // namespace pw
