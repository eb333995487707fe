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

#include "pilotwave/sampling.hpp"

#include "pilotwave/error.hpp"

#include <algorithm>
#include <cmath>

namespace pw {

double invert_linear_cell(double r0, double r1, double target) {
    // r0 s + (r1 - r0) s^2 / 2 = target, in the cancellation-free root form.
    if (target <= 0.0)
        return 0.0;
    const double disc = std::max(0.0, r0 * r0 + 2.0 * (r1 - r0) * target);
    const double denom = r0 + std::sqrt(disc);
    if (!(denom > 0.0))
        return 0.5;
    return std::clamp(2.0 * target / denom, 0.0, std::nextafter(1.0, 0.0));
}

DensitySampler::DensitySampler(const Grid &grid, const Eigen::VectorXd &density)
    : grid_(grid), density_(density.cwiseMax(0.0)) {
    if (density.size() != grid.size())
        raise(ErrorKind::GridMismatch, "density size does not match grid");
    const int nx = grid.nx(), ny = grid.ny();
    marginal_.assign(static_cast<std::size_t>(nx), 0.0);
    if (grid.dims() == 2) {
        const double dy = grid.y().spacing();
        column_cum_.assign(static_cast<std::size_t>(nx) * (ny + 1), 0.0);
        for (int ix = 0; ix < nx; ++ix) {
            double *cum = &column_cum_[static_cast<std::size_t>(ix) * (ny + 1)];
            for (int iy = 0; iy < ny; ++iy) {
                const double r0 = density_[grid.index(ix, iy)];
                const double r1 = density_[grid.index(ix, (iy + 1) % ny)];
                cum[iy + 1] = cum[iy] + 0.5 * (r0 + r1) * dy;
            }
            marginal_[ix] = cum[ny];
        }
    } else {
        for (int ix = 0; ix < nx; ++ix)
            marginal_[ix] = density_[ix];
    }
    const double dx = grid.x().spacing();
    marginal_cum_.assign(static_cast<std::size_t>(nx) + 1, 0.0);
    for (int ix = 0; ix < nx; ++ix)
        marginal_cum_[ix + 1] = marginal_cum_[ix] + 0.5 * (marginal_[ix] + marginal_[(ix + 1) % nx]) * dx;
    if (!(marginal_cum_.back() > 0.0))
        raise(ErrorKind::InvalidArgument, "cannot sample from a zero density");
}

Position DensitySampler::sample(Rng &rng) const {
    const int nx = grid_.nx(), ny = grid_.ny();
    const double dx = grid_.x().spacing();

    const double u = uniform01(rng) * marginal_cum_.back();
    auto it = std::upper_bound(marginal_cum_.begin(), marginal_cum_.end(), u);
    int cell = std::clamp(static_cast<int>(it - marginal_cum_.begin()) - 1, 0, nx - 1);
    const int next = (cell + 1) % nx;
    const double w = invert_linear_cell(marginal_[cell], marginal_[next], (u - marginal_cum_[cell]) / dx);
    Position p(grid_.x().lo + (cell + w) * dx, 0.0);
    if (grid_.dims() == 1)
        return p;

    const double dy = grid_.y().spacing();
    const double *ca = &column_cum_[static_cast<std::size_t>(cell) * (ny + 1)];
    const double *cb = &column_cum_[static_cast<std::size_t>(next) * (ny + 1)];
    auto mixed = [&](int j) { return (1.0 - w) * ca[j] + w * cb[j]; };
    const double v = uniform01(rng) * mixed(ny);
    int lo = 0, hi = ny; // invariant: mixed(lo) <= v < mixed(hi)
    while (hi - lo > 1) {
        const int mid = (lo + hi) / 2;
        if (mixed(mid) <= v)
            lo = mid;
        else
            hi = mid;
    }
    const int jn = (lo + 1) % ny;
    const double r0 = (1.0 - w) * density_[grid_.index(cell, lo)] + w * density_[grid_.index(next, lo)];
    const double r1 = (1.0 - w) * density_[grid_.index(cell, jn)] + w * density_[grid_.index(next, jn)];
    const double s = invert_linear_cell(r0, r1, (v - mixed(lo)) / dy);
    p.y() = grid_.y().lo + (lo + s) * dy;
    return p;
}

} // namespace pw
