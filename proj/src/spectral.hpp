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

// FFT along one axis of grid-ordered data.

#pragma once

#include "pilotwave/grid.hpp"

#include <unsupported/Eigen/FFT>

namespace pw::detail {

inline void fft_axis(Eigen::VectorXcd &data, const Grid &grid, int axis, bool inverse) {
    Eigen::FFT<double> fft;
    const int nx = grid.nx();
    const int ny = grid.ny();
    if (axis == 0) {
        Eigen::VectorXcd in(nx), out(nx);
        for (int iy = 0; iy < ny; ++iy) {
            in = data.segment(static_cast<Eigen::Index>(iy) * nx, nx);
            if (inverse)
                fft.inv(out, in);
            else
                fft.fwd(out, in);
            data.segment(static_cast<Eigen::Index>(iy) * nx, nx) = out;
        }
    } else {
        Eigen::VectorXcd in(ny), out(ny);
        for (int ix = 0; ix < nx; ++ix) {
            for (int iy = 0; iy < ny; ++iy)
                in[iy] = data[grid.index(ix, iy)];
            if (inverse)
                fft.inv(out, in);
            else
                fft.fwd(out, in);
            for (int iy = 0; iy < ny; ++iy)
                data[grid.index(ix, iy)] = out[iy];
        }
    }
}

inline void fft_all(Eigen::VectorXcd &data, const Grid &grid, bool inverse) {
    for (int d = 0; d < grid.dims(); ++d)
        fft_axis(data, grid, d, inverse);
}

/// |k|^2 per node in FFT storage order.
inline Eigen::VectorXd squared_wavenumbers(const Grid &grid) {
    const Eigen::VectorXd kx = grid.x().wavenumbers();
    Eigen::VectorXd k2(grid.size());
    if (grid.dims() == 1) {
        k2 = kx.array().square();
        return k2;
    }
    const Eigen::VectorXd ky = grid.y().wavenumbers();
    for (int iy = 0; iy < grid.ny(); ++iy)
        for (int ix = 0; ix < grid.nx(); ++ix)
            k2[grid.index(ix, iy)] = kx[ix] * kx[ix] + ky[iy] * ky[iy];
    return k2;
}

} // namespace pw::detail
