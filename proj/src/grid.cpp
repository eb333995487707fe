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

#include "pilotwave/grid.hpp"

#include "pilotwave/error.hpp"
#include "spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace pw {

namespace {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

void validate_axis(const Axis &a, const char *name) {
    if (!(a.hi > a.lo) || !std::isfinite(a.lo) || !std::isfinite(a.hi))
        raise(ErrorKind::InvalidArgument, std::string("axis ") + name + " needs lo < hi");
    if (a.n < kMinAxisPoints || !is_power_of_two(a.n))
        raise(ErrorKind::InvalidArgument,
              std::string("axis ") + name + " needs a power-of-two point count >= 64, got " +
                  std::to_string(a.n));
}

// Wavenumbers for odd-order derivatives; the Nyquist mode is dropped.
Eigen::VectorXd derivative_wavenumbers(const Axis &a) {
    Eigen::VectorXd k = a.wavenumbers();
    k[a.n / 2] = 0.0;
    return k;
}

} // namespace

Eigen::VectorXd Axis::coords() const {
    Eigen::VectorXd c(n);
    for (int i = 0; i < n; ++i)
        c[i] = coord(i);
    return c;
}

Eigen::VectorXd Axis::wavenumbers() const {
    Eigen::VectorXd k(n);
    const double dk = 2.0 * std::numbers::pi / length();
    for (int i = 0; i < n; ++i)
        k[i] = dk * (i < n / 2 ? i : i - n);
    return k;
}

Grid::Grid(int dims, const Axis &x, const Axis &y) : dims_(dims), axes_{x, y} {}

Grid Grid::line(const Axis &x) {
    validate_axis(x, "x");
    return Grid(1, x, Axis{0.0, 1.0, 1});
}

Grid Grid::plane(const Axis &x, const Axis &y) {
    validate_axis(x, "x");
    validate_axis(y, "y");
    return Grid(2, x, y);
}

Position Grid::point(Eigen::Index k) const {
    const int ix = static_cast<int>(k % nx());
    const int iy = static_cast<int>(k / nx());
    return {x().coord(ix), dims_ == 2 ? y().coord(iy) : 0.0};
}

double Grid::cell_volume() const {
    return dims_ == 2 ? x().spacing() * y().spacing() : x().spacing();
}

bool Grid::contains(const Position &p) const {
    if (!(p.x() >= x().lo && p.x() < x().hi))
        return false;
    return dims_ == 1 || (p.y() >= y().lo && p.y() < y().hi);
}

WaveFunction::WaveFunction(Grid grid, Eigen::VectorXcd amplitudes, double mass, double hbar)
    : grid_(std::move(grid)), psi_(std::move(amplitudes)), mass_(mass), hbar_(hbar) {
    if (psi_.size() != grid_.size())
        raise(ErrorKind::GridMismatch, "amplitude count does not match the grid");
    if (!(mass_ > 0.0) || !(hbar_ > 0.0))
        raise(ErrorKind::InvalidArgument, "mass and hbar must be positive");
}

double WaveFunction::norm() const { return psi_.squaredNorm() * grid_.cell_volume(); }

WaveFunction WaveFunction::normalized() const {
    const double n = norm();
    if (!(n > 0.0))
        raise(ErrorKind::DestructiveAnnihilation, "cannot normalize a zero wavefunction");
    return with_amplitudes(psi_ / std::sqrt(n));
}

WaveFunction WaveFunction::with_amplitudes(Eigen::VectorXcd amplitudes) const {
    return WaveFunction(grid_, std::move(amplitudes), mass_, hbar_);
}

double WaveFunction::boundary_amplitude() const {
    double m = 0.0;
    const int nx = grid_.nx(), ny = grid_.ny();
    for (int iy = 0; iy < ny; ++iy) {
        m = std::max({m, std::abs(psi_[grid_.index(0, iy)]), std::abs(psi_[grid_.index(nx - 1, iy)])});
    }
    if (grid_.dims() == 2) {
        for (int ix = 0; ix < nx; ++ix)
            m = std::max({m, std::abs(psi_[grid_.index(ix, 0)]), std::abs(psi_[grid_.index(ix, ny - 1)])});
    }
    return m;
}

Eigen::VectorXd evaluate(const Potential &potential, const Grid &grid, double mass) {
    Eigen::VectorXd v(grid.size());
    std::visit(
        [&](const auto &p) {
            using T = std::decay_t<decltype(p)>;
            for (Eigen::Index k = 0; k < grid.size(); ++k) {
                const Position r = grid.point(k);
                if constexpr (std::is_same_v<T, FreeSpace>) {
                    v[k] = 0.0;
                } else if constexpr (std::is_same_v<T, Harmonic>) {
                    Position d = r - p.center;
                    if (grid.dims() == 1)
                        d.y() = 0.0;
                    v[k] = 0.5 * mass * p.omega * p.omega * d.squaredNorm();
                } else {
                    const bool in_barrier =
                        grid.dims() == 1 || std::abs(r.y() - p.barrier_y) <= 0.5 * p.thickness;
                    const bool in_slit =
                        std::abs(r.x() - 0.5 * p.slit_separation) <= 0.5 * p.slit_width ||
                        std::abs(r.x() + 0.5 * p.slit_separation) <= 0.5 * p.slit_width;
                    v[k] = (in_barrier && !in_slit) ? p.height : 0.0;
                }
            }
        },
        potential);
    return v;
}

WaveFunction make_gaussian_packet(const Grid &grid, const Position &center,
                                  const Eigen::Vector2d &width, const Eigen::Vector2d &wavevector,
                                  double mass, double hbar) {
    for (int d = 0; d < grid.dims(); ++d) {
        if (!(width[d] >= kMinWidthInSpacings * grid.axis(d).spacing()))
            raise(ErrorKind::WidthTooSmall,
                  "packet width " + std::to_string(width[d]) + " is below " +
                      std::to_string(kMinWidthInSpacings) + " grid spacings");
    }
    Eigen::VectorXcd psi(grid.size());
    for (Eigen::Index k = 0; k < grid.size(); ++k) {
        const Position r = grid.point(k);
        double arg = 0.0, phase = 0.0;
        for (int d = 0; d < grid.dims(); ++d) {
            const double u = r[d] - center[d];
            arg -= u * u / (4.0 * width[d] * width[d]);
            phase += wavevector[d] * u;
        }
        psi[k] = std::exp(arg) * Complex(std::cos(phase), std::sin(phase));
    }
    WaveFunction out = WaveFunction(grid, std::move(psi), mass, hbar).normalized();
    if (!(out.boundary_amplitude() < kBoundaryGuard))
        raise(ErrorKind::PacketTouchesBoundary,
              "packet amplitude at the periodic boundary is " +
                  std::to_string(out.boundary_amplitude()));
    return out;
}

WaveFunction make_gaussian_packet(const Grid &grid, double center, double width, double wavevector,
                                  double mass, double hbar) {
    return make_gaussian_packet(grid, Position(center, 0.0), Eigen::Vector2d(width, width),
                                Eigen::Vector2d(wavevector, 0.0), mass, hbar);
}

WaveFunction superpose(const WaveFunction &a, const WaveFunction &b, Complex wa, Complex wb) {
    if (!(a.grid() == b.grid()) || a.mass() != b.mass() || a.hbar() != b.hbar())
        raise(ErrorKind::GridMismatch, "superposed wavefunctions must share grid, mass and hbar");
    WaveFunction raw = a.with_amplitudes(wa * a.amplitudes() + wb * b.amplitudes());
    if (!(raw.norm() > 1e-6))
        raise(ErrorKind::DestructiveAnnihilation,
              "superposition norm " + std::to_string(raw.norm()) + " is below 1e-6");
    return raw.normalized();
}

WaveFunction propagate(const WaveFunction &psi, const Potential &potential, double dt, int steps) {
    if (steps < 0)
        raise(ErrorKind::InvalidArgument, "step count must be non-negative");
    if (steps == 0)
        return psi;
    const Grid &grid = psi.grid();
    const Eigen::VectorXd v = evaluate(potential, grid, psi.mass());
    const double spread = v.maxCoeff() - v.minCoeff();
    if (!(std::abs(dt) * spread / psi.hbar() <= kMaxPotentialPhasePerStep))
        raise(ErrorKind::StabilityBoundViolated,
              "dt * (max V - min V) / hbar = " + std::to_string(std::abs(dt) * spread / psi.hbar()) +
                  " exceeds the bound " + std::to_string(kMaxPotentialPhasePerStep));

    const bool has_potential = spread > 0.0 || v.cwiseAbs().maxCoeff() > 0.0;
    Eigen::VectorXcd half_kick(grid.size());
    for (Eigen::Index k = 0; k < grid.size(); ++k)
        half_kick[k] = std::polar(1.0, -0.5 * dt * v[k] / psi.hbar());
    const Eigen::VectorXd k2 = detail::squared_wavenumbers(grid);
    Eigen::VectorXcd drift(grid.size());
    for (Eigen::Index k = 0; k < grid.size(); ++k)
        drift[k] = std::polar(1.0, -0.5 * psi.hbar() * k2[k] * dt / psi.mass());

    Eigen::VectorXcd a = psi.amplitudes();
    for (int s = 0; s < steps; ++s) {
        if (has_potential)
            a.array() *= half_kick.array();
        detail::fft_all(a, grid, false);
        a.array() *= drift.array();
        detail::fft_all(a, grid, true);
        if (has_potential)
            a.array() *= half_kick.array();
    }
    return psi.with_amplitudes(std::move(a));
}

WaveFunction free_evolve_axis(const WaveFunction &psi, int axis, double t) {
    const Grid &grid = psi.grid();
    if (axis < 0 || axis >= grid.dims())
        raise(ErrorKind::InvalidArgument, "axis out of range");
    if (t == 0.0)
        return psi;
    const Eigen::VectorXd k = grid.axis(axis).wavenumbers();
    Eigen::VectorXcd a = psi.amplitudes();
    detail::fft_axis(a, grid, axis, false);
    for (Eigen::Index j = 0; j < grid.size(); ++j) {
        const int i = axis == 0 ? static_cast<int>(j % grid.nx()) : static_cast<int>(j / grid.nx());
        a[j] *= std::polar(1.0, -0.5 * psi.hbar() * k[i] * k[i] * t / psi.mass());
    }
    detail::fft_axis(a, grid, axis, true);
    return psi.with_amplitudes(std::move(a));
}

Eigen::VectorXcd spectral_derivative(const WaveFunction &psi, int axis) {
    const Grid &grid = psi.grid();
    const Eigen::VectorXd k = derivative_wavenumbers(grid.axis(axis));
    Eigen::VectorXcd a = psi.amplitudes();
    detail::fft_axis(a, grid, axis, false);
    for (Eigen::Index j = 0; j < grid.size(); ++j) {
        const int i = axis == 0 ? static_cast<int>(j % grid.nx()) : static_cast<int>(j / grid.nx());
        a[j] *= Complex(0.0, k[i]);
    }
    detail::fft_axis(a, grid, axis, true);
    return a;
}

Eigen::Index VectorField::defined_count() const {
    return std::count(defined.begin(), defined.end(), std::uint8_t{1});
}

VectorField phase_gradient(const WaveFunction &psi, double relative_cutoff) {
    const Grid &grid = psi.grid();
    const Eigen::VectorXd rho = psi.density();
    const double threshold = relative_cutoff * rho.maxCoeff();
    VectorField field{grid, Eigen::MatrixXd(grid.size(), grid.dims()),
                      std::vector<std::uint8_t>(static_cast<std::size_t>(grid.size()), 0)};
    for (Eigen::Index k = 0; k < grid.size(); ++k)
        field.defined[static_cast<std::size_t>(k)] = rho[k] > threshold ? 1 : 0;
    for (int d = 0; d < grid.dims(); ++d) {
        const Eigen::VectorXcd dpsi = spectral_derivative(psi, d);
        for (Eigen::Index k = 0; k < grid.size(); ++k) {
            field.values(k, d) = field.defined[static_cast<std::size_t>(k)]
                                     ? std::imag(std::conj(psi.amplitudes()[k]) * dpsi[k]) / rho[k]
                                     : std::numeric_limits<double>::quiet_NaN();
        }
    }
    return field;
}

double energy(const WaveFunction &psi, const Potential &potential) {
    const Grid &grid = psi.grid();
    Eigen::VectorXcd a = psi.amplitudes();
    detail::fft_all(a, grid, false);
    const Eigen::VectorXd k2 = detail::squared_wavenumbers(grid);
    const double kinetic = (a.cwiseAbs2().array() * k2.array()).sum() /
                           static_cast<double>(grid.size()) * grid.cell_volume() * psi.hbar() *
                           psi.hbar() / (2.0 * psi.mass());
    const Eigen::VectorXd v = evaluate(potential, grid, psi.mass());
    const double pot = (psi.density().array() * v.array()).sum() * grid.cell_volume();
    return kinetic + pot;
}

Complex inner(const WaveFunction &a, const WaveFunction &b) {
    if (!(a.grid() == b.grid()))
        raise(ErrorKind::GridMismatch, "inner product needs a common grid");
    return a.amplitudes().dot(b.amplitudes()) * a.grid().cell_volume();
}

std::pair<double, double> position_moments(const WaveFunction &psi, int axis) {
    const Eigen::VectorXd rho = psi.density();
    double m0 = 0.0, m1 = 0.0, m2 = 0.0;
    for (Eigen::Index k = 0; k < rho.size(); ++k) {
        const double x = psi.grid().point(k)[axis];
        m0 += rho[k];
        m1 += rho[k] * x;
        m2 += rho[k] * x * x;
    }
    const double mean = m1 / m0;
    return {mean, std::sqrt(std::max(0.0, m2 / m0 - mean * mean))};
}

} // namespace pw
