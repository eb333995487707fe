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
 * Uniform periodic grids, complex wavefunctions on them, and spectral
 * propagation under H = p^2/2m + V.
 */

#pragma once

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace pw {

using Complex = std::complex<double>;
using Position = Eigen::Vector2d;

/// One periodic axis covering [lo, hi) with n nodes.
struct Axis {
    double lo = 0.0;
    double hi = 1.0;
    int n = 64;

    [[nodiscard]] double spacing() const { return (hi - lo) / n; }
    [[nodiscard]] double length() const { return hi - lo; }
    [[nodiscard]] double coord(int i) const { return lo + i * spacing(); }
    [[nodiscard]] Eigen::VectorXd coords() const;
    /// Angular wavenumbers in FFT storage order.
    [[nodiscard]] Eigen::VectorXd wavenumbers() const;

    bool operator==(const Axis &) const = default;
};

/// Minimum node count per axis.
inline constexpr int kMinAxisPoints = 64;

/// 1D or 2D tensor-product grid. Storage is x-fastest: k = iy * nx + ix.
class Grid {
  public:
    static Grid line(const Axis &x);
    static Grid plane(const Axis &x, const Axis &y);

    [[nodiscard]] int dims() const { return dims_; }
    [[nodiscard]] const Axis &axis(int d) const { return axes_[static_cast<std::size_t>(d)]; }
    [[nodiscard]] const Axis &x() const { return axes_[0]; }
    [[nodiscard]] const Axis &y() const { return axes_[1]; }
    [[nodiscard]] int nx() const { return axes_[0].n; }
    [[nodiscard]] int ny() const { return dims_ == 2 ? axes_[1].n : 1; }
    [[nodiscard]] Eigen::Index size() const { return static_cast<Eigen::Index>(nx()) * ny(); }
    [[nodiscard]] Eigen::Index index(int ix, int iy = 0) const {
        return static_cast<Eigen::Index>(iy) * nx() + ix;
    }
    [[nodiscard]] Position point(Eigen::Index k) const;
    [[nodiscard]] double cell_volume() const;
    [[nodiscard]] bool contains(const Position &p) const;

    bool operator==(const Grid &) const = default;

  private:
    Grid(int dims, const Axis &x, const Axis &y);

    int dims_ = 1;
    std::array<Axis, 2> axes_{};
};

/// Complex amplitudes on a grid together with the particle mass and hbar.
/// Values are immutable; operations return new wavefunctions.
class WaveFunction {
  public:
    WaveFunction(Grid grid, Eigen::VectorXcd amplitudes, double mass = 1.0, double hbar = 1.0);

    [[nodiscard]] const Grid &grid() const { return grid_; }
    [[nodiscard]] const Eigen::VectorXcd &amplitudes() const { return psi_; }
    [[nodiscard]] double mass() const { return mass_; }
    [[nodiscard]] double hbar() const { return hbar_; }

    /// Sum of |psi|^2 times the cell volume.
    [[nodiscard]] double norm() const;
    [[nodiscard]] Eigen::VectorXd density() const { return psi_.cwiseAbs2(); }
    [[nodiscard]] WaveFunction normalized() const;
    [[nodiscard]] WaveFunction with_amplitudes(Eigen::VectorXcd amplitudes) const;
    /// Largest |psi| over the outermost nodes of every axis.
    [[nodiscard]] double boundary_amplitude() const;

  private:
    Grid grid_;
    Eigen::VectorXcd psi_;
    double mass_;
    double hbar_;
};

struct FreeSpace {};

/// V = m omega^2 |r - center|^2 / 2.
struct Harmonic {
    double omega = 1.0;
    Position center = Position::Zero();
};

/// Opaque barrier of the given height along y = barrier_y (2D) or across the
/// whole line (1D), with two openings centred at +-slit_separation/2.
struct DoubleSlitMask {
    double barrier_y = 0.0;
    double thickness = 0.5;
    double slit_separation = 4.0;
    double slit_width = 1.0;
    double height = 50.0;
};

using Potential = std::variant<FreeSpace, Harmonic, DoubleSlitMask>;

[[nodiscard]] Eigen::VectorXd evaluate(const Potential &potential, const Grid &grid, double mass);

/// Amplitude guard for freshly built packets on the periodic boundary.
inline constexpr double kBoundaryGuard = 1e-12;
/// Packets must span at least this many grid spacings (per axis).
inline constexpr double kMinWidthInSpacings = 4.0;
/// Upper bound on the potential phase accumulated per split step,
/// dt * (max V - min V) / hbar. The kinetic factor is applied exactly in
/// Fourier space, so it imposes no bound of its own.
inline constexpr double kMaxPotentialPhasePerStep = 1.5707963267948966;
/// Default relative density cutoff below which the phase is undefined.
inline constexpr double kDefaultDensityCutoff = 1e-8;

/// Normalized Gaussian times a plane wave exp(i k.(r - center)).
/// `width` is sigma_0 of |psi|^2 per axis (the y entry is ignored in 1D).
[[nodiscard]] WaveFunction make_gaussian_packet(const Grid &grid, const Position &center,
                                                const Eigen::Vector2d &width,
                                                const Eigen::Vector2d &wavevector,
                                                double mass = 1.0, double hbar = 1.0);
[[nodiscard]] WaveFunction make_gaussian_packet(const Grid &grid, double center, double width,
                                                double wavevector, double mass = 1.0,
                                                double hbar = 1.0);

/// Renormalized wa*a + wb*b.
[[nodiscard]] WaveFunction superpose(const WaveFunction &a, const WaveFunction &b, Complex wa,
                                     Complex wb);

/// Symmetric (Strang) split-step: half potential kick, exact kinetic step,
/// half potential kick; repeated `steps` times.
[[nodiscard]] WaveFunction propagate(const WaveFunction &psi, const Potential &potential,
                                     double dt, int steps);

/// Exact free evolution for time t along one axis only (the other axis is
/// left untouched).
[[nodiscard]] WaveFunction free_evolve_axis(const WaveFunction &psi, int axis, double t);

/// Spectral derivative of psi along one axis.
[[nodiscard]] Eigen::VectorXcd spectral_derivative(const WaveFunction &psi, int axis);

/// Sampled vector field with an explicit defined/undefined mask.
struct VectorField {
    Grid grid;
    Eigen::MatrixXd values; ///< size() x dims; NaN where undefined
    std::vector<std::uint8_t> defined;

    [[nodiscard]] Eigen::Index defined_count() const;
};

/// grad S = Im(grad psi / psi), evaluated spectrally. Points with
/// |psi|^2 <= relative_cutoff * max|psi|^2 are flagged undefined.
[[nodiscard]] VectorField phase_gradient(const WaveFunction &psi,
                                         double relative_cutoff = kDefaultDensityCutoff);

/// <H> for H = p^2/2m + V.
[[nodiscard]] double energy(const WaveFunction &psi, const Potential &potential);

/// Inner product <a|b> including the cell volume.
[[nodiscard]] Complex inner(const WaveFunction &a, const WaveFunction &b);

/// Mean and standard deviation of |psi|^2 along an axis.
[[nodiscard]] std::pair<double, double> position_moments(const WaveFunction &psi, int axis);

// Snapshot I/O.
void write_csv(const WaveFunction &psi, const std::string &path);
void write_snapshot(const WaveFunction &psi, const std::string &path);
[[nodiscard]] WaveFunction read_snapshot(const std::string &path);

} // namespace pw
