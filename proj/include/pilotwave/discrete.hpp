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
 * Pre- and post-selected weak values in finite dimensions, including the
 * three-box example and the mean shift of a Gaussian pointer at finite
 * coupling width.
 */

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <string>
#include <vector>

namespace pw {

/// Unit vector in C^d (norm checked to 1e-12).
class FiniteState {
  public:
    explicit FiniteState(Eigen::VectorXcd amplitudes);
    /// Rescales to unit norm first.
    static FiniteState normalized(const Eigen::VectorXcd &amplitudes);

    [[nodiscard]] const Eigen::VectorXcd &amplitudes() const { return v_; }
    [[nodiscard]] Eigen::Index dimension() const { return v_.size(); }

  private:
    Eigen::VectorXcd v_;
};

struct FiniteOperator {
    Eigen::MatrixXcd matrix;
    bool hermitian = false;
    std::string label;
};

/// Checks squareness, and |A - A^dagger| < 1e-12 when `hermitian` is set.
[[nodiscard]] FiniteOperator make_operator(Eigen::MatrixXcd matrix, bool hermitian,
                                           std::string label = "");
/// |i><i| in dimension d.
[[nodiscard]] FiniteOperator projector(Eigen::Index d, Eigen::Index i, std::string label = "");

/// <post|A|pre> / <post|pre>.
[[nodiscard]] std::complex<double> weak_value(const FiniteOperator &a, const FiniteState &pre,
                                              const FiniteState &post);

/// Pointer-width threshold, in units of the spectral radius, below which a
/// shift is reported as outside the weak regime.
inline constexpr double kWeakRegimeRatio = 10.0;

struct PointerShift {
    double sigma = 0.0;
    /// Mean pointer position after coupling exp(-i A p) and post-selection.
    double shift = 0.0;
    double weak_value_real = 0.0;
    /// sigma >= kWeakRegimeRatio * spectral radius.
    bool weak_regime = false;
};

/// Exact finite-sigma mean shift of a Gaussian pointer of spread sigma.
/// With c_i = <post|v_i><v_i|pre> over eigenpairs (lambda_i, v_i) of A and
/// G_ij = exp(-(lambda_i - lambda_j)^2 / 8 sigma^2):
/// shift = Re sum c_i* c_j (lambda_i + lambda_j)/2 G_ij / Re sum c_i* c_j G_ij.
[[nodiscard]] PointerShift pointer_shift_check(const FiniteOperator &a, const FiniteState &pre,
                                               const FiniteState &post, double sigma);

struct ThreeBox {
    FiniteState pre;
    FiniteState post;
    std::vector<FiniteOperator> projectors; ///< P_A, P_B, P_C
};

/// pre = (|A> + |B> + |C>)/sqrt 3, post = (|A> + |B> - |C>)/sqrt 3.
[[nodiscard]] ThreeBox three_box();

struct WeakValueRow {
    std::string label;
    std::complex<double> value;
    std::vector<PointerShift> shifts;
};

[[nodiscard]] std::vector<WeakValueRow> weak_value_table(const std::vector<FiniteOperator> &ops,
                                                         const FiniteState &pre,
                                                         const FiniteState &post,
                                                         const std::vector<double> &sigmas);
void write_weak_value_csv(const std::vector<WeakValueRow> &rows, const std::string &path);

} // namespace pw
