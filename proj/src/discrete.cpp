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

#include "pilotwave/discrete.hpp"

#include "pilotwave/error.hpp"

#include <cmath>
#include <cstdio>

namespace pw {

namespace {

constexpr double kNormTolerance = 1e-12;
constexpr double kOrthogonality = 1e-10;

std::complex<double> overlap(const FiniteState &post, const FiniteState &pre) {
    if (post.dimension() != pre.dimension())
        raise(ErrorKind::InvalidArgument, "pre and post states differ in dimension");
    const std::complex<double> d = post.amplitudes().dot(pre.amplitudes());
    if (std::abs(d) < kOrthogonality)
        raise(ErrorKind::OrthogonalSelection, "pre- and post-selected states are orthogonal");
    return d;
}

} // namespace

FiniteState::FiniteState(Eigen::VectorXcd amplitudes) : v_(std::move(amplitudes)) {
    if (v_.size() == 0)
        raise(ErrorKind::InvalidArgument, "state must have positive dimension");
    if (std::abs(v_.norm() - 1.0) > kNormTolerance)
        raise(ErrorKind::InvalidArgument, "state is not normalized");
}

FiniteState FiniteState::normalized(const Eigen::VectorXcd &amplitudes) {
    const double n = amplitudes.norm();
    if (!(n > 0.0))
        raise(ErrorKind::InvalidArgument, "cannot normalize a zero vector");
    return FiniteState(amplitudes / n);
}

FiniteOperator make_operator(Eigen::MatrixXcd matrix, bool hermitian, std::string label) {
    if (matrix.rows() != matrix.cols() || matrix.rows() == 0)
        raise(ErrorKind::InvalidArgument, "operator must be a non-empty square matrix");
    if (hermitian && (matrix - matrix.adjoint()).cwiseAbs().maxCoeff() >= 1e-12)
        raise(ErrorKind::InvalidArgument, "operator flagged hermitian is not");
    return {std::move(matrix), hermitian, std::move(label)};
}

FiniteOperator projector(Eigen::Index d, Eigen::Index i, std::string label) {
    if (i < 0 || i >= d)
        raise(ErrorKind::InvalidArgument, "projector index out of range");
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(d, d);
    m(i, i) = 1.0;
    return make_operator(std::move(m), true, std::move(label));
}

std::complex<double> weak_value(const FiniteOperator &a, const FiniteState &pre,
                                const FiniteState &post) {
    if (a.matrix.rows() != pre.dimension())
        raise(ErrorKind::InvalidArgument, "operator and state dimensions differ");
    const std::complex<double> den = overlap(post, pre);
    return post.amplitudes().dot(a.matrix * pre.amplitudes()) / den;
}

PointerShift pointer_shift_check(const FiniteOperator &a, const FiniteState &pre,
                                 const FiniteState &post, double sigma) {
    if (!a.hermitian)
        raise(ErrorKind::InvalidArgument, "pointer coupling needs a hermitian operator");
    if (!(sigma > 0.0))
        raise(ErrorKind::InvalidArgument, "pointer spread must be positive");
    const std::complex<double> wv = weak_value(a, pre, post);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(a.matrix);
    const Eigen::VectorXd lambda = eig.eigenvalues();
    const Eigen::MatrixXcd &v = eig.eigenvectors();
    const Eigen::Index d = lambda.size();
    Eigen::VectorXcd c(d);
    for (Eigen::Index i = 0; i < d; ++i)
        c[i] = post.amplitudes().dot(v.col(i)) * v.col(i).dot(pre.amplitudes());
    double num = 0.0, den = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            const double diff = lambda[i] - lambda[j];
            const double g = std::exp(-diff * diff / (8.0 * sigma * sigma));
            const double w = (std::conj(c[i]) * c[j]).real() * g;
            num += w * (lambda[i] + lambda[j]) / 2.0;
            den += w;
        }
    }
    if (std::abs(den) < kOrthogonality)
        raise(ErrorKind::OrthogonalSelection, "post-selection probability vanishes");
    PointerShift out;
    out.sigma = sigma;
    out.shift = num / den;
    out.weak_value_real = wv.real();
    out.weak_regime = sigma >= kWeakRegimeRatio * lambda.cwiseAbs().maxCoeff();
    return out;
}

ThreeBox three_box() {
    const double s = 1.0 / std::sqrt(3.0);
    Eigen::VectorXcd pre(3), post(3);
    pre << s, s, s;
    post << s, s, -s;
    return {FiniteState::normalized(pre), FiniteState::normalized(post),
            {projector(3, 0, "P_A"), projector(3, 1, "P_B"), projector(3, 2, "P_C")}};
}

std::vector<WeakValueRow> weak_value_table(const std::vector<FiniteOperator> &ops,
                                           const FiniteState &pre, const FiniteState &post,
                                           const std::vector<double> &sigmas) {
    std::vector<WeakValueRow> rows;
    for (const auto &op : ops) {
        WeakValueRow row{op.label, weak_value(op, pre, post), {}};
        for (double s : sigmas)
            row.shifts.push_back(pointer_shift_check(op, pre, post, s));
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_weak_value_csv(const std::vector<WeakValueRow> &rows, const std::string &path) {
    std::FILE *f = std::fopen(path.c_str(), "w");
    if (!f)
        raise(ErrorKind::Io, "cannot open " + path);
    std::fputs("operator,re,im", f);
    if (!rows.empty())
        for (const auto &s : rows.front().shifts)
            std::fprintf(f, ",shift_sigma_%g", s.sigma);
    std::fputs("\n", f);
    for (const auto &row : rows) {
        std::fprintf(f, "%s,%.15g,%.15g", row.label.c_str(), row.value.real(), row.value.imag());
        for (const auto &s : row.shifts)
            std::fprintf(f, ",%.15g", s.shift);
        std::fputs("\n", f);
    }
    std::fclose(f);
}

} // namespace pw
