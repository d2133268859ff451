// Copyright 2026 The cqdsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Dense complex linear algebra for small quantum registers.
//
// Qubit 0 is the least significant bit of an amplitude index. Every
// operator in the library is a dense square matrix whose dimension is a
// power of two.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cqdsim {

using Complex = std::complex<double>;
using StateVector = Eigen::VectorXcd;
using Operator = Eigen::MatrixXcd;

inline constexpr Complex kI{0.0, 1.0};
inline constexpr double kPi = 3.14159265358979323846;

/// Raised when a documented precondition does not hold.
class ContractViolation : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline void require(bool condition, const std::string& what) {
    if (!condition) throw ContractViolation(what);
}

inline bool is_power_of_two(std::size_t n) { return std::has_single_bit(n); }

/// Number of qubits spanned by a register of the given dimension.
inline std::size_t qubit_count(std::size_t dim) {
    require(is_power_of_two(dim), "dimension " + std::to_string(dim) + " is not a power of two");
    return static_cast<std::size_t>(std::countr_zero(dim));
}

inline Operator identity(std::size_t dim) { return Operator::Identity(dim, dim); }

inline StateVector basis_state(std::size_t dim, std::size_t index) {
    require(index < dim, "basis index out of range");
    StateVector v = StateVector::Zero(dim);
    v(index) = 1.0;
    return v;
}

/// Kronecker product; `a` occupies the high-order qubits.
inline Operator kron(const Operator& a, const Operator& b) {
    Operator out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

/// Largest singular value.
inline double operator_norm(const Operator& a) {
    if (a.size() == 0) return 0.0;
    if (a.isZero(0.0)) return 0.0;
    Eigen::BDCSVD<Operator> svd(a);
    return svd.singularValues().maxCoeff();
}

inline bool is_hermitian(const Operator& h, double tol = 1e-10) {
    if (h.rows() != h.cols()) return false;
    const Operator diff = h - h.adjoint();
    // Frobenius bounds the operator norm from above; fall back to the SVD only
    // when the cheap bound is inconclusive.
    if (diff.norm() <= tol) return true;
    return operator_norm(diff) <= tol;
}

inline bool is_unitary(const Operator& u, double tol = 1e-10) {
    if (u.rows() != u.cols()) return false;
    return operator_norm(u.adjoint() * u - identity(u.rows())) <= tol;
}

/// e^{-iHt} for Hermitian H, via the eigendecomposition of H.
inline Operator expm_neg_i_hermitian(const Operator& h, double t) {
    require(h.rows() == h.cols(), "generator must be square");
    require(is_hermitian(h, 1e-10), "generator is not Hermitian within 1e-10");
    Eigen::SelfAdjointEigenSolver<Operator> eig(h);
    const auto& vals = eig.eigenvalues();
    const auto& vecs = eig.eigenvectors();
    Eigen::VectorXcd phases(vals.size());
    for (Eigen::Index i = 0; i < vals.size(); ++i) phases(i) = std::exp(-kI * (vals(i) * t));
    return vecs * phases.asDiagonal() * vecs.adjoint();
}

/// Cached eigensystem of a Hermitian generator, for repeated exponentials.
class HermitianEigensystem {
public:
    HermitianEigensystem() = default;
    explicit HermitianEigensystem(const Operator& h) {
        require(h.rows() == h.cols(), "generator must be square");
        require(is_hermitian(h, 1e-10), "generator is not Hermitian within 1e-10");
        Eigen::SelfAdjointEigenSolver<Operator> eig(h);
        values_ = eig.eigenvalues();
        vectors_ = eig.eigenvectors();
    }

    Operator evolve(double t) const {
        Eigen::VectorXcd phases(values_.size());
        for (Eigen::Index i = 0; i < values_.size(); ++i) phases(i) = std::exp(-kI * (values_(i) * t));
        return vectors_ * phases.asDiagonal() * vectors_.adjoint();
    }

    double spectral_radius() const {
        return values_.size() == 0 ? 0.0 : values_.cwiseAbs().maxCoeff();
    }

private:
    Eigen::VectorXd values_;
    Operator vectors_;
};

/// Modulus of the inner product of two normalized states.
inline double fidelity(const StateVector& u, const StateVector& v) {
    require(u.size() == v.size(), "fidelity: length mismatch (" + std::to_string(u.size()) + " vs " +
                                      std::to_string(v.size()) + ")");
    require(std::abs(u.norm() - 1.0) <= 1e-8 && std::abs(v.norm() - 1.0) <= 1e-8,
            "fidelity: states must be normalized");
    return std::abs(u.dot(v));
}

inline StateVector normalized(const StateVector& v) {
    const double n = v.norm();
    require(n > 0.0, "cannot normalize the zero vector");
    return v / n;
}

/// Applies `gate` to the listed qubits, identity elsewhere. Bit i of the
/// gate's local index corresponds to qubit targets[i].
inline StateVector apply_to_targets(const StateVector& state, const Operator& gate,
                                    std::span<const std::size_t> targets) {
    const std::size_t dim = static_cast<std::size_t>(state.size());
    const std::size_t nq = qubit_count(dim);
    const std::size_t local = std::size_t{1} << targets.size();
    require(gate.rows() == static_cast<Eigen::Index>(local) && gate.cols() == gate.rows(),
            "gate dimension does not match 2^|targets|");
    std::size_t mask = 0;
    for (std::size_t t : targets) {
        require(t < nq, "target qubit " + std::to_string(t) + " out of range");
        require((mask >> t & 1U) == 0, "duplicate target qubit " + std::to_string(t));
        mask |= std::size_t{1} << t;
    }

    std::vector<std::size_t> offsets(local, 0);
    for (std::size_t l = 0; l < local; ++l)
        for (std::size_t b = 0; b < targets.size(); ++b)
            if (l >> b & 1U) offsets[l] |= std::size_t{1} << targets[b];

    StateVector out(state.size());
    Eigen::VectorXcd in_local(local);
    for (std::size_t base = 0; base < dim; ++base) {
        if (base & mask) continue;
        for (std::size_t l = 0; l < local; ++l) in_local(l) = state(base | offsets[l]);
        const Eigen::VectorXcd out_local = gate * in_local;
        for (std::size_t l = 0; l < local; ++l) out(base | offsets[l]) = out_local(l);
    }
    return out;
}

inline StateVector apply_to_targets(const StateVector& state, const Operator& gate,
                                    std::initializer_list<std::size_t> targets) {
    return apply_to_targets(state, gate, std::span<const std::size_t>(targets.begin(), targets.size()));
}

/// Hermitian matrix with entries drawn from a caller-supplied source of
/// uniforms on [0,1).
template <class Uniform>
Operator random_hermitian(std::size_t dim, Uniform&& uniform) {
    Operator a(dim, dim);
    for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = 0; j < dim; ++j)
            a(i, j) = Complex(2.0 * uniform() - 1.0, 2.0 * uniform() - 1.0);
    return 0.5 * (a + a.adjoint());
}

template <class Uniform>
StateVector random_state(std::size_t dim, Uniform&& uniform) {
    StateVector v(dim);
    for (std::size_t i = 0; i < dim; ++i) v(i) = Complex(2.0 * uniform() - 1.0, 2.0 * uniform() - 1.0);
    return normalized(v);
}

/// Haar-ish random unitary: the Q factor of a random complex matrix.
template <class Uniform>
Operator random_unitary(std::size_t dim, Uniform&& uniform) {
    Operator a(dim, dim);
    for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = 0; j < dim; ++j)
            a(i, j) = Complex(2.0 * uniform() - 1.0, 2.0 * uniform() - 1.0);
    Eigen::HouseholderQR<Operator> qr(a);
    return qr.householderQ() * identity(dim);
}

}  // namespace cqdsim
