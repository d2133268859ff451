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

// Phase oracles built from a hidden bit string x of length N = 2^n:
//   H_x|j> = x_j|j>,  Q_x|j> = (-1)^{x_j}|j>,  Q_x^theta|j> = e^{-i theta x_j}|j>.

#pragma once

#include "cqdsim/numerics.hpp"
#include "cqdsim/random.hpp"

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace cqdsim {

class OracleInstance {
public:
    OracleInstance(std::size_t n_qubits, std::vector<std::uint8_t> bits)
        : n_qubits_(n_qubits), bits_(std::move(bits)) {
        require(n_qubits_ >= 1 && n_qubits_ < 31, "oracle: n_qubits must be in [1, 30]");
        require(bits_.size() == (std::size_t{1} << n_qubits_),
                "oracle: expected " + std::to_string(std::size_t{1} << n_qubits_) + " bits, got " +
                    std::to_string(bits_.size()));
        for (auto b : bits_) require(b <= 1, "oracle: bits must be 0 or 1");
    }

    template <UniformSource S>
    static OracleInstance random(std::size_t n_qubits, S& rng) {
        std::vector<std::uint8_t> bits(std::size_t{1} << n_qubits);
        for (auto& b : bits) b = rng.uniform() < 0.5 ? 0 : 1;
        return OracleInstance(n_qubits, std::move(bits));
    }

    std::size_t n_qubits() const { return n_qubits_; }
    std::size_t dimension() const { return bits_.size(); }
    std::uint8_t bit(std::size_t j) const { return bits_[j]; }
    const std::vector<std::uint8_t>& bits() const { return bits_; }

private:
    std::size_t n_qubits_;
    std::vector<std::uint8_t> bits_;
};

/// The one place full-query usage is tallied. Each trajectory owns its own
/// counter; every full-query application in the library goes through charge().
class QueryCounter {
public:
    void charge(std::uint64_t queries = 1) { count_ += queries; }
    std::uint64_t count() const { return count_; }

private:
    std::uint64_t count_ = 0;
};

inline Operator query_hamiltonian(const OracleInstance& x) {
    Operator h = Operator::Zero(x.dimension(), x.dimension());
    for (std::size_t j = 0; j < x.dimension(); ++j) h(j, j) = static_cast<double>(x.bit(j));
    return h;
}

inline Operator full_query(const OracleInstance& x) {
    Operator q = Operator::Zero(x.dimension(), x.dimension());
    for (std::size_t j = 0; j < x.dimension(); ++j) q(j, j) = x.bit(j) ? -1.0 : 1.0;
    return q;
}

inline void require_fraction_angle(double theta) {
    require(theta > -kPi && theta <= kPi, "fractional query angle must lie in (-pi, pi]");
}

/// Maps an angle into (-pi, pi].
inline double wrap_angle(double theta) {
    double a = std::remainder(theta, 2.0 * kPi);
    if (a <= -kPi) a += 2.0 * kPi;
    return a;
}

inline Operator fractional_query(const OracleInstance& x, double theta) {
    require_fraction_angle(theta);
    Operator q = Operator::Zero(x.dimension(), x.dimension());
    const Complex phase = std::exp(-kI * theta);
    for (std::size_t j = 0; j < x.dimension(); ++j) q(j, j) = x.bit(j) ? phase : Complex(1.0);
    return q;
}

/// Q_x controlled on the most significant qubit (index n): block-diag(I, Q_x).
inline Operator controlled_full_query(const OracleInstance& x) {
    const std::size_t dim = x.dimension();
    Operator c = identity(2 * dim);
    for (std::size_t j = 0; j < dim; ++j) c(dim + j, dim + j) = x.bit(j) ? -1.0 : 1.0;
    return c;
}

// In-place diagonal kernels used on the hot paths.

/// Applies Q_x to the system qubits 0..n-1 of a register that may carry
/// further (higher) qubits. One full query is charged.
inline void apply_full_query(StateVector& psi, const OracleInstance& x, QueryCounter& counter) {
    const std::size_t mask = x.dimension() - 1;
    for (Eigen::Index i = 0; i < psi.size(); ++i)
        if (x.bit(static_cast<std::size_t>(i) & mask)) psi(i) = -psi(i);
    counter.charge();
}

/// Applies Q_x to the system qubits, controlled on `control` being |1>.
inline void apply_controlled_full_query(StateVector& psi, const OracleInstance& x, std::size_t control,
                                        QueryCounter& counter) {
    require(control >= x.n_qubits(), "control qubit overlaps the system register");
    const std::size_t mask = x.dimension() - 1;
    for (Eigen::Index i = 0; i < psi.size(); ++i) {
        const auto idx = static_cast<std::size_t>(i);
        if ((idx >> control & 1U) && x.bit(idx & mask)) psi(i) = -psi(i);
    }
    counter.charge();
}

/// Ideal fractional query on a system-only state; not a full query, so
/// nothing is charged.
inline void apply_fractional_query(StateVector& psi, const OracleInstance& x, double theta) {
    require_fraction_angle(theta);
    require(static_cast<std::size_t>(psi.size()) == x.dimension(), "state/oracle dimension mismatch");
    const Complex phase = std::exp(-kI * theta);
    for (std::size_t j = 0; j < x.dimension(); ++j)
        if (x.bit(j)) psi(j) *= phase;
}

}  // namespace cqdsim
