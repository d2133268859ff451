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

// Single-query probabilistic simulation of a fractional query, and the
// deterministic two-query circuit for an arbitrary fractional query.
//
// Gadget register layout: system on qubits 0..n-1, ancilla on qubit n.
//
//   |0>_a --R1--*--R2--[measure]
//   |psi> ------Q_x------------
//
// Before measurement the joint state is
//   (1/v) [ e^{i theta/2} |0> Q^theta|psi> + sqrt(sin theta) e^{-i pi/4} |1> Q^{-pi/2}|psi> ]
// with v = cos(theta/2) + sin(theta/2). Using sigma_z R1 in place of R1 gives
// the conjugate gadget (Q^{-theta} on success, Q^{+pi/2} on failure).

#pragma once

#include "cqdsim/oracle.hpp"
#include "cqdsim/random.hpp"

#include <cmath>
#include <utility>

namespace cqdsim {

enum class Direction { forward, reverse };

inline Direction opposite(Direction d) { return d == Direction::forward ? Direction::reverse : Direction::forward; }

enum class AppliedOp { frac_plus, frac_minus, err_minus_half_pi, err_plus_half_pi };

struct GadgetOutcome {
    int measured_bit = 0;
    AppliedOp applied = AppliedOp::frac_plus;
    double probability = 1.0;
};

namespace detail {
inline void require_gadget_angle(double theta) {
    require(theta > 0.0 && theta <= kPi, "gadget angle must lie in (0, pi]");
}
}  // namespace detail

/// v = cos(theta/2) + sin(theta/2).
inline double gadget_v(double theta) { return std::cos(theta / 2) + std::sin(theta / 2); }

/// p_s = 1/v^2.
inline double success_probability(double theta) {
    const double v = gadget_v(theta);
    return 1.0 / (v * v);
}

/// R1: |0> -> (sqrt(cos theta/2)|0> + i sqrt(sin theta/2)|1>)/sqrt(v). The
/// second column is the orthonormal completion with a real non-negative
/// leading entry.
inline Operator r1_matrix(double theta) {
    detail::require_gadget_angle(theta);
    const double v = gadget_v(theta);
    const double c = std::sqrt(std::cos(theta / 2) / v);
    const double s = std::sqrt(std::sin(theta / 2) / v);
    Operator r(2, 2);
    r << c, s,
         kI * s, -kI * c;
    return r;
}

inline Operator r1_conjugate_matrix(double theta) {
    Operator z = Operator::Zero(2, 2);
    z(0, 0) = 1.0;
    z(1, 1) = -1.0;
    return z * r1_matrix(theta);
}

inline Operator r2_matrix(double theta) {
    detail::require_gadget_angle(theta);
    const double v = gadget_v(theta);
    const double c = std::sqrt(std::cos(theta / 2) / v);
    const double s = std::sqrt(std::sin(theta / 2) / v);
    Operator r(2, 2);
    r << c, s,
         s, -c;
    return r;
}

/// Pre-measurement joint state of the gadget, ancilla on qubit n. One full
/// query is charged.
inline StateVector gadget_joint_state(const StateVector& psi, const OracleInstance& x, double theta, Direction dir,
                                      QueryCounter& counter) {
    require(static_cast<std::size_t>(psi.size()) == x.dimension(), "gadget: state/oracle dimension mismatch");
    const std::size_t n = x.n_qubits();
    StateVector joint = StateVector::Zero(2 * psi.size());
    joint.head(psi.size()) = psi;
    const Operator r1 = dir == Direction::forward ? r1_matrix(theta) : r1_conjugate_matrix(theta);
    joint = apply_to_targets(joint, r1, {n});
    apply_controlled_full_query(joint, x, n, counter);
    return apply_to_targets(joint, r2_matrix(theta), {n});
}

/// Runs one gadget and post-selects on the ancilla. The branch is 0 when
/// `rand` < P(ancilla = 0). The returned state keeps the branch's global
/// phase (e^{+-i theta/2} on success, e^{-+i pi/4} on failure).
inline std::pair<GadgetOutcome, StateVector> apply_gadget(const StateVector& psi, const OracleInstance& x,
                                                          double theta, Direction dir, double rand,
                                                          QueryCounter& counter) {
    const StateVector joint = gadget_joint_state(psi, x, theta, dir, counter);
    const auto half = psi.size();
    const double p0 = joint.head(half).squaredNorm() / joint.squaredNorm();
    GadgetOutcome out;
    StateVector post;
    if (rand < p0) {
        out.measured_bit = 0;
        out.applied = dir == Direction::forward ? AppliedOp::frac_plus : AppliedOp::frac_minus;
        out.probability = p0;
        post = joint.head(half);
    } else {
        out.measured_bit = 1;
        out.applied = dir == Direction::forward ? AppliedOp::err_minus_half_pi : AppliedOp::err_plus_half_pi;
        out.probability = 1.0 - p0;
        post = joint.tail(half);
    }
    return {out, post / post.norm()};
}

/// R^a = exp(-i theta' (1 - sigma_x)/2): phase e^{-i theta'} on |->.
inline Operator ancilla_phase_rotation(double theta_prime) {
    const Complex ph = std::exp(-kI * theta_prime);
    Operator r(2, 2);
    r << (1.0 + ph) / 2.0, (1.0 - ph) / 2.0,
         (1.0 - ph) / 2.0, (1.0 + ph) / 2.0;
    return r;
}

/// System operator realised by
///   |+>_a, controlled-Q_x, R^a_{theta'}, controlled-Q_x, <+|_a.
/// Equals Q_x^{theta'} (up to global phase). Charges two full queries.
inline Operator exact_fractional_circuit(const OracleInstance& x, double theta_prime, QueryCounter& counter) {
    require_fraction_angle(theta_prime);
    const std::size_t dim = x.dimension();
    const Operator cq = controlled_full_query(x);
    counter.charge();
    Operator rot = kron(ancilla_phase_rotation(theta_prime), identity(dim));
    const Operator joint = cq * rot * cq;
    counter.charge();
    // Contract the ancilla against |+> on both sides.
    return 0.5 * (joint.topLeftCorner(dim, dim) + joint.topRightCorner(dim, dim) + joint.bottomLeftCorner(dim, dim) +
                  joint.bottomRightCorner(dim, dim));
}

/// The unitary a gadget leaves on the system in each branch, including the
/// retained global phase. Used to cross-check realised segment operators.
inline Operator gadget_branch_operator(const OracleInstance& x, double theta, Direction dir, int bit) {
    if (dir == Direction::forward) {
        return bit == 0 ? Operator(std::exp(kI * (theta / 2)) * fractional_query(x, theta))
                        : Operator(std::exp(-kI * (kPi / 4)) * fractional_query(x, -kPi / 2));
    }
    return bit == 0 ? Operator(std::exp(-kI * (theta / 2)) * fractional_query(x, wrap_angle(-theta)))
                    : Operator(std::exp(kI * (kPi / 4)) * fractional_query(x, kPi / 2));
}

}  // namespace cqdsim
