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

// First-order time-dependent Trotterization of a continuous-time query
// algorithm into p slices, each a fractional query followed by a driving
// unitary:  (V_{p-1} Q^theta) ... (V_0 Q^theta),  theta = T/p.

#pragma once

#include "cqdsim/continuous.hpp"

#include <cmath>
#include <cstdint>
#include <vector>

namespace cqdsim {

struct FractionalProgram {
    double theta = 0.0;
    std::size_t p = 0;
    std::vector<Operator> drives;
    std::size_t n_qubits = 0;

    double total_time() const { return theta * static_cast<double>(p); }
};

namespace detail {
// Integer rounding that tolerates representation error in decimal inputs.
inline std::int64_t ceil_tolerant(double v) { return static_cast<std::int64_t>(std::ceil(v - 1e-9 * std::max(1.0, std::abs(v)))); }
inline std::int64_t floor_tolerant(double v) { return static_cast<std::int64_t>(std::floor(v + 1e-9 * std::max(1.0, std::abs(v)))); }
}  // namespace detail

/// p = max(ceil(2 T^2 r / sqrt(eps1)), floor(T/pi) + 1, 1). The second term
/// is the smallest p keeping theta = T/p strictly below pi.
inline std::size_t choose_p(double total_time, double r, double eps1) {
    require(total_time > 0.0, "choose_p: T must be positive");
    require(r >= 0.0, "choose_p: r must be non-negative");
    require(eps1 > 0.0 && eps1 < 1.0, "choose_p: eps1 must lie in (0, 1)");
    const std::int64_t trotter = detail::ceil_tolerant(2.0 * total_time * total_time * r / std::sqrt(eps1));
    const std::int64_t angle_floor = static_cast<std::int64_t>(std::floor(total_time / kPi)) + 1;
    return static_cast<std::size_t>(std::max<std::int64_t>({trotter, angle_floor, 1}));
}

inline FractionalProgram build_program(const ContinuousAlgorithm& alg, std::size_t p) {
    require(p >= 1, "build_program: p must be at least 1");
    const double total = alg.schedule.total_time();
    FractionalProgram prog;
    prog.p = p;
    prog.theta = total / static_cast<double>(p);
    require(prog.theta < kPi, "build_program: theta = T/p must be below pi");
    prog.n_qubits = qubit_count(alg.schedule.dimension());
    prog.drives.reserve(p);
    for (std::size_t k = 0; k < p; ++k) {
        const double lo = prog.theta * static_cast<double>(k);
        const double hi = (k + 1 == p) ? total : prog.theta * static_cast<double>(k + 1);
        prog.drives.push_back(drive_evolve(alg.schedule, lo, hi));
    }
    return prog;
}

/// |psi_2> = (V_{p-1} Q^theta) ... (V_0 Q^theta)|psi0>.
inline StateVector run_ideal(const FractionalProgram& prog, const OracleInstance& x, const StateVector& psi0) {
    require(static_cast<std::size_t>(psi0.size()) == x.dimension() && x.n_qubits() == prog.n_qubits,
            "run_ideal: dimension mismatch");
    StateVector psi = psi0;
    for (const auto& v : prog.drives) {
        apply_fractional_query(psi, x, prog.theta);
        psi = v * psi;
    }
    return psi;
}

/// || prod W_k - prod (V_k Q^theta) || with W_k the exact slice evolution
/// under D(t) + H_x.
inline double trotter_defect(const ContinuousAlgorithm& alg, const FractionalProgram& prog, const OracleInstance& x) {
    require(x.n_qubits() == prog.n_qubits && x.dimension() == alg.schedule.dimension(),
            "trotter_defect: dimension mismatch");
    const std::size_t dim = x.dimension();
    const Operator hx = query_hamiltonian(x);
    const Operator qf = fractional_query(x, prog.theta);
    const double total = alg.schedule.total_time();
    Operator exact = identity(dim);
    Operator split = identity(dim);
    for (std::size_t k = 0; k < prog.p; ++k) {
        const double lo = prog.theta * static_cast<double>(k);
        const double hi = (k + 1 == prog.p) ? total : prog.theta * static_cast<double>(k + 1);
        exact = alg.schedule.evolve(lo, hi, hx) * exact;
        split = prog.drives[k] * qf * split;
    }
    return operator_norm(exact - split);
}

/// First-order bound 2 T^2 r / p on trotter_defect.
inline double trotter_bound(double total_time, double r, std::size_t p) {
    return 2.0 * total_time * total_time * r / static_cast<double>(p);
}

}  // namespace cqdsim
