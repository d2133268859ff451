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

// Continuous-time query algorithms with piecewise-constant driving
// Hamiltonians, and their exact reference evolution.

#pragma once

#include "cqdsim/numerics.hpp"
#include "cqdsim/oracle.hpp"

#include <optional>
#include <vector>

namespace cqdsim {

struct SchedulePiece {
    double duration;
    Operator generator;
};

class DrivingSchedule {
public:
    explicit DrivingSchedule(std::vector<SchedulePiece> pieces) : pieces_(std::move(pieces)) {
        require(!pieces_.empty(), "schedule: at least one piece is required");
        dim_ = static_cast<std::size_t>(pieces_.front().generator.rows());
        qubit_count(dim_);
        double t = 0.0;
        starts_.reserve(pieces_.size());
        for (std::size_t i = 0; i < pieces_.size(); ++i) {
            const auto& p = pieces_[i];
            require(p.duration > 0.0, "schedule: piece " + std::to_string(i) + " has non-positive duration");
            require(static_cast<std::size_t>(p.generator.rows()) == dim_ && p.generator.cols() == p.generator.rows(),
                    "schedule: piece " + std::to_string(i) + " has mismatched generator dimension");
            require(is_hermitian(p.generator, 1e-10),
                    "schedule: piece " + std::to_string(i) + " generator is not Hermitian within 1e-10");
            eig_.emplace_back(p.generator);
            norms_.push_back(operator_norm(p.generator));
            starts_.push_back(t);
            t += p.duration;
        }
        total_ = t;
    }

    const std::vector<SchedulePiece>& pieces() const { return pieces_; }
    double total_time() const { return total_; }
    std::size_t dimension() const { return dim_; }
    double piece_norm(std::size_t i) const { return norms_[i]; }

    /// U over [t_a, t_b] for D(t) + extra; extra = nullopt means drive only.
    Operator evolve(double t_a, double t_b, const std::optional<Operator>& extra = std::nullopt) const {
        const double slack = 1e-12 * std::max(1.0, total_);
        require(t_a >= -slack && t_a <= t_b + slack && t_b <= total_ + slack,
                "schedule: interval outside [0, T] or reversed");
        t_a = std::clamp(t_a, 0.0, total_);
        t_b = std::clamp(t_b, t_a, total_);
        Operator u = identity(dim_);
        for (std::size_t i = 0; i < pieces_.size(); ++i) {
            const double lo = std::max(t_a, starts_[i]);
            const double hi = std::min(t_b, starts_[i] + pieces_[i].duration);
            if (hi <= lo) continue;
            if (extra)
                u = expm_neg_i_hermitian(pieces_[i].generator + *extra, hi - lo) * u;
            else
                u = eig_[i].evolve(hi - lo) * u;
        }
        return u;
    }

private:
    std::vector<SchedulePiece> pieces_;
    std::vector<HermitianEigensystem> eig_;
    std::vector<double> norms_;
    std::vector<double> starts_;
    std::size_t dim_ = 0;
    double total_ = 0.0;
};

struct ContinuousAlgorithm {
    ContinuousAlgorithm(DrivingSchedule s, StateVector psi0)
        : schedule(std::move(s)), initial_state(std::move(psi0)) {
        require(static_cast<std::size_t>(initial_state.size()) == schedule.dimension(),
                "algorithm: initial state dimension does not match the schedule");
        require(std::abs(initial_state.norm() - 1.0) <= 1e-9, "algorithm: initial state is not normalized");
    }

    DrivingSchedule schedule;
    StateVector initial_state;
};

/// r = (1/T) * sum_i duration_i * ||D_i||.
inline double average_norm(const DrivingSchedule& s) {
    double acc = 0.0;
    for (std::size_t i = 0; i < s.pieces().size(); ++i) acc += s.pieces()[i].duration * s.piece_norm(i);
    return acc / s.total_time();
}

inline Operator drive_evolve(const DrivingSchedule& s, double t_a, double t_b) { return s.evolve(t_a, t_b); }

/// Exact evolution of |psi0> under H_x + D(t) over [0, T].
inline StateVector reference_evolve(const ContinuousAlgorithm& alg, const OracleInstance& x) {
    require(x.dimension() == alg.schedule.dimension(), "reference_evolve: oracle/system dimension mismatch");
    return alg.schedule.evolve(0.0, alg.schedule.total_time(), query_hamiltonian(x)) * alg.initial_state;
}

}  // namespace cqdsim
