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

// Undo/redo error correction for failed segment computations.
//
// A failed segment is known exactly from its outcome string, so it can be
// inverted: run its slots backwards with inverted drives, replacing every
// failed gadget by an explicit fix and every successful gadget by a
// conjugate gadget. Undo plans may themselves fail, which is handled by the
// same rule. Each original segment becomes a random walk over a stack of
// pending computations: success pops, failure pushes (redo, undo).

#pragma once

#include "cqdsim/discretize.hpp"
#include "cqdsim/segment.hpp"

#include <cmath>
#include <memory>
#include <optional>
#include <span>
#include <tuple>
#include <type_traits>
#include <vector>

namespace cqdsim {

struct ErrorRecord {
    std::vector<std::size_t> positions;  // slot indices of failed gadgets
    std::vector<double> signs;           // -pi/2 (forward failure) or +pi/2 (reverse failure)
};

inline double failure_angle(Direction dir) { return dir == Direction::forward ? -kPi / 2 : kPi / 2; }

inline ErrorRecord error_record(const SegmentPlan& plan, std::span<const std::uint8_t> outcomes) {
    require(outcomes.size() == plan.gadget_count(), "error_record: one outcome per gadget is required");
    ErrorRecord rec;
    std::size_t g = 0;
    for (std::size_t i = 0; i < plan.slots.size(); ++i) {
        if (plan.slots[i].kind != SlotKind::gadget) continue;
        if (outcomes[g++]) {
            rec.positions.push_back(i);
            rec.signs.push_back(failure_angle(plan.direction));
        }
    }
    return rec;
}

/// The plan that exactly inverts `failed` as realised with the errors in
/// `record`, assuming all of its own gadgets succeed.
inline SegmentPlan undo_plan(const SegmentPlan& failed, const ErrorRecord& record) {
    const std::size_t len = failed.length();
    require(len >= 1, "undo_plan: empty plan");
    require(record.positions.size() == record.signs.size(), "undo_plan: positions and signs differ in length");
    std::vector<std::optional<double>> error_at(len);
    for (std::size_t e = 0; e < record.positions.size(); ++e) {
        const std::size_t pos = record.positions[e];
        require(pos < len, "undo_plan: error position out of range");
        require(e == 0 || record.positions[e - 1] < pos, "undo_plan: positions must be strictly increasing");
        require(failed.slots[pos].kind == SlotKind::gadget, "undo_plan: error recorded at a fix slot");
        require(std::abs(record.signs[e] - failure_angle(failed.direction)) < 1e-12,
                "undo_plan: error sign does not match the plan direction");
        error_at[pos] = record.signs[e];
    }

    SegmentPlan undo;
    undo.theta = failed.theta;
    undo.direction = opposite(failed.direction);
    undo.lead = failed.slots[len - 1].drive.adjoint();
    undo.slots.reserve(len);
    for (std::size_t j = 0; j < len; ++j) {
        const std::size_t src = len - 1 - j;
        const auto& s = failed.slots[src];
        SegmentSlot slot;
        if (s.kind == SlotKind::fix) {
            slot.kind = SlotKind::fix;
            slot.fix_angle = -s.fix_angle;
        } else if (error_at[src]) {
            slot.kind = SlotKind::fix;
            slot.fix_angle = -*error_at[src];
        } else {
            slot.kind = SlotKind::gadget;
        }
        slot.drive = src > 0 ? Operator(failed.slots[src - 1].drive.adjoint()) : Operator(failed.lead.adjoint());
        undo.slots.push_back(std::move(slot));
    }
    undo.k = std::min(failed.k, undo.gadget_count());
    return undo;
}

// ---------------------------------------------------------------------------

struct TrajectoryStats {
    std::uint64_t full_queries = 0;
    std::uint64_t segment_computations = 0;
    std::uint64_t failed_computations = 0;
    std::uint64_t error_fixes = 0;
    bool succeeded = false;
    std::size_t max_recursion_depth = 0;
    std::size_t original_segments = 0;
    std::size_t completed_segments = 0;
};

/// One segment computation as seen by the walk.
struct WalkStep {
    std::size_t segment = 0;  // original segment being worked on
    std::size_t depth = 0;    // pending computations below this one
    bool succeeded = false;
    std::int64_t net_progress = 0;  // successes minus failures so far, this one included
};

struct RecoveryOptions {
    SegmentMode mode = SegmentMode::exact_sequential;
    double eps2 = 0.1;
    double budget_factor = 2.0;
    std::size_t m_cap = 16;
    std::optional<std::size_t> m;  // default: choose_m(theta)
    std::optional<std::size_t> k;  // default: m (no truncation)
    bool record_trace = false;
};

struct RecoveryResult {
    StateVector state;
    TrajectoryStats stats;
    std::vector<WalkStep> trace;
};

/// ceil(budget_factor * segments / eps2), applied to segment computations
/// and to error fixes separately.
inline std::uint64_t walk_budget(std::size_t segments, double eps2, double budget_factor) {
    require(eps2 > 0.0 && eps2 < 1.0, "budget: eps2 must lie in (0, 1)");
    require(budget_factor >= 1.0, "budget: budget_factor must be at least 1");
    return static_cast<std::uint64_t>(std::ceil(budget_factor * static_cast<double>(segments) / eps2 - 1e-9));
}

/// Cuts the program into ceil(p/m) forward segments; the last may be shorter.
inline std::vector<SegmentPlan> partition_program(const FractionalProgram& prog, std::size_t m, std::size_t k) {
    require(m >= 1, "partition_program: m must be at least 1");
    std::vector<SegmentPlan> plans;
    for (std::size_t start = 0; start < prog.p; start += m) {
        const std::size_t len = std::min(m, prog.p - start);
        plans.push_back(make_segment_plan(prog.theta, std::span(prog.drives).subspan(start, len), std::min(k, len)));
    }
    return plans;
}

template <UniformSource S>
RecoveryResult run_with_recovery(const StateVector& psi0, const OracleInstance& x, const FractionalProgram& prog,
                                 const RecoveryOptions& opts, S& rng) {
    require(static_cast<std::size_t>(psi0.size()) == x.dimension(), "run_with_recovery: dimension mismatch");
    const std::size_t m = opts.m.value_or(choose_m(prog.theta));
    const std::size_t k = opts.k.value_or(m);
    const auto originals = partition_program(prog, m, k);
    const std::uint64_t budget = walk_budget(originals.size(), opts.eps2, opts.budget_factor);
    const SegmentRunOptions seg_opts{opts.mode, opts.m_cap};

    RecoveryResult res;
    auto& st = res.stats;
    st.original_segments = originals.size();
    QueryCounter counter;
    StateVector psi = psi0;
    std::int64_t net = 0;

    using PlanPtr = std::shared_ptr<const SegmentPlan>;
    for (std::size_t s = 0; s < originals.size(); ++s) {
        std::vector<PlanPtr> stack{std::make_shared<const SegmentPlan>(originals[s])};
        while (!stack.empty()) {
            if (st.segment_computations >= budget || st.error_fixes > budget) {
                res.state = std::move(psi);
                st.full_queries = counter.count();
                return res;
            }
            const PlanPtr plan = stack.back();
            stack.pop_back();
            const std::size_t depth = stack.size();
            st.max_recursion_depth = std::max(st.max_recursion_depth, depth);

            SegmentResult out = run_segment(psi, x, *plan, seg_opts, rng, counter);
            ++st.segment_computations;
            st.error_fixes += out.fixes_applied;
            psi = std::move(out.state);
            const bool ok = out.succeeded();
            if (ok) {
                ++net;
            } else {
                --net;
                ++st.failed_computations;
                stack.push_back(plan);
                stack.push_back(std::make_shared<const SegmentPlan>(undo_plan(*plan, error_record(*plan, out.outcomes))));
            }
            if (opts.record_trace) res.trace.push_back({s, depth, ok, net});
        }
        ++st.completed_segments;
    }
    st.succeeded = st.error_fixes <= budget;
    st.full_queries = counter.count();
    res.state = std::move(psi);
    return res;
}

// ---------------------------------------------------------------------------

struct WalkSummary {
    std::size_t trials = 0;
    std::size_t segments = 0;
    double computations_per_segment = 0.0;
    double computations_per_segment_stderr = 0.0;
    double fixes_per_segment = 0.0;
    double fixes_per_segment_stderr = 0.0;
    double computation_success_rate = 0.0;
    double computation_success_rate_stderr = 0.0;
    double budget_failure_rate = 0.0;
    double budget_failure_rate_stderr = 0.0;
};

namespace detail {
inline std::pair<double, double> mean_and_stderr(const std::vector<double>& xs) {
    if (xs.empty()) return {0.0, 0.0};
    double mean = 0.0;
    for (double v : xs) mean += v;
    mean /= static_cast<double>(xs.size());
    if (xs.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double v : xs) ss += (v - mean) * (v - mean);
    const double var = ss / static_cast<double>(xs.size() - 1);
    return {mean, std::sqrt(var / static_cast<double>(xs.size()))};
}
}  // namespace detail

/// Monte Carlo statistics of the recovery walk, one stream per trial.
inline WalkSummary estimate_walk_stats(const FractionalProgram& prog, const OracleInstance& x, std::size_t trials,
                                       std::uint64_t seed, const RecoveryOptions& opts) {
    require(trials >= 1, "estimate_walk_stats: at least one trial is required");
    WalkSummary sum;
    sum.trials = trials;
    std::vector<double> comps, fixes;
    std::uint64_t total_comps = 0, total_fail = 0, budget_failures = 0;
    const StateVector psi0 = basis_state(x.dimension(), 0);
    for (std::size_t t = 0; t < trials; ++t) {
        auto rng = RandomStream::for_trial(seed, t);
        const auto res = run_with_recovery(psi0, x, prog, opts, rng);
        const auto& st = res.stats;
        sum.segments = st.original_segments;
        comps.push_back(static_cast<double>(st.segment_computations) / static_cast<double>(st.original_segments));
        fixes.push_back(static_cast<double>(st.error_fixes) / static_cast<double>(st.original_segments));
        total_comps += st.segment_computations;
        total_fail += st.failed_computations;
        if (!st.succeeded) ++budget_failures;
    }
    std::tie(sum.computations_per_segment, sum.computations_per_segment_stderr) = detail::mean_and_stderr(comps);
    std::tie(sum.fixes_per_segment, sum.fixes_per_segment_stderr) = detail::mean_and_stderr(fixes);
    const double n_comp = static_cast<double>(total_comps);
    sum.computation_success_rate = 1.0 - static_cast<double>(total_fail) / n_comp;
    sum.computation_success_rate_stderr =
        std::sqrt(sum.computation_success_rate * (1.0 - sum.computation_success_rate) / n_comp);
    const double n_trials = static_cast<double>(trials);
    sum.budget_failure_rate = static_cast<double>(budget_failures) / n_trials;
    sum.budget_failure_rate_stderr = std::sqrt(sum.budget_failure_rate * (1.0 - sum.budget_failure_rate) / n_trials);
    return sum;
}

// ---------------------------------------------------------------------------

template <class R>
struct Amplified {
    std::optional<R> result;
    std::size_t attempts = 0;
};

/// ceil(log(1/eps2') / log(1/eps2)).
inline std::size_t amplification_attempts(double eps2, double eps2_prime) {
    require(eps2 > 0.0 && eps2 < 1.0 && eps2_prime > 0.0 && eps2_prime < 1.0,
            "amplify: eps2 and eps2' must lie in (0, 1)");
    const double ratio = std::log(1.0 / eps2_prime) / std::log(1.0 / eps2);
    return static_cast<std::size_t>(std::max(1.0, std::ceil(ratio - 1e-9)));
}

/// Repeats `attempt(i)` (returning std::optional<R>) until it yields a value
/// or the attempt limit for failure probability eps2' is reached.
template <class F>
auto amplify(F&& attempt, double eps2, double eps2_prime) {
    using Opt = std::invoke_result_t<F&, std::size_t>;
    using R = typename Opt::value_type;
    Amplified<R> out;
    const std::size_t limit = amplification_attempts(eps2, eps2_prime);
    for (std::size_t i = 0; i < limit; ++i) {
        ++out.attempts;
        if (Opt r = attempt(i)) {
            out.result = std::move(*r);
            break;
        }
    }
    return out;
}

}  // namespace cqdsim
