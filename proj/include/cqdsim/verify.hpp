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

// Self-check suite behind `cqdsim verify`. Every check reports a measured
// quantity against an upper bound; a check passes when measured <= bound.

#pragma once

#include "cqdsim/continuous.hpp"
#include "cqdsim/discretize.hpp"
#include "cqdsim/gadget.hpp"
#include "cqdsim/recovery.hpp"
#include "cqdsim/segment.hpp"

#include <functional>
#include <string>
#include <vector>

namespace cqdsim {

enum class VerifyLevel { fast, full };

/// Fault injection for exercising the failure path of the suite.
struct VerifyHooks {
    double r2_perturbation = 0.0;  // added to R2(0,0) in the unitarity check
};

struct CheckResult {
    std::string name;
    double measured = 0.0;
    double bound = 0.0;
    bool passed = false;
};

namespace detail {

struct VerifyContext {
    VerifyLevel level;
    VerifyHooks hooks;
    RandomStream rng{0x5eed};

    bool full() const { return level == VerifyLevel::full; }
    std::size_t reps(std::size_t fast, std::size_t full_count) const { return full() ? full_count : fast; }
    double uniform() { return rng.uniform(); }
    auto source() {
        return [this] { return rng.uniform(); };
    }
    OracleInstance oracle(std::size_t n) { return OracleInstance::random(n, rng); }
};

inline CheckResult check(std::string name, double measured, double bound) {
    return {std::move(name), measured, bound, measured <= bound};
}

/// Distance between a and b after removing the best global phase from b.
inline double distance_up_to_phase(const Operator& a, const Operator& b) {
    const Complex overlap = (b.adjoint() * a).trace();
    const Complex phase = std::abs(overlap) > 0 ? overlap / std::abs(overlap) : Complex(1.0);
    return operator_norm(a - phase * b);
}

inline ContinuousAlgorithm random_algorithm(VerifyContext& ctx, std::size_t n, std::size_t pieces, double total,
                                            double max_norm) {
    const std::size_t dim = std::size_t{1} << n;
    std::vector<SchedulePiece> ps;
    for (std::size_t i = 0; i < pieces; ++i) {
        Operator h = random_hermitian(dim, ctx.source());
        h *= max_norm * ctx.uniform() / std::max(operator_norm(h), 1e-12);
        ps.push_back({total / static_cast<double>(pieces), h});
    }
    return ContinuousAlgorithm(DrivingSchedule(std::move(ps)), random_state(dim, ctx.source()));
}

inline std::vector<Operator> random_drives(VerifyContext& ctx, std::size_t dim, std::size_t m) {
    std::vector<Operator> vs;
    for (std::size_t i = 0; i < m; ++i) vs.push_back(random_unitary(dim, ctx.source()));
    return vs;
}

inline std::vector<std::uint8_t> mask_outcomes(std::uint64_t mask, std::size_t m) {
    std::vector<std::uint8_t> out(m);
    for (std::size_t i = 0; i < m; ++i) out[i] = static_cast<std::uint8_t>(mask >> i & 1U);
    return out;
}

// -- numerics ---------------------------------------------------------------

inline CheckResult check_expm_group(VerifyContext& ctx) {
    double worst = 0.0;
    for (std::size_t rep = 0; rep < ctx.reps(10, 50); ++rep) {
        const Operator h = random_hermitian(8, ctx.source());
        const double s = 2 * ctx.uniform(), t = 2 * ctx.uniform();
        const Operator lhs = expm_neg_i_hermitian(h, s + t);
        const Operator rhs = expm_neg_i_hermitian(h, s) * expm_neg_i_hermitian(h, t);
        worst = std::max({worst, operator_norm(lhs - rhs),
                          operator_norm(lhs.adjoint() * lhs - identity(8))});
    }
    return check("numerics.expm_group_and_unitarity", worst, 1e-10);
}

inline CheckResult check_disjoint_targets(VerifyContext& ctx) {
    double worst = 0.0;
    for (std::size_t rep = 0; rep < ctx.reps(10, 50); ++rep) {
        const StateVector psi = random_state(16, ctx.source());
        const Operator a = random_unitary(2, ctx.source());
        const Operator b = random_unitary(4, ctx.source());
        const StateVector ab = apply_to_targets(apply_to_targets(psi, a, {0}), b, {3, 1});
        const StateVector ba = apply_to_targets(apply_to_targets(psi, b, {3, 1}), a, {0});
        worst = std::max({worst, (ab - ba).norm(), std::abs(ab.norm() - 1.0)});
    }
    return check("numerics.disjoint_targets_commute", worst, 1e-12);
}

// -- oracle -----------------------------------------------------------------

inline CheckResult check_fractional_queries(VerifyContext& ctx) {
    double worst = 0.0;
    for (std::size_t rep = 0; rep < ctx.reps(20, 100); ++rep) {
        const auto x = ctx.oracle(1 + rep % 3);
        const double a = (ctx.uniform() - 0.5) * kPi, b = (ctx.uniform() - 0.5) * kPi;
        worst = std::max(worst, operator_norm(fractional_query(x, a) * fractional_query(x, b) -
                                              fractional_query(x, a + b)));
        worst = std::max(worst, operator_norm(fractional_query(x, kPi) - full_query(x)));
        worst = std::max(worst, operator_norm(fractional_query(x, a).adjoint() - fractional_query(x, -a)));
    }
    return check("oracle.fractional_group_law", worst, 1e-12);
}

// -- continuous / discretize ------------------------------------------------

inline CheckResult check_drive_composition(VerifyContext& ctx) {
    double worst = 0.0;
    for (std::size_t rep = 0; rep < ctx.reps(5, 20); ++rep) {
        const auto alg = random_algorithm(ctx, 2, 3, 1.5, 2.0);
        const double t = 1.5 * ctx.uniform();
        const Operator whole = drive_evolve(alg.schedule, 0.0, 1.5);
        const Operator split = drive_evolve(alg.schedule, t, 1.5) * drive_evolve(alg.schedule, 0.0, t);
        worst = std::max({worst, operator_norm(whole - split),
                          std::abs(reference_evolve(alg, ctx.oracle(2)).norm() - 1.0)});
    }
    return check("continuous.drive_composition", worst, 1e-10);
}

inline CheckResult check_trotter_bound(VerifyContext& ctx) {
    double worst = -1.0;
    for (std::size_t rep = 0; rep < ctx.reps(4, 20); ++rep) {
        const double total = 0.5 + 1.5 * ctx.uniform();
        const auto alg = random_algorithm(ctx, 2, 2, total, 2.0);
        const auto x = ctx.oracle(2);
        const double r = average_norm(alg.schedule);
        const std::size_t p = choose_p(total, r, 0.04);
        const auto prog = build_program(alg, p);
        worst = std::max(worst, trotter_defect(alg, prog, x) - trotter_bound(total, r, p));
    }
    return check("discretize.trotter_defect_minus_bound", worst, 1e-9);
}

// -- gadget -----------------------------------------------------------------

inline CheckResult check_gadget_unitaries(VerifyContext& ctx) {
    double worst = 0.0;
    for (std::size_t rep = 0; rep < ctx.reps(10, 50); ++rep) {
        const double theta = kPi * (1e-3 + (1 - 1e-3) * ctx.uniform());
        Operator r2 = r2_matrix(theta);
        r2(0, 0) += ctx.hooks.r2_perturbation;
        for (const Operator& u : {r1_matrix(theta), r1_conjugate_matrix(theta), r2})
            worst = std::max(worst, operator_norm(u.adjoint() * u - identity(2)));
    }
    return check("gadget.r1_r2_unitarity", worst, 1e-12);
}

inline CheckResult check_gadget_joint_state(VerifyContext& ctx) {
    double worst = 0.0;
    for (std::size_t rep = 0; rep < ctx.reps(20, 100); ++rep) {
        const std::size_t n = 1 + rep % 3;
        const auto x = ctx.oracle(n);
        const double theta = kPi * (1e-3 + (1 - 1e-3) * ctx.uniform());
        const StateVector psi = random_state(x.dimension(), ctx.source());
        QueryCounter qc;
        const StateVector joint = gadget_joint_state(psi, x, theta, Direction::forward, qc);
        const double v = gadget_v(theta);
        StateVector expect(joint.size());
        expect.head(psi.size()) = std::exp(kI * (theta / 2)) / v * (fractional_query(x, theta) * psi);
        expect.tail(psi.size()) =
            std::sqrt(std::sin(theta)) * std::exp(-kI * (kPi / 4)) / v * (fractional_query(x, -kPi / 2) * psi);
        const double p0 = joint.head(psi.size()).squaredNorm();
        worst = std::max({worst, (joint - expect).norm(), std::abs(p0 - success_probability(theta)),
                          std::abs(static_cast<double>(qc.count()) - 1.0),
                          std::max(0.0, (1.0 - theta) - success_probability(theta))});
    }
    return check("gadget.joint_state_closed_form", worst, 1e-12);
}

inline CheckResult check_exact_fractional_circuit(VerifyContext& ctx) {
    double worst = 0.0;
    for (std::size_t rep = 0; rep < ctx.reps(20, 100); ++rep) {
        const auto x = ctx.oracle(1 + rep % 3);
        double a = rep == 0 ? kPi / 2 : rep == 1 ? -kPi / 2 : (2 * ctx.uniform() - 1) * kPi;
        if (a <= -kPi) a = kPi;
        QueryCounter qc;
        const Operator c = exact_fractional_circuit(x, a, qc);
        worst = std::max({worst, distance_up_to_phase(c, fractional_query(x, a)),
                          std::abs(static_cast<double>(qc.count()) - 2.0)});
    }
    return check("gadget.exact_fractional_circuit", worst, 1e-12);
}

// -- segment ----------------------------------------------------------------

inline CheckResult check_rearrangement(VerifyContext& ctx) {
    double worst = 0.0;
    const std::size_t max_m = ctx.full() ? 6 : 4;
    for (std::size_t m = 1; m <= max_m; ++m) {
        const auto x = ctx.oracle(2);
        const auto drives = random_drives(ctx, 4, m);
        const auto plan = make_segment_plan(0.05, drives, m);
        QueryCounter qc;
        worst = std::max(worst, operator_norm(build_rearranged(plan, x, qc) - naive_segment_operator(plan, x)));
        worst = std::max(worst, std::abs(static_cast<double>(qc.count()) - static_cast<double>(m + 1)));
    }
    return check("segment.rearranged_equals_naive", worst, 1e-9);
}

inline CheckResult check_truncation(VerifyContext& ctx) {
    double worst = 0.0;
    const std::size_t max_m = ctx.full() ? 6 : 4;
    for (std::size_t m = 1; m <= max_m; ++m) {
        const auto x = ctx.oracle(2);
        const auto drives = random_drives(ctx, 4, m);
        for (std::size_t k = 0; k <= m; ++k) {
            const auto plan = make_segment_plan(0.05, drives, k);
            const auto full = rearranged_circuit(plan, x);
            const auto trunc = truncated_circuit(plan, x);
            for (std::uint64_t z : hamming_ball(m, k))
                worst = std::max(worst, operator_norm(full.block(z, x) - trunc.block(z, x)));
            worst = std::max(worst, std::abs(static_cast<double>(trunc.query_count()) - static_cast<double>(k + 1)));
        }
    }
    return check("segment.truncated_matches_on_ball", worst, 1e-9);
}

inline CheckResult check_overlap(VerifyContext& ctx) {
    double worst = 0.0;
    const std::size_t max_m = ctx.full() ? 20 : 12;
    for (std::size_t m = 1; m <= max_m; ++m) {
        const double theta = 0.25 / static_cast<double>(m) * (0.5 + 0.5 * ctx.uniform());
        const auto chi = chi_state(m, theta);
        for (std::size_t k = 0; k <= m; ++k) {
            const double ov = std::norm(inner_product(truncate_chi(chi, k), chi));
            worst = std::max(worst, std::abs(ov - overlap_bound(m, theta, k)));
        }
    }
    return check("segment.truncation_overlap", worst, 1e-12);
}

inline CheckResult check_exact_vs_truncated(VerifyContext& ctx) {
    double worst = 0.0;
    const std::size_t m = ctx.full() ? 4 : 3;
    const auto x = ctx.oracle(2);
    const auto drives = random_drives(ctx, 4, m);
    const auto plan = make_segment_plan(0.06, drives, m);
    const StateVector psi = random_state(4, ctx.source());
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
        const auto outcomes = mask_outcomes(mask, m);
        QueryCounter qa, qb;
        const auto a = segment_branch(psi, x, plan, {SegmentMode::exact_sequential, 16}, outcomes, qa);
        const auto b = segment_branch(psi, x, plan, {SegmentMode::truncated, 16}, outcomes, qb);
        worst = std::max({worst, (a.state - b.state).norm(), std::abs(a.probability - b.probability)});
        const StateVector expect = realized_unitary(plan, x, outcomes) * psi;
        worst = std::max(worst, (a.state - expect).norm());
    }
    return check("segment.exact_and_truncated_agree_at_k_eq_m", worst, 1e-9);
}

inline CheckResult check_segment_success(VerifyContext& ctx) {
    double worst = 0.0;
    for (std::size_t m = 1; m <= (ctx.full() ? 10 : 6); ++m) {
        const double theta = 0.25 / static_cast<double>(m);
        const auto x = ctx.oracle(2);
        const auto drives = random_drives(ctx, 4, m);
        const auto plan = make_segment_plan(theta, drives, m);
        QueryCounter qc;
        const std::vector<std::uint8_t> zeros(m, 0);
        const auto res = segment_branch(random_state(4, ctx.source()), x, plan, {}, zeros, qc);
        const double expect = std::pow(success_probability(theta), static_cast<double>(m));
        worst = std::max({worst, std::abs(res.probability - expect), std::max(0.0, 0.75 - res.probability)});
    }
    return check("segment.success_probability_at_least_three_quarters", worst, 1e-12);
}

// -- recovery ---------------------------------------------------------------

inline CheckResult check_undo_inverse(VerifyContext& ctx) {
    double worst = 0.0;
    for (std::size_t rep = 0; rep < ctx.reps(10, 40); ++rep) {
        const std::size_t m = 1 + rep % 5;
        const auto x = ctx.oracle(2);
        const auto plan = make_segment_plan(0.25 / static_cast<double>(m), random_drives(ctx, 4, m), m);
        std::uint64_t mask = 1 + static_cast<std::uint64_t>(ctx.uniform() * static_cast<double>((1U << m) - 1));
        const auto outcomes = mask_outcomes(mask, m);
        const auto undo = undo_plan(plan, error_record(plan, outcomes));
        const std::vector<std::uint8_t> ok(undo.gadget_count(), 0);
        const Operator roundtrip = realized_unitary(undo, x, ok) * realized_unitary(plan, x, outcomes);
        worst = std::max(worst, operator_norm(roundtrip - identity(4)));
        // One level deeper: undo the undo after its first gadget fails.
        if (undo.gadget_count() > 0) {
            std::vector<std::uint8_t> bad(undo.gadget_count(), 0);
            bad[0] = 1;
            const auto undo2 = undo_plan(undo, error_record(undo, bad));
            const std::vector<std::uint8_t> ok2(undo2.gadget_count(), 0);
            const Operator rt2 = realized_unitary(undo2, x, ok2) * realized_unitary(undo, x, bad);
            worst = std::max(worst, operator_norm(rt2 - identity(4)));
        }
    }
    return check("recovery.undo_inverts_failed_segment", worst, 1e-10);
}

inline CheckResult check_lossless(VerifyContext& ctx) {
    double worst = 0.0;
    for (std::size_t rep = 0; rep < ctx.reps(5, 25); ++rep) {
        const auto alg = random_algorithm(ctx, 2, 2, 1.0, 1.0);
        const auto x = ctx.oracle(2);
        const auto prog = build_program(alg, 10);
        RecoveryOptions opts;
        opts.eps2 = 0.04;
        auto rng = RandomStream::for_trial(0xabc, rep);
        const auto res = run_with_recovery(alg.initial_state, x, prog, opts, rng);
        if (!res.stats.succeeded) continue;
        worst = std::max(worst, 1.0 - fidelity(normalized(res.state), run_ideal(prog, x, alg.initial_state)));
    }
    return check("recovery.exact_mode_lossless", worst, 1e-9);
}

inline std::vector<CheckResult> check_walk(VerifyContext& ctx) {
    const std::size_t trials = ctx.full() ? 4000 : 500;
    const auto alg = random_algorithm(ctx, 2, 1, 1.0, 1.0);
    const auto x = ctx.oracle(2);
    const auto prog = build_program(alg, 10);
    RecoveryOptions opts;
    opts.eps2 = 0.04;
    const auto s = estimate_walk_stats(prog, x, trials, 0x77, opts);
    return {
        check("recovery.computations_per_segment", s.computations_per_segment - 3 * s.computations_per_segment_stderr,
              2.0),
        check("recovery.fixes_per_segment", s.fixes_per_segment - 3 * s.fixes_per_segment_stderr, 1.0),
        check("recovery.computation_failure_rate",
              (1.0 - s.computation_success_rate) - 3 * s.computation_success_rate_stderr, 0.25),
        check("recovery.budget_failure_rate", s.budget_failure_rate - 3 * s.budget_failure_rate_stderr, opts.eps2),
    };
}

}  // namespace detail

/// Runs every named check. `fast` finishes in a few seconds; `full` widens
/// the random grids and the Monte Carlo sample.
inline std::vector<CheckResult> run_verify(VerifyLevel level, const VerifyHooks& hooks = {}) {
    detail::VerifyContext ctx{level, hooks};
    using Check = std::function<CheckResult(detail::VerifyContext&)>;
    const std::vector<Check> checks = {
        detail::check_expm_group,        detail::check_disjoint_targets,   detail::check_fractional_queries,
        detail::check_drive_composition, detail::check_trotter_bound,      detail::check_gadget_unitaries,
        detail::check_gadget_joint_state, detail::check_exact_fractional_circuit, detail::check_rearrangement,
        detail::check_truncation,        detail::check_overlap,            detail::check_exact_vs_truncated,
        detail::check_segment_success,   detail::check_undo_inverse,       detail::check_lossless,
    };
    std::vector<CheckResult> out;
    for (const auto& c : checks) out.push_back(c(ctx));
    for (auto& r : detail::check_walk(ctx)) out.push_back(std::move(r));
    return out;
}

}  // namespace cqdsim
