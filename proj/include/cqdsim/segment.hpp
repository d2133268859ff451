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

// Segments: blocks of consecutive gadget steps executed and post-selected
// as a unit.
//
// A SegmentPlan is a leading unitary followed by slots. Each slot is either a
// probabilistic gadget or a deterministic error fix e^{i a/2} Q^a
// (a = +-pi/2, two full queries), and is followed by its drive:
//
//   lead, (op_0, drive_0), (op_1, drive_1), ..., (op_{m-1}, drive_{m-1})
//
// Forward segments cut from a fractional program have lead = I and only
// gadget slots. Undo plans reverse the order and may carry fixes.
//
// The m gadget control qubits sit above the system register: control i is
// global qubit n + i, and bit i of a control mask z is control i.

#pragma once

#include "cqdsim/gadget.hpp"
#include "cqdsim/random.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace cqdsim {

enum class SlotKind { gadget, fix };

struct SegmentSlot {
    SlotKind kind = SlotKind::gadget;
    double fix_angle = 0.0;  // a in e^{i a/2} Q^a; fix slots only
    Operator drive;
};

struct SegmentPlan {
    double theta = 0.0;
    Direction direction = Direction::forward;
    std::size_t k = 0;  // truncation weight for the gadget controls
    Operator lead;
    std::vector<SegmentSlot> slots;

    std::size_t length() const { return slots.size(); }
    std::size_t gadget_count() const {
        return static_cast<std::size_t>(
            std::count_if(slots.begin(), slots.end(), [](const auto& s) { return s.kind == SlotKind::gadget; }));
    }
    std::size_t fix_count() const { return length() - gadget_count(); }
};

/// Forward segment V_{m-1} G ... V_0 G with one gadget before each drive.
inline SegmentPlan make_segment_plan(double theta, std::span<const Operator> drives, std::size_t k,
                                     Direction direction = Direction::forward) {
    require(!drives.empty(), "segment: at least one drive is required");
    require(k <= drives.size(), "segment: k must not exceed m");
    SegmentPlan plan;
    plan.theta = theta;
    plan.direction = direction;
    plan.k = k;
    plan.lead = identity(static_cast<std::size_t>(drives.front().rows()));
    for (const auto& v : drives) plan.slots.push_back({SlotKind::gadget, 0.0, v});
    return plan;
}

/// e^{i a/2} Q^a: the operator a failed gadget leaves behind (a = -pi/2 for
/// forward gadgets, +pi/2 for reverse ones); its inverse is the same form
/// with -a.
inline Operator quarter_turn_operator(const OracleInstance& x, double a) {
    return std::exp(kI * (a / 2)) * fractional_query(x, a);
}

// ---------------------------------------------------------------------------
// Segment length and control-register states

/// m = floor(1/(4 theta)), at least 1.
inline std::size_t choose_m(double theta) {
    require(theta > 0.0 && theta <= 0.25 * (1.0 + 1e-12),
            "choose_m: theta must lie in (0, 1/4]; increase p");
    const auto m = static_cast<std::int64_t>(std::floor(1.0 / (4.0 * theta) + 1e-9 * (1.0 / (4.0 * theta))));
    return static_cast<std::size_t>(std::max<std::int64_t>(m, 1));
}

/// All m-bit masks of Hamming weight <= k, ascending.
inline std::vector<std::uint64_t> hamming_ball(std::size_t m, std::size_t k) {
    require(m < 64, "hamming_ball: m must be below 64");
    k = std::min(k, m);
    std::vector<std::uint64_t> out;
    for (std::size_t w = 0; w <= k; ++w) {
        if (w == 0) {
            out.push_back(0);
            continue;
        }
        std::uint64_t v = (std::uint64_t{1} << w) - 1;
        const std::uint64_t limit = std::uint64_t{1} << m;
        while (v < limit) {
            out.push_back(v);
            // Gosper's hack: next mask with the same popcount.
            const std::uint64_t c = v & (~v + 1);
            const std::uint64_t r = v + c;
            v = (((r ^ v) >> 2) / c) | r;
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

/// Amplitudes of an m-qubit control state over an explicit basis subset.
struct ControlState {
    std::size_t m = 0;
    std::optional<std::size_t> max_weight;  // set when restricted to a Hamming ball
    std::vector<std::uint64_t> basis;
    std::vector<Complex> amplitudes;

    Complex amplitude(std::uint64_t z) const {
        const auto it = std::lower_bound(basis.begin(), basis.end(), z);
        if (it == basis.end() || *it != z) return 0.0;
        return amplitudes[static_cast<std::size_t>(it - basis.begin())];
    }

    double norm() const;
};

namespace detail {
/// Neumaier-compensated running sum; register-wide sums have up to 2^24 terms
/// of very different size.
class CompensatedSum {
public:
    void add(double v) {
        const double t = sum_ + v;
        comp_ += std::abs(sum_) >= std::abs(v) ? (sum_ - t) + v : (v - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline Complex chi_amplitude(std::uint64_t z, std::size_t m, double theta, Direction dir) {
    const double v = gadget_v(theta);
    const double c = std::sqrt(std::cos(theta / 2) / v);
    const Complex s = (dir == Direction::forward ? kI : -kI) * std::sqrt(std::sin(theta / 2) / v);
    Complex a = 1.0;
    for (std::size_t i = 0; i < m; ++i) a *= (z >> i & 1U) ? s : Complex(c);
    return a;
}
}  // namespace detail

inline double ControlState::norm() const {
    detail::CompensatedSum acc;
    for (const auto& a : amplitudes) acc.add(std::norm(a));
    return std::sqrt(acc.value());
}

/// |chi> = (R1|0>)^{m}; sigma_z R1 for reverse segments.
inline ControlState chi_state(std::size_t m, double theta, Direction dir = Direction::forward) {
    require(m >= 1 && m <= 24, "chi_state: m must lie in [1, 24] for a full register");
    detail::require_gadget_angle(theta);
    ControlState chi;
    chi.m = m;
    chi.basis.resize(std::size_t{1} << m);
    chi.amplitudes.resize(chi.basis.size());
    for (std::uint64_t z = 0; z < chi.basis.size(); ++z) {
        chi.basis[z] = z;
        chi.amplitudes[z] = detail::chi_amplitude(z, m, theta, dir);
    }
    return chi;
}

/// P|chi>/sqrt(<chi|P|chi>) with P the projector onto weight <= k.
inline ControlState truncate_chi(const ControlState& chi, std::size_t k) {
    ControlState out;
    out.m = chi.m;
    out.max_weight = std::min(k, chi.m);
    detail::CompensatedSum acc;
    for (std::size_t i = 0; i < chi.basis.size(); ++i) {
        if (static_cast<std::size_t>(std::popcount(chi.basis[i])) > k) continue;
        out.basis.push_back(chi.basis[i]);
        out.amplitudes.push_back(chi.amplitudes[i]);
        acc.add(std::norm(chi.amplitudes[i]));
    }
    const double weight = acc.value();
    require(weight > 0.0, "truncate_chi: projection onto the Hamming ball is empty");
    const double scale = 1.0 / std::sqrt(weight);
    for (auto& a : out.amplitudes) a *= scale;
    return out;
}

/// |chi'> built directly on the Hamming ball, without the full register.
inline ControlState truncated_chi_state(std::size_t m, double theta, std::size_t k, Direction dir) {
    detail::require_gadget_angle(theta);
    ControlState out;
    out.m = m;
    out.max_weight = std::min(k, m);
    out.basis = hamming_ball(m, k);
    out.amplitudes.reserve(out.basis.size());
    detail::CompensatedSum weight;
    for (auto z : out.basis) {
        out.amplitudes.push_back(detail::chi_amplitude(z, m, theta, dir));
        weight.add(std::norm(out.amplitudes.back()));
    }
    const double scale = 1.0 / std::sqrt(weight.value());
    for (auto& a : out.amplitudes) a *= scale;
    return out;
}

inline Complex inner_product(const ControlState& a, const ControlState& b) {
    detail::CompensatedSum re, im;
    for (std::size_t i = 0; i < a.basis.size(); ++i) {
        const Complex term = std::conj(a.amplitudes[i]) * b.amplitude(a.basis[i]);
        re.add(term.real());
        im.add(term.imag());
    }
    return {re.value(), im.value()};
}

/// B = sin(theta/2) / (cos(theta/2) + sin(theta/2)).
inline double weight_probability(double theta) { return std::sin(theta / 2) / gadget_v(theta); }

/// sum_{j > k} C(m, j) (1 - B)^{m - j} B^j, summed term by term.
inline double binomial_tail(std::size_t m, double b, std::size_t k) {
    if (k >= m) return 0.0;
    double tail = 0.0;
    double choose = 1.0;
    for (std::size_t j = 0; j <= m; ++j) {
        if (j > 0) choose = choose * static_cast<double>(m - j + 1) / static_cast<double>(j);
        if (j > k)
            tail += choose * std::pow(1.0 - b, static_cast<double>(m - j)) * std::pow(b, static_cast<double>(j));
    }
    return tail;
}

/// |<chi'|chi>|^2 as an exact binomial tail complement.
inline double overlap_bound(std::size_t m, double theta, std::size_t k) {
    if (k >= m) return 1.0;
    return 1.0 - binomial_tail(m, weight_probability(theta), k);
}

/// Smallest k with 1 - overlap_bound(m, theta, k) <= eps2 eps3 / T.
inline std::size_t choose_k(double total_time, double eps2, double eps3, std::size_t m, double theta) {
    require(eps2 > 0.0 && eps2 < 1.0 && eps3 > 0.0 && eps3 < 1.0, "choose_k: eps2 and eps3 must lie in (0, 1)");
    require(total_time > 0.0, "choose_k: T must be positive");
    const double target = eps2 * eps3 / total_time;
    const double b = weight_probability(theta);
    // The tail is non-increasing in k, so bisect on [0, m].
    std::size_t lo = 0;
    std::size_t hi = m;
    while (lo < hi) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (binomial_tail(m, b, mid) <= target)
            hi = mid;
        else
            lo = mid + 1;
    }
    return lo;
}

// ---------------------------------------------------------------------------
// Rearranged and truncated circuits

struct DriveRange {
    std::size_t begin = 0;
    std::size_t end = 0;
    friend bool operator==(const DriveRange&, const DriveRange&) = default;
};

/// Drives applied by the weight-controlled block Vbar_h on control state z,
/// or nullopt when Vbar_h does nothing. i_h is the position of the h-th one.
inline std::optional<DriveRange> vbar_targets(std::size_t h, std::uint64_t z, std::size_t m) {
    require(h <= m, "vbar_targets: h must lie in [0, m]");
    std::vector<std::size_t> ones;
    for (std::size_t i = 0; i < m; ++i)
        if (z >> i & 1U) ones.push_back(i);
    const std::size_t w = ones.size();
    if (h == 0) {
        if (w == 0) return DriveRange{0, m};
        if (ones[0] == 0) return std::nullopt;
        return DriveRange{0, ones[0]};
    }
    if (h > w) return std::nullopt;
    const std::size_t start = ones[h - 1];
    const std::size_t stop = h < w ? ones[h] : m;
    if (stop == start) return std::nullopt;
    return DriveRange{start, stop};
}

/// A plan with its fixes folded into the drives, ready for circuit building.
struct CompiledSegment {
    std::size_t n_qubits = 0;
    Operator lead;                            // everything before the first gadget
    std::vector<Operator> drives;             // drives[j]: everything after gadget j
    std::vector<std::size_t> gadget_slots;    // slot index of each gadget
    std::size_t lead_fixes = 0;
    std::vector<std::size_t> fixes_after;     // fixes folded into drives[j]
    std::uint64_t queries_per_fix = 0;

    std::size_t controls() const { return drives.size(); }
};

inline CompiledSegment compile_segment(const SegmentPlan& plan, const OracleInstance& x) {
    CompiledSegment c;
    c.n_qubits = x.n_qubits();
    const auto dim = x.dimension();
    require(static_cast<std::size_t>(plan.lead.rows()) == dim, "segment: plan/oracle dimension mismatch");
    Operator pending = plan.lead;
    std::size_t pending_fixes = 0;
    bool in_lead = true;
    auto flush = [&] {
        if (in_lead) {
            c.lead = pending;
            c.lead_fixes = pending_fixes;
        } else {
            c.drives.back() = pending;
            c.fixes_after.back() = pending_fixes;
        }
    };
    for (std::size_t i = 0; i < plan.slots.size(); ++i) {
        const auto& slot = plan.slots[i];
        if (slot.kind == SlotKind::gadget) {
            flush();
            in_lead = false;
            c.drives.emplace_back();
            c.fixes_after.push_back(0);
            c.gadget_slots.push_back(i);
            pending = slot.drive;
            pending_fixes = 0;
        } else {
            QueryCounter per_fix;
            const Operator fix = std::exp(kI * (slot.fix_angle / 2)) * exact_fractional_circuit(x, slot.fix_angle, per_fix);
            c.queries_per_fix = per_fix.count();
            pending = slot.drive * fix * pending;
            ++pending_fixes;
        }
    }
    flush();
    if (c.queries_per_fix == 0) {
        QueryCounter per_fix;
        exact_fractional_circuit(x, kPi / 2, per_fix);
        c.queries_per_fix = per_fix.count();
    }
    return c;
}

namespace detail {
inline void phase_flip_marked(StateVector& psi, const OracleInstance& x) {
    for (std::size_t j = 0; j < x.dimension(); ++j)
        if (x.bit(j)) psi(j) = -psi(j);
}
}  // namespace detail

/// Fixed queries interleaved with weight-controlled drives:
///   lead, Vbar_0, Q, Vbar_1, Q, ..., Vbar_{m}, parity-controlled Q,
/// keeping only the first `interleaved` of the m fixed queries.
class SegmentCircuit {
public:
    SegmentCircuit(CompiledSegment compiled, std::size_t interleaved)
        : c_(std::move(compiled)), interleaved_(interleaved) {
        const std::size_t m = c_.controls();
        require(interleaved_ <= m, "segment circuit: cannot keep more than m interleaved queries");
        // Untruncated: fire when m - w is odd. Dropping m - k queries flips
        // the sense when m - k is odd.
        fire_parity_ = (m + 1) % 2;
        if ((m - interleaved_) % 2 == 1) fire_parity_ ^= 1U;
    }

    std::size_t controls() const { return c_.controls(); }
    std::size_t interleaved_queries() const { return interleaved_; }
    const CompiledSegment& compiled() const { return c_; }

    /// Control-weight parity at which the final query fires.
    unsigned parity_sense() const { return fire_parity_; }

    /// Full queries in the circuit: the interleaved ones, the parity query,
    /// and two per copy of each folded-in fix. A fix after gadget j sits in
    /// every Vbar_h with h <= min(j + 1, interleaved).
    std::uint64_t query_count() const {
        const std::size_t m = controls();
        std::uint64_t q = interleaved_ + (m > 0 ? 1 : 0);
        q += c_.lead_fixes * c_.queries_per_fix;
        for (std::size_t j = 0; j < m; ++j)
            q += c_.fixes_after[j] * c_.queries_per_fix * (std::min(j + 1, interleaved_) + 1);
        return q;
    }

    /// U_z |psi>: the circuit's action on the system for control basis state z.
    StateVector apply_block(std::uint64_t z, const StateVector& psi, const OracleInstance& x) const {
        const std::size_t m = controls();
        StateVector out = c_.lead * psi;
        StateVector scratch(out.size());
        // Same ranges as vbar_targets, with the ones located once.
        std::size_t begin = 0;
        std::uint64_t rest = z;
        for (std::size_t h = 0; h <= m; ++h) {
            if (begin <= m) {
                const std::size_t end = rest ? static_cast<std::size_t>(std::countr_zero(rest)) : m;
                for (std::size_t i = begin; i < end; ++i) {
                    scratch.noalias() = c_.drives[i] * out;
                    out.swap(scratch);
                }
                begin = rest ? end : m + 1;
                rest &= rest - 1;
            }
            if (h < interleaved_) detail::phase_flip_marked(out, x);
        }
        if (m > 0 && static_cast<unsigned>(std::popcount(z) % 2) == fire_parity_) detail::phase_flip_marked(out, x);
        return out;
    }

    Operator block(std::uint64_t z, const OracleInstance& x) const {
        const auto dim = x.dimension();
        Operator u(dim, dim);
        for (std::size_t col = 0; col < dim; ++col) u.col(col) = apply_block(z, basis_state(dim, col), x);
        return u;
    }

    /// Dense operator on m + n qubits, block diagonal in the control basis.
    Operator to_operator(const OracleInstance& x, std::size_t qubit_cap = 14) const {
        const std::size_t m = controls();
        require(m + x.n_qubits() <= qubit_cap, "segment circuit: m + n exceeds the dense-operator cap");
        const auto dim = x.dimension();
        const std::size_t total = dim << m;
        Operator u = Operator::Zero(total, total);
        for (std::uint64_t z = 0; z < (std::uint64_t{1} << m); ++z)
            u.block(z * dim, z * dim, dim, dim) = block(z, x);
        return u;
    }

private:
    CompiledSegment c_;
    std::size_t interleaved_;
    unsigned fire_parity_ = 0;
};

inline SegmentCircuit rearranged_circuit(const SegmentPlan& plan, const OracleInstance& x) {
    auto c = compile_segment(plan, x);
    const std::size_t m = c.controls();
    return SegmentCircuit(std::move(c), m);
}

inline SegmentCircuit truncated_circuit(const SegmentPlan& plan, const OracleInstance& x) {
    auto c = compile_segment(plan, x);
    const std::size_t k = std::min(plan.k, c.controls());
    return SegmentCircuit(std::move(c), k);
}

inline Operator build_rearranged(const SegmentPlan& plan, const OracleInstance& x, QueryCounter& counter,
                                 std::size_t qubit_cap = 14) {
    const auto circuit = rearranged_circuit(plan, x);
    Operator u = circuit.to_operator(x, qubit_cap);
    counter.charge(circuit.query_count());
    return u;
}

inline Operator build_truncated(const SegmentPlan& plan, const OracleInstance& x, QueryCounter& counter,
                                std::size_t qubit_cap = 14) {
    const auto circuit = truncated_circuit(plan, x);
    Operator u = circuit.to_operator(x, qubit_cap);
    counter.charge(circuit.query_count());
    return u;
}

/// The segment circuit before rearrangement, as a dense operator on m + n
/// qubits: each gadget slot applies Q_x controlled on its own control qubit,
/// each fix slot applies e^{i a/2} Q^a, and every slot is followed by its drive.
inline Operator naive_segment_operator(const SegmentPlan& plan, const OracleInstance& x, std::size_t qubit_cap = 14) {
    const std::size_t n = x.n_qubits();
    const std::size_t m = plan.gadget_count();
    require(m + n <= qubit_cap, "naive segment: m + n exceeds the dense-operator cap");
    const auto dim = x.dimension();
    const Operator id_controls = identity(std::size_t{1} << m);
    Operator u = kron(id_controls, plan.lead);
    std::size_t g = 0;
    for (const auto& slot : plan.slots) {
        if (slot.kind == SlotKind::gadget) {
            Operator cq = identity(dim << m);
            for (std::size_t idx = 0; idx < (dim << m); ++idx)
                if ((idx >> (n + g) & 1U) && x.bit(idx & (dim - 1))) cq(idx, idx) = -1.0;
            u = cq * u;
            ++g;
        } else {
            u = kron(id_controls, quarter_turn_operator(x, slot.fix_angle)) * u;
        }
        u = kron(id_controls, slot.drive) * u;
    }
    return u;
}

// ---------------------------------------------------------------------------
// Execution

enum class SegmentMode { exact_sequential, truncated };

struct SegmentRunOptions {
    SegmentMode mode = SegmentMode::exact_sequential;
    std::size_t m_cap = 16;
};

struct SegmentResult {
    std::vector<std::uint8_t> outcomes;  // one per gadget; 0 = success
    StateVector state;
    std::uint64_t queries_used = 0;
    std::size_t fixes_applied = 0;
    double probability = 1.0;  // probability of this outcome string

    bool succeeded() const {
        return std::all_of(outcomes.begin(), outcomes.end(), [](auto b) { return b == 0; });
    }
};

/// Raised when truncated execution would need more control qubits than allowed.
class CapExceeded : public std::runtime_error {
public:
    CapExceeded(std::size_t m, std::size_t cap)
        : std::runtime_error("segment: m = " + std::to_string(m) + " exceeds the control-register cap " +
                             std::to_string(cap)),
          m_(m) {}
    std::size_t m() const { return m_; }

private:
    std::size_t m_;
};

namespace detail {

// `choose(j, p0)` returns the measured bit of control j given P(bit = 0).
template <class Chooser>
SegmentResult run_exact(const StateVector& psi0, const OracleInstance& x, const SegmentPlan& plan, Chooser&& choose,
                        QueryCounter& counter) {
    SegmentResult res;
    const std::uint64_t before = counter.count();
    StateVector psi = plan.lead * psi0;
    for (const auto& slot : plan.slots) {
        if (slot.kind == SlotKind::gadget) {
            const StateVector joint = gadget_joint_state(psi, x, plan.theta, plan.direction, counter);
            const auto half = psi.size();
            const double p0 = joint.head(half).squaredNorm() / joint.squaredNorm();
            const int bit = choose(res.outcomes.size(), p0);
            res.probability *= bit == 0 ? p0 : 1.0 - p0;
            psi = bit == 0 ? StateVector(joint.head(half)) : StateVector(joint.tail(half));
            psi /= psi.norm();
            res.outcomes.push_back(static_cast<std::uint8_t>(bit));
        } else {
            const Operator fix =
                std::exp(kI * (slot.fix_angle / 2)) * exact_fractional_circuit(x, slot.fix_angle, counter);
            psi = fix * psi;
            ++res.fixes_applied;
        }
        psi = slot.drive * psi;
    }
    res.state = std::move(psi);
    res.queries_used = counter.count() - before;
    return res;
}

template <class Chooser>
SegmentResult run_truncated(const StateVector& psi0, const OracleInstance& x, const SegmentPlan& plan,
                            std::size_t m_cap, Chooser&& choose, QueryCounter& counter) {
    const std::size_t m = plan.gadget_count();
    if (m > m_cap) throw CapExceeded(m, m_cap);
    const SegmentCircuit circuit = truncated_circuit(plan, x);
    const std::size_t k = circuit.interleaved_queries();

    SegmentResult res;
    res.fixes_applied = plan.fix_count();
    counter.charge(circuit.query_count());
    res.queries_used = circuit.query_count();

    // Joint state sum_z |z> (x) chi'_z U_z|psi>, kept on the Hamming ball.
    const ControlState chi = truncated_chi_state(m, plan.theta, k, plan.direction);
    std::vector<std::uint64_t> keys = chi.basis;
    const auto dim = static_cast<Eigen::Index>(x.dimension());
    Operator blocks(dim, static_cast<Eigen::Index>(keys.size()));
    for (std::size_t i = 0; i < keys.size(); ++i)
        blocks.col(static_cast<Eigen::Index>(i)) = chi.amplitudes[i] * circuit.apply_block(keys[i], psi0, x);

    // Apply R2 and measure control j = 0, 1, ... one at a time. After control
    // j is measured its bit is cleared from every key.
    const Operator r2 = r2_matrix(plan.theta);
    // Keys stay sorted, and the ball is closed under clearing a bit, so the
    // partner of every key with bit j set is itself a key.
    for (std::size_t j = 0; j < m; ++j) {
        const std::uint64_t bit = std::uint64_t{1} << j;
        std::vector<std::uint64_t> next_keys;
        std::vector<Eigen::Index> source;
        for (std::size_t i = 0; i < keys.size(); ++i)
            if (!(keys[i] & bit)) {
                next_keys.push_back(keys[i]);
                source.push_back(static_cast<Eigen::Index>(i));
            }
        const auto cols = static_cast<Eigen::Index>(next_keys.size());
        Operator next0(dim, cols), next1(dim, cols);
        for (Eigen::Index c = 0; c < cols; ++c) {
            next0.col(c) = r2(0, 0) * blocks.col(source[c]);
            next1.col(c) = r2(1, 0) * blocks.col(source[c]);
        }
        for (std::size_t i = 0; i < keys.size(); ++i) {
            if (!(keys[i] & bit)) continue;
            const auto c = std::lower_bound(next_keys.begin(), next_keys.end(), keys[i] & ~bit) - next_keys.begin();
            next0.col(c) += r2(0, 1) * blocks.col(static_cast<Eigen::Index>(i));
            next1.col(c) += r2(1, 1) * blocks.col(static_cast<Eigen::Index>(i));
        }
        const double w0 = next0.squaredNorm(), w1 = next1.squaredNorm();
        const double p0 = w0 / (w0 + w1);
        const int y = choose(j, p0);
        res.probability *= y == 0 ? p0 : 1.0 - p0;
        res.outcomes.push_back(static_cast<std::uint8_t>(y));
        blocks = (y == 0 ? next0 : next1) / std::sqrt(y == 0 ? w0 : w1);
        keys = std::move(next_keys);
    }
    const StateVector out = blocks.rowwise().sum();  // a single key (0) remains
    res.state = out / out.norm();
    return res;
}

}  // namespace detail

/// Executes one segment computation. Exact mode runs the gadgets one at a
/// time (one full query each); truncated mode prepares |chi'> jointly, runs
/// the truncated circuit (k + 1 full queries plus fixes), then applies R2 to
/// every control and samples the outcome string by the chain rule.
template <UniformSource S>
SegmentResult run_segment(const StateVector& psi, const OracleInstance& x, const SegmentPlan& plan,
                          const SegmentRunOptions& opts, S& rng, QueryCounter& counter) {
    require(static_cast<std::size_t>(psi.size()) == x.dimension(), "run_segment: state/oracle dimension mismatch");
    auto sample = [&rng](std::size_t, double p0) { return rng.uniform() < p0 ? 0 : 1; };
    if (opts.mode == SegmentMode::exact_sequential) return detail::run_exact(psi, x, plan, sample, counter);
    return detail::run_truncated(psi, x, plan, opts.m_cap, sample, counter);
}

/// The branch for a prescribed outcome string, with its probability.
inline SegmentResult segment_branch(const StateVector& psi, const OracleInstance& x, const SegmentPlan& plan,
                                    const SegmentRunOptions& opts, std::span<const std::uint8_t> outcomes,
                                    QueryCounter& counter) {
    require(outcomes.size() == plan.gadget_count(), "segment_branch: one outcome per gadget is required");
    auto forced = [outcomes](std::size_t j, double) { return static_cast<int>(outcomes[j]); };
    if (opts.mode == SegmentMode::exact_sequential) return detail::run_exact(psi, x, plan, forced, counter);
    return detail::run_truncated(psi, x, plan, opts.m_cap, forced, counter);
}

/// The system unitary a plan realises for a given outcome string, phases
/// included.
inline Operator realized_unitary(const SegmentPlan& plan, const OracleInstance& x,
                                 std::span<const std::uint8_t> outcomes) {
    require(outcomes.size() == plan.gadget_count(), "realized_unitary: one outcome per gadget is required");
    Operator u = plan.lead;
    std::size_t g = 0;
    for (const auto& slot : plan.slots) {
        if (slot.kind == SlotKind::gadget)
            u = gadget_branch_operator(x, plan.theta, plan.direction, outcomes[g++]) * u;
        else
            u = quarter_turn_operator(x, slot.fix_angle) * u;
        u = slot.drive * u;
    }
    return u;
}

}  // namespace cqdsim
