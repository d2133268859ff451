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

// End-to-end experiments: JSON configuration, derived parameters, trial
// orchestration and machine-readable reports.

#pragma once

#include "cqdsim/continuous.hpp"
#include "cqdsim/discretize.hpp"
#include "cqdsim/recovery.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace cqdsim {

/// Configuration problem; what() starts with the offending field path.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& path, const std::string& msg)
        : std::runtime_error(path + ": " + msg), path_(path) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

struct ExperimentConfig {
    std::size_t n_qubits = 1;
    std::vector<std::uint8_t> bits;
    std::vector<SchedulePiece> pieces;
    std::optional<StateVector> initial_state;  // default |0...0>
    double epsilon = 0.09;
    std::size_t trials = 100;
    std::uint64_t seed = 0;
    SegmentMode mode = SegmentMode::exact_sequential;
    double budget_factor = 2.0;
    std::size_t m_cap = 16;

    // Overall epsilon is split evenly: eps1 = eps2 = eps3 = eps / 9.
    double eps1() const { return epsilon / 9.0; }
    double eps2() const { return epsilon / 9.0; }
    double eps3() const { return epsilon / 9.0; }

    OracleInstance oracle() const { return OracleInstance(n_qubits, bits); }
    ContinuousAlgorithm algorithm() const {
        const std::size_t dim = std::size_t{1} << n_qubits;
        return ContinuousAlgorithm(DrivingSchedule(pieces), initial_state.value_or(basis_state(dim, 0)));
    }
};

inline std::string mode_name(SegmentMode mode) {
    return mode == SegmentMode::truncated ? "truncated" : "exact_sequential";
}

inline SegmentMode parse_mode(const std::string& s, const std::string& path = "mode") {
    if (s == "exact" || s == "exact_sequential") return SegmentMode::exact_sequential;
    if (s == "truncated") return SegmentMode::truncated;
    throw ConfigError(path, "unknown mode '" + s + "' (expected exact, exact_sequential or truncated)");
}

namespace detail {

using nlohmann::json;

inline const json& field(const json& obj, const std::string& key, const std::string& path) {
    if (!obj.contains(key)) throw ConfigError(path + key, "required field is missing");
    return obj.at(key);
}

inline double number(const json& v, const std::string& path) {
    if (!v.is_number()) throw ConfigError(path, "expected a number");
    return v.get<double>();
}

inline std::uint64_t unsigned_int(const json& v, const std::string& path) {
    if (!v.is_number_integer() || (v.is_number_integer() && v.get<std::int64_t>() < 0 && !v.is_number_unsigned()))
        throw ConfigError(path, "expected a non-negative integer");
    return v.get<std::uint64_t>();
}

inline Complex complex_entry(const json& v, const std::string& path) {
    if (v.is_number()) return {v.get<double>(), 0.0};
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        throw ConfigError(path, "expected a [re, im] pair");
    return {v[0].get<double>(), v[1].get<double>()};
}

inline Operator parse_matrix(const json& v, std::size_t dim, const std::string& path) {
    if (!v.is_array()) throw ConfigError(path, "expected a row-major array of " + std::to_string(dim * dim) + " entries");
    if (v.size() != dim * dim)
        throw ConfigError(path, "expected " + std::to_string(dim * dim) + " entries, got " + std::to_string(v.size()));
    Operator m(dim, dim);
    for (std::size_t i = 0; i < dim * dim; ++i)
        m(i / dim, i % dim) = complex_entry(v[i], path + "[" + std::to_string(i) + "]");
    return m;
}

}  // namespace detail

/// Parses and validates a JSON experiment description.
inline ExperimentConfig parse_config(const std::string& text) {
    using nlohmann::json;
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("$", std::string("malformed JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("$", "expected a JSON object");
    static const std::vector<std::string> known = {"n_qubits", "oracle",  "schedule",      "initial_state", "epsilon",
                                                   "trials",   "seed",    "mode",          "budget_factor", "m_cap"};
    for (const auto& [key, value] : doc.items())
        if (std::find(known.begin(), known.end(), key) == known.end()) throw ConfigError(key, "unknown field");

    ExperimentConfig cfg;
    const auto n = detail::unsigned_int(detail::field(doc, "n_qubits", ""), "n_qubits");
    if (n < 1 || n > 10) throw ConfigError("n_qubits", "must lie in [1, 10]");
    cfg.n_qubits = static_cast<std::size_t>(n);
    const std::size_t dim = std::size_t{1} << cfg.n_qubits;

    const auto& oracle = detail::field(doc, "oracle", "");
    if (!oracle.is_object()) throw ConfigError("oracle", "expected an object with 'bits' or 'seed'");
    if (oracle.contains("bits")) {
        const auto& bits = oracle.at("bits");
        if (!bits.is_array()) throw ConfigError("oracle.bits", "expected an array of 0/1 values");
        if (bits.size() != dim)
            throw ConfigError("oracle.bits", "expected " + std::to_string(dim) + " entries (2^n_qubits), got " +
                                                 std::to_string(bits.size()));
        for (std::size_t j = 0; j < dim; ++j) {
            const auto path = "oracle.bits[" + std::to_string(j) + "]";
            const auto b = detail::unsigned_int(bits[j], path);
            if (b > 1) throw ConfigError(path, "bits must be 0 or 1");
            cfg.bits.push_back(static_cast<std::uint8_t>(b));
        }
    } else if (oracle.contains("seed")) {
        RandomStream rng(detail::unsigned_int(oracle.at("seed"), "oracle.seed"));
        cfg.bits = OracleInstance::random(cfg.n_qubits, rng).bits();
    } else {
        throw ConfigError("oracle", "expected 'bits' or 'seed'");
    }

    const auto& schedule = detail::field(doc, "schedule", "");
    if (!schedule.is_array() || schedule.empty()) throw ConfigError("schedule", "expected a non-empty array of pieces");
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        const auto path = "schedule[" + std::to_string(i) + "]";
        const auto& piece = schedule[i];
        if (!piece.is_object()) throw ConfigError(path, "expected an object");
        for (const auto& [key, value] : piece.items())
            if (key != "duration" && key != "generator") throw ConfigError(path + "." + key, "unknown field");
        const double duration = detail::number(detail::field(piece, "duration", path + "."), path + ".duration");
        if (!(duration > 0.0)) throw ConfigError(path + ".duration", "must be positive");
        Operator gen = detail::parse_matrix(detail::field(piece, "generator", path + "."), dim, path + ".generator");
        if (!is_hermitian(gen, 1e-10)) throw ConfigError(path + ".generator", "not Hermitian within 1e-10");
        cfg.pieces.push_back({duration, std::move(gen)});
    }

    if (doc.contains("initial_state")) {
        const auto& s = doc.at("initial_state");
        if (!s.is_array() || s.size() != dim)
            throw ConfigError("initial_state", "expected " + std::to_string(dim) + " [re, im] entries");
        StateVector psi(dim);
        for (std::size_t j = 0; j < dim; ++j) psi(j) = detail::complex_entry(s[j], "initial_state[" + std::to_string(j) + "]");
        if (std::abs(psi.norm() - 1.0) > 1e-9) throw ConfigError("initial_state", "must be normalized");
        cfg.initial_state = psi;
    }
    if (doc.contains("epsilon")) {
        cfg.epsilon = detail::number(doc.at("epsilon"), "epsilon");
        if (!(cfg.epsilon > 0.0 && cfg.epsilon < 1.0)) throw ConfigError("epsilon", "must lie in (0, 1)");
    }
    if (doc.contains("trials")) {
        cfg.trials = detail::unsigned_int(doc.at("trials"), "trials");
        if (cfg.trials < 1) throw ConfigError("trials", "must be at least 1");
    }
    if (doc.contains("seed")) cfg.seed = detail::unsigned_int(doc.at("seed"), "seed");
    if (doc.contains("mode")) {
        if (!doc.at("mode").is_string()) throw ConfigError("mode", "expected a string");
        cfg.mode = parse_mode(doc.at("mode").get<std::string>());
    }
    if (doc.contains("budget_factor")) {
        cfg.budget_factor = detail::number(doc.at("budget_factor"), "budget_factor");
        if (!(cfg.budget_factor >= 1.0)) throw ConfigError("budget_factor", "must be at least 1");
    }
    if (doc.contains("m_cap")) {
        cfg.m_cap = detail::unsigned_int(doc.at("m_cap"), "m_cap");
        if (cfg.m_cap < 1 || cfg.m_cap > 62) throw ConfigError("m_cap", "must lie in [1, 62]");
    }
    return cfg;
}

/// Serialises a config back to the input schema.
inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
    using nlohmann::json;
    json doc;
    doc["n_qubits"] = cfg.n_qubits;
    doc["oracle"] = {{"bits", cfg.bits}};
    json pieces = json::array();
    for (const auto& p : cfg.pieces) {
        json gen = json::array();
        for (Eigen::Index i = 0; i < p.generator.rows(); ++i)
            for (Eigen::Index j = 0; j < p.generator.cols(); ++j)
                gen.push_back({p.generator(i, j).real(), p.generator(i, j).imag()});
        pieces.push_back({{"duration", p.duration}, {"generator", gen}});
    }
    doc["schedule"] = pieces;
    if (cfg.initial_state) {
        json s = json::array();
        for (Eigen::Index j = 0; j < cfg.initial_state->size(); ++j)
            s.push_back({(*cfg.initial_state)(j).real(), (*cfg.initial_state)(j).imag()});
        doc["initial_state"] = s;
    }
    doc["epsilon"] = cfg.epsilon;
    doc["trials"] = cfg.trials;
    doc["seed"] = cfg.seed;
    doc["mode"] = mode_name(cfg.mode);
    doc["budget_factor"] = cfg.budget_factor;
    doc["m_cap"] = cfg.m_cap;
    return doc;
}

// ---------------------------------------------------------------------------

struct DerivedParameters {
    double total_time = 0.0;
    double r = 0.0;
    double eps1 = 0.0, eps2 = 0.0, eps3 = 0.0;
    std::size_t p = 0;
    double theta = 0.0;
    std::size_t m = 0;
    std::size_t k = 0;
    std::size_t segments = 0;
};

/// r, p, theta, m, k and the segment count for a config. p is raised to
/// ceil(4T) when needed so that theta <= 1/4 and segments are well formed.
inline DerivedParameters derive_parameters(const ExperimentConfig& cfg, const DrivingSchedule& schedule) {
    DerivedParameters d;
    d.total_time = schedule.total_time();
    d.r = average_norm(schedule);
    d.eps1 = cfg.eps1();
    d.eps2 = cfg.eps2();
    d.eps3 = cfg.eps3();
    const auto segmentable = static_cast<std::size_t>(std::max<std::int64_t>(1, detail::ceil_tolerant(4.0 * d.total_time)));
    d.p = std::max(choose_p(d.total_time, d.r, d.eps1), segmentable);
    d.theta = d.total_time / static_cast<double>(d.p);
    d.m = choose_m(d.theta);
    d.k = choose_k(d.total_time, d.eps2, d.eps3, d.m, d.theta);
    d.segments = (d.p + d.m - 1) / d.m;
    return d;
}

struct TrialRow {
    std::size_t trial = 0;
    TrajectoryStats stats;
    std::optional<double> fidelity;  // successful trials only
};

struct RunAggregate {
    std::size_t trials = 0;
    std::size_t successes = 0;
    double budget_failure_rate = 0.0;
    double mean_fidelity = 0.0;  // over successful trials
    double min_fidelity = 0.0;
    double mean_full_queries = 0.0;
    double p50_full_queries = 0.0;
    double p90_full_queries = 0.0;
    double mean_segment_computations = 0.0;
    double mean_error_fixes = 0.0;
};

struct RunReport {
    SegmentMode mode = SegmentMode::exact_sequential;
    std::uint64_t seed = 0;
    DerivedParameters derived;
    std::vector<TrialRow> rows;
    RunAggregate aggregate;
};

/// Nearest-rank percentile.
inline double percentile(std::vector<double> xs, double q) {
    if (xs.empty()) return 0.0;
    std::sort(xs.begin(), xs.end());
    const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(xs.size())));
    return xs[std::clamp<std::size_t>(rank, 1, xs.size()) - 1];
}

inline RunAggregate aggregate_rows(const std::vector<TrialRow>& rows) {
    RunAggregate a;
    a.trials = rows.size();
    if (rows.empty()) return a;
    std::vector<double> queries;
    double fid_sum = 0.0, q_sum = 0.0, c_sum = 0.0, f_sum = 0.0;
    a.min_fidelity = 1.0;
    for (const auto& r : rows) {
        queries.push_back(static_cast<double>(r.stats.full_queries));
        q_sum += static_cast<double>(r.stats.full_queries);
        c_sum += static_cast<double>(r.stats.segment_computations);
        f_sum += static_cast<double>(r.stats.error_fixes);
        if (r.stats.succeeded && r.fidelity) {
            ++a.successes;
            fid_sum += *r.fidelity;
            a.min_fidelity = std::min(a.min_fidelity, *r.fidelity);
        }
    }
    const double n = static_cast<double>(rows.size());
    a.budget_failure_rate = static_cast<double>(rows.size() - a.successes) / n;
    a.mean_fidelity = a.successes ? fid_sum / static_cast<double>(a.successes) : 0.0;
    if (!a.successes) a.min_fidelity = 0.0;
    a.mean_full_queries = q_sum / n;
    a.p50_full_queries = percentile(queries, 0.5);
    a.p90_full_queries = percentile(queries, 0.9);
    a.mean_segment_computations = c_sum / n;
    a.mean_error_fixes = f_sum / n;
    return a;
}

/// Runs cfg.trials recovery trajectories and scores each successful final
/// state against the exact continuous-time evolution. Trials are independent
/// and may run on several threads; rows are ordered by trial index.
inline RunReport simulate(const ExperimentConfig& cfg, unsigned threads = 1) {
    const ContinuousAlgorithm alg = cfg.algorithm();
    const OracleInstance x = cfg.oracle();
    RunReport report;
    report.mode = cfg.mode;
    report.seed = cfg.seed;
    report.derived = derive_parameters(cfg, alg.schedule);
    const auto& d = report.derived;
    if (cfg.mode == SegmentMode::truncated && d.m > cfg.m_cap) throw CapExceeded(d.m, cfg.m_cap);

    const StateVector reference = reference_evolve(alg, x);
    const FractionalProgram prog = build_program(alg, d.p);
    RecoveryOptions opts;
    opts.mode = cfg.mode;
    opts.eps2 = d.eps2;
    opts.budget_factor = cfg.budget_factor;
    opts.m_cap = cfg.m_cap;
    opts.m = d.m;
    opts.k = cfg.mode == SegmentMode::truncated ? d.k : d.m;

    report.rows.resize(cfg.trials);
    auto run_trial = [&](std::size_t t) {
        auto rng = RandomStream::for_trial(cfg.seed, t);
        const auto res = run_with_recovery(alg.initial_state, x, prog, opts, rng);
        TrialRow row;
        row.trial = t;
        row.stats = res.stats;
        if (res.stats.succeeded) row.fidelity = std::abs(reference.dot(res.state));
        report.rows[t] = row;
    };

    if (threads == 0) threads = std::max(1U, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, cfg.trials));
    if (threads <= 1) {
        for (std::size_t t = 0; t < cfg.trials; ++t) run_trial(t);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < threads; ++w)
            pool.emplace_back([&] {
                for (std::size_t t = next++; t < cfg.trials; t = next++) run_trial(t);
            });
        for (auto& th : pool) th.join();
    }
    report.aggregate = aggregate_rows(report.rows);
    return report;
}

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline constexpr const char* kTrialCsvHeader = "trial,succeeded,full_queries,segment_computations,error_fixes,fidelity";

/// Per-trial CSV; fidelity is empty for trials that hit the budget.
inline void write_trials_csv(const RunReport& report, std::ostream& os) {
    os << kTrialCsvHeader << '\n';
    for (const auto& r : report.rows) {
        os << r.trial << ',' << (r.stats.succeeded ? 1 : 0) << ',' << r.stats.full_queries << ','
           << r.stats.segment_computations << ',' << r.stats.error_fixes << ',';
        if (r.fidelity) os << format_double(*r.fidelity);
        os << '\n';
    }
}

inline nlohmann::json report_to_json(const RunReport& report) {
    using nlohmann::json;
    const auto& d = report.derived;
    const auto& a = report.aggregate;
    json j;
    j["mode"] = mode_name(report.mode);
    j["seed"] = report.seed;
    j["derived"] = {{"T", d.total_time}, {"r", d.r},         {"eps1", d.eps1}, {"eps2", d.eps2},
                    {"eps3", d.eps3},    {"p", d.p},         {"theta", d.theta}, {"m", d.m},
                    {"k", d.k},          {"segments", d.segments}};
    j["aggregate"] = {{"trials", a.trials},
                      {"successes", a.successes},
                      {"budget_failure_rate", a.budget_failure_rate},
                      {"mean_fidelity", a.mean_fidelity},
                      {"min_fidelity", a.min_fidelity},
                      {"mean_full_queries", a.mean_full_queries},
                      {"p50_full_queries", a.p50_full_queries},
                      {"p90_full_queries", a.p90_full_queries},
                      {"mean_segment_computations", a.mean_segment_computations},
                      {"mean_error_fixes", a.mean_error_fixes}};
    json rows = json::array();
    for (const auto& r : report.rows) {
        json row = {{"trial", r.trial},
                    {"succeeded", r.stats.succeeded},
                    {"full_queries", r.stats.full_queries},
                    {"segment_computations", r.stats.segment_computations},
                    {"failed_computations", r.stats.failed_computations},
                    {"error_fixes", r.stats.error_fixes},
                    {"max_recursion_depth", r.stats.max_recursion_depth}};
        row["fidelity"] = r.fidelity ? json(*r.fidelity) : json(nullptr);
        rows.push_back(row);
    }
    j["trials"] = rows;
    return j;
}

// ---------------------------------------------------------------------------
// Parameter scans

enum class ScanParameter { total_time, r_scale, epsilon };

inline ScanParameter parse_scan_parameter(const std::string& s) {
    if (s == "T") return ScanParameter::total_time;
    if (s == "r-scale" || s == "r_scale") return ScanParameter::r_scale;
    if (s == "epsilon") return ScanParameter::epsilon;
    throw ConfigError("param", "unknown scan parameter '" + s + "' (expected T, r-scale or epsilon)");
}

inline std::string scan_parameter_name(ScanParameter p) {
    switch (p) {
        case ScanParameter::total_time: return "T";
        case ScanParameter::r_scale: return "r-scale";
        case ScanParameter::epsilon: return "epsilon";
    }
    return "?";
}

/// T rescales all durations to the new total; r-scale multiplies every
/// generator; epsilon replaces the overall precision.
inline ExperimentConfig apply_scan_value(const ExperimentConfig& base, ScanParameter param, double value) {
    ExperimentConfig cfg = base;
    switch (param) {
        case ScanParameter::total_time: {
            if (!(value > 0.0)) throw ConfigError("values", "T must be positive");
            double total = 0.0;
            for (const auto& p : base.pieces) total += p.duration;
            for (auto& p : cfg.pieces) p.duration *= value / total;
            break;
        }
        case ScanParameter::r_scale:
            if (!(value >= 0.0)) throw ConfigError("values", "r-scale must be non-negative");
            for (auto& p : cfg.pieces) p.generator *= value;
            break;
        case ScanParameter::epsilon:
            if (!(value > 0.0 && value < 1.0)) throw ConfigError("values", "epsilon must lie in (0, 1)");
            cfg.epsilon = value;
            break;
    }
    return cfg;
}

struct ScanRow {
    double value = 0.0;
    DerivedParameters derived;
    RunAggregate aggregate;
};

inline std::vector<ScanRow> scan(const ExperimentConfig& base, ScanParameter param, const std::vector<double>& values,
                                 unsigned threads = 1) {
    std::vector<ScanRow> rows;
    for (double v : values) {
        const auto report = simulate(apply_scan_value(base, param, v), threads);
        rows.push_back({v, report.derived, report.aggregate});
    }
    return rows;
}

inline constexpr const char* kScanCsvHeader =
    "param,value,T,r,p,theta,m,k,segments,trials,mean_full_queries,mean_fidelity,failure_rate";

inline void write_scan_csv(ScanParameter param, const std::vector<ScanRow>& rows, std::ostream& os) {
    os << kScanCsvHeader << '\n';
    for (const auto& r : rows) {
        const auto& d = r.derived;
        const auto& a = r.aggregate;
        os << scan_parameter_name(param) << ',' << format_double(r.value) << ',' << format_double(d.total_time) << ','
           << format_double(d.r) << ',' << d.p << ',' << format_double(d.theta) << ',' << d.m << ',' << d.k << ','
           << d.segments << ',' << a.trials << ',' << format_double(a.mean_full_queries) << ','
           << format_double(a.mean_fidelity) << ',' << format_double(a.budget_failure_rate) << '\n';
    }
}

}  // namespace cqdsim
