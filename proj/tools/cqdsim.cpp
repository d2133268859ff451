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

// cqdsim command-line driver.
//
// Exit codes: 0 success, 1 verification failure, 2 configuration error.

#include "cqdsim/cqdsim.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitConfig = 2;

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw cqdsim::ConfigError("--config", "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<double> parse_values(const std::string& list) {
    std::vector<double> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size()) throw cqdsim::ConfigError("--values", "'" + item + "' is not a number");
        out.push_back(v);
    }
    if (out.empty()) throw cqdsim::ConfigError("--values", "expected at least one value");
    return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw cqdsim::ConfigError("--out", "cannot write '" + path.string() + "'");
    out << text;
}

int run_verify(const std::string& level, double r2_fault) {
    cqdsim::VerifyHooks hooks;
    hooks.r2_perturbation = r2_fault;
    const auto results =
        cqdsim::run_verify(level == "full" ? cqdsim::VerifyLevel::full : cqdsim::VerifyLevel::fast, hooks);
    bool ok = true;
    for (const auto& r : results) {
        std::printf("%-4s %-52s measured=%.3e bound=%.3e\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.measured,
                    r.bound);
        ok = ok && r.passed;
    }
    std::printf("%zu checks, %s\n", results.size(), ok ? "all passed" : "FAILURES");
    return ok ? kExitOk : kExitVerifyFailed;
}

int run_simulate(const std::string& config_path, std::optional<std::uint64_t> seed, std::optional<std::size_t> trials,
                 std::optional<std::string> mode, const std::string& out_dir, unsigned threads) {
    auto cfg = cqdsim::parse_config(read_file(config_path));
    if (seed) cfg.seed = *seed;
    if (trials) {
        if (*trials < 1) throw cqdsim::ConfigError("--trials", "must be at least 1");
        cfg.trials = *trials;
    }
    if (mode) cfg.mode = cqdsim::parse_mode(*mode, "--mode");
    const auto report = cqdsim::simulate(cfg, threads);

    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    write_text(dir / "config.json", cqdsim::config_to_json(cfg).dump(2) + "\n");
    write_text(dir / "report.json", cqdsim::report_to_json(report).dump(2) + "\n");
    std::ostringstream csv;
    cqdsim::write_trials_csv(report, csv);
    write_text(dir / "trials.csv", csv.str());

    const auto& d = report.derived;
    const auto& a = report.aggregate;
    std::printf("p=%zu theta=%.6g m=%zu k=%zu segments=%zu\n", d.p, d.theta, d.m, d.k, d.segments);
    std::printf("trials=%zu successes=%zu mean_fidelity=%.12f mean_full_queries=%.3f budget_failure_rate=%.4f\n",
                a.trials, a.successes, a.mean_fidelity, a.mean_full_queries, a.budget_failure_rate);
    std::printf("wrote %s\n", dir.string().c_str());
    return kExitOk;
}

int run_scan(const std::string& config_path, const std::string& param, const std::string& values,
             const std::string& out_dir, unsigned threads) {
    const auto cfg = cqdsim::parse_config(read_file(config_path));
    const auto which = cqdsim::parse_scan_parameter(param);
    const auto rows = cqdsim::scan(cfg, which, parse_values(values), threads);
    std::ostringstream csv;
    cqdsim::write_scan_csv(which, rows, csv);
    std::filesystem::create_directories(out_dir);
    write_text(std::filesystem::path(out_dir) / "scan.csv", csv.str());
    std::fputs(csv.str().c_str(), stdout);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cqdsim: continuous-time query algorithms simulated with discrete full queries"};
    app.require_subcommand(1);
    unsigned threads = 1;
    app.add_option("--threads", threads, "Worker threads for trials (0 = all cores)");

    auto* verify = app.add_subcommand("verify", "Run the built-in invariant checks");
    std::string level = "fast";
    verify->add_option("--level", level, "fast or full")->check(CLI::IsMember({"fast", "full"}));
    double r2_fault = 0.0;
    verify->add_option("--inject-r2-fault", r2_fault, "Perturb R2 by this amount (exercises the failure path)");

    auto* simulate = app.add_subcommand("simulate", "Run trials from a JSON config");
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> trials;
    std::optional<std::string> mode;
    std::string out_dir = "cqdsim-out";
    simulate->add_option("--config", config_path, "Experiment config (JSON)")->required();
    simulate->add_option("--seed", seed, "Master seed (overrides config)");
    simulate->add_option("--trials", trials, "Trial count (overrides config)");
    simulate->add_option("--mode", mode, "exact or truncated (overrides config)");
    simulate->add_option("--out", out_dir, "Output directory");

    auto* scan = app.add_subcommand("scan", "Sweep one parameter and summarise each point");
    std::string scan_config, param, values;
    std::string scan_out = "cqdsim-scan";
    scan->add_option("--config", scan_config, "Base experiment config (JSON)")->required();
    scan->add_option("--param", param, "T, r-scale or epsilon")->required();
    scan->add_option("--values", values, "Comma-separated values")->required();
    scan->add_option("--out", scan_out, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (verify->parsed()) return run_verify(level, r2_fault);
        if (simulate->parsed()) return run_simulate(config_path, seed, trials, mode, out_dir, threads);
        if (scan->parsed()) return run_scan(scan_config, param, values, scan_out, threads);
    } catch (const cqdsim::ConfigError& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return kExitConfig;
    } catch (const cqdsim::CapExceeded& e) {
        std::fprintf(stderr, "configuration error: %s (raise m_cap or use exact mode)\n", e.what());
        return kExitConfig;
    } catch (const cqdsim::ContractViolation& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::filesystem::filesystem_error& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return kExitConfig;
    }
    return kExitConfig;
}
