// pwc: run scenarios, property suites and parameter sweeps.
//
// Exit status: 0 pass, 1 property failure, 2 usage or parse error.
// Log verbosity follows SPDLOG_LEVEL (e.g. SPDLOG_LEVEL=debug).

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/cfg/env.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "pwc/pwc.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

pwc::Scenario load_with_overrides(const std::string& path, const std::vector<std::string>& overrides,
                                  std::optional<std::uint64_t> seed) {
  auto sc = pwc::load_scenario_raw(path);
  for (const auto& kv : overrides) {
    auto [k, v] = pwc::split_override(kv);
    pwc::apply_override(sc, k, v);
  }
  if (seed) sc.config.seed = *seed;
  return pwc::validate_or_throw(std::move(sc), path);
}

int cmd_run(const std::string& path, const std::vector<std::string>& overrides, std::optional<std::uint64_t> seed,
            const std::string& out, bool trace) {
  auto sc = load_with_overrides(path, overrides, seed);
  if (trace) sc.record_trace = true;
  spdlog::info("running {} (n={} f={} m={} sigma={} epsilon={} mode={} seed={})", sc.id, sc.config.n, sc.config.f,
               sc.config.m, sc.config.sigma, sc.config.epsilon, pwc::to_string(sc.config.mode), sc.config.seed);
  const auto r = pwc::run(sc);
  const fs::path dir = out.empty() ? fs::path("out") / sc.id : fs::path(out);
  pwc::write_run_outputs(dir, sc, r);
  std::cout << pwc::kMetricsCsvHeader << '\n' << pwc::metrics_csv_row(sc, r) << '\n';
  for (const auto& v : r.metrics.violations) spdlog::error("round {}: {}: {}", v.round, v.kind, v.detail);
  if (!r.all_confirmed)
    spdlog::error("only {} of {} requests confirmed", r.metrics.confirmed_requests, r.metrics.issued_requests);
  if (!r.bounds_held())
    spdlog::error("bound excesses: delay {}, backlog {}, liveness {}", r.metrics.delay_bound_exceeded,
                  r.metrics.backlog_bound_exceeded, r.metrics.liveness_bound_exceeded);
  spdlog::info("outputs in {}", dir.string());
  return r.passed() ? kPass : kFail;
}

// ---------------------------------------------------------------- verify

const std::vector<std::string> kSuites{"bijection", "invariants", "nondivergence", "waitfree", "examples",
                                       "bounds",    "liveness",   "load",          "all"};

pwc::Scenario fixture(const std::string& dir, const std::string& name, pwc::Scenario fallback) {
  if (dir.empty()) return fallback;
  const auto p = fs::path(dir) / name;
  if (!fs::exists(p)) throw UsageError("fixture " + p.string() + " not found");
  return pwc::load_scenario(p.string());
}

int cmd_verify(const std::string& suite, const std::string& scenarios, std::uint32_t count, std::uint64_t seed) {
  const pwc::RandomSuiteOptions opt{count, seed, 16};
  std::vector<pwc::SuiteReport> reports;
  auto want = [&](const char* s) { return suite == s || suite == "all"; };
  if (want("bijection")) reports.push_back(pwc::verify_bijection(7));
  if (want("examples"))
    reports.push_back(pwc::verify_examples(fixture(scenarios, "crash_outage.json", pwc::crash_outage_scenario())));
  if (want("invariants")) reports.push_back(pwc::verify_invariants(opt));
  if (want("nondivergence")) reports.push_back(pwc::verify_nondivergence(opt));
  if (want("waitfree"))
    reports.push_back(pwc::verify_waitfree(fixture(scenarios, "waitfree.json", pwc::waitfree_scenario()),
                                           fixture(scenarios, "waitfree_jitter.json", pwc::waitfree_scenario(pwc::micros(20)))));
  if (want("bounds")) {
    reports.push_back(pwc::verify_delay_bound(opt));
    reports.push_back(pwc::verify_backlog_growth(
        fixture(scenarios, "throttled_backlog.json", pwc::throttled_backlog_scenario())));
  }
  if (want("liveness")) {
    using pwc::FailureMode;
    reports.push_back(pwc::verify_liveness(
        fixture(scenarios, "ignore_ur.json", pwc::ignoring_primary_scenario(FailureMode::UnifiedReplacement))));
    reports.push_back(pwc::verify_liveness(
        fixture(scenarios, "ignore_ipr.json", pwc::ignoring_primary_scenario(FailureMode::InPlaceRecovery))));
  }
  if (want("load")) reports.push_back(pwc::verify_load_balance(opt));

  bool ok = true;
  for (const auto& r : reports) {
    std::cout << (r.ok() ? "PASS " : "FAIL ") << r.name << " (" << r.checks - r.failures.size() << "/" << r.checks
              << " checks passed)\n";
    for (const auto& f : r.failures) std::cout << "  " << f << '\n';
    ok = ok && r.ok();
  }
  return ok ? kPass : kFail;
}

// ---------------------------------------------------------------- sweep

using Grid = std::vector<std::pair<std::string, std::vector<std::string>>>;

// "m=1,2,4,8;sigma=1..8"
Grid parse_grid(const std::string& spec) {
  Grid grid;
  std::size_t start = 0;
  while (start <= spec.size()) {
    auto end = spec.find(';', start);
    if (end == std::string::npos) end = spec.size();
    const auto part = spec.substr(start, end - start);
    start = end + 1;
    if (part.empty()) continue;
    const auto eq = part.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("grid entry '" + part + "' is not key=values");
    const auto key = part.substr(0, eq);
    if (std::find(pwc::override_keys().begin(), pwc::override_keys().end(), key) == pwc::override_keys().end())
      throw UsageError("grid key '" + key + "' is not a scenario parameter");
    std::vector<std::string> values;
    std::size_t vs = eq + 1;
    const auto body = part + ",";
    while (vs < body.size()) {
      const auto ve = body.find(',', vs);
      const auto v = body.substr(vs, ve - vs);
      vs = ve + 1;
      if (v.empty()) continue;
      if (const auto dots = v.find(".."); dots != std::string::npos) {
        std::uint64_t lo = 0, hi = 0;
        const auto a = v.substr(0, dots), b = v.substr(dots + 2);
        if (std::from_chars(a.data(), a.data() + a.size(), lo).ec != std::errc{} ||
            std::from_chars(b.data(), b.data() + b.size(), hi).ec != std::errc{} || lo > hi)
          throw UsageError("bad range '" + v + "' for " + key);
        if (hi - lo > 100000) throw UsageError("range '" + v + "' is too large");
        for (auto x = lo; x <= hi; ++x) values.push_back(std::to_string(x));
      } else {
        values.push_back(v);
      }
    }
    if (values.empty()) throw UsageError("grid key '" + key + "' has no values");
    grid.emplace_back(key, std::move(values));
  }
  if (grid.empty()) throw UsageError("empty grid");
  return grid;
}

int cmd_sweep(const std::string& path, const std::string& grid_spec, const std::string& out, std::uint64_t budget,
              unsigned jobs) {
  const auto grid = parse_grid(grid_spec);
  std::uint64_t points = 1;
  for (const auto& [k, vs] : grid) {
    points *= vs.size();
    if (points > budget)
      throw UsageError("grid has more than " + std::to_string(budget) + " points (raise --budget to allow it)");
  }
  const auto base = pwc::load_scenario_raw(path);

  // Materialize and validate every point before running any.
  std::vector<pwc::Scenario> scenarios;
  scenarios.reserve(points);
  for (std::uint64_t idx = 0; idx < points; ++idx) {
    auto sc = base;
    std::uint64_t rest = idx;
    std::string suffix;
    for (auto it = grid.rbegin(); it != grid.rend(); ++it) {
      const auto& [k, vs] = *it;
      const auto& v = vs[rest % vs.size()];
      rest /= vs.size();
      pwc::apply_override(sc, k, v);
      suffix = "-" + k + "=" + v + suffix;
    }
    sc.id = base.id + suffix;
    scenarios.push_back(pwc::validate_or_throw(std::move(sc), path + " [" + suffix.substr(1) + "]"));
  }

  std::vector<std::string> rows(points);
  std::vector<char> passed(points, 0);
  std::atomic<std::uint64_t> next{0};
  std::mutex log_mu;
  auto worker = [&] {
    for (auto i = next++; i < points; i = next++) {
      const auto r = pwc::run(scenarios[i]);
      rows[i] = pwc::metrics_csv_row(scenarios[i], r);
      passed[i] = r.passed();
      std::lock_guard lock(log_mu);
      spdlog::debug("{}: {}", scenarios[i].id, r.passed() ? "pass" : "fail");
    }
  };
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(points)));
  {
    std::vector<std::jthread> pool;
    for (unsigned k = 0; k < jobs; ++k) pool.emplace_back(worker);
  }

  fs::create_directories(out);
  std::ofstream csv(fs::path(out) / "sweep.csv");
  csv << pwc::kMetricsCsvHeader << '\n';
  for (const auto& row : rows) csv << row << '\n';
  const auto failures = std::count(passed.begin(), passed.end(), 0);
  spdlog::info("{} points, {} failed; wrote {}", points, failures, (fs::path(out) / "sweep.csv").string());
  return failures == 0 ? kPass : kFail;
}

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("pwc");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::cfg::load_env_levels();

  CLI::App app{"Parallel wait-free consensus simulator"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run one scenario file");
  std::string run_path, run_out;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  bool trace = false;
  run->add_option("file", run_path, "scenario file")->required();
  run->add_option("--seed", seed, "override the RNG seed");
  run->add_option("--override", overrides, "key=value scenario override (repeatable)");
  run->add_option("--out", run_out, "output directory (default out/<scenario id>)");
  run->add_flag("--trace", trace, "record the full event trace to trace.jsonl");

  auto* verify = app.add_subcommand("verify", "run a property suite");
  std::string suite, fixtures;
  std::uint32_t count = 100;
  std::uint64_t suite_seed = 2024;
  verify->add_option("suite", suite, "suite name")->required()->check(CLI::IsMember(kSuites));
  verify->add_option("--scenarios", fixtures, "directory with fixture scenario files");
  verify->add_option("--count", count, "random scenarios per mode")->check(CLI::PositiveNumber);
  verify->add_option("--seed", suite_seed, "seed for the random scenario generator");

  auto* sweep = app.add_subcommand("sweep", "run a parameter grid");
  std::string sweep_path, grid, sweep_out;
  std::uint64_t budget = 512;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  sweep->add_option("file", sweep_path, "base scenario file")->required();
  sweep->add_option("--grid", grid, "grid, e.g. \"m=1,2,4,8;sigma=1..8\"")->required();
  sweep->add_option("--out", sweep_out, "output directory")->required();
  sweep->add_option("--budget", budget, "maximum number of grid points");
  sweep->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*run) return cmd_run(run_path, overrides, seed, run_out, trace);
    if (*verify) return cmd_verify(suite, fixtures, count, suite_seed);
    if (*sweep) return cmd_sweep(sweep_path, grid, sweep_out, budget, jobs);
  } catch (const pwc::ScenarioParseError& e) {
    spdlog::error("{}", e.what());
    return kUsage;
  } catch (const pwc::OverrideError& e) {
    spdlog::error("{}", e.what());
    return kUsage;
  } catch (const UsageError& e) {
    spdlog::error("{}", e.what());
    return kUsage;
  }
  return kUsage;
}
