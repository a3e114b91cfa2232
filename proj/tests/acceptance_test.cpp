// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <chrono>
#include <filesystem>
#include <functional>
#include <iostream>
#include <string>

#include "pwc/scenario_io.hpp"
#include "pwc/verify.hpp"

using namespace pwc;

namespace {

std::string fixture(const std::string& name) { return std::string(PWC_SCENARIO_DIR) + "/" + name; }

struct Criterion {
  int number;
  std::string title;
  std::chrono::seconds time_limit;
  std::function<SuiteReport()> body;
};

bool report(const Criterion& c) {
  const auto start = std::chrono::steady_clock::now();
  SuiteReport rep{c.title};
  try {
    rep = c.body();
  } catch (const std::exception& e) {
    rep.expect(false, std::string("threw: ") + e.what());
  }
  const std::chrono::duration<double> took = std::chrono::steady_clock::now() - start;
  rep.expect(took <= c.time_limit, "took " + std::to_string(took.count()) + "s, limit " +
                                       std::to_string(c.time_limit.count()) + "s");
  std::cout << "criterion " << c.number << ": " << (rep.ok() ? "PASS" : "FAIL") << "  " << c.title << " ("
            << rep.checks << " checks, " << took.count() << "s)\n";
  for (std::size_t k = 0; k < rep.failures.size() && k < 5; ++k) std::cout << "    " << rep.failures[k] << "\n";
  return rep.ok();
}

SuiteReport crash_outage() {
  SuiteReport rep{"crash-outage"};
  const auto sc = load_scenario(fixture("crash_outage.json"));
  rep.merge(verify_crash_outage(sc));
  const auto o = measure_outage(sc);
  rep.expect(o.decisions_during_outage == 60, "outage decisions " + std::to_string(o.decisions_during_outage));
  rep.expect(o.max_added_delay <= micros(600), "added delay over 600us");
  return rep;
}

SuiteReport bounded_delay() {
  SuiteReport rep{"bounded-delay"};
  rep.merge(verify_delay_bound());
  // Every bundled scenario, forced to run with soft failures on.
  for (const auto& entry : std::filesystem::directory_iterator(PWC_SCENARIO_DIR)) {
    if (entry.path().extension() != ".json") continue;
    auto sc = load_scenario(entry.path().string());
    if (!sc.soft_failures) continue;
    const auto r = run(sc);
    rep.expect(r.metrics.max_delay <= r.metrics.delay_bound && r.metrics.delay_bound_exceeded == 0,
               sc.id + ": delay " + std::to_string(to_micros(r.metrics.max_delay)) + "us over bound");
  }
  rep.merge(verify_backlog_growth(load_scenario(fixture("throttled_backlog.json"))));
  return rep;
}

SuiteReport client_liveness() {
  SuiteReport rep{"liveness"};
  rep.merge(verify_liveness(load_scenario(fixture("ignore_ur.json"))));
  rep.merge(verify_liveness(load_scenario(fixture("ignore_ipr.json"))));
  return rep;
}

}  // namespace

int main() {
  using std::chrono::seconds;
  const Criterion criteria[] = {
      {1, "permutation index is a bijection for lengths 1-7", seconds(10), [] { return verify_bijection(7); }},
      {2, "transfer order decides whether Eve is paid", seconds(5), verify_transfer_order},
      {3, "simultaneous failures get distinct replacement primaries", seconds(5), verify_distinct_replacement},
      {4, "crash outage: 60 healthy decisions, up to 600us added delay", seconds(1), crash_outage},
      {5, "primary-map invariant over 100 random scenarios", seconds(120), [] { return verify_invariants(); }},
      {6, "identical execution logs over 200 random scenarios", seconds(300), [] { return verify_nondivergence(); }},
      {7, "healthy instances unaffected by a crashed primary", seconds(30),
       [] {
         return verify_waitfree(load_scenario(fixture("waitfree.json")), load_scenario(fixture("waitfree_jitter.json")));
       }},
      {8, "accept-to-execute delay bounded; unbounded backlog without soft failures", seconds(300), bounded_delay},
      {9, "ignored client confirmed under both failure modes", seconds(30), client_liveness},
      {10, "client counts stay within the load cap", seconds(120), [] { return verify_load_balance(); }},
  };
  bool all = true;
  for (const auto& c : criteria) all = report(c) && all;
  std::cout << (all ? "all criteria passed" : "some criteria FAILED") << "\n";
  return all ? 0 : 1;
}
