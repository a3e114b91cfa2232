#pragma once

// Property suites shared by the command-line tool and the acceptance test.

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "pwc/client_manager.hpp"
#include "pwc/ordering.hpp"
#include "pwc/primary_mgmt.hpp"
#include "pwc/sim_harness.hpp"

namespace pwc {

struct SuiteReport {
  SuiteReport() = default;
  explicit SuiteReport(std::string n) : name(std::move(n)) {}

  std::string name;
  std::uint64_t checks = 0;
  std::vector<std::string> failures;

  bool ok() const { return failures.empty(); }
  void expect(bool cond, std::string what) {
    ++checks;
    if (!cond) failures.push_back(std::move(what));
  }
  void merge(const SuiteReport& other) {
    checks += other.checks;
    for (const auto& f : other.failures) failures.push_back(other.name + ": " + f);
  }
};

namespace verify_detail {

inline std::string describe_run(const Scenario& sc, const RunResult& r) {
  std::string s = sc.id + " (n=" + std::to_string(sc.config.n) + " m=" + std::to_string(sc.config.m) +
                  " seed=" + std::to_string(sc.config.seed) + ")";
  for (const auto& v : r.metrics.violations) s += " [" + v.kind + " r" + std::to_string(v.round) + ": " + v.detail + "]";
  if (!r.comparison.equal) s += " [logs differ at round " + std::to_string(r.comparison.round) + "]";
  return s;
}

}  // namespace verify_detail

// ------------------------------------------------------------------ ordering

/// Every permutation of [0, k) appears exactly once among permute_index images.
inline SuiteReport verify_bijection(std::uint32_t max_len = 7) {
  SuiteReport rep{"bijection"};
  for (std::uint32_t k = 1; k <= max_len; ++k) {
    std::vector<std::uint32_t> s(k);
    std::iota(s.begin(), s.end(), 0u);
    std::set<std::vector<std::uint32_t>> seen;
    bool all_perms = true;
    const auto total = factorial(k);
    for (std::uint64_t i = 0; i < total; ++i) {
      auto p = permute_index(s, i);
      auto sorted = p;
      std::sort(sorted.begin(), sorted.end());
      all_perms = all_perms && sorted == s;
      seen.insert(std::move(p));
    }
    rep.expect(all_perms, "|S|=" + std::to_string(k) + ": an image is not a permutation of S");
    rep.expect(seen.size() == total, "|S|=" + std::to_string(k) + ": " + std::to_string(seen.size()) +
                                         " distinct images, expected " + std::to_string(total));
  }
  return rep;
}

inline SuiteReport verify_transfer_order() {
  SuiteReport rep{"transfer-order"};
  LedgerState start;
  start.balances = {{"Alice", 600}, {"Bob", 300}, {"Eve", 0}};
  const auto r1 = make_request(ClientId{0}, 0, Transfer{"Alice", "Bob", 500, 200});
  const auto r2 = make_request(ClientId{1}, 0, Transfer{"Bob", "Eve", 400, 300});
  const std::vector<Request> forward{r1, r2}, backward{r2, r1};
  const auto [a, ra] = execute_round(start, forward);
  const auto [b, rb] = execute_round(start, backward);
  rep.expect(a.amount("Eve") == 300 && a.amount("Bob") == 200, "order [r1, r2] should leave Eve=300, Bob=200");
  rep.expect(b.amount("Eve") == 0 && b.amount("Bob") == 500, "order [r2, r1] should leave Eve=0, Bob=500");
  rep.expect(a.total() == start.total() && b.total() == start.total(), "transfers must conserve the total");
  rep.expect(!(a == b), "the two orders must be distinguishable");
  return rep;
}

/// The replacement rule a naive implementation would use: the next replica id.
inline ReplicaId naive_next_primary(ReplicaId p, std::uint32_t n) { return ReplicaId{(p.value + 1) % n}; }

inline SuiteReport verify_distinct_replacement() {
  SuiteReport rep{"distinct-replacement"};
  ServiceConfig cfg;
  cfg.n = 4;
  cfg.f = 1;
  cfg.m = 2;
  cfg.clients = 3;
  const auto init = init_primaries(validate_config(cfg));
  rep.expect(init.primary == std::vector<ReplicaId>{ReplicaId{0}, ReplicaId{1}}, "initial primaries should be r0, r1");

  // Only instance 1 fails: the naive rule hands it r1, which already leads instance 2.
  const auto one = apply_round_failures(init, {InstanceId{1}}, {{InstanceId{1}, {ReplicaId{0}, false}}}, cfg.n);
  rep.expect(naive_next_primary(ReplicaId{0}, cfg.n) == init.of(InstanceId{2}), "naive rule collides (case 1)");
  rep.expect(one.state.primary == std::vector<ReplicaId>{ReplicaId{2}, ReplicaId{1}}, "case 1 should give {1->r2, 2->r1}");
  rep.expect(one.state.failed == std::set<ReplicaId>{ReplicaId{0}}, "case 1 failed set should be {r0}");

  // Both fail: stepping each instance to the next non-failed id lands both on r2.
  const auto both = apply_round_failures(
      init, {InstanceId{1}, InstanceId{2}},
      {{InstanceId{1}, {ReplicaId{0}, false}}, {InstanceId{2}, {ReplicaId{1}, false}}}, cfg.n);
  rep.expect(both.state.primary == std::vector<ReplicaId>{ReplicaId{2}, ReplicaId{3}},
             "case 2 should give {1->r2, 2->r3}");
  rep.expect(both.state.failed == (std::set<ReplicaId>{ReplicaId{0}, ReplicaId{1}}), "case 2 failed set should be {r0, r1}");
  rep.expect(both.state.primary[0] != both.state.primary[1], "case 2 primaries must be distinct");
  auto skip_failed = [&](ReplicaId p) {
    auto q = naive_next_primary(p, cfg.n);
    while (both.state.failed.contains(q)) q = naive_next_primary(q, cfg.n);
    return q;
  };
  rep.expect(skip_failed(ReplicaId{0}) == skip_failed(ReplicaId{1}), "naive successor-skipping rule collides (case 2)");

  std::map<ReplicaId, PrimaryState> snap{{ReplicaId{2}, both.state}, {ReplicaId{3}, both.state}};
  rep.expect(check_invariant(snap, {ReplicaId{0}, ReplicaId{1}}, 1, both.state.failed).empty(),
             "case 2 state should satisfy the invariant");
  return rep;
}

/// Two instances, 10us rounds, 500us detection, 100us transfer, no jitter,
/// soft failures off; the primary of instance 2 (r1) crashes at 1ms.
inline Scenario crash_outage_scenario() {
  Scenario sc;
  sc.id = "crash-outage";
  auto& c = sc.config;
  c.n = 4;
  c.f = 1;
  c.m = 2;
  c.clients = 4;
  c.sigma = 3;
  c.epsilon = 1;
  c.mode = FailureMode::UnifiedReplacement;
  c.timing.base_round_time = micros(10);
  c.timing.failure_detection_timeout = micros(500);
  c.timing.control_transfer_time = micros(100);
  c.timing.latency_jitter = Duration::zero();
  sc.soft_failures = false;
  sc.workload.defaults.requests = 60;
  sc.workload.defaults.interarrival = micros(40);
  ClientWorkload busy;
  busy.requests = 120;
  busy.interarrival = micros(20);
  sc.workload.per_client[ClientId{0}] = busy;
  busy.start = micros(10);
  sc.workload.per_client[ClientId{2}] = busy;
  sc.duration = micros(2500);
  sc.faults.push_back({ReplicaId{1}, micros(1000), Crash{}});
  return validate_scenario(sc);
}

struct OutageReport {
  SimTime crash{0};
  SimTime resume{-1};
  std::uint64_t decisions_during_outage = 0;  // by the healthy instance, in (crash, resume]
  Duration max_added_delay{0};                // vs. the same run without the crash
  std::uint64_t affected_requests = 0;
};

/// Measures the outage of the crashed instance: decisions made meanwhile by
/// the other instance and the extra accept->execute delay its requests saw.
inline OutageReport measure_outage(const Scenario& sc) {
  OutageReport out;
  const auto& fault = sc.faults.at(0);
  out.crash = fault.at;
  Scenario baseline = sc;
  baseline.faults.clear();
  const auto with = run(sc);
  const auto without = run(validate_scenario(baseline));
  const InstanceId crashed = InstanceId{fault.replica.value + 1};
  for (const auto& c : with.control)
    if (c.instance == crashed && c.failed_at >= out.crash) {
      out.resume = c.resumed_at;
      break;
    }
  for (const auto& d : with.decisions)
    if (d.instance != crashed && d.time > out.crash && d.time <= out.resume) ++out.decisions_during_outage;
  std::map<std::pair<ClientId, std::uint64_t>, Duration> base_delay;
  for (const auto& e : without.executions) base_delay[{e.client, e.seqno}] = e.executed - e.accepted;
  for (const auto& e : with.executions) {
    if (e.instance == crashed || e.accepted <= out.crash || e.accepted > out.resume) continue;
    auto it = base_delay.find({e.client, e.seqno});
    if (it == base_delay.end()) continue;
    ++out.affected_requests;
    out.max_added_delay = std::max(out.max_added_delay, (e.executed - e.accepted) - it->second);
  }
  return out;
}

inline SuiteReport verify_crash_outage(const Scenario& sc) {
  SuiteReport rep{"crash-outage"};
  const auto o = measure_outage(sc);
  const auto base = sc.config.timing.base_round_time;
  const auto outage = sc.config.timing.failure_detection_timeout + sc.config.timing.control_transfer_time;
  rep.expect(o.resume.count() >= 0, "crashed instance never resumed");
  rep.expect(o.decisions_during_outage == static_cast<std::uint64_t>(outage / base),
             "healthy instance made " + std::to_string(o.decisions_during_outage) + " decisions during the outage, expected " +
                 std::to_string(outage / base));
  rep.expect(o.affected_requests > 0, "no requests were accepted during the outage");
  rep.expect(o.max_added_delay <= outage && o.max_added_delay >= outage - base,
             "max added delay " + std::to_string(to_micros(o.max_added_delay)) + "us, expected up to " +
                 std::to_string(to_micros(outage)) + "us");
  return rep;
}

inline SuiteReport verify_examples(const Scenario& crash_outage) {
  SuiteReport rep{"examples"};
  rep.merge(verify_transfer_order());
  rep.merge(verify_distinct_replacement());
  rep.merge(verify_crash_outage(crash_outage));
  return rep;
}

// ------------------------------------------------------------------ random scenarios

struct RandomScenarioOptions {
  FailureMode mode = FailureMode::UnifiedReplacement;
  std::uint32_t max_n = 16;
  Duration duration = micros(3000);
};

/// A valid scenario with up to f misbehaving replicas drawn from `rng`.
inline Scenario random_scenario(std::mt19937_64& rng, const RandomScenarioOptions& opt, std::string id) {
  auto pick = [&](std::uint64_t lo, std::uint64_t hi) { return lo + rng() % (hi - lo + 1); };
  Scenario sc;
  sc.id = std::move(id);
  auto& c = sc.config;
  c.mode = opt.mode;
  c.n = static_cast<std::uint32_t>(pick(4, opt.max_n));
  c.f = static_cast<std::uint32_t>(pick(0, (c.n - 1) / 3));
  const std::uint32_t mmax = std::min<std::uint32_t>(opt.mode == FailureMode::UnifiedReplacement ? c.n - c.f : c.n, kMaxInstances);
  c.m = static_cast<std::uint32_t>(pick(1, mmax));
  c.clients = static_cast<std::uint32_t>(pick(c.m + 1, c.m + 2 * c.n));
  c.sigma = pick(1, 5);
  c.seed = rng();
  c.timing.latency_jitter = micros(static_cast<double>(10 * pick(0, 3)));
  sc.soft_failures = pick(0, 3) != 0;
  sc.duration = opt.duration;
  sc.workload.defaults.requests = pick(3, 15);
  sc.workload.defaults.interarrival = micros(static_cast<double>(pick(50, 300)));
  sc.workload.defaults.op.kind = OperationTemplate::Kind::Ring;
  sc.workload.defaults.op.accounts = {"a", "b", "c", "d"};
  sc.workload.defaults.op.value = pick(1, 40);
  sc.ledger.balances = {{"a", 100}, {"b", 100}, {"c", 100}, {"d", 100}};

  std::vector<std::uint32_t> replicas(c.n);
  std::iota(replicas.begin(), replicas.end(), 0u);
  std::shuffle(replicas.begin(), replicas.end(), rng);
  const auto bad = pick(0, c.f);
  const auto span_us = static_cast<std::uint64_t>(to_micros(opt.duration));
  for (std::uint64_t k = 0; k < bad; ++k) {
    FaultEvent e;
    e.replica = ReplicaId{replicas[k]};
    e.at = micros(static_cast<double>(pick(0, span_us - 1)));
    switch (pick(0, 2)) {
      case 0: e.profile = Crash{}; break;
      case 1: e.profile = Throttle{1.5 + static_cast<double>(pick(0, 6)) * 0.5}; break;
      default: {
        IgnoreClients ig;
        for (auto n = pick(1, 2); n > 0; --n) ig.clients.insert(ClientId{static_cast<std::uint32_t>(pick(0, c.clients - 1))});
        e.profile = ig;
      }
    }
    sc.faults.push_back(e);
    if (pick(0, 3) == 0) sc.faults.push_back({e.replica, e.at + micros(static_cast<double>(pick(100, 1000))), Honest{}});
  }
  return validate_scenario(std::move(sc));
}

struct RandomSuiteOptions {
  std::uint32_t count = 100;
  std::uint64_t seed = 2024;
  std::uint32_t max_n = 16;
};

/// Unified replacement only: zero invariant violations at every round boundary.
inline SuiteReport verify_invariants(const RandomSuiteOptions& opt = {}) {
  SuiteReport rep{"invariants"};
  std::mt19937_64 rng(opt.seed);
  for (std::uint32_t k = 0; k < opt.count; ++k) {
    const auto sc = random_scenario(rng, {FailureMode::UnifiedReplacement, opt.max_n}, "ur-" + std::to_string(k));
    const auto r = run(sc);
    bool clean = true;
    for (const auto& v : r.metrics.violations) clean = clean && v.kind.rfind("invariant", 0) != 0;
    rep.expect(clean && !r.metrics.aborted, "violation in " + verify_detail::describe_run(sc, r));
  }
  return rep;
}

/// Identical execution logs at every non-faulty replica, under both modes.
inline SuiteReport verify_nondivergence(const RandomSuiteOptions& opt = {}) {
  SuiteReport rep{"nondivergence"};
  for (auto mode : {FailureMode::UnifiedReplacement, FailureMode::InPlaceRecovery}) {
    std::mt19937_64 rng(opt.seed);  // the unified runs repeat the invariant suite's scenarios
    for (std::uint32_t k = 0; k < opt.count; ++k) {
      const auto sc = random_scenario(rng, {mode, opt.max_n},
                                      std::string(mode == FailureMode::UnifiedReplacement ? "ur-" : "ipr-") + std::to_string(k));
      const auto r = run(sc);
      rep.expect(r.comparison.equal && r.metrics.violations.empty() && !r.metrics.aborted,
                 "divergence in " + verify_detail::describe_run(sc, r));
    }
  }
  return rep;
}

/// Soft failures on: every accept->execute delay within delay_bound, backlog within its bound.
inline SuiteReport verify_delay_bound(const RandomSuiteOptions& opt = {}) {
  SuiteReport rep{"delay-bound"};
  for (auto mode : {FailureMode::UnifiedReplacement, FailureMode::InPlaceRecovery}) {
    std::mt19937_64 rng(opt.seed + 1);
    for (std::uint32_t k = 0; k < opt.count; ++k) {
      auto sc = random_scenario(rng, {mode, opt.max_n}, "bound-" + std::to_string(k));
      sc.soft_failures = true;
      const auto r = run(sc);
      rep.expect(r.metrics.max_delay <= r.metrics.delay_bound && r.metrics.delay_bound_exceeded == 0,
                 "delay " + std::to_string(to_micros(r.metrics.max_delay)) + "us over bound " +
                     std::to_string(to_micros(r.metrics.delay_bound)) + "us in " + verify_detail::describe_run(sc, r));
      rep.expect(r.metrics.backlog_bound_exceeded == 0, "backlog over bound in " + verify_detail::describe_run(sc, r));
    }
  }
  return rep;
}

/// Soft failures off and one instance at half speed: the backlog keeps growing.
inline Scenario throttled_backlog_scenario() {
  Scenario sc;
  sc.id = "throttled-backlog";
  sc.config.n = 4;
  sc.config.f = 1;
  sc.config.m = 2;
  sc.config.clients = 4;
  sc.config.mode = FailureMode::UnifiedReplacement;
  sc.soft_failures = false;
  sc.workload.defaults.requests = 20;
  sc.workload.defaults.interarrival = micros(200);
  sc.duration = micros(6000);
  sc.faults.push_back({ReplicaId{1}, SimTime{0}, Throttle{2.0}});
  return validate_scenario(sc);
}

inline SuiteReport verify_backlog_growth(const Scenario& sc) {
  SuiteReport rep{"backlog-growth"};
  const auto r = run(sc);
  const auto& m = r.metrics;
  const auto a = m.max_backlog_in_third(0), b = m.max_backlog_in_third(1), c = m.max_backlog_in_third(2);
  rep.expect(a < b && b < c, "backlog by third " + std::to_string(a) + ", " + std::to_string(b) + ", " +
                                 std::to_string(c) + " is not strictly increasing");
  rep.expect(r.comparison.equal, "logs diverged");
  return rep;
}

// ------------------------------------------------------------------ wait-freedom

/// In-place recovery, four instances, the primary of instance 2 crashes.
inline Scenario waitfree_scenario(Duration jitter = Duration::zero()) {
  Scenario sc;
  sc.id = "waitfree";
  auto& c = sc.config;
  c.n = 4;
  c.f = 1;
  c.m = 4;
  c.clients = 12;
  c.mode = FailureMode::InPlaceRecovery;
  c.timing.latency_jitter = jitter;
  c.seed = 11;
  sc.workload.defaults.requests = 20;
  sc.workload.defaults.interarrival = micros(150);
  sc.duration = micros(5000);
  sc.faults.push_back({ReplicaId{1}, micros(1000), Crash{}});
  return validate_scenario(sc);
}

struct WaitfreeComparison {
  std::uint64_t compared = 0;    // healthy decisions inside the run length
  std::uint64_t mismatched = 0;  // decisions whose (round, time) differ from the baseline
  double baseline_rate = 0;      // healthy decisions after the first sigma+epsilon rounds
  double fault_rate = 0;
};

inline WaitfreeComparison compare_with_baseline(const Scenario& sc) {
  std::set<ReplicaId> bad;
  for (const auto& f : sc.faults) bad.insert(f.replica);
  std::set<InstanceId> healthy;
  const auto init = init_primaries(sc.config);
  for (std::uint32_t i = 1; i <= sc.config.m; ++i)
    if (!bad.contains(init.of(InstanceId{i}))) healthy.insert(InstanceId{i});

  Scenario baseline = sc;
  baseline.faults.clear();
  const auto with = run(sc);
  const auto without = run(validate_scenario(baseline));
  auto collect = [&](const RunResult& r) {
    std::map<InstanceId, std::vector<std::pair<RoundNum, SimTime>>> out;
    for (const auto& d : r.decisions)
      if (healthy.contains(d.instance) && d.time <= sc.duration) out[d.instance].emplace_back(d.round, d.time);
    return out;
  };
  const auto a = collect(without), b = collect(with);
  WaitfreeComparison cmp;
  const RoundNum warmup = sc.config.sigma + sc.config.epsilon;
  for (const auto& i : healthy) {
    const auto& x = a.count(i) ? a.at(i) : decltype(a.at(i)){};
    const auto& y = b.count(i) ? b.at(i) : decltype(b.at(i)){};
    const auto n = std::max(x.size(), y.size());
    for (std::size_t k = 0; k < n; ++k) {
      ++cmp.compared;
      if (k >= x.size() || k >= y.size() || x[k] != y[k]) ++cmp.mismatched;
    }
    for (const auto& [r, t] : x) cmp.baseline_rate += r >= warmup ? 1 : 0;
    for (const auto& [r, t] : y) cmp.fault_rate += r >= warmup ? 1 : 0;
  }
  return cmp;
}

inline SuiteReport verify_waitfree(const Scenario& exact, const Scenario& jittered) {
  SuiteReport rep{"waitfree"};
  const auto e = compare_with_baseline(exact);
  rep.expect(e.compared > 0, "no healthy decisions to compare");
  rep.expect(e.mismatched == 0, std::to_string(e.mismatched) + " of " + std::to_string(e.compared) +
                                    " healthy decisions differ from the baseline");
  const auto j = compare_with_baseline(jittered);
  const double ratio = j.baseline_rate > 0 ? j.fault_rate / j.baseline_rate : 0;
  rep.expect(ratio >= 0.95 && ratio <= 1.05, "healthy throughput ratio " + std::to_string(ratio) + " outside 5%");
  return rep;
}

// ------------------------------------------------------------------ clients

/// Twelve clients; replica 1 ignores client 1 from the start.
inline Scenario ignoring_primary_scenario(FailureMode mode) {
  Scenario sc;
  sc.id = mode == FailureMode::UnifiedReplacement ? "ignore-ur" : "ignore-ipr";
  auto& c = sc.config;
  c.n = 4;
  c.f = 1;
  c.m = mode == FailureMode::UnifiedReplacement ? 3 : 4;
  c.clients = 12;
  c.mode = mode;
  c.seed = 5;
  sc.workload.defaults.requests = 15;
  sc.workload.defaults.interarrival = micros(200);
  sc.workload.patience_rounds = 20;
  sc.duration = micros(4000);
  sc.faults.push_back({ReplicaId{1}, SimTime{0}, IgnoreClients{{ClientId{1}}}});
  return validate_scenario(sc);
}

inline SuiteReport verify_liveness(const Scenario& sc) {
  SuiteReport rep{"liveness:" + sc.id};
  const auto r = run(sc);
  rep.expect(r.metrics.violations.empty() && r.comparison.equal, "run failed: " + verify_detail::describe_run(sc, r));
  rep.expect(r.all_confirmed, "confirmed " + std::to_string(r.metrics.confirmed_requests) + " of " +
                                  std::to_string(r.metrics.issued_requests));
  Duration worst{0};
  for (const auto& per : r.metrics.confirmation_latency)
    for (auto d : per) worst = std::max(worst, d);
  rep.expect(r.metrics.liveness_bound_exceeded == 0 && worst <= r.metrics.liveness_bound,
             "worst confirmation " + std::to_string(to_micros(worst)) + "us over bound " +
                 std::to_string(to_micros(r.metrics.liveness_bound)) + "us");
  if (sc.config.mode == FailureMode::InPlaceRecovery)
    rep.expect(r.metrics.instance_changes_activated > 0, "ignored client never changed instance");
  else
    rep.expect(r.metrics.primary_replacements > 0, "ignoring primary was never replaced");
  return rep;
}

inline SuiteReport verify_load_balance(const RandomSuiteOptions& opt = {}) {
  SuiteReport rep{"load-balance"};
  for (std::uint32_t m = 1; m <= kMaxInstances; ++m)
    for (std::uint32_t clients = m + 1; clients <= 4 * kMaxInstances; ++clients) {
      const auto a = ClientAssignment::round_robin(clients, m);
      const auto [lo, hi] = std::minmax_element(a.counts().begin(), a.counts().end());
      rep.expect(*hi - *lo <= 1, "static counts spread " + std::to_string(*hi - *lo) + " for |C|=" +
                                     std::to_string(clients) + ", m=" + std::to_string(m));
    }
  std::mt19937_64 rng(opt.seed + 2);
  for (std::uint32_t k = 0; k < opt.count; ++k) {
    auto sc = random_scenario(rng, {FailureMode::InPlaceRecovery, opt.max_n}, "load-" + std::to_string(k));
    const auto r = run(sc);
    // An instance may only sit above the cap if round-robin put it there.
    const auto initial = ClientAssignment::round_robin(sc.config.clients, sc.config.m).counts();
    for (std::uint32_t i = 0; i < sc.config.m; ++i)
      rep.expect(r.metrics.peak_client_counts[i] <= std::max(r.metrics.load_cap, initial[i]),
                 "instance " + std::to_string(i + 1) + " grew past the cap in " + verify_detail::describe_run(sc, r));
  }
  const auto sc = ignoring_primary_scenario(FailureMode::InPlaceRecovery);
  const auto r = run(sc);
  rep.expect(r.metrics.instance_changes_activated > 0, "no instance change happened in " + sc.id);
  rep.expect(r.metrics.max_clients_per_instance <= r.metrics.load_cap,
             "an instance held " + std::to_string(r.metrics.max_clients_per_instance) + " clients, cap " +
                 std::to_string(r.metrics.load_cap));
  return rep;
}

}  // namespace pwc
