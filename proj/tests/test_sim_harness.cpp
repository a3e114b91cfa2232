#include <gtest/gtest.h>

#include <sstream>

#include "pwc/report.hpp"
#include "pwc/sim_harness.hpp"
#include "pwc/verify.hpp"

using namespace pwc;

namespace {

Scenario small(FailureMode mode = FailureMode::UnifiedReplacement) {
  Scenario sc;
  sc.id = "small";
  sc.config.n = 4;
  sc.config.f = 1;
  sc.config.m = 2;
  sc.config.clients = 4;
  sc.config.mode = mode;
  sc.config.seed = 3;
  sc.workload.defaults.requests = 10;
  sc.workload.defaults.interarrival = micros(100);
  sc.duration = micros(2000);
  return validate_scenario(sc);
}

std::vector<DecisionRecord> of_instance(const RunResult& r, InstanceId i) {
  std::vector<DecisionRecord> out;
  for (const auto& d : r.decisions)
    if (d.instance == i) out.push_back(d);
  return out;
}

std::string summary(const Scenario& sc, const RunResult& r) {
  std::ostringstream os;
  write_summary(os, sc, r);
  return os.str();
}

}  // namespace

TEST(Run, HealthyRunPasses) {
  const auto sc = small();
  const auto r = run(sc);
  EXPECT_TRUE(r.passed()) << summary(sc, r);
  EXPECT_EQ(r.metrics.issued_requests, 40u);
  EXPECT_EQ(r.metrics.confirmed_requests, 40u);
  EXPECT_EQ(r.logs.size(), 4u);
  EXPECT_EQ(r.metrics.primary_replacements, 0u);
}

TEST(Run, SameSeedSameOutputs) {
  auto sc = small();
  sc.config.timing.latency_jitter = micros(7);
  sc = validate_scenario(sc);
  const auto a = run(sc), b = run(sc);
  EXPECT_EQ(a.logs, b.logs);
  EXPECT_EQ(metrics_csv_row(sc, a), metrics_csv_row(sc, b));
  EXPECT_EQ(summary(sc, a), summary(sc, b));
  ASSERT_EQ(a.decisions.size(), b.decisions.size());
  for (std::size_t k = 0; k < a.decisions.size(); ++k) {
    EXPECT_EQ(a.decisions[k].time, b.decisions[k].time);
    EXPECT_EQ(a.decisions[k].decision, b.decisions[k].decision);
  }
}

TEST(Run, SeedChangesJitteredTiming) {
  auto sc = small();
  sc.config.timing.latency_jitter = micros(7);
  const auto a = run(validate_scenario(sc));
  sc.config.seed = 99;
  const auto b = run(validate_scenario(sc));
  EXPECT_TRUE(a.passed());
  EXPECT_TRUE(b.passed());
  EXPECT_NE(a.metrics.delay_histogram_us, b.metrics.delay_histogram_us);
}

TEST(Run, ConfirmedEqualsDecidedClientRequests) {
  auto sc = inject(small(), {ReplicaId{1}, micros(700), Crash{}});
  const auto r = run(sc);
  EXPECT_EQ(r.metrics.confirmed_requests, r.metrics.decided_client_requests);
  EXPECT_TRUE(r.all_confirmed);
}

TEST(Run, TraceTimesNeverGoBackwards) {
  auto sc = inject(small(), {ReplicaId{1}, micros(700), Crash{}});
  sc.record_trace = true;
  const auto r = run(sc);
  ASSERT_FALSE(r.trace.empty());
  for (std::size_t k = 1; k < r.trace.size(); ++k) EXPECT_LE(r.trace[k - 1].time, r.trace[k].time) << k;
}

TEST(Inject, CrashFailsAfterDetectionWithoutSoftFailures) {
  auto sc = small();
  sc.soft_failures = false;
  sc = inject(sc, {ReplicaId{1}, micros(1000), Crash{}});
  const auto r = run(sc);
  bool saw_fail = false;
  for (const auto& d : of_instance(r, InstanceId{2})) {
    if (d.primary != ReplicaId{1}) continue;
    if (d.time <= micros(1000)) {
      EXPECT_TRUE(is_success(d.decision));
    }
    if (is_fail(d.decision)) {
      saw_fail = true;
      EXPECT_GE(d.time, micros(1000) + sc.config.timing.failure_detection_timeout);
    }
  }
  EXPECT_TRUE(saw_fail);
  ASSERT_FALSE(r.control.empty());
  EXPECT_FALSE(r.control.front().soft);
  EXPECT_EQ(r.control.front().old_primary, ReplicaId{1});
  EXPECT_EQ(r.control.front().new_primary, ReplicaId{2});
  EXPECT_TRUE(r.comparison.equal);
}

TEST(Inject, SoftFailureBeatsDetectionTimeout) {
  const auto sc = inject(small(), {ReplicaId{1}, micros(1000), Crash{}});
  const auto r = run(sc);
  ASSERT_FALSE(r.control.empty());
  const auto& first = r.control.front();
  EXPECT_TRUE(first.soft);
  // The healthy instance needs sigma rounds to open the gap.
  EXPECT_LE(first.failed_at, micros(1000) + sc.config.timing.base_round_time * static_cast<int>(sc.config.sigma + 1));
  EXPECT_EQ(first.new_primary, ReplicaId{2});
  EXPECT_TRUE(r.passed()) << summary(sc, r);
}

TEST(Inject, ThrottleDoublesRoundTime) {
  auto sc = small();
  sc.soft_failures = false;
  sc = inject(sc, {ReplicaId{1}, SimTime{0}, Throttle{2.0}});
  const auto r = run(sc);
  const auto i1 = of_instance(r, InstanceId{1}), i2 = of_instance(r, InstanceId{2});
  ASSERT_GT(i2.size(), 10u);
  for (std::size_t k = 1; k < 10; ++k) {
    EXPECT_EQ(i1[k].time - i1[k - 1].time, micros(10));
    EXPECT_EQ(i2[k].time - i2[k - 1].time, micros(20));
  }
}

TEST(Inject, RecoveredPrimaryIsRetriedInPlace) {
  auto sc = small(FailureMode::InPlaceRecovery);
  sc = inject(sc, {ReplicaId{1}, micros(500), Crash{}});
  sc = inject(sc, {ReplicaId{1}, micros(1500), Honest{}});
  const auto r = run(sc);
  bool led_after = false;
  for (const auto& d : of_instance(r, InstanceId{2})) {
    if (d.time <= micros(1500) || !is_success(d.decision)) continue;
    EXPECT_EQ(d.primary, ReplicaId{1});
    led_after = true;
  }
  EXPECT_TRUE(led_after);
  ASSERT_FALSE(r.control.empty());
  for (const auto& c : r.control) EXPECT_EQ(c.new_primary, ReplicaId{1});
  EXPECT_TRUE(r.comparison.equal);
}

TEST(Inject, RejectsTooManyFaultyReplicas) {
  auto sc = inject(small(), {ReplicaId{1}, micros(500), Crash{}});
  EXPECT_THROW(inject(sc, {ReplicaId{2}, micros(500), Crash{}}), ScenarioError);
}

TEST(ValidateScenario, RejectsBadFaults) {
  auto sc = small();
  sc.faults = {{ReplicaId{9}, SimTime{0}, Crash{}}};
  EXPECT_THROW(validate_scenario(sc), ScenarioError);
  sc.faults = {{ReplicaId{1}, micros(5), Crash{}}, {ReplicaId{1}, micros(5), Honest{}}};
  EXPECT_THROW(validate_scenario(sc), ScenarioError);
  sc.faults = {{ReplicaId{1}, micros(5), Throttle{0.5}}};
  EXPECT_THROW(validate_scenario(sc), ScenarioError);
  sc.faults = {{ReplicaId{1}, micros(5), IgnoreClients{{ClientId{40}}}}};
  EXPECT_THROW(validate_scenario(sc), ScenarioError);
  sc.faults.clear();
  sc.duration = Duration::zero();
  EXPECT_THROW(validate_scenario(sc), ScenarioError);
}

TEST(CompareLogs, HonestRunIsEqual) {
  const auto r = run(small());
  EXPECT_TRUE(compare_logs(r.logs, {}).equal);
}

TEST(CompareLogs, CorruptedFixtureReportsPosition) {
  auto r = run(small());
  auto logs = r.logs;
  auto& victim = logs.at(ReplicaId{2});
  ASSERT_GT(victim.size(), 5u);
  victim[5].digest[0] ^= 0xff;
  const auto cmp = compare_logs(logs, {});
  EXPECT_FALSE(cmp.equal);
  EXPECT_EQ(cmp.replica, ReplicaId{2});
  EXPECT_EQ(cmp.round, victim[5].round);
  EXPECT_EQ(cmp.position, victim[5].position);
  EXPECT_TRUE(compare_logs(logs, {ReplicaId{2}}).equal);
}

TEST(CompareLogs, TruncatedLogDiverges) {
  auto logs = run(small()).logs;
  const auto full = logs.at(ReplicaId{0});
  logs.at(ReplicaId{3}).pop_back();
  const auto cmp = compare_logs(logs, {});
  EXPECT_FALSE(cmp.equal);
  EXPECT_EQ(cmp.round, full.back().round);
}

TEST(CompareLogs, ByzantinePrimariesDoNotSplitHonestLogs) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Scenario sc;
    sc.config.n = 7;
    sc.config.f = 2;
    sc.config.m = 7;  // leaves instances below the cap so stuck clients can move
    sc.config.clients = 10;
    sc.config.mode = FailureMode::InPlaceRecovery;
    sc.config.seed = seed;
    sc.config.timing.latency_jitter = micros(4);
    sc.workload.defaults.requests = 8;
    sc.duration = micros(2500);
    sc.faults = {{ReplicaId{0}, micros(300), Crash{}}, {ReplicaId{2}, SimTime{0}, IgnoreClients{{ClientId{2}}}}};
    sc = validate_scenario(sc);
    const auto r = run(sc);
    EXPECT_TRUE(r.comparison.equal) << seed;
    EXPECT_TRUE(r.passed()) << summary(sc, r);
  }
}

TEST(CrashOutage, SixtyDecisionsDuringOutage) {
  const auto o = measure_outage(crash_outage_scenario());
  // Detection starts with the first round after the crash, so the outage is 600us plus under one round.
  EXPECT_GE(o.resume - o.crash, micros(600));
  EXPECT_LT(o.resume - o.crash, micros(610));
  EXPECT_EQ(o.decisions_during_outage, 60u);
  EXPECT_GT(o.affected_requests, 0u);
  EXPECT_LE(o.max_added_delay, micros(600));
  EXPECT_GE(o.max_added_delay, micros(590));
}

TEST(Metrics, DelayBoundRecordedFromConfig) {
  const auto sc = small();
  const auto r = run(sc);
  EXPECT_EQ(r.metrics.delay_bound, delay_bound(sc.config));
  EXPECT_LE(r.metrics.max_delay, r.metrics.delay_bound);
  EXPECT_EQ(r.metrics.load_cap, load_cap(4, 3));
}
