#include <gtest/gtest.h>

#include "pwc/waitfree_scheduler.hpp"

using namespace pwc;

namespace {

const InstanceId I1{1}, I2{2}, I3{3};

Decision ok(std::uint64_t tag = 0) { return Success{make_request(ClientId{0}, tag, Noop{tag})}; }

void advance(RoundTable& t, InstanceId i, RoundNum to) {
  while (t.cursor(i) < to) t.record(i, t.cursor(i), ok(t.cursor(i)));
}

}  // namespace

TEST(DetectSoftFailures, GapAtLeastSigma) {
  RoundTable t(2);
  advance(t, I1, 12);
  advance(t, I2, 5);
  EXPECT_EQ(detect_soft_failures(t, 3), (std::vector<SoftFailure>{{I2, 5}}));
}

TEST(DetectSoftFailures, GapBelowSigma) {
  RoundTable t(2);
  advance(t, I1, 6);
  advance(t, I2, 5);
  EXPECT_TRUE(detect_soft_failures(t, 3).empty());
  advance(t, I1, 8);  // exactly sigma ahead
  EXPECT_EQ(detect_soft_failures(t, 3).size(), 1u);
}

TEST(DetectSoftFailures, SingleInstanceNeverLags) {
  RoundTable t(1);
  advance(t, I1, 40);
  EXPECT_TRUE(detect_soft_failures(t, 1).empty());
}

TEST(DetectSoftFailures, IdleInstancesAreIgnored) {
  const std::vector<std::optional<RoundNum>> working{20, std::nullopt, 2};
  EXPECT_EQ(detect_soft_failures(std::span<const std::optional<RoundNum>>(working), 3),
            (std::vector<SoftFailure>{{I3, 2}}));
}

TEST(ApplySkip, FillsEpsilonMinusOneRounds) {
  RoundTable t(2);
  advance(t, I1, 7);
  t.record(I1, 7, Fail{});
  t.apply_skip(I1, 7, 4);
  for (RoundNum r : {8, 9, 10}) EXPECT_TRUE(is_skip(*t.decision(I1, r))) << r;
  EXPECT_FALSE(t.decision(I1, 11));
  EXPECT_EQ(t.cursor(I1), 11u);
}

TEST(ApplySkip, EpsilonOneSkipsNothing) {
  RoundTable t(1);
  t.record(I1, 0, Fail{});
  t.apply_skip(I1, 0, 1);
  EXPECT_EQ(t.cursor(I1), 1u);
  EXPECT_FALSE(t.decision(I1, 1));
}

TEST(ApplySkip, ConsecutiveFailuresCompose) {
  RoundTable t(1);
  t.record(I1, 0, Fail{});
  t.apply_skip(I1, 0, 3);
  EXPECT_EQ(t.cursor(I1), 3u);
  t.record(I1, 3, Fail{});
  t.apply_skip(I1, 3, 3);
  EXPECT_EQ(t.cursor(I1), 6u);
  for (RoundNum r : {1, 2, 4, 5}) EXPECT_TRUE(is_skip(*t.decision(I1, r)));
}

TEST(ApplySkip, CollisionWithDecidedRoundThrows) {
  RoundTable t(1);
  advance(t, I1, 5);
  EXPECT_THROW(t.apply_skip(I1, 2, 4), SkipCollision);
}

TEST(ReadyRounds, ReleasesOnlyTotalPrefix) {
  RoundTable t(2);
  t.record(I1, 0, ok());
  t.record(I2, 0, ok());
  t.record(I1, 1, ok());
  auto out = t.ready_rounds();
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].round, 0u);
  EXPECT_EQ(out[0].instance_count(), 2u);

  t.record(I1, 2, ok());
  EXPECT_TRUE(t.ready_rounds().empty());  // round 1 still missing I2

  RoundTable u(2);
  u.record(I1, 0, ok());
  u.record(I1, 1, ok());
  u.record(I2, 0, Fail{});
  t.record(I2, 1, ok());
  t.record(I2, 2, ok());
  out = t.ready_rounds();
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].round, 1u);
  EXPECT_EQ(out[1].round, 2u);
  EXPECT_EQ(t.executed_up_to(), 2u);
}

TEST(ReadyRounds, BacklogCountsUnexecutedRounds) {
  RoundTable t(2);
  advance(t, I1, 9);
  advance(t, I2, 3);
  t.ready_rounds();
  EXPECT_EQ(t.backlog(I1), 6u);
  EXPECT_EQ(t.backlog(I2), 0u);
}

TEST(RoundTable, RejectsOutOfOrderRecord) {
  RoundTable t(1);
  EXPECT_THROW(t.record(I1, 1, ok()), std::logic_error);
}

TEST(DelayBound, WorstCaseInstantiation) {
  ServiceConfig c;
  c.sigma = 3;
  c.epsilon = 4;
  c.m = 1;
  c.timing.base_round_time = micros(10);
  c.timing.failure_detection_timeout = micros(500);
  c.timing.control_transfer_time = micros(100);
  c.timing.execution_time = micros(10);
  EXPECT_EQ(delay_bound(c), micros(3610));
}

TEST(DelayBound, MinimalParameters) {
  ServiceConfig c;
  c.sigma = 1;
  c.epsilon = 1;
  c.m = 1;
  c.timing.base_round_time = micros(10);
  c.timing.failure_detection_timeout = micros(10);
  c.timing.control_transfer_time = Duration::zero();
  c.timing.execution_time = Duration::zero();
  EXPECT_EQ(delay_bound(c), micros(20));
}
