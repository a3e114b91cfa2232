#include <gtest/gtest.h>

#include "pwc/client_manager.hpp"

using namespace pwc;

namespace {

const InstanceId I1{1}, I2{2}, I3{3};

ExecutionResult noop(std::uint64_t tag) { return {ExecutionResult::Kind::Noop, 0, 0, tag}; }

RoundDecisionSet row(RoundNum r, std::vector<Decision> d) { return {r, std::move(d)}; }

Decision idle() { return Success{IdleProposal{}}; }

}  // namespace

TEST(AssignClient, ResidueIsOneBased) {
  EXPECT_EQ(assign_client(ClientId{5}, 3), I3);
  EXPECT_EQ(assign_client(ClientId{0}, 7), I1);
  const auto a = ClientAssignment::round_robin(6, 3);
  EXPECT_EQ(a.counts(), (std::vector<std::uint32_t>{2, 2, 2}));
}

TEST(AssignClient, SpreadAtMostOne) {
  for (std::uint32_t m = 1; m <= 20; ++m)
    for (std::uint32_t c = m + 1; c <= 60; ++c) {
      const auto counts = ClientAssignment::round_robin(c, m).counts();
      const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
      EXPECT_LE(*hi - *lo, 1u) << m << " " << c;
    }
}

TEST(LoadCap, CeilingDivision) {
  EXPECT_EQ(load_cap(8, 4), 2u);
  EXPECT_EQ(load_cap(9, 4), 3u);
  EXPECT_EQ(load_cap(3, 7), 1u);
}

TEST(RequestInstanceChange, AcceptsBelowCap) {
  auto a = ClientAssignment::round_robin(8, 4);  // {2, 2, 2, 2}, cap 2
  a.move(ClientId{3}, I1);                         // {3, 2, 2, 1}
  const auto resp = request_instance_change(ClientId{0}, InstanceId{4}, a, 10, 3, 4);
  ASSERT_TRUE(std::holds_alternative<InstanceChange>(resp));
  const auto& ch = std::get<InstanceChange>(resp);
  EXPECT_EQ(ch.target, InstanceId{4});
  EXPECT_EQ(ch.effective, 16u);
}

TEST(RequestInstanceChange, RejectsAtCap) {
  const auto a = ClientAssignment::round_robin(8, 4);
  const auto resp = request_instance_change(ClientId{0}, I2, a, 10, 3, 4);
  ASSERT_TRUE(std::holds_alternative<ChangeRejected>(resp));
  EXPECT_EQ(std::get<ChangeRejected>(resp).cap, 2u);
}

TEST(RequestInstanceChange, PendingChangesCountTowardCap) {
  auto a = ClientAssignment::round_robin(8, 4);
  a.move(ClientId{3}, I1);  // I4 now holds one client
  a.add_pending(ClientId{1}, {InstanceId{4}, 20});
  EXPECT_TRUE(std::holds_alternative<ChangeRejected>(request_instance_change(ClientId{0}, InstanceId{4}, a, 10, 3, 4)));
}

TEST(ActivateReassignments, GatedByEffectiveRound) {
  auto a = ClientAssignment::round_robin(8, 4);
  a.move(ClientId{3}, I1);
  auto res = activate_reassignments(a, row(10, {Success{InstanceChange{ClientId{0}, InstanceId{4}, 16}}, idle(), idle(), idle()}), 4);
  ASSERT_EQ(res.events.size(), 1u);
  EXPECT_EQ(res.events[0].kind, AssignmentEvent::Kind::Accepted);
  a = res.assignment;
  for (RoundNum r = 11; r < 16; ++r) {
    a = activate_reassignments(a, row(r, {idle(), idle(), idle(), idle()}), 4).assignment;
    EXPECT_EQ(a.instance_of(ClientId{0}), I1) << r;
  }
  res = activate_reassignments(a, row(16, {idle(), idle(), idle(), idle()}), 4);
  EXPECT_EQ(res.assignment.instance_of(ClientId{0}), InstanceId{4});
  EXPECT_EQ(res.events.at(0).kind, AssignmentEvent::Kind::Activated);
  EXPECT_EQ(res.assignment.count(InstanceId{4}), 2u);
}

TEST(ActivateReassignments, LaterChangeWins) {
  auto a = ClientAssignment::round_robin(12, 4);  // {3, 3, 3, 3}, cap with 3 non-faulty is 4
  a = activate_reassignments(a, row(5, {Success{InstanceChange{ClientId{0}, I2, 11}}, idle(), idle(), idle()}), 3).assignment;
  a = activate_reassignments(a, row(6, {idle(), Success{InstanceChange{ClientId{0}, I3, 12}}, idle(), idle()}), 3).assignment;
  EXPECT_EQ(a.pending().at(ClientId{0}).target, I3);
  for (RoundNum r = 7; r <= 12; ++r) {
    a = activate_reassignments(a, row(r, {idle(), idle(), idle(), idle()}), 3).assignment;
    EXPECT_EQ(a.instance_of(ClientId{0}), r < 12 ? I1 : I3) << r;
  }
  EXPECT_EQ(a.counts(), (std::vector<std::uint32_t>{2, 3, 4, 3}));
}

TEST(ActivateReassignments, ChangeToFullInstanceIsRejected) {
  auto a = ClientAssignment::round_robin(8, 4);  // cap 2 everywhere already reached
  const auto res = activate_reassignments(a, row(5, {Success{InstanceChange{ClientId{0}, I2, 11}}, idle(), idle(), idle()}), 4);
  EXPECT_EQ(res.events.at(0).kind, AssignmentEvent::Kind::Rejected);
  EXPECT_TRUE(res.assignment.pending().empty());
}

TEST(ActivateReassignments, FailedTargetRowMakesChangeStale) {
  auto a = ClientAssignment::round_robin(8, 4);
  a.move(ClientId{3}, I1);
  a = activate_reassignments(a, row(10, {Success{InstanceChange{ClientId{0}, InstanceId{4}, 16}}, idle(), idle(), idle()}), 4)
          .assignment;
  const auto res = activate_reassignments(a, row(16, {idle(), idle(), idle(), Fail{}}), 4);
  EXPECT_EQ(res.events.at(0).kind, AssignmentEvent::Kind::Stale);
  EXPECT_EQ(res.assignment.instance_of(ClientId{0}), I1);
}

TEST(MatchReplies, NeedsFPlusOneDistinctReplicas) {
  ReplyTracker tr;
  const ClientId c{1};
  tr.add(c, 1, ReplicaId{0}, noop(5));
  EXPECT_FALSE(match_replies(tr, c, 1, 1));
  tr.add(c, 1, ReplicaId{0}, noop(5));
  EXPECT_FALSE(match_replies(tr, c, 1, 1));
  tr.add(c, 1, ReplicaId{2}, noop(5));
  EXPECT_EQ(match_replies(tr, c, 1, 1), noop(5));
}

TEST(MatchReplies, MinorityForgeryCannotConfirm) {
  ReplyTracker tr;
  const ClientId c{0};
  tr.add(c, 3, ReplicaId{3}, noop(99));
  tr.add(c, 3, ReplicaId{0}, noop(1));
  EXPECT_FALSE(match_replies(tr, c, 3, 1));
  tr.add(c, 3, ReplicaId{1}, noop(1));
  EXPECT_EQ(match_replies(tr, c, 3, 1), noop(1));
}

TEST(MatchReplies, TwoQuorumsIsALogicError) {
  ReplyTracker tr;
  const ClientId c{0};
  for (std::uint32_t r = 0; r < 4; ++r) tr.add(c, 1, ReplicaId{r}, noop(r < 2 ? 1 : 2));
  EXPECT_THROW(match_replies(tr, c, 1, 1), ConflictingQuorums);
}
