#pragma once

// Client-to-instance assignment, instance changes, and reply quorums.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "pwc/core_model.hpp"
#include "pwc/ordering.hpp"

namespace pwc {

/// Round-robin: client c goes to instance (c mod m) + 1.
inline InstanceId assign_client(ClientId c, std::uint32_t m) { return InstanceId{c.value % m + 1}; }

inline std::uint32_t load_cap(std::uint32_t clients, std::uint32_t nonfaulty) {
  return (clients + nonfaulty - 1) / nonfaulty;
}

struct PendingChange {
  InstanceId target;
  RoundNum effective = 0;
  friend bool operator==(const PendingChange&, const PendingChange&) = default;
};

class ClientAssignment {
 public:
  ClientAssignment() = default;

  static ClientAssignment round_robin(std::uint32_t clients, std::uint32_t m) {
    ClientAssignment a;
    a.counts_.assign(m, 0);
    for (std::uint32_t c = 0; c < clients; ++c) {
      const auto i = assign_client(ClientId{c}, m);
      a.of_.push_back(i);
      ++a.counts_[i.value - 1];
    }
    return a;
  }

  std::uint32_t client_count() const { return static_cast<std::uint32_t>(of_.size()); }
  std::uint32_t instance_count() const { return static_cast<std::uint32_t>(counts_.size()); }
  InstanceId instance_of(ClientId c) const { return of_.at(c.value); }
  std::uint32_t count(InstanceId i) const { return counts_.at(i.value - 1); }
  const std::vector<std::uint32_t>& counts() const { return counts_; }
  const std::map<ClientId, PendingChange>& pending() const { return pending_; }

  /// Assigned clients plus changes already accepted towards i.
  std::uint32_t committed_count(InstanceId i) const {
    auto n = count(i);
    for (const auto& [c, p] : pending_)
      if (p.target == i && instance_of(c) != i) ++n;
    return n;
  }

  void add_pending(ClientId c, PendingChange p) { pending_[c] = p; }  // later change overwrites
  void drop_pending(ClientId c) { pending_.erase(c); }

  void move(ClientId c, InstanceId to) {
    auto& cur = of_.at(c.value);
    if (cur == to) return;
    --counts_.at(cur.value - 1);
    ++counts_.at(to.value - 1);
    cur = to;
  }

  friend bool operator==(const ClientAssignment&, const ClientAssignment&) = default;

 private:
  std::vector<InstanceId> of_;
  std::vector<std::uint32_t> counts_;
  std::map<ClientId, PendingChange> pending_;
};

struct ChangeRejected {
  std::uint32_t count = 0;
  std::uint32_t cap = 0;
};

using ChangeResponse = std::variant<InstanceChange, ChangeRejected>;

/// Accepts while the target holds fewer than ceil(|C| / |NF|) clients.
inline ChangeResponse request_instance_change(ClientId c, InstanceId target, const ClientAssignment& st,
                                              RoundNum decision_round, RoundNum sigma, std::uint32_t nonfaulty) {
  const auto cap = load_cap(st.client_count(), nonfaulty);
  const auto count = st.committed_count(target);
  if (count >= cap || st.instance_of(c) == target) return ChangeRejected{count, cap};
  return InstanceChange{c, target, decision_round + 2 * sigma};
}

struct AssignmentEvent {
  enum class Kind { Accepted, Rejected, Activated, Stale };
  Kind kind;
  ClientId client;
  InstanceId from;
  InstanceId target;
  RoundNum round = 0;  // executed round that produced the event
};

struct ActivationResult {
  ClientAssignment assignment;
  std::vector<AssignmentEvent> events;
};

/// Applies one executed round: registers decided instance changes (re-checking
/// the load cap deterministically) and flips every pending change whose
/// effective round is this one. A change whose target did not decide its
/// effective round successfully is stale and dropped.
inline ActivationResult activate_reassignments(ClientAssignment st, const RoundDecisionSet& executed,
                                               std::uint32_t nonfaulty) {
  ActivationResult out;
  const auto cap = load_cap(st.client_count(), nonfaulty);
  for (std::uint32_t k = 0; k < executed.instance_count(); ++k) {
    const auto* s = std::get_if<Success>(&executed.decisions[k]);
    if (!s) continue;
    const auto* change = std::get_if<InstanceChange>(&s->value);
    if (!change) continue;
    const auto from = st.instance_of(change->client);
    // An earlier pending change by the same client is superseded; do not count it.
    st.drop_pending(change->client);
    if (from == change->target || st.committed_count(change->target) >= cap) {
      out.events.push_back({AssignmentEvent::Kind::Rejected, change->client, from, change->target, executed.round});
      continue;
    }
    st.add_pending(change->client, {change->target, change->effective});
    out.events.push_back({AssignmentEvent::Kind::Accepted, change->client, from, change->target, executed.round});
  }
  std::vector<ClientId> due;
  for (const auto& [c, p] : st.pending())
    if (p.effective <= executed.round) due.push_back(c);
  for (const auto& c : due) {
    const auto p = st.pending().at(c);
    const auto from = st.instance_of(c);
    st.drop_pending(c);
    if (p.target.value > executed.instance_count() || !is_success(executed.at(p.target))) {
      out.events.push_back({AssignmentEvent::Kind::Stale, c, from, p.target, executed.round});
      continue;
    }
    st.move(c, p.target);
    out.events.push_back({AssignmentEvent::Kind::Activated, c, from, p.target, executed.round});
  }
  out.assignment = std::move(st);
  return out;
}

class ConflictingQuorums : public std::logic_error {
 public:
  explicit ConflictingQuorums(ClientId c, std::uint64_t seqno)
      : std::logic_error("two distinct results reached f+1 for client " + std::to_string(c.value) + " seqno " +
                         std::to_string(seqno)) {}
};

class ReplyTracker {
 public:
  /// At most one reply per replica per request; later ones are ignored.
  void add(ClientId c, std::uint64_t seqno, ReplicaId from, const ExecutionResult& r) {
    auto& v = replies_[{c, seqno}];
    if (std::any_of(v.begin(), v.end(), [&](const auto& e) { return e.first == from; })) return;
    v.emplace_back(from, r);
  }

  const std::vector<std::pair<ReplicaId, ExecutionResult>>& replies(ClientId c, std::uint64_t seqno) const {
    static const std::vector<std::pair<ReplicaId, ExecutionResult>> kEmpty;
    auto it = replies_.find({c, seqno});
    return it == replies_.end() ? kEmpty : it->second;
  }

  void forget(ClientId c, std::uint64_t seqno) { replies_.erase({c, seqno}); }

 private:
  std::map<std::pair<ClientId, std::uint64_t>, std::vector<std::pair<ReplicaId, ExecutionResult>>> replies_;
};

/// Confirmed once f+1 distinct replicas report the same result.
inline std::optional<ExecutionResult> match_replies(const ReplyTracker& tr, ClientId c, std::uint64_t seqno,
                                                    std::uint32_t f) {
  std::vector<std::pair<ExecutionResult, std::uint32_t>> tally;
  for (const auto& [replica, result] : tr.replies(c, seqno)) {
    auto it = std::find_if(tally.begin(), tally.end(), [&](const auto& t) { return t.first == result; });
    if (it == tally.end())
      tally.emplace_back(result, 1);
    else
      ++it->second;
  }
  std::optional<ExecutionResult> confirmed;
  for (const auto& [result, n] : tally) {
    if (n < f + 1) continue;
    if (confirmed) throw ConflictingQuorums(c, seqno);
    confirmed = result;
  }
  return confirmed;
}

}  // namespace pwc
