#pragma once

// Primary bookkeeping per replica: unified replacement, reconsideration of
// failed replicas, in-place recovery backoff, and the agreement invariant check.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pwc/core_model.hpp"

namespace pwc {

struct FailureRecord {
  ReplicaId replica;
  bool soft = false;
  friend bool operator==(const FailureRecord&, const FailureRecord&) = default;
};

struct PrimaryState {
  std::set<ReplicaId> failed;
  std::vector<ReplicaId> primary;            // primary[i-1] leads instance i
  std::vector<FailureRecord> failure_order;  // insertion order of `failed`

  ReplicaId of(InstanceId i) const { return primary.at(i.value - 1); }

  friend bool operator==(const PrimaryState&, const PrimaryState&) = default;
};

class NoReplicaAvailable : public std::runtime_error {
 public:
  explicit NoReplicaAvailable(InstanceId i)
      : std::runtime_error("no replica available to lead instance " + std::to_string(i.value)), instance(i) {}
  InstanceId instance;
};

/// Instance i starts out led by replica i-1.
inline PrimaryState init_primaries(const ServiceConfig& cfg) {
  PrimaryState st;
  st.primary.reserve(cfg.m);
  for (std::uint32_t i = 0; i < cfg.m; ++i) st.primary.emplace_back(i);
  return st;
}

inline std::optional<ReplicaId> choose_replacement(const PrimaryState& st, std::uint32_t n) {
  for (std::uint32_t r = 0; r < n; ++r) {
    const ReplicaId id{r};
    if (st.failed.contains(id)) continue;
    if (std::find(st.primary.begin(), st.primary.end(), id) != st.primary.end()) continue;
    return id;
  }
  return std::nullopt;
}

struct FailedPrimary {
  ReplicaId replica;
  bool soft = false;
};

struct ReplacementResult {
  PrimaryState state;
  std::map<InstanceId, ReplicaId> reassignments;
};

/// Marks the failed primaries and hands each failing instance, in ascending
/// instance order, the lowest-id replica that is neither failed nor leading.
/// Throws NoReplicaAvailable when the candidate set runs dry.
inline ReplacementResult apply_round_failures(PrimaryState st, const std::set<InstanceId>& fail,
                                              const std::map<InstanceId, FailedPrimary>& failed_primaries,
                                              std::uint32_t n) {
  ReplacementResult res;
  for (const auto& i : fail) {
    const auto& fp = failed_primaries.at(i);
    if (st.failed.insert(fp.replica).second) st.failure_order.push_back({fp.replica, fp.soft});
  }
  for (const auto& i : fail) {
    const auto pick = choose_replacement(st, n);
    if (!pick) throw NoReplicaAvailable(i);
    st.primary.at(i.value - 1) = *pick;
    res.reassignments[i] = *pick;
  }
  res.state = std::move(st);
  return res;
}

/// Makes the earliest failed replica eligible again. Soft failures are
/// reintroduced before hard ones.
inline PrimaryState reconsider_failed(PrimaryState st) {
  if (st.failure_order.empty()) return st;
  auto it = std::find_if(st.failure_order.begin(), st.failure_order.end(), [](const auto& r) { return r.soft; });
  if (it == st.failure_order.end()) it = st.failure_order.begin();
  st.failed.erase(it->replica);
  st.failure_order.erase(it);
  return st;
}

struct ReplacementOutcome {
  ReplacementResult result;
  std::uint32_t reconsidered = 0;  // replicas reintroduced to make room
};

// Driver used by replicas: retries after reconsidering failed replicas. If even
// an empty failed set leaves no candidate (m == n), the instance keeps its primary.
inline ReplacementOutcome replace_with_reconsideration(const PrimaryState& st, const std::set<InstanceId>& fail,
                                                       const std::map<InstanceId, FailedPrimary>& failed_primaries,
                                                       std::uint32_t n) {
  ReplacementOutcome out;
  PrimaryState marked = st;
  for (const auto& i : fail) {
    const auto& fp = failed_primaries.at(i);
    if (marked.failed.insert(fp.replica).second) marked.failure_order.push_back({fp.replica, fp.soft});
  }
  for (const auto& i : fail) {
    auto pick = choose_replacement(marked, n);
    while (!pick && !marked.failure_order.empty()) {
      marked = reconsider_failed(std::move(marked));
      ++out.reconsidered;
      pick = choose_replacement(marked, n);
    }
    if (!pick) {
      // FIXME: only reachable with m == n; in-place retry of the old primary.
      pick = marked.of(i);
      marked.failed.erase(*pick);
    }
    marked.primary.at(i.value - 1) = *pick;
    out.result.reassignments[i] = *pick;
  }
  out.result.state = std::move(marked);
  return out;
}

enum class InvariantKind { FailedSet, Injectivity, Agreement };

inline const char* to_string(InvariantKind k) {
  switch (k) {
    case InvariantKind::FailedSet: return "failed-set";
    case InvariantKind::Injectivity: return "injectivity";
    case InvariantKind::Agreement: return "agreement";
  }
  return "?";
}

struct InvariantViolation {
  RoundNum round = 0;
  InvariantKind kind = InvariantKind::Agreement;
  std::string detail;
};

namespace detail {
inline std::string describe(const std::set<ReplicaId>& s) {
  std::ostringstream os;
  os << "{";
  bool first = true;
  for (const auto& r : s) {
    os << (first ? "" : ",") << r;
    first = false;
  }
  os << "}";
  return os.str();
}
}  // namespace detail

/// Checks the three replacement invariants over snapshots of every non-faulty
/// replica at one round boundary. `expected_failed` is the union of primaries of
/// all Fail decisions so far; pass nullopt once reconsideration has happened.
inline std::vector<InvariantViolation> check_invariant(const std::map<ReplicaId, PrimaryState>& states,
                                                       const std::set<ReplicaId>& faulty, RoundNum round,
                                                       const std::optional<std::set<ReplicaId>>& expected_failed) {
  std::vector<InvariantViolation> out;
  auto report = [&](InvariantKind k, std::string d) { out.push_back({round, k, std::move(d)}); };

  for (const auto& [rid, st] : states) {
    const std::string who = "replica " + std::to_string(rid.value);
    if (expected_failed && st.failed != *expected_failed)
      report(InvariantKind::FailedSet,
             who + " failed=" + detail::describe(st.failed) + " expected " + detail::describe(*expected_failed));
    std::set<ReplicaId> seen;
    for (std::size_t k = 0; k < st.primary.size(); ++k) {
      const auto p = st.primary[k];
      if (!seen.insert(p).second)
        report(InvariantKind::Injectivity, who + " maps two instances to " + std::to_string(p.value));
      if (st.failed.contains(p))
        report(InvariantKind::Injectivity,
               who + " instance " + std::to_string(k + 1) + " led by failed " + std::to_string(p.value));
    }
    for (const auto& r : st.failed)
      if (!faulty.contains(r))
        report(InvariantKind::Agreement, who + " lists non-faulty replica " + std::to_string(r.value) + " as failed");
  }
  if (!states.empty()) {
    const auto& [first_id, first] = *states.begin();
    for (const auto& [rid, st] : states) {
      if (st.primary != first.primary)
        report(InvariantKind::Agreement, "primary maps of replicas " + std::to_string(first_id.value) + " and " +
                                             std::to_string(rid.value) + " differ");
      if (st.failed != first.failed)
        report(InvariantKind::Agreement, "failed sets of replicas " + std::to_string(first_id.value) + " and " +
                                             std::to_string(rid.value) + " differ");
    }
  }
  return out;
}

struct InstanceBackoff {
  RoundNum delay = 1;
  RoundNum next_retry = 0;
  bool retrying = false;  // a failure is awaiting its first post-retry success
  friend bool operator==(const InstanceBackoff&, const InstanceBackoff&) = default;
};

/// Per-instance exponential backoff for in-place recovery, in rounds.
struct BackoffState {
  RoundNum initial_delay = 2;
  std::vector<InstanceBackoff> per_instance;

  static BackoffState create(std::uint32_t m, RoundNum initial_delay) {
    BackoffState b;
    b.initial_delay = initial_delay;
    b.per_instance.assign(m, InstanceBackoff{initial_delay, 0, false});
    return b;
  }
  const InstanceBackoff& of(InstanceId i) const { return per_instance.at(i.value - 1); }

  friend bool operator==(const BackoffState&, const BackoffState&) = default;
};

inline BackoffState next_retry(BackoffState bo, InstanceId instance, RoundNum failed_at) {
  auto& s = bo.per_instance.at(instance.value - 1);
  s.next_retry = failed_at + s.delay;
  s.delay *= 2;
  s.retrying = true;
  return bo;
}

/// Success at or after the retry round resets the delay.
inline BackoffState record_success(BackoffState bo, InstanceId instance, RoundNum round) {
  auto& s = bo.per_instance.at(instance.value - 1);
  if (s.retrying && round >= s.next_retry) {
    s.delay = bo.initial_delay;
    s.retrying = false;
  }
  return bo;
}

}  // namespace pwc
