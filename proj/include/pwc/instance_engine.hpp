#pragma once

// Simulated black-box consensus instance. One decision per round, identical at
// every non-faulty replica; primary misbehaviour only ever shows up as Fail.

#include <algorithm>
#include <cmath>
#include <deque>
#include <optional>
#include <set>
#include <variant>

#include "pwc/core_model.hpp"

namespace pwc {

struct Honest {
  friend bool operator==(const Honest&, const Honest&) = default;
};
struct Crash {
  RoundNum at_round = 0;  // rounds below this are still led honestly
  SimTime since{0};       // when the primary stopped responding
  friend bool operator==(const Crash&, const Crash&) = default;
};
struct Throttle {
  double factor = 1.0;  // >= 1
  friend bool operator==(const Throttle&, const Throttle&) = default;
};
struct IgnoreClients {
  std::set<ClientId> clients;
  friend bool operator==(const IgnoreClients&, const IgnoreClients&) = default;
};

using BehaviorProfile = std::variant<Honest, Crash, Throttle, IgnoreClients>;

inline const char* profile_name(const BehaviorProfile& p) {
  static constexpr const char* kNames[] = {"honest", "crash", "throttle", "ignore_clients"};
  return kNames[p.index()];
}

struct QueuedValue {
  DecidedValue value;
  SimTime enqueued{0};
};

struct InstanceReplica {
  InstanceId instance;
  RoundNum current_round = 0;
  ReplicaId current_primary;
  std::deque<QueuedValue> pending;
  RoundNum change_lag = 0;  // 2 * sigma: rounds until a decided instance change takes effect
  SimTime term_start{0};    // when current_primary took control
  SimTime ready_at{0};      // no proposals before this
};

inline InstanceReplica make_instance(InstanceId id, ReplicaId primary, RoundNum sigma) {
  InstanceReplica ir;
  ir.instance = id;
  ir.current_primary = primary;
  ir.change_lag = 2 * sigma;
  return ir;
}

struct ScheduledOutcome {
  SimTime at{0};
  Decision decision;
  std::optional<QueuedValue> proposal;  // taken from the queue; returned to it on Fail
};

namespace detail {
inline std::optional<ClientId> value_client(const DecidedValue& v) {
  if (const auto* r = std::get_if<Request>(&v)) return r->client;
  if (const auto* c = std::get_if<InstanceChange>(&v)) return c->client;
  return std::nullopt;
}
}  // namespace detail

/// Schedules the outcome of round ir.current_round started at `now`. The chosen
/// proposal is removed from ir.pending.
inline ScheduledOutcome step_round(InstanceReplica& ir, const BehaviorProfile& profile, SimTime now,
                                   const TimingModel& timing) {
  if (const auto* c = std::get_if<Crash>(&profile); c && ir.current_round >= c->at_round)
    return {std::max(now, c->since) + timing.failure_detection_timeout, Fail{}, std::nullopt};

  Duration round_time = timing.base_round_time;
  if (const auto* t = std::get_if<Throttle>(&profile))
    round_time = Duration{static_cast<Duration::rep>(std::llround(static_cast<double>(round_time.count()) * t->factor))};

  const auto* ignore = std::get_if<IgnoreClients>(&profile);
  auto ignored = [&](const QueuedValue& q) {
    if (!ignore) return false;
    const auto c = detail::value_client(q.value);
    return c && ignore->clients.contains(*c);
  };

  // Ignored requests are held back; once one has waited a full detection
  // timeout under this primary the round is failed by the backups.
  if (ignore) {
    for (const auto& q : ir.pending) {
      if (!ignored(q)) continue;
      const SimTime deadline = std::max(q.enqueued, ir.term_start) + timing.failure_detection_timeout;
      if (deadline < now + round_time) return {std::max(deadline, now), Fail{}, std::nullopt};
      break;
    }
  }

  auto it = std::find_if(ir.pending.begin(), ir.pending.end(), [&](const QueuedValue& q) { return !ignored(q); });
  if (it == ir.pending.end()) return {now + round_time, Success{IdleProposal{}}, std::nullopt};

  QueuedValue chosen = *it;
  ir.pending.erase(it);
  if (auto* change = std::get_if<InstanceChange>(&chosen.value)) change->effective = ir.current_round + ir.change_lag;
  return {now + round_time, Success{chosen.value}, chosen};
}

/// Hands the instance to `new_primary`; it proposes again after the transfer time.
inline void transfer_control(InstanceReplica& ir, ReplicaId new_primary, SimTime now, const TimingModel& timing) {
  ir.current_primary = new_primary;
  ir.ready_at = now + timing.control_transfer_time;
  ir.term_start = ir.ready_at;
}

inline void enqueue_value(InstanceReplica& ir, DecidedValue v, SimTime now) {
  ir.pending.push_back({std::move(v), now});
}

}  // namespace pwc
