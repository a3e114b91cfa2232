#pragma once

// Per-replica round table: instances decide ahead independently, lagging
// instances are soft-failed, failed instances forfeit rounds, and rounds are
// released for execution strictly in order once every instance has a decision.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pwc/core_model.hpp"

namespace pwc {

class SkipCollision : public std::logic_error {
 public:
  SkipCollision(InstanceId i, RoundNum r)
      : std::logic_error("skip collides with a decision of instance " + std::to_string(i.value) + " round " +
                         std::to_string(r)) {}
};

class RoundTable {
 public:
  explicit RoundTable(std::uint32_t m) : cursor_(m, 0) {}

  std::uint32_t instance_count() const { return static_cast<std::uint32_t>(cursor_.size()); }
  RoundNum cursor(InstanceId i) const { return cursor_.at(i.value - 1); }
  const std::vector<RoundNum>& cursors() const { return cursor_; }
  RoundNum next_unexecuted() const { return next_exec_; }
  std::optional<RoundNum> executed_up_to() const {
    return next_exec_ == 0 ? std::nullopt : std::optional<RoundNum>(next_exec_ - 1);
  }

  std::optional<Decision> decision(InstanceId i, RoundNum r) const {
    auto it = rows_.find(r);
    if (it == rows_.end()) return std::nullopt;
    return it->second.at(i.value - 1);
  }

  /// Records the decision of instance i for its cursor round and advances it.
  void record(InstanceId i, RoundNum r, Decision d) {
    auto& c = cursor_.at(i.value - 1);
    if (r != c)
      throw std::logic_error("instance " + std::to_string(i.value) + " decided round " + std::to_string(r) +
                             " but its cursor is " + std::to_string(c));
    put(i, r, std::move(d));
    ++c;
  }

  /// Skip for failed_round < r < failed_round + epsilon; cursor moves to failed_round + epsilon.
  void apply_skip(InstanceId i, RoundNum failed_round, RoundNum epsilon) {
    for (RoundNum r = failed_round + 1; r < failed_round + epsilon; ++r) {
      if (r < next_exec_ || decision(i, r)) throw SkipCollision(i, r);
      put(i, r, Skip{});
    }
    auto& c = cursor_.at(i.value - 1);
    c = std::max(c, failed_round + epsilon);
  }

  /// Fills Skip from the cursor up to (excluding) `until`.
  void skip_until(InstanceId i, RoundNum until) {
    auto& c = cursor_.at(i.value - 1);
    for (; c < until; ++c) {
      if (c < next_exec_ || decision(i, c)) throw SkipCollision(i, c);
      put(i, c, Skip{});
    }
  }

  /// Releases the maximal run of total rows after the executed prefix.
  std::vector<RoundDecisionSet> ready_rounds() {
    std::vector<RoundDecisionSet> out;
    for (auto it = rows_.begin(); it != rows_.end() && it->first == next_exec_;) {
      const auto& row = it->second;
      if (!std::all_of(row.begin(), row.end(), [](const auto& d) { return d.has_value(); })) break;
      RoundDecisionSet set{it->first, {}};
      set.decisions.reserve(row.size());
      for (const auto& d : row) set.decisions.push_back(*d);
      out.push_back(std::move(set));
      it = rows_.erase(it);
      ++next_exec_;
    }
    return out;
  }

  /// Rounds decided or skipped by instance i but not yet executed.
  RoundNum backlog(InstanceId i) const {
    const auto c = cursor(i);
    return c > next_exec_ ? c - next_exec_ : 0;
  }

 private:
  void put(InstanceId i, RoundNum r, Decision d) {
    auto& row = rows_[r];
    if (row.empty()) row.resize(cursor_.size());
    auto& slot = row.at(i.value - 1);
    if (slot) throw std::logic_error("round " + std::to_string(r) + " already decided");
    slot = std::move(d);
  }

  std::vector<RoundNum> cursor_;  // next round each instance decides
  std::map<RoundNum, std::vector<std::optional<Decision>>> rows_;
  RoundNum next_exec_ = 0;
};

struct SoftFailure {
  InstanceId instance;
  RoundNum round = 0;
  friend bool operator==(const SoftFailure&, const SoftFailure&) = default;
};

/// `working[i-1]` is the round instance i is working on, or nullopt when it is
/// not running. Instance i soft-fails on round r once a different instance is
/// working on round r + sigma or later.
inline std::vector<SoftFailure> detect_soft_failures(std::span<const std::optional<RoundNum>> working,
                                                     RoundNum sigma) {
  std::vector<SoftFailure> out;
  for (std::size_t i = 0; i < working.size(); ++i) {
    if (!working[i]) continue;
    for (std::size_t j = 0; j < working.size(); ++j) {
      if (j == i || !working[j]) continue;
      if (*working[j] >= *working[i] + sigma) {
        out.push_back({InstanceId{static_cast<std::uint32_t>(i + 1)}, *working[i]});
        break;
      }
    }
  }
  return out;
}

inline std::vector<SoftFailure> detect_soft_failures(const RoundTable& t, RoundNum sigma) {
  std::vector<std::optional<RoundNum>> working(t.cursors().begin(), t.cursors().end());
  return detect_soft_failures(std::span<const std::optional<RoundNum>>(working), sigma);
}

/// Upper bound on accept-to-execute delay while soft failures are enabled:
/// (sigma + epsilon) worst-case rounds, one control transfer, one round of execution.
inline Duration delay_bound(const ServiceConfig& cfg) {
  const auto& t = cfg.timing;
  const Duration worst = std::max(t.base_round_time, t.failure_detection_timeout);
  const auto rounds = static_cast<Duration::rep>(cfg.sigma + cfg.epsilon);
  return worst * rounds + t.control_transfer_time + t.execution_time * static_cast<Duration::rep>(cfg.m);
}

}  // namespace pwc
