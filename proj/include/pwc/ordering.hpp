#pragma once

// Deterministic per-round execution order and the account ledger that makes
// the order observable.

#include <cstdint>
#include <map>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pwc/core_model.hpp"

namespace pwc {

inline std::uint64_t factorial(std::uint32_t k) {
  if (k > kMaxInstances) throw std::out_of_range("factorial: k=" + std::to_string(k) + " exceeds 20");
  std::uint64_t acc = 1;
  for (std::uint32_t i = 2; i <= k; ++i) acc *= i;
  return acc;
}

/// Maps index in [0, |S|!) to a permutation of S. The element S[index / (|S|-1)!]
/// goes last and the remainder permutes what is left, recursively.
template <typename T>
std::vector<T> permute_index(std::span<const T> s, std::uint64_t index) {
  const auto k = static_cast<std::uint32_t>(s.size());
  if (k == 0 || k > kMaxInstances) throw std::out_of_range("permute_index: |S| must be in [1, 20]");
  if (index >= factorial(k)) throw std::out_of_range("permute_index: index out of range");

  std::vector<T> remaining(s.begin(), s.end());
  std::vector<T> out(k);
  for (std::uint32_t len = k; len > 1; --len) {
    const std::uint64_t block = factorial(len - 1);
    const auto q = static_cast<std::size_t>(index / block);
    index %= block;
    out[len - 1] = remaining[q];
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(q));
  }
  out[0] = remaining.front();
  return out;
}

template <typename T>
std::vector<T> permute_index(const std::vector<T>& s, std::uint64_t index) {
  return permute_index(std::span<const T>(s), index);
}

/// First 8 bytes (big-endian) of SHA-256 over the concatenated request digests.
inline std::uint64_t round_digest(std::span<const Request> ordered) {
  std::vector<std::uint8_t> buf;
  buf.reserve(ordered.size() * 32);
  for (const auto& r : ordered) buf.insert(buf.end(), r.digest.begin(), r.digest.end());
  const Digest h = sha256(buf);
  return read_u64_be(h);
}

inline std::vector<Request> execution_order(const std::map<InstanceId, Request>& succ) {
  if (succ.empty()) return {};
  std::vector<Request> s;
  s.reserve(succ.size());
  for (const auto& [id, req] : succ) s.push_back(req);  // map iterates in instance order
  const std::uint64_t idx = round_digest(s) % factorial(static_cast<std::uint32_t>(s.size()));
  return permute_index(std::span<const Request>(s), idx);
}

struct LedgerState {
  std::map<AccountId, Amount> balances;

  Amount amount(const AccountId& a) const {
    auto it = balances.find(a);
    return it == balances.end() ? 0 : it->second;
  }
  Amount total() const {
    Amount t = 0;
    for (const auto& [_, v] : balances) t += v;
    return t;
  }

  friend bool operator==(const LedgerState&, const LedgerState&) = default;
};

struct ExecutionResult {
  enum class Kind : std::uint8_t { Applied, Rejected, Noop };
  Kind kind = Kind::Noop;
  Amount from_balance = 0;  // Applied: balances after the transfer
  Amount to_balance = 0;
  std::uint64_t tag = 0;    // Noop: echoed tag

  friend bool operator==(const ExecutionResult&, const ExecutionResult&) = default;
};

inline std::string to_string(const ExecutionResult& r) {
  switch (r.kind) {
    case ExecutionResult::Kind::Applied:
      return "applied:" + std::to_string(r.from_balance) + ":" + std::to_string(r.to_balance);
    case ExecutionResult::Kind::Rejected: return "rejected";
    case ExecutionResult::Kind::Noop: return "noop:" + std::to_string(r.tag);
  }
  return "?";
}

struct ClientReply {
  ClientId client;
  std::uint64_t seqno = 0;
  ExecutionResult result;

  friend bool operator==(const ClientReply&, const ClientReply&) = default;
};

// Transfer runs only when amount(from) > threshold and the withdrawal keeps the
// balance non-negative; unknown accounts read as 0.
inline ExecutionResult apply_operation(LedgerState& state, const Operation& op) {
  if (const auto* n = std::get_if<Noop>(&op)) return {ExecutionResult::Kind::Noop, 0, 0, n->tag};
  const auto& t = std::get<Transfer>(op);
  const Amount have = state.amount(t.from);
  if (!(have > t.threshold) || have < t.value) return {ExecutionResult::Kind::Rejected, 0, 0, 0};
  state.balances[t.from] = have - t.value;
  state.balances[t.to] = state.amount(t.to) + t.value;
  return {ExecutionResult::Kind::Applied, state.amount(t.from), state.amount(t.to), 0};
}

inline std::pair<LedgerState, std::vector<ClientReply>> execute_round(LedgerState state,
                                                                      std::span<const Request> ordered) {
  std::vector<ClientReply> replies;
  replies.reserve(ordered.size());
  for (const auto& r : ordered) replies.push_back({r.client, r.seqno, apply_operation(state, r.payload)});
  return {std::move(state), std::move(replies)};
}

struct LogEntry {
  RoundNum round = 0;
  std::uint32_t position = 0;
  Digest digest{};
  ExecutionResult result;

  friend bool operator==(const LogEntry&, const LogEntry&) = default;
};

using ExecutionLog = std::vector<LogEntry>;

inline std::ostream& operator<<(std::ostream& os, const LogEntry& e) {
  return os << e.round << "," << e.position << "," << to_hex(e.digest) << "," << to_string(e.result);
}

}  // namespace pwc
