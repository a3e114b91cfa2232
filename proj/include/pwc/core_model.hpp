#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "pwc/operation.hpp"
#include "pwc/types.hpp"

namespace pwc {

enum class FailureMode { InPlaceRecovery, UnifiedReplacement };

inline const char* to_string(FailureMode m) {
  return m == FailureMode::InPlaceRecovery ? "in_place_recovery" : "unified_replacement";
}

/// Timing knobs of the simulated black-box instances.
struct TimingModel {
  Duration base_round_time = micros(10);
  Duration failure_detection_timeout = micros(500);
  Duration control_transfer_time = micros(100);
  Duration latency_jitter{0};       // uniform [0, jitter] per delivery
  Duration execution_time{0};       // per executed request
  RoundNum initial_backoff = 2;     // in-place recovery, in rounds

  friend bool operator==(const TimingModel&, const TimingModel&) = default;
};

struct ServiceConfig {
  std::uint32_t n = 4;
  std::uint32_t f = 1;
  std::uint32_t m = 1;
  std::uint32_t clients = 2;
  RoundNum sigma = 3;
  RoundNum epsilon = 0;  // 0 before validation means "use the default skip size"
  FailureMode mode = FailureMode::UnifiedReplacement;
  TimingModel timing{};
  std::uint64_t seed = 0;

  std::uint32_t nonfaulty_count() const { return n - f; }

  friend bool operator==(const ServiceConfig&, const ServiceConfig&) = default;
};

constexpr std::uint32_t kMaxInstances = 20;

enum class ConfigErrorCode {
  TooFewReplicas,
  TooManyInstances,
  FactorialOverflow,
  InvalidParameter,
};

inline const char* to_string(ConfigErrorCode c) {
  switch (c) {
    case ConfigErrorCode::TooFewReplicas: return "TooFewReplicas";
    case ConfigErrorCode::TooManyInstances: return "TooManyInstances";
    case ConfigErrorCode::FactorialOverflow: return "FactorialOverflow";
    case ConfigErrorCode::InvalidParameter: return "InvalidParameter";
  }
  return "?";
}

class ConfigError : public std::invalid_argument {
 public:
  ConfigError(ConfigErrorCode code, const std::string& what)
      : std::invalid_argument(std::string(to_string(code)) + ": " + what), code_(code) {}
  ConfigErrorCode code() const { return code_; }

 private:
  ConfigErrorCode code_;
};

/// Skip size used when a scenario does not set one: sigma plus the number of
/// healthy rounds that elapse while control is transferred. Delivery jitter
/// delays the hand-over too, so it counts as transfer time.
inline RoundNum default_skip_size(RoundNum sigma, const TimingModel& t) {
  const auto base = t.base_round_time.count();
  const auto transfer = t.control_transfer_time.count() + t.latency_jitter.count();
  return sigma + static_cast<RoundNum>((transfer + base - 1) / base);
}

inline ServiceConfig validate_config(ServiceConfig raw) {
  using C = ConfigErrorCode;
  if (raw.n <= 3 * raw.f)
    throw ConfigError(C::TooFewReplicas, "n=" + std::to_string(raw.n) + " must exceed 3f=" + std::to_string(3 * raw.f));
  if (raw.m < 1) throw ConfigError(C::InvalidParameter, "m must be at least 1");
  if (raw.m > raw.n)
    throw ConfigError(C::TooManyInstances, "m=" + std::to_string(raw.m) + " exceeds n=" + std::to_string(raw.n));
  if (raw.mode == FailureMode::UnifiedReplacement && raw.m > raw.n - raw.f)
    throw ConfigError(C::TooManyInstances, "unified replacement needs m <= n-f=" + std::to_string(raw.n - raw.f));
  if (raw.m > kMaxInstances)
    throw ConfigError(C::FactorialOverflow, "m=" + std::to_string(raw.m) + " exceeds 20 (m! must fit 64 bits)");
  if (raw.sigma < 1) throw ConfigError(C::InvalidParameter, "sigma must be at least 1");
  if (raw.clients <= raw.m)
    throw ConfigError(C::InvalidParameter, "clients=" + std::to_string(raw.clients) + " must exceed m");
  const auto& t = raw.timing;
  if (t.base_round_time <= Duration::zero() || t.failure_detection_timeout <= Duration::zero() ||
      t.control_transfer_time < Duration::zero() || t.latency_jitter < Duration::zero() ||
      t.execution_time < Duration::zero())
    throw ConfigError(C::InvalidParameter, "timing durations must be positive");
  if (t.failure_detection_timeout < t.base_round_time)
    throw ConfigError(C::InvalidParameter, "failure detection timeout must be >= base round time");
  if (t.initial_backoff < 1) throw ConfigError(C::InvalidParameter, "initial backoff must be at least 1 round");
  if (raw.epsilon == 0) raw.epsilon = default_skip_size(raw.sigma, t);
  return raw;
}

/// A client request. Construct through make_request so the digest matches the fields.
struct Request {
  ClientId client;
  std::uint64_t seqno = 0;
  Operation payload = Noop{};
  Digest digest{};

  friend bool operator==(const Request&, const Request&) = default;
};

// Canonical form: client id u64 BE, seqno u64 BE, canonical payload.
inline std::string canonical_bytes(ClientId client, std::uint64_t seqno, const Operation& op) {
  std::string out;
  put_u64_be(out, client.value);
  put_u64_be(out, seqno);
  append_canonical(out, op);
  return out;
}

inline Digest request_digest(ClientId client, std::uint64_t seqno, const Operation& op) {
  const auto bytes = canonical_bytes(client, seqno, op);
  return sha256({reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()});
}

inline Request make_request(ClientId client, std::uint64_t seqno, Operation op) {
  Request r{client, seqno, std::move(op), {}};
  r.digest = request_digest(r.client, r.seqno, r.payload);
  return r;
}

inline bool digest_consistent(const Request& r) { return r.digest == request_digest(r.client, r.seqno, r.payload); }

/// Consensus-carried petition to move `client` to `target`, live after round `effective` executes.
struct InstanceChange {
  ClientId client;
  InstanceId target;
  RoundNum effective = 0;

  friend bool operator==(const InstanceChange&, const InstanceChange&) = default;
};

/// Proposal of a primary with nothing queued. Keeps the round clock running
/// without counting as a client request.
struct IdleProposal {
  friend bool operator==(const IdleProposal&, const IdleProposal&) = default;
};

using DecidedValue = std::variant<Request, InstanceChange, IdleProposal>;

struct Success {
  DecidedValue value;
  friend bool operator==(const Success&, const Success&) = default;
};

struct Fail {
  bool soft = false;  // lag-induced (gap size exceeded) rather than a detected primary fault
  friend bool operator==(const Fail&, const Fail&) = default;
};

/// Round forfeited by an instance after a failure. Orders like Fail, never
/// triggers replacement or backoff.
struct Skip {
  friend bool operator==(const Skip&, const Skip&) = default;
};

using Decision = std::variant<Success, Fail, Skip>;

inline bool is_success(const Decision& d) { return std::holds_alternative<Success>(d); }
inline bool is_fail(const Decision& d) { return std::holds_alternative<Fail>(d); }
inline bool is_skip(const Decision& d) { return std::holds_alternative<Skip>(d); }

/// Decisions of all m instances for one round. decisions[i-1] belongs to instance i.
struct RoundDecisionSet {
  RoundNum round = 0;
  std::vector<Decision> decisions;

  std::uint32_t instance_count() const { return static_cast<std::uint32_t>(decisions.size()); }
  const Decision& at(InstanceId i) const { return decisions.at(i.value - 1); }

  friend bool operator==(const RoundDecisionSet&, const RoundDecisionSet&) = default;
};

struct DecisionPartition {
  std::map<InstanceId, DecidedValue> succ;
  std::set<InstanceId> fail;
};

inline DecisionPartition partition_decisions(const RoundDecisionSet& d) {
  DecisionPartition p;
  for (std::uint32_t k = 0; k < d.instance_count(); ++k) {
    const InstanceId id{k + 1};
    if (const auto* s = std::get_if<Success>(&d.decisions[k]))
      p.succ.emplace(id, s->value);
    else if (is_fail(d.decisions[k]))
      p.fail.insert(id);
  }
  return p;
}

inline std::ostream& operator<<(std::ostream& os, const Decision& d) {
  if (const auto* s = std::get_if<Success>(&d)) {
    if (const auto* r = std::get_if<Request>(&s->value)) return os << "Succ(" << r->client << "#" << r->seqno << ")";
    if (const auto* c = std::get_if<InstanceChange>(&s->value))
      return os << "Succ(change " << c->client << "->" << c->target << "@" << c->effective << ")";
    return os << "Succ(idle)";
  }
  if (const auto* f = std::get_if<Fail>(&d)) return os << (f->soft ? "Fail(soft)" : "Fail");
  return os << "Skip";
}

}  // namespace pwc
