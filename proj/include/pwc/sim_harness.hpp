#pragma once

// Seeded discrete-event simulation binding instances, per-replica round
// tables, primary management, execution and clients.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <variant>
#include <vector>

#include "pwc/client_manager.hpp"
#include "pwc/core_model.hpp"
#include "pwc/instance_engine.hpp"
#include "pwc/ordering.hpp"
#include "pwc/primary_mgmt.hpp"
#include "pwc/waitfree_scheduler.hpp"

namespace pwc {

struct FaultEvent {
  ReplicaId replica;
  SimTime at{0};
  BehaviorProfile profile = Honest{};
};

struct OperationTemplate {
  enum class Kind { Noop, Transfer, Ring };
  Kind kind = Kind::Noop;
  AccountId from;
  AccountId to;
  Amount threshold = 0;
  Amount value = 1;
  std::vector<AccountId> accounts;  // Ring: client c, seqno s moves accounts[(c+s)%k] -> accounts[(c+s+1)%k]
};

inline Operation make_operation(const OperationTemplate& t, ClientId c, std::uint64_t seqno) {
  switch (t.kind) {
    case OperationTemplate::Kind::Noop: return Noop{seqno};
    case OperationTemplate::Kind::Transfer: return Transfer{t.from, t.to, t.threshold, t.value};
    case OperationTemplate::Kind::Ring: {
      const auto k = t.accounts.size();
      const auto a = (c.value + seqno) % k;
      return Transfer{t.accounts[a], t.accounts[(a + 1) % k], t.threshold, t.value};
    }
  }
  return Noop{seqno};
}

struct ClientWorkload {
  std::uint64_t requests = 0;
  Duration interarrival = micros(100);
  SimTime start{0};
  OperationTemplate op;
};

struct Workload {
  ClientWorkload defaults;
  std::map<ClientId, ClientWorkload> per_client;
  RoundNum patience_rounds = 20;  // rounds without confirmation before an instance change

  const ClientWorkload& of(ClientId c) const {
    auto it = per_client.find(c);
    return it == per_client.end() ? defaults : it->second;
  }
};

struct Scenario {
  std::string id = "scenario";
  ServiceConfig config;
  bool soft_failures = true;
  bool instance_changes = true;  // clients may switch instances (in-place recovery only)
  std::vector<FaultEvent> faults;
  Workload workload;
  LedgerState ledger;
  Duration duration = micros(5000);
  Duration drain_limit = micros(50000);
  bool record_trace = false;
};

class ScenarioError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline std::set<ReplicaId> faulty_replicas(const Scenario& sc) {
  std::set<ReplicaId> out;
  for (const auto& e : sc.faults)
    if (!std::holds_alternative<Honest>(e.profile)) out.insert(e.replica);
  return out;
}

inline Scenario validate_scenario(Scenario sc) {
  sc.config = validate_config(sc.config);
  const auto& cfg = sc.config;
  if (sc.duration <= Duration::zero()) throw ScenarioError("run length must be positive");
  std::set<std::pair<ReplicaId, SimTime::rep>> seen;
  for (const auto& e : sc.faults) {
    if (e.replica.value >= cfg.n) throw ScenarioError("fault targets unknown replica " + std::to_string(e.replica.value));
    if (e.at < SimTime::zero()) throw ScenarioError("fault time must be non-negative");
    if (!seen.insert({e.replica, e.at.count()}).second)
      throw ScenarioError("contradictory fault events for replica " + std::to_string(e.replica.value) + " at " +
                          std::to_string(to_micros(e.at)) + "us");
    if (const auto* t = std::get_if<Throttle>(&e.profile); t && !(t->factor >= 1.0))
      throw ScenarioError("throttle factor must be >= 1");
    if (const auto* ig = std::get_if<IgnoreClients>(&e.profile))
      for (const auto& c : ig->clients)
        if (c.value >= cfg.clients) throw ScenarioError("ignore set names unknown client " + std::to_string(c.value));
  }
  if (faulty_replicas(sc).size() > cfg.f)
    throw ScenarioError("more misbehaving replicas than f=" + std::to_string(cfg.f));
  for (const auto& [c, w] : sc.workload.per_client)
    if (c.value >= cfg.clients) throw ScenarioError("workload names unknown client " + std::to_string(c.value));
  auto check_template = [](const OperationTemplate& t) {
    if (t.kind == OperationTemplate::Kind::Ring && t.accounts.size() < 2)
      throw ScenarioError("ring workload needs at least two accounts");
  };
  check_template(sc.workload.defaults.op);
  for (const auto& [c, w] : sc.workload.per_client) check_template(w.op);
  if (sc.workload.patience_rounds < 1) throw ScenarioError("patience must be at least one round");
  return sc;
}

/// Adds a behaviour switch and revalidates.
inline Scenario inject(Scenario sc, FaultEvent event) {
  if (auto* c = std::get_if<Crash>(&event.profile)) c->since = event.at;
  sc.faults.push_back(std::move(event));
  return validate_scenario(std::move(sc));
}

struct TraceRecord {
  SimTime time{0};
  std::int64_t replica = -1;  // -1: instance-level event
  std::uint32_t instance = 0;
  RoundNum round = 0;
  std::string kind;
};

struct RunViolation {
  SimTime time{0};
  RoundNum round = 0;
  std::string kind;
  std::string detail;
};

struct Metrics {
  std::uint64_t total_decisions = 0;  // Success decisions within the run length
  std::vector<double> decisions_per_sec;
  double throughput_dps = 0;
  std::map<std::int64_t, std::uint64_t> delay_histogram_us;  // accept->execute, 1us buckets, all replicas
  Duration max_delay{0};
  Duration p99_delay{0};
  std::vector<RoundNum> max_backlog;                  // per instance
  std::vector<std::array<RoundNum, 3>> backlog_thirds;  // per instance, max backlog in each third of the run
  std::uint64_t primary_replacements = 0;
  std::vector<RunViolation> violations;
  std::vector<std::vector<Duration>> confirmation_latency;  // per client
  std::uint64_t issued_requests = 0;
  std::uint64_t confirmed_requests = 0;
  std::uint64_t decided_client_requests = 0;
  Duration delay_bound{0};
  std::uint64_t delay_bound_exceeded = 0;
  RoundNum backlog_bound = 0;
  std::uint64_t backlog_bound_exceeded = 0;
  Duration liveness_bound{0};
  std::uint64_t liveness_bound_exceeded = 0;
  std::uint32_t load_cap = 0;
  std::uint32_t max_clients_per_instance = 0;  // over the whole run, reference replica
  std::vector<std::uint32_t> peak_client_counts;
  std::vector<std::uint32_t> final_client_counts;
  std::uint64_t instance_changes_activated = 0;
  bool aborted = false;
  SimTime end_time{0};

  RoundNum overall_max_backlog() const {
    RoundNum m = 0;
    for (auto b : max_backlog) m = std::max(m, b);
    return m;
  }
  RoundNum max_backlog_in_third(std::size_t third) const {
    RoundNum m = 0;
    for (const auto& t : backlog_thirds) m = std::max(m, t[third]);
    return m;
  }
};

struct DecisionRecord {
  InstanceId instance;
  RoundNum round = 0;
  SimTime time{0};
  Decision decision;
  ReplicaId primary;
};

struct ExecutionRecord {
  ClientId client;
  std::uint64_t seqno = 0;
  InstanceId instance;
  RoundNum round = 0;
  SimTime accepted{0};
  SimTime executed{0};
};

struct ControlRecord {
  InstanceId instance;
  RoundNum failed_round = 0;
  SimTime failed_at{0};
  bool soft = false;
  ReplicaId old_primary;
  ReplicaId new_primary;
  RoundNum resume_round = 0;
  SimTime resumed_at{-1};  // -1 when the run ended first
};

struct LogComparison {
  bool equal = true;
  std::optional<ReplicaId> replica;  // first replica that differs from the reference
  RoundNum round = 0;
  std::uint32_t position = 0;
};

/// Equal iff every non-faulty replica's log matches element-wise; otherwise the
/// first differing (round, position).
inline LogComparison compare_logs(const std::map<ReplicaId, ExecutionLog>& logs, const std::set<ReplicaId>& faulty) {
  const ExecutionLog* ref = nullptr;
  for (const auto& [rid, log] : logs) {
    if (faulty.contains(rid)) continue;
    if (!ref) {
      ref = &log;
      continue;
    }
    const auto n = std::min(ref->size(), log.size());
    for (std::size_t k = 0; k < n; ++k)
      if (!(log[k] == (*ref)[k])) return {false, rid, log[k].round, log[k].position};
    if (log.size() != ref->size()) {
      const auto& longer = log.size() > ref->size() ? log : *ref;
      return {false, rid, longer[n].round, longer[n].position};
    }
  }
  return {};
}

struct RunResult {
  Metrics metrics;
  std::map<ReplicaId, ExecutionLog> logs;
  std::set<ReplicaId> faulty;
  LogComparison comparison;
  std::vector<DecisionRecord> decisions;
  std::vector<ExecutionRecord> executions;  // reference replica
  std::vector<ControlRecord> control;
  std::vector<TraceRecord> trace;
  std::vector<TraceRecord> diagnostic;  // trace window before an abort
  bool all_confirmed = false;

  bool bounds_held() const {
    return metrics.delay_bound_exceeded == 0 && metrics.backlog_bound_exceeded == 0 &&
           metrics.liveness_bound_exceeded == 0;
  }
  bool passed() const {
    return metrics.violations.empty() && !metrics.aborted && comparison.equal && all_confirmed && bounds_held();
  }
};

/// Constructive confirmation bound for one request. Unified replacement: one
/// detection, one transfer, a skip window and the queue ahead of the request.
/// In-place recovery: patience, the 2*sigma activation lag, two skip windows and
/// two queue waits (the change itself and the moved request).
inline Duration liveness_bound(const Scenario& sc) {
  const auto& cfg = sc.config;
  const auto& t = cfg.timing;
  const auto base = t.base_round_time.count();
  auto rounds_of = [base](Duration d) { return static_cast<std::uint64_t>((d.count() + base - 1) / base); };
  Duration min_gap = sc.workload.defaults.interarrival;
  for (const auto& [c, w] : sc.workload.per_client) min_gap = std::min(min_gap, w.interarrival);
  const std::uint64_t per_instance = (cfg.clients + cfg.m - 1) / cfg.m;
  const std::uint64_t window = rounds_of(t.failure_detection_timeout + t.control_transfer_time) +
                               cfg.sigma + cfg.epsilon;
  const std::uint64_t backlog_per_client =
      1 + (min_gap.count() > 0 ? static_cast<std::uint64_t>(window * base / min_gap.count()) : window);
  const std::uint64_t queue = per_instance * backlog_per_client;
  std::uint64_t rounds = 0;
  if (cfg.mode == FailureMode::UnifiedReplacement) {
    rounds = window + queue + 1;
  } else {
    const std::uint64_t cap = std::max<std::uint64_t>(load_cap(cfg.clients, cfg.nonfaulty_count()), per_instance);
    rounds = sc.workload.patience_rounds + 2 * cfg.sigma + 2 * (cfg.sigma + cfg.epsilon) +
             rounds_of(t.failure_detection_timeout) + 2 * cap * backlog_per_client + 1;
  }
  return t.base_round_time * static_cast<Duration::rep>(rounds) + t.execution_time * static_cast<Duration::rep>(cfg.m);
}

class Simulator {
 public:
  explicit Simulator(Scenario sc) : sc_(validate_scenario(std::move(sc))), cfg_(sc_.config), rng_(cfg_.seed) {}

  RunResult run() {
    setup();
    for (std::uint32_t k = 0; k < cfg_.m; ++k) start_round(k, SimTime::zero());
    while (!events_.empty()) {
      Event ev = events_.top();
      events_.pop();
      if (ev.at < now_) {
        violation("clock", 0, "event scheduled in the past");
        break;
      }
      now_ = ev.at;
      try {
        dispatch(ev);
      } catch (const std::exception& e) {
        violation("exception", 0, e.what());
      }
      if (result_.metrics.aborted) break;
      maybe_stop();
    }
    return finish();
  }

 private:
  enum class EventKind : std::uint8_t { Profile, Outcome, Deliver, Reply, Resume, SoftCheck, ClientIssue, Patience };

  struct ReplyPayload {
    ClientId client;
    std::uint64_t seqno;
    ExecutionResult result;
  };

  struct Event {
    SimTime at{0};
    EventKind kind{};
    std::uint32_t replica = 0;
    std::uint32_t instance = 0;
    std::uint64_t seq = 0;
    std::uint64_t a = 0;  // epoch, round, client or seqno depending on kind
    std::uint64_t b = 0;
    std::optional<ReplyPayload> reply;
    std::optional<BehaviorProfile> profile;
  };

  static Event make_event(SimTime at, EventKind kind, std::uint32_t replica = 0, std::uint32_t instance = 0,
                          std::uint64_t a = 0, std::uint64_t b = 0) {
    Event e;
    e.at = at;
    e.kind = kind;
    e.replica = replica;
    e.instance = instance;
    e.a = a;
    e.b = b;
    return e;
  }

  struct Later {
    bool operator()(const Event& x, const Event& y) const {
      return std::tie(x.at, x.kind, x.replica, x.instance, x.seq) > std::tie(y.at, y.kind, y.replica, y.instance, y.seq);
    }
  };

  enum class Phase { Running, Waiting };

  struct InstanceRuntime {
    InstanceReplica ir;
    Phase phase = Phase::Running;
    std::uint64_t epoch = 0;
    SimTime round_start{0};
    std::optional<ScheduledOutcome> outcome;
    RoundNum failed_round = 0;
    RoundNum resume_round = 0;
    bool ready_known = false;
    std::map<ReplicaId, std::pair<ReplicaId, SimTime>> instructions;
    std::size_t control_index = 0;
  };

  struct ReplicaRuntime {
    ReplicaId id;
    RoundTable table{1};
    PrimaryState primaries;
    BackoffState backoff;
    std::vector<RoundNum> skip_target;  // in-place recovery: Skip rows may be filled up to here
    LedgerState ledger;
    ExecutionLog log;
    ClientAssignment assignment;
    SimTime exec_free{0};
    std::vector<SimTime> last_delivery;
    std::map<std::pair<ClientId, std::uint64_t>, SimTime> accepted;
  };

  struct ClientRuntime {
    ClientId id;
    std::uint64_t issued = 0;
    std::map<std::uint64_t, std::pair<SimTime, Request>> outstanding;
    std::vector<Request> held;  // issued while an instance change is in flight
    std::optional<std::uint64_t> barrier;  // held requests wait until every seqno below this is confirmed
    bool changing = false;
    InstanceId change_target;
    std::uint32_t attempt = 0;
    std::uint64_t change_epoch = 0;
    ReplyTracker tracker;
  };

  struct RoundCheck {
    std::optional<RoundDecisionSet> row;
    std::map<ReplicaId, PrimaryState> states;
    std::uint32_t released = 0;
  };

  // ---------------------------------------------------------------- setup

  void setup() {
    result_.faulty = faulty_replicas(sc_);
    for (std::uint32_t r = 0; r < cfg_.n; ++r)
      if (!result_.faulty.contains(ReplicaId{r})) nonfaulty_.push_back(ReplicaId{r});
    reference_ = nonfaulty_.front();
    profile_.assign(cfg_.n, Honest{});

    const auto initial = init_primaries(cfg_);
    for (std::uint32_t k = 0; k < cfg_.m; ++k) {
      InstanceRuntime in;
      in.ir = make_instance(InstanceId{k + 1}, initial.primary[k], cfg_.sigma);
      instances_.push_back(std::move(in));
    }
    backoff_ = BackoffState::create(cfg_.m, cfg_.timing.initial_backoff);

    replica_index_.assign(cfg_.n, -1);
    for (const auto& rid : nonfaulty_) {
      ReplicaRuntime rep;
      rep.id = rid;
      rep.table = RoundTable(cfg_.m);
      rep.primaries = initial;
      rep.backoff = backoff_;
      rep.skip_target.assign(cfg_.m, 0);
      rep.ledger = sc_.ledger;
      rep.assignment = ClientAssignment::round_robin(cfg_.clients, cfg_.m);
      rep.last_delivery.assign(cfg_.m, SimTime::zero());
      replica_index_[rid.value] = static_cast<int>(replicas_.size());
      replicas_.push_back(std::move(rep));
    }

    for (std::uint32_t c = 0; c < cfg_.clients; ++c) {
      ClientRuntime cl;
      cl.id = ClientId{c};
      clients_.push_back(std::move(cl));
      route_.push_back(assign_client(ClientId{c}, cfg_.m));
      const auto& w = sc_.workload.of(ClientId{c});
      total_requests_ += w.requests;
      if (w.requests > 0) push(make_event(w.start, EventKind::ClientIssue, 0, 0, c));
    }

    for (const auto& f : sc_.faults) {
      Event e = make_event(f.at, EventKind::Profile, f.replica.value);
      e.profile = f.profile;
      if (auto* c = std::get_if<Crash>(&*e.profile)) c->since = f.at;
      push(std::move(e));
    }

    auto& mx = result_.metrics;
    mx.decisions_per_sec.assign(cfg_.m, 0.0);
    mx.max_backlog.assign(cfg_.m, 0);
    mx.backlog_thirds.assign(cfg_.m, {0, 0, 0});
    mx.confirmation_latency.assign(cfg_.clients, {});
    mx.delay_bound = delay_bound(cfg_);
    // Replicas see other instances' decisions up to one jitter late.
    const auto base = cfg_.timing.base_round_time.count();
    mx.backlog_bound = cfg_.sigma + cfg_.epsilon +
                       static_cast<RoundNum>((cfg_.timing.latency_jitter.count() + base - 1) / base);
    mx.liveness_bound = liveness_bound(sc_);
    mx.load_cap = load_cap(cfg_.clients, cfg_.nonfaulty_count());
    mx.peak_client_counts = replicas_.front().assignment.counts();
    for (auto c : mx.peak_client_counts) mx.max_clients_per_instance = std::max(mx.max_clients_per_instance, c);
    truth_.assign(cfg_.m, {});
  }

  // ---------------------------------------------------------------- plumbing

  void push(Event e) {
    e.seq = seq_++;
    events_.push(std::move(e));
  }

  void trace(std::int64_t replica, std::uint32_t instance, RoundNum round, const char* kind) {
    TraceRecord t{now_, replica, instance, round, kind};
    if (sc_.record_trace) result_.trace.push_back(t);
    window_.push_back(std::move(t));
    if (window_.size() > 64) window_.pop_front();
  }

  void violation(std::string kind, RoundNum round, std::string detail) {
    result_.metrics.violations.push_back({now_, round, std::move(kind), std::move(detail)});
    result_.metrics.aborted = true;
    result_.diagnostic.assign(window_.begin(), window_.end());
  }

  Duration jitter() {
    const auto j = cfg_.timing.latency_jitter.count();
    if (j <= 0) return Duration::zero();
    return Duration{static_cast<Duration::rep>(rng_() % static_cast<std::uint64_t>(j + 1))};
  }

  const BehaviorProfile& profile_of(ReplicaId r) const { return profile_.at(r.value); }

  ReplicaRuntime& replica(ReplicaId r) { return replicas_.at(static_cast<std::size_t>(replica_index_.at(r.value))); }

  void dispatch(const Event& ev) {
    switch (ev.kind) {
      case EventKind::Profile: on_profile(ReplicaId{ev.replica}, *ev.profile); break;
      case EventKind::Outcome: on_outcome(ev.instance, ev.a); break;
      case EventKind::Deliver: on_deliver(ReplicaId{ev.replica}, ev.instance, ev.a); break;
      case EventKind::Reply: on_reply(ReplicaId{ev.replica}, *ev.reply); break;
      case EventKind::Resume: try_resume_all(); break;
      case EventKind::SoftCheck: on_soft_check(); break;
      case EventKind::ClientIssue: on_issue(static_cast<std::uint32_t>(ev.a)); break;
      case EventKind::Patience: on_patience(static_cast<std::uint32_t>(ev.a), ev.b); break;
    }
  }

  // ---------------------------------------------------------------- instances

  void start_round(std::uint32_t k, SimTime at) {
    auto& in = instances_[k];
    in.phase = Phase::Running;
    in.round_start = at;
    ++in.epoch;
    in.outcome = step_round(in.ir, profile_of(in.ir.current_primary), at, cfg_.timing);
    push(make_event(in.outcome->at, EventKind::Outcome, 0, k, in.epoch));
    if (sc_.soft_failures && soft_check_at_ != at) {
      soft_check_at_ = at;
      push(make_event(at, EventKind::SoftCheck));
    }
    try_resume_all();
  }

  void return_proposal(const std::optional<QueuedValue>& proposal) {
    if (!proposal) return;
    if (const auto* r = std::get_if<Request>(&proposal->value)) {
      instances_[route_[r->client.value].value - 1].ir.pending.push_front(*proposal);
    } else if (const auto* c = std::get_if<InstanceChange>(&proposal->value)) {
      instances_[c->target.value - 1].ir.pending.push_front(*proposal);
    }
  }

  void on_outcome(std::uint32_t k, std::uint64_t epoch) {
    auto& in = instances_[k];
    if (in.phase != Phase::Running || in.epoch != epoch) return;
    resolve(k, in.outcome->decision);
  }

  void resolve(std::uint32_t k, const Decision& d) {
    auto& in = instances_[k];
    const InstanceId id{k + 1};
    const RoundNum r = in.ir.current_round;
    const ReplicaId leader = in.ir.current_primary;
    truth_[k][r] = d;
    if (is_fail(d)) fail_leaders_[{k, r}] = leader;
    result_.decisions.push_back({id, r, now_, d, leader});

    for (const auto& rid : nonfaulty_) {
      auto& rep = replica(rid);
      SimTime t = std::max(now_ + jitter(), rep.last_delivery[k]);
      rep.last_delivery[k] = t;
      push(make_event(t, EventKind::Deliver, rid.value, k, r));
    }

    if (const auto* s = std::get_if<Success>(&d)) {
      trace(-1, id.value, r, "decide");
      if (now_ <= sc_.duration) {
        ++result_.metrics.total_decisions;
        result_.metrics.decisions_per_sec[k] += 1;
      }
      if (const auto* req = std::get_if<Request>(&s->value)) {
        decided_.insert({req->client, req->seqno});
        ++result_.metrics.decided_client_requests;
        // Colluding faulty replicas answer early with the same wrong result.
        for (const auto& fr : result_.faulty) {
          Event e = make_event(now_, EventKind::Reply, fr.value, k);
          e.reply = ReplyPayload{req->client, req->seqno, {ExecutionResult::Kind::Rejected, 0, 0, 0xbad}};
          push(std::move(e));
        }
      }
      if (cfg_.mode == FailureMode::InPlaceRecovery) backoff_ = record_success(backoff_, id, r);
      in.outcome.reset();
      in.ir.current_round = r + 1;
      if (!stopping_) start_round(k, now_);
      return;
    }

    const bool soft = std::get<Fail>(d).soft;
    trace(-1, id.value, r, soft ? "soft_fail" : "fail");
    if (in.outcome) return_proposal(in.outcome->proposal);
    in.outcome.reset();
    in.phase = Phase::Waiting;
    in.failed_round = r;
    in.resume_round = r + cfg_.epsilon;
    in.ready_known = false;
    in.instructions.clear();
    ControlRecord rec{id, r, now_, soft, leader, leader, 0, SimTime{-1}};
    if (cfg_.mode == FailureMode::InPlaceRecovery) {
      backoff_ = next_retry(backoff_, id, r);
      in.resume_round = std::max(in.resume_round, backoff_.of(id).next_retry);
      transfer_control(in.ir, leader, now_, cfg_.timing);
      in.ready_known = true;
      push(make_event(in.ir.ready_at, EventKind::Resume, 0, k));
      ++result_.metrics.primary_replacements;
    }
    rec.resume_round = in.resume_round;
    in.control_index = result_.control.size();
    result_.control.push_back(rec);
  }

  std::optional<RoundNum> lead_excluding(std::uint32_t k) const {
    std::optional<RoundNum> lead;
    for (std::uint32_t j = 0; j < cfg_.m; ++j) {
      if (j == k || instances_[j].phase != Phase::Running) continue;
      lead = std::max(lead.value_or(0), instances_[j].ir.current_round);
    }
    return lead;
  }

  // A resumed instance never starts ahead of the most advanced running one.
  void try_resume_all() {
    if (resuming_ || stopping_) return;
    resuming_ = true;
    for (bool progressed = true; progressed;) {
      progressed = false;
      for (std::uint32_t k = 0; k < cfg_.m; ++k) {
        auto& in = instances_[k];
        if (in.phase != Phase::Waiting || !in.ready_known || now_ < in.ir.ready_at) continue;
        const auto lead = lead_excluding(k);
        if (lead && *lead < in.resume_round) continue;
        in.ir.current_round = in.resume_round;
        auto& rec = result_.control[in.control_index];
        rec.resumed_at = now_;
        rec.new_primary = in.ir.current_primary;
        trace(-1, k + 1, in.resume_round, "resume");
        resuming_ = false;
        start_round(k, now_);
        resuming_ = true;
        progressed = true;
      }
    }
    resuming_ = false;
  }

  void on_soft_check() {
    if (stopping_) return;
    std::vector<std::optional<RoundNum>> working(cfg_.m);
    for (std::uint32_t k = 0; k < cfg_.m; ++k)
      if (instances_[k].phase == Phase::Running) working[k] = instances_[k].ir.current_round;
    for (const auto& sf : detect_soft_failures(std::span<const std::optional<RoundNum>>(working), cfg_.sigma)) {
      auto& in = instances_[sf.instance.value - 1];
      if (in.phase != Phase::Running || in.ir.current_round != sf.round) continue;
      ++in.epoch;
      resolve(sf.instance.value - 1, Fail{true});
    }
  }

  void on_profile(ReplicaId r, const BehaviorProfile& p) {
    profile_.at(r.value) = p;
    trace(r.value, 0, 0, profile_name(p));
    if (!std::holds_alternative<Crash>(p)) return;
    // Rounds in flight under the crashed primary now end in a detection timeout.
    for (std::uint32_t k = 0; k < cfg_.m; ++k) {
      auto& in = instances_[k];
      if (in.phase != Phase::Running || in.ir.current_primary != r || !in.outcome) continue;
      if (is_fail(in.outcome->decision)) continue;
      if (in.ir.current_round < std::get<Crash>(p).at_round) continue;
      return_proposal(in.outcome->proposal);
      ++in.epoch;
      in.outcome = step_round(in.ir, p, in.round_start, cfg_.timing);
      push(make_event(in.outcome->at, EventKind::Outcome, 0, k, in.epoch));
    }
  }

  // Unified replacement: the instance resumes once every non-faulty replica has
  // instructed the same new primary.
  void instruct(std::uint32_t k, RoundNum failed_round, ReplicaId new_primary, ReplicaId from) {
    auto& in = instances_[k];
    if (in.phase != Phase::Waiting || in.failed_round != failed_round || in.ready_known) {
      violation("transfer", failed_round,
                "unexpected transfer instruction for instance " + std::to_string(k + 1) + " from replica " +
                    std::to_string(from.value));
      return;
    }
    in.instructions[from] = {new_primary, now_};
    if (in.instructions.size() < nonfaulty_.size()) return;
    SimTime last{0};
    for (const auto& [rid, instr] : in.instructions) {
      if (instr.first != new_primary) {
        violation("agreement", failed_round, "replicas instructed different primaries for instance " +
                                                 std::to_string(k + 1));
        return;
      }
      last = std::max(last, instr.second);
    }
    transfer_control(in.ir, new_primary, last, cfg_.timing);
    in.ready_known = true;
    ++result_.metrics.primary_replacements;
    trace(-1, k + 1, failed_round, "transfer");
    push(make_event(in.ir.ready_at, EventKind::Resume, 0, k));
  }

  // ---------------------------------------------------------------- replicas

  void on_deliver(ReplicaId rid, std::uint32_t k, RoundNum r) {
    auto& rep = replica(rid);
    const InstanceId id{k + 1};
    const Decision& d = truth_[k].at(r);
    if (r > rep.table.cursor(id)) {
      if (r > rep.skip_target[k]) {
        violation("divergence", r, "replica " + std::to_string(rid.value) + " got round " + std::to_string(r) +
                                       " of instance " + std::to_string(id.value) + " outside its skip window");
        return;
      }
      rep.table.skip_until(id, r);
    }
    rep.table.record(id, r, d);

    if (const auto* s = std::get_if<Success>(&d)) {
      if (const auto* req = std::get_if<Request>(&s->value)) rep.accepted[{req->client, req->seqno}] = now_;
      if (cfg_.mode == FailureMode::InPlaceRecovery) rep.backoff = record_success(rep.backoff, id, r);
    } else if (is_fail(d)) {
      rep.table.apply_skip(id, r, cfg_.epsilon);
      if (cfg_.mode == FailureMode::InPlaceRecovery) {
        rep.backoff = next_retry(rep.backoff, id, r);
        rep.skip_target[k] = std::max(r + cfg_.epsilon, rep.backoff.of(id).next_retry);
      }
    }
    if (cfg_.mode == FailureMode::InPlaceRecovery) fill_backoff_windows(rep);

    for (auto& row : rep.table.ready_rounds()) {
      process_row(rep, row);
      if (result_.metrics.aborted) return;
    }
    record_backlog(rep);
  }

  // Rounds forfeited beyond the skip size are filled lazily, never past the
  // most advanced other instance.
  void fill_backoff_windows(ReplicaRuntime& rep) {
    const auto& cur = rep.table.cursors();
    for (std::uint32_t k = 0; k < cfg_.m; ++k) {
      if (rep.skip_target[k] <= cur[k]) continue;
      RoundNum lead = 0;
      for (std::uint32_t j = 0; j < cfg_.m; ++j)
        if (j != k) lead = std::max(lead, cur[j]);
      const RoundNum until = std::min(rep.skip_target[k], lead);
      if (until > cur[k]) rep.table.skip_until(InstanceId{k + 1}, until);
    }
  }

  void record_backlog(const ReplicaRuntime& rep) {
    auto& mx = result_.metrics;
    std::size_t third = 2;
    if (now_ * 3 < sc_.duration)
      third = 0;
    else if (now_ * 3 < sc_.duration * 2)
      third = 1;
    for (std::uint32_t k = 0; k < cfg_.m; ++k) {
      const RoundNum b = rep.table.backlog(InstanceId{k + 1});
      mx.max_backlog[k] = std::max(mx.max_backlog[k], b);
      if (now_ <= sc_.duration) mx.backlog_thirds[k][third] = std::max(mx.backlog_thirds[k][third], b);
      if (sc_.soft_failures && b > mx.backlog_bound) ++mx.backlog_bound_exceeded;
    }
  }

  void process_row(ReplicaRuntime& rep, const RoundDecisionSet& row) {
    auto& check = round_checks_[row.round];
    if (!check.row)
      check.row = row;
    else if (!(*check.row == row)) {
      violation("divergence", row.round, "replica " + std::to_string(rep.id.value) + " released a different row");
      return;
    }
    trace(rep.id.value, 0, row.round, "execute");

    const auto part = partition_decisions(row);
    if (cfg_.mode == FailureMode::UnifiedReplacement) {
      if (!part.fail.empty()) {
        std::map<InstanceId, FailedPrimary> fp;
        for (const auto& i : part.fail) fp[i] = {rep.primaries.of(i), std::get<Fail>(row.at(i)).soft};
        auto out = replace_with_reconsideration(rep.primaries, part.fail, fp, cfg_.n);
        if (out.reconsidered > 0) reconsidered_ = true;
        rep.primaries = std::move(out.result.state);
        for (const auto& [i, p] : out.result.reassignments) {
          instruct(i.value - 1, row.round, p, rep.id);
          if (result_.metrics.aborted) return;
        }
      }
      check.states[rep.id] = rep.primaries;
    }
    if (++check.released == nonfaulty_.size()) {
      close_round_check(row.round, check);
      round_checks_.erase(row.round);
      if (result_.metrics.aborted) return;
    }

    std::map<InstanceId, Request> requests;
    for (const auto& [i, v] : part.succ)
      if (const auto* req = std::get_if<Request>(&v)) requests.emplace(i, *req);
    const auto ordered = execution_order(requests);
    auto [ledger, replies] = execute_round(std::move(rep.ledger), ordered);
    rep.ledger = std::move(ledger);
    const bool is_ref = rep.id == reference_;
    for (std::uint32_t pos = 0; pos < ordered.size(); ++pos) {
      const auto& req = ordered[pos];
      rep.log.push_back({row.round, pos, req.digest, replies[pos].result});
      const SimTime start = std::max(now_, rep.exec_free);
      const SimTime done = start + cfg_.timing.execution_time;
      rep.exec_free = done;
      const auto key = std::make_pair(req.client, req.seqno);
      const SimTime accepted = rep.accepted.at(key);
      rep.accepted.erase(key);
      record_delay(done - accepted);
      if (is_ref) {
        InstanceId from{};
        for (const auto& [i, r] : requests)
          if (r.digest == req.digest) from = i;
        result_.executions.push_back({req.client, req.seqno, from, row.round, accepted, done});
      }
      Event e = make_event(done, EventKind::Reply, rep.id.value);
      e.reply = ReplyPayload{req.client, req.seqno, replies[pos].result};
      push(std::move(e));
    }

    auto act = activate_reassignments(std::move(rep.assignment), row, cfg_.nonfaulty_count());
    rep.assignment = std::move(act.assignment);
    if (is_ref) {
      const auto& counts = rep.assignment.counts();
      for (std::size_t k = 0; k < counts.size(); ++k) {
        auto& peak = result_.metrics.peak_client_counts[k];
        peak = std::max(peak, counts[k]);
        result_.metrics.max_clients_per_instance = std::max(result_.metrics.max_clients_per_instance, peak);
      }
      for (const auto& ev : act.events) on_assignment_event(ev);
    }
  }

  void close_round_check(RoundNum round, const RoundCheck& check) {
    for (const auto& i : partition_decisions(*check.row).fail) expected_failed_.insert(fail_leaders_.at({i.value - 1, round}));
    if (cfg_.mode != FailureMode::UnifiedReplacement) return;
    std::optional<std::set<ReplicaId>> expected;
    if (!reconsidered_) expected = expected_failed_;
    for (auto& v : check_invariant(check.states, result_.faulty, round, expected)) {
      violation(std::string("invariant:") + to_string(v.kind), v.round, v.detail);
    }
  }

  void record_delay(Duration d) {
    auto& mx = result_.metrics;
    mx.max_delay = std::max(mx.max_delay, d);
    ++mx.delay_histogram_us[(d.count() + 999) / 1000];
    if (sc_.soft_failures && d > mx.delay_bound) ++mx.delay_bound_exceeded;
  }

  // ---------------------------------------------------------------- clients

  void on_issue(std::uint32_t c) {
    if (stopping_) return;
    auto& cl = clients_[c];
    const auto& w = sc_.workload.of(cl.id);
    const std::uint64_t seqno = cl.issued++;
    ++result_.metrics.issued_requests;
    Request req = make_request(cl.id, seqno, make_operation(w.op, cl.id, seqno));
    cl.outstanding[seqno] = {now_, req};
    if (cl.changing || cl.barrier)
      cl.held.push_back(req);
    else
      enqueue_value(instances_[route_[c].value - 1].ir, req, now_);
    if (cl.issued < w.requests) push(make_event(now_ + w.interarrival, EventKind::ClientIssue, 0, 0, c));
    if (changes_enabled()) push(make_event(now_ + patience(), EventKind::Patience, 0, 0, c, seqno));
  }

  bool changes_enabled() const { return sc_.instance_changes && cfg_.mode == FailureMode::InPlaceRecovery && cfg_.m > 1; }

  Duration patience() const {
    return cfg_.timing.base_round_time * static_cast<Duration::rep>(sc_.workload.patience_rounds);
  }

  static constexpr std::uint64_t kChangeTimer = ~std::uint64_t{0};

  void on_patience(std::uint32_t c, std::uint64_t seqno) {
    if (stopping_) return;
    auto& cl = clients_[c];
    if (seqno == kChangeTimer) return;  // handled through change_epoch below
    if (!cl.outstanding.contains(seqno)) return;
    if (decided_.contains({cl.id, seqno}) || cl.changing || cl.barrier) {
      push(make_event(now_ + patience(), EventKind::Patience, 0, 0, c, seqno));
      return;
    }
    initiate_change(c);
  }

  void initiate_change(std::uint32_t c) {
    auto& cl = clients_[c];
    const auto& ref = replica(reference_);
    const InstanceId current = route_[c];
    for (std::uint32_t tries = 0; tries + 1 < cfg_.m; ++tries) {
      ++cl.attempt;
      InstanceId target{(current.value - 1 + cl.attempt) % cfg_.m + 1};
      if (target == current) {
        ++cl.attempt;
        target = InstanceId{(current.value - 1 + cl.attempt) % cfg_.m + 1};
      }
      auto& tin = instances_[target.value - 1];
      const auto resp = request_instance_change(cl.id, target, ref.assignment, tin.ir.current_round, cfg_.sigma,
                                                cfg_.nonfaulty_count());
      if (std::holds_alternative<ChangeRejected>(resp)) continue;
      enqueue_value(tin.ir, std::get<InstanceChange>(resp), now_);
      cl.changing = true;
      cl.change_target = target;
      trace(-1, target.value, tin.ir.current_round, "change_request");
      return;
    }
    // Everyone is at capacity right now; try again after another patience period.
    if (!cl.outstanding.empty()) push(make_event(now_ + patience(), EventKind::Patience, 0, 0, c, cl.outstanding.begin()->first));
  }

  void on_assignment_event(const AssignmentEvent& ev) {
    auto& cl = clients_[ev.client.value];
    switch (ev.kind) {
      case AssignmentEvent::Kind::Accepted: break;
      case AssignmentEvent::Kind::Activated:
        ++result_.metrics.instance_changes_activated;
        reroute(ev.client, ev.target);
        break;
      case AssignmentEvent::Kind::Rejected:
      case AssignmentEvent::Kind::Stale:
        if (cl.changing && cl.change_target == ev.target) {
          cl.changing = false;
          if (!cl.barrier) release_held(ev.client);
          if (!stopping_ && has_undecided(cl)) initiate_change(ev.client.value);
        }
        break;
    }
  }

  bool has_undecided(const ClientRuntime& cl) const {
    for (const auto& [s, _] : cl.outstanding)
      if (!decided_.contains({cl.id, s})) return true;
    return false;
  }

  void release_held(ClientId c) {
    auto& cl = clients_[c.value];
    auto& ir = instances_[route_[c.value].value - 1].ir;
    for (auto& req : cl.held) enqueue_value(ir, req, now_);
    cl.held.clear();
  }

  void reroute(ClientId c, InstanceId target) {
    auto& cl = clients_[c.value];
    const InstanceId old = route_[c.value];
    route_[c.value] = target;
    cl.changing = false;
    cl.attempt = 0;
    if (old != target) {
      auto& from = instances_[old.value - 1].ir.pending;
      auto& to = instances_[target.value - 1].ir.pending;
      for (auto it = from.begin(); it != from.end();) {
        const auto* req = std::get_if<Request>(&it->value);
        if (req && req->client == c) {
          to.push_back({it->value, now_});
          it = from.erase(it);
        } else {
          ++it;
        }
      }
    }
    if (!cl.held.empty()) {
      cl.barrier = cl.held.front().seqno;
      maybe_lift_barrier(c);
    }
  }

  void maybe_lift_barrier(ClientId c) {
    auto& cl = clients_[c.value];
    if (!cl.barrier) return;
    if (!cl.outstanding.empty() && cl.outstanding.begin()->first < *cl.barrier) return;
    cl.barrier.reset();
    release_held(c);
  }

  void on_reply(ReplicaId from, const ReplyPayload& rp) {
    auto& cl = clients_[rp.client.value];
    auto it = cl.outstanding.find(rp.seqno);
    if (it == cl.outstanding.end()) return;
    cl.tracker.add(rp.client, rp.seqno, from, rp.result);
    const auto confirmed = match_replies(cl.tracker, rp.client, rp.seqno, cfg_.f);
    if (!confirmed) return;
    const Duration latency = now_ - it->second.first;
    auto& mx = result_.metrics;
    mx.confirmation_latency[rp.client.value].push_back(latency);
    if (sc_.soft_failures && latency > mx.liveness_bound) ++mx.liveness_bound_exceeded;
    ++mx.confirmed_requests;
    cl.tracker.forget(rp.client, rp.seqno);
    cl.outstanding.erase(it);
    maybe_lift_barrier(rp.client);
  }

  // ---------------------------------------------------------------- end of run

  void maybe_stop() {
    if (stopping_) return;
    if (now_ < sc_.duration) return;
    const bool drained = result_.metrics.confirmed_requests == total_requests_;
    if (drained || now_ >= sc_.duration + sc_.drain_limit) {
      stopping_ = true;
      trace(-1, 0, 0, "stop");
    }
  }

  RunResult finish() {
    auto& mx = result_.metrics;
    mx.end_time = now_;
    const double secs = std::chrono::duration<double>(sc_.duration).count();
    for (auto& d : mx.decisions_per_sec) d /= secs;
    mx.throughput_dps = static_cast<double>(mx.total_decisions) / secs;

    std::uint64_t total = 0;
    for (const auto& [_, n] : mx.delay_histogram_us) total += n;
    std::uint64_t seen = 0;
    for (const auto& [us, n] : mx.delay_histogram_us) {
      seen += n;
      if (seen * 100 >= total * 99) {
        mx.p99_delay = micros(static_cast<double>(us));
        break;
      }
    }
    mx.final_client_counts = replica(reference_).assignment.counts();

    for (auto& rep : replicas_) result_.logs[rep.id] = rep.log;
    result_.comparison = compare_logs(result_.logs, result_.faulty);
    if (!result_.comparison.equal && !mx.aborted)
      mx.violations.push_back({now_, result_.comparison.round, "divergence", "execution logs differ"});
    result_.all_confirmed = mx.confirmed_requests == total_requests_;
    if (!mx.aborted && result_.all_confirmed && mx.confirmed_requests != mx.decided_client_requests)
      mx.violations.push_back({now_, 0, "conservation",
                               "confirmed " + std::to_string(mx.confirmed_requests) + " != decided " +
                                   std::to_string(mx.decided_client_requests)});
    return std::move(result_);
  }

  Scenario sc_;
  const ServiceConfig& cfg_;
  std::mt19937_64 rng_;
  std::priority_queue<Event, std::vector<Event>, Later> events_;
  std::uint64_t seq_ = 0;
  SimTime now_{0};
  bool stopping_ = false;
  bool resuming_ = false;
  std::optional<SimTime> soft_check_at_;

  std::vector<ReplicaId> nonfaulty_;
  ReplicaId reference_;
  std::vector<BehaviorProfile> profile_;
  std::vector<InstanceRuntime> instances_;
  BackoffState backoff_;
  std::vector<ReplicaRuntime> replicas_;
  std::vector<int> replica_index_;
  std::vector<ClientRuntime> clients_;
  std::vector<InstanceId> route_;
  std::uint64_t total_requests_ = 0;

  std::vector<std::map<RoundNum, Decision>> truth_;
  std::map<std::pair<std::uint32_t, RoundNum>, ReplicaId> fail_leaders_;
  std::set<std::pair<ClientId, std::uint64_t>> decided_;
  std::map<RoundNum, RoundCheck> round_checks_;
  std::set<ReplicaId> expected_failed_;
  bool reconsidered_ = false;

  std::deque<TraceRecord> window_;
  RunResult result_;
};

inline RunResult run(const Scenario& sc) { return Simulator(sc).run(); }

}  // namespace pwc
