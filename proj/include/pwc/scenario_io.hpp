#pragma once

// Scenario files (JSON, schema_version 1) and key=value overrides.

#include <charconv>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

#include "pwc/sim_harness.hpp"

namespace pwc {

inline constexpr int kScenarioSchemaVersion = 1;

/// Parse or schema error. `key` is a JSON pointer ("/faults/0/profile/kind");
/// line and column are set for syntax errors only.
class ScenarioParseError : public std::runtime_error {
 public:
  ScenarioParseError(std::string source, std::string key, std::string what, std::size_t line = 0,
                     std::size_t column = 0)
      : std::runtime_error(format(source, key, what, line, column)),
        source_(std::move(source)),
        key_(std::move(key)),
        line_(line),
        column_(column) {}

  const std::string& source() const { return source_; }
  const std::string& key() const { return key_; }
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  static std::string format(const std::string& source, const std::string& key, const std::string& what,
                            std::size_t line, std::size_t column) {
    std::ostringstream os;
    os << source;
    if (line > 0) os << ":" << line << ":" << column;
    if (!key.empty()) os << ": at " << key;
    os << ": " << what;
    return os.str();
  }

  std::string source_;
  std::string key_;
  std::size_t line_;
  std::size_t column_;
};

namespace scenario_detail {

using nlohmann::json;

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string& path, const std::string& what) const {
    throw ScenarioParseError(source_, path.empty() ? "/" : path, what);
  }

  void only_keys(const json& obj, const std::string& path, std::initializer_list<std::string_view> allowed) const {
    if (!obj.is_object()) fail(path, "expected an object");
    for (const auto& [k, v] : obj.items()) {
      bool ok = false;
      for (auto a : allowed) ok = ok || a == k;
      if (!ok) fail(path + "/" + k, "unknown key");
    }
  }

  template <typename T>
  T get(const json& obj, const std::string& path, const char* key, T fallback) const {
    auto it = obj.find(key);
    if (it == obj.end()) return fallback;
    return as<T>(*it, path + "/" + key);
  }

  template <typename T>
  T require(const json& obj, const std::string& path, const char* key) const {
    auto it = obj.find(key);
    if (it == obj.end()) fail(path + "/" + key, "missing required key");
    return as<T>(*it, path + "/" + key);
  }

  template <typename T>
  T as(const json& v, const std::string& path) const {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) fail(path, "expected true or false");
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) fail(path, "expected a string");
      return v.get<std::string>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) fail(path, "expected a number");
      return v.get<T>();
    } else {
      if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0))
        fail(path, "expected a non-negative integer");
      const auto u = v.get<std::uint64_t>();
      if (u > std::numeric_limits<T>::max()) fail(path, "value out of range");
      return static_cast<T>(u);
    }
  }

  Duration us(const json& obj, const std::string& path, const char* key, Duration fallback) const {
    auto it = obj.find(key);
    if (it == obj.end()) return fallback;
    const double v = as<double>(*it, path + "/" + key);
    if (v < 0) fail(path + "/" + key, "expected a non-negative duration");
    return micros(v);
  }

 private:
  std::string source_;
};

inline FailureMode parse_mode(const Reader& r, const std::string& s, const std::string& path) {
  if (s == "unified_replacement") return FailureMode::UnifiedReplacement;
  if (s == "in_place_recovery") return FailureMode::InPlaceRecovery;
  r.fail(path, "unknown mode '" + s + "' (expected unified_replacement or in_place_recovery)");
}

inline TimingModel parse_timing(const Reader& r, const json& j, const std::string& path) {
  r.only_keys(j, path,
              {"base_round_us", "failure_detection_us", "control_transfer_us", "latency_jitter_us", "execution_us",
               "initial_backoff_rounds"});
  TimingModel t;
  t.base_round_time = r.us(j, path, "base_round_us", t.base_round_time);
  t.failure_detection_timeout = r.us(j, path, "failure_detection_us", t.failure_detection_timeout);
  t.control_transfer_time = r.us(j, path, "control_transfer_us", t.control_transfer_time);
  t.latency_jitter = r.us(j, path, "latency_jitter_us", t.latency_jitter);
  t.execution_time = r.us(j, path, "execution_us", t.execution_time);
  t.initial_backoff = r.get<RoundNum>(j, path, "initial_backoff_rounds", t.initial_backoff);
  return t;
}

inline ServiceConfig parse_config(const Reader& r, const json& j, const std::string& path) {
  r.only_keys(j, path, {"n", "f", "m", "clients", "sigma", "epsilon", "mode", "seed", "timing"});
  ServiceConfig c;
  c.n = r.require<std::uint32_t>(j, path, "n");
  c.f = r.require<std::uint32_t>(j, path, "f");
  c.m = r.require<std::uint32_t>(j, path, "m");
  c.clients = r.require<std::uint32_t>(j, path, "clients");
  c.sigma = r.get<RoundNum>(j, path, "sigma", c.sigma);
  c.epsilon = r.get<RoundNum>(j, path, "epsilon", 0);
  if (j.contains("mode")) c.mode = parse_mode(r, r.as<std::string>(j["mode"], path + "/mode"), path + "/mode");
  c.seed = r.get<std::uint64_t>(j, path, "seed", c.seed);
  if (j.contains("timing")) c.timing = parse_timing(r, j["timing"], path + "/timing");
  return c;
}

inline BehaviorProfile parse_profile(const Reader& r, const json& j, const std::string& path) {
  if (!j.is_object()) r.fail(path, "expected an object");
  const auto kind = r.require<std::string>(j, path, "kind");
  if (kind == "honest") {
    r.only_keys(j, path, {"kind"});
    return Honest{};
  }
  if (kind == "crash") {
    r.only_keys(j, path, {"kind", "at_round"});
    return Crash{r.get<RoundNum>(j, path, "at_round", 0), SimTime{0}};
  }
  if (kind == "throttle") {
    r.only_keys(j, path, {"kind", "factor"});
    return Throttle{r.require<double>(j, path, "factor")};
  }
  if (kind == "ignore_clients") {
    r.only_keys(j, path, {"kind", "clients"});
    IgnoreClients ig;
    auto it = j.find("clients");
    if (it == j.end() || !it->is_array()) r.fail(path + "/clients", "expected an array of client ids");
    for (std::size_t k = 0; k < it->size(); ++k)
      ig.clients.insert(ClientId{r.as<std::uint32_t>((*it)[k], path + "/clients/" + std::to_string(k))});
    return ig;
  }
  r.fail(path + "/kind", "unknown profile '" + kind + "'");
}

inline OperationTemplate parse_operation(const Reader& r, const json& j, const std::string& path) {
  if (!j.is_object()) r.fail(path, "expected an object");
  OperationTemplate t;
  const auto kind = r.require<std::string>(j, path, "kind");
  if (kind == "noop") {
    r.only_keys(j, path, {"kind"});
    t.kind = OperationTemplate::Kind::Noop;
  } else if (kind == "transfer") {
    r.only_keys(j, path, {"kind", "from", "to", "threshold", "value"});
    t.kind = OperationTemplate::Kind::Transfer;
    t.from = r.require<std::string>(j, path, "from");
    t.to = r.require<std::string>(j, path, "to");
    t.threshold = r.get<Amount>(j, path, "threshold", 0);
    t.value = r.get<Amount>(j, path, "value", 1);
  } else if (kind == "ring") {
    r.only_keys(j, path, {"kind", "accounts", "threshold", "value"});
    t.kind = OperationTemplate::Kind::Ring;
    auto it = j.find("accounts");
    if (it == j.end() || !it->is_array()) r.fail(path + "/accounts", "expected an array of account names");
    for (std::size_t k = 0; k < it->size(); ++k)
      t.accounts.push_back(r.as<std::string>((*it)[k], path + "/accounts/" + std::to_string(k)));
    t.threshold = r.get<Amount>(j, path, "threshold", 0);
    t.value = r.get<Amount>(j, path, "value", 1);
  } else {
    r.fail(path + "/kind", "unknown operation '" + kind + "'");
  }
  return t;
}

inline ClientWorkload parse_client_workload(const Reader& r, const json& j, const std::string& path,
                                            const ClientWorkload& base) {
  r.only_keys(j, path, {"requests", "interarrival_us", "start_us", "operation"});
  ClientWorkload w = base;
  w.requests = r.get<std::uint64_t>(j, path, "requests", w.requests);
  w.interarrival = r.us(j, path, "interarrival_us", w.interarrival);
  w.start = r.us(j, path, "start_us", w.start);
  if (j.contains("operation")) w.op = parse_operation(r, j["operation"], path + "/operation");
  return w;
}

inline Workload parse_workload(const Reader& r, const json& j, const std::string& path) {
  r.only_keys(j, path, {"patience_rounds", "default", "clients"});
  Workload w;
  w.patience_rounds = r.get<RoundNum>(j, path, "patience_rounds", w.patience_rounds);
  if (j.contains("default")) w.defaults = parse_client_workload(r, j["default"], path + "/default", w.defaults);
  if (j.contains("clients")) {
    const auto& cs = j["clients"];
    if (!cs.is_object()) r.fail(path + "/clients", "expected an object keyed by client id");
    for (const auto& [k, v] : cs.items()) {
      std::uint32_t id = 0;
      auto [p, ec] = std::from_chars(k.data(), k.data() + k.size(), id);
      if (ec != std::errc{} || p != k.data() + k.size()) r.fail(path + "/clients/" + k, "client key must be an integer id");
      w.per_client[ClientId{id}] = parse_client_workload(r, v, path + "/clients/" + k, w.defaults);
    }
  }
  return w;
}

inline std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t k = 0; k < byte && k < text.size(); ++k) {
    if (text[k] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace scenario_detail

/// Validation failures come back as ScenarioParseError against the offending section.
inline Scenario validate_or_throw(Scenario sc, const std::string& source) {
  try {
    return validate_scenario(std::move(sc));
  } catch (const ConfigError& e) {
    throw ScenarioParseError(source, "/config", e.what());
  } catch (const ScenarioError& e) {
    throw ScenarioParseError(source, "/", e.what());
  }
}

/// Reads a scenario document without validating it (overrides go in between).
inline Scenario parse_scenario_raw(std::string_view text, const std::string& source = "<scenario>") {
  using scenario_detail::json;
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const auto [line, col] = scenario_detail::line_column(text, e.byte > 0 ? e.byte - 1 : 0);
    std::string what = e.what();
    if (auto pos = what.find("syntax error"); pos != std::string::npos) what = what.substr(pos);
    throw ScenarioParseError(source, "", what, line, col);
  }
  scenario_detail::Reader r(source);
  r.only_keys(j, "",
              {"schema_version", "id", "config", "soft_failures", "instance_changes", "faults", "workload", "ledger",
               "duration_us", "drain_limit_us", "record_trace"});
  const auto version = r.require<int>(j, "", "schema_version");
  if (version != kScenarioSchemaVersion)
    r.fail("/schema_version", "unsupported schema version " + std::to_string(version) + " (expected " +
                                  std::to_string(kScenarioSchemaVersion) + ")");
  Scenario sc;
  sc.id = r.get<std::string>(j, "", "id", sc.id);
  if (!j.contains("config")) r.fail("/config", "missing required key");
  sc.config = scenario_detail::parse_config(r, j["config"], "/config");
  sc.soft_failures = r.get<bool>(j, "", "soft_failures", sc.soft_failures);
  sc.instance_changes = r.get<bool>(j, "", "instance_changes", sc.instance_changes);
  sc.duration = r.us(j, "", "duration_us", sc.duration);
  sc.drain_limit = r.us(j, "", "drain_limit_us", sc.drain_limit);
  sc.record_trace = r.get<bool>(j, "", "record_trace", sc.record_trace);
  if (j.contains("faults")) {
    const auto& fs = j["faults"];
    if (!fs.is_array()) r.fail("/faults", "expected an array");
    for (std::size_t k = 0; k < fs.size(); ++k) {
      const std::string path = "/faults/" + std::to_string(k);
      r.only_keys(fs[k], path, {"replica", "at_us", "profile"});
      FaultEvent e;
      e.replica = ReplicaId{r.require<std::uint32_t>(fs[k], path, "replica")};
      e.at = r.us(fs[k], path, "at_us", SimTime{0});
      if (!fs[k].contains("profile")) r.fail(path + "/profile", "missing required key");
      e.profile = scenario_detail::parse_profile(r, fs[k]["profile"], path + "/profile");
      if (auto* c = std::get_if<Crash>(&e.profile)) c->since = e.at;
      sc.faults.push_back(std::move(e));
    }
  }
  if (j.contains("workload")) sc.workload = scenario_detail::parse_workload(r, j["workload"], "/workload");
  if (j.contains("ledger")) {
    const auto& l = j["ledger"];
    if (!l.is_object()) r.fail("/ledger", "expected an object of account balances");
    for (const auto& [acct, v] : l.items()) sc.ledger.balances[acct] = r.as<Amount>(v, "/ledger/" + acct);
  }
  return sc;
}

inline Scenario parse_scenario(std::string_view text, const std::string& source = "<scenario>") {
  return validate_or_throw(parse_scenario_raw(text, source), source);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioParseError(path, "", "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Scenario load_scenario_raw(const std::string& path) { return parse_scenario_raw(read_text_file(path), path); }
inline Scenario load_scenario(const std::string& path) { return parse_scenario(read_text_file(path), path); }

namespace scenario_detail {

inline json profile_json(const BehaviorProfile& p) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Honest>) return {{"kind", "honest"}};
        if constexpr (std::is_same_v<T, Crash>) return {{"kind", "crash"}, {"at_round", v.at_round}};
        if constexpr (std::is_same_v<T, Throttle>) return {{"kind", "throttle"}, {"factor", v.factor}};
        if constexpr (std::is_same_v<T, IgnoreClients>) {
          json ids = json::array();
          for (const auto& c : v.clients) ids.push_back(c.value);
          return {{"kind", "ignore_clients"}, {"clients", ids}};
        }
      },
      p);
}

inline json operation_json(const OperationTemplate& t) {
  switch (t.kind) {
    case OperationTemplate::Kind::Noop: return {{"kind", "noop"}};
    case OperationTemplate::Kind::Transfer:
      return {{"kind", "transfer"}, {"from", t.from}, {"to", t.to}, {"threshold", t.threshold}, {"value", t.value}};
    case OperationTemplate::Kind::Ring:
      return {{"kind", "ring"}, {"accounts", t.accounts}, {"threshold", t.threshold}, {"value", t.value}};
  }
  return {};
}

inline json workload_json(const ClientWorkload& w) {
  return {{"requests", w.requests},
          {"interarrival_us", to_micros(w.interarrival)},
          {"start_us", to_micros(w.start)},
          {"operation", operation_json(w.op)}};
}

}  // namespace scenario_detail

/// Serializes a scenario so that parse_scenario(to_json(sc)) reproduces it.
inline std::string to_json(const Scenario& sc, int indent = 2) {
  using scenario_detail::json;
  const auto& c = sc.config;
  const auto& t = c.timing;
  json j;
  j["schema_version"] = kScenarioSchemaVersion;
  j["id"] = sc.id;
  j["config"] = {{"n", c.n},
                 {"f", c.f},
                 {"m", c.m},
                 {"clients", c.clients},
                 {"sigma", c.sigma},
                 {"epsilon", c.epsilon},
                 {"mode", to_string(c.mode)},
                 {"seed", c.seed},
                 {"timing",
                  {{"base_round_us", to_micros(t.base_round_time)},
                   {"failure_detection_us", to_micros(t.failure_detection_timeout)},
                   {"control_transfer_us", to_micros(t.control_transfer_time)},
                   {"latency_jitter_us", to_micros(t.latency_jitter)},
                   {"execution_us", to_micros(t.execution_time)},
                   {"initial_backoff_rounds", t.initial_backoff}}}};
  j["soft_failures"] = sc.soft_failures;
  j["instance_changes"] = sc.instance_changes;
  j["duration_us"] = to_micros(sc.duration);
  j["drain_limit_us"] = to_micros(sc.drain_limit);
  j["record_trace"] = sc.record_trace;
  j["faults"] = json::array();
  for (const auto& f : sc.faults)
    j["faults"].push_back(
        {{"replica", f.replica.value}, {"at_us", to_micros(f.at)}, {"profile", scenario_detail::profile_json(f.profile)}});
  json clients = json::object();
  for (const auto& [id, w] : sc.workload.per_client) clients[std::to_string(id.value)] = scenario_detail::workload_json(w);
  j["workload"] = {{"patience_rounds", sc.workload.patience_rounds},
                   {"default", scenario_detail::workload_json(sc.workload.defaults)},
                   {"clients", clients}};
  j["ledger"] = json::object();
  for (const auto& [a, v] : sc.ledger.balances) j["ledger"][a] = v;
  return j.dump(indent);
}

class OverrideError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Keys accepted by apply_override and by sweep grids.
inline const std::vector<std::string>& override_keys() {
  static const std::vector<std::string> keys{
      "seed",        "n",           "f",            "m",          "clients",         "sigma",
      "epsilon",     "mode",        "soft_failures", "instance_changes", "duration_us", "drain_limit_us",
      "jitter_us",   "base_round_us", "detection_us", "transfer_us", "execution_us",   "initial_backoff",
      "patience_rounds", "requests", "interarrival_us", "throttle"};
  return keys;
}

namespace scenario_detail {

inline double number(const std::string& key, const std::string& v) {
  double out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) throw OverrideError("override " + key + ": '" + v + "' is not a number");
  return out;
}

inline std::uint64_t integer(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size())
    throw OverrideError("override " + key + ": '" + v + "' is not a non-negative integer");
  return out;
}

inline bool boolean(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw OverrideError("override " + key + ": '" + v + "' is not a boolean");
}

}  // namespace scenario_detail

/// Applies one `key=value` to an unvalidated scenario. `throttle` rewrites the
/// factor of every throttle fault. Call validate_scenario afterwards.
inline void apply_override(Scenario& sc, const std::string& key, const std::string& value) {
  using namespace scenario_detail;
  auto& c = sc.config;
  auto& t = c.timing;
  auto u32 = [&] {
    const auto v = integer(key, value);
    if (v > std::numeric_limits<std::uint32_t>::max()) throw OverrideError("override " + key + ": value out of range");
    return static_cast<std::uint32_t>(v);
  };
  if (key == "seed") c.seed = integer(key, value);
  else if (key == "n") c.n = u32();
  else if (key == "f") c.f = u32();
  else if (key == "m") c.m = u32();
  else if (key == "clients") c.clients = u32();
  else if (key == "sigma") c.sigma = integer(key, value);
  else if (key == "epsilon") c.epsilon = integer(key, value);
  else if (key == "mode") {
    if (value == "unified_replacement") c.mode = FailureMode::UnifiedReplacement;
    else if (value == "in_place_recovery") c.mode = FailureMode::InPlaceRecovery;
    else throw OverrideError("override mode: unknown mode '" + value + "'");
  }
  else if (key == "soft_failures") sc.soft_failures = boolean(key, value);
  else if (key == "instance_changes") sc.instance_changes = boolean(key, value);
  else if (key == "duration_us") sc.duration = micros(number(key, value));
  else if (key == "drain_limit_us") sc.drain_limit = micros(number(key, value));
  else if (key == "jitter_us") t.latency_jitter = micros(number(key, value));
  else if (key == "base_round_us") t.base_round_time = micros(number(key, value));
  else if (key == "detection_us") t.failure_detection_timeout = micros(number(key, value));
  else if (key == "transfer_us") t.control_transfer_time = micros(number(key, value));
  else if (key == "execution_us") t.execution_time = micros(number(key, value));
  else if (key == "initial_backoff") t.initial_backoff = integer(key, value);
  else if (key == "patience_rounds") sc.workload.patience_rounds = integer(key, value);
  else if (key == "requests") sc.workload.defaults.requests = integer(key, value);
  else if (key == "interarrival_us") sc.workload.defaults.interarrival = micros(number(key, value));
  else if (key == "throttle") {
    const double factor = number(key, value);
    bool any = false;
    for (auto& f : sc.faults)
      if (auto* th = std::get_if<Throttle>(&f.profile)) {
        th->factor = factor;
        any = true;
      }
    if (!any) throw OverrideError("override throttle: scenario has no throttle fault");
  }
  else throw OverrideError("unknown override key '" + key + "'");
}

/// Parses "key=value".
inline std::pair<std::string, std::string> split_override(const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos || eq == 0) throw OverrideError("override '" + kv + "' is not key=value");
  return {kv.substr(0, eq), kv.substr(eq + 1)};
}

}  // namespace pwc
