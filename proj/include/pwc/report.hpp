#pragma once

// Run outputs: metrics CSV rows, per-replica log CSVs, line-delimited trace,
// and a plain-text summary.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "pwc/sim_harness.hpp"

namespace pwc {

inline constexpr const char* kMetricsCsvHeader =
    "scenario_id,seed,m,sigma,epsilon,mode,throughput_dps,max_delay_us,p99_delay_us,max_backlog,replacements,"
    "violations";

namespace report_detail {

inline std::string fixed3(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(3) << v;
  return os.str();
}

// Scenario ids are free text; quote them when they would break the row.
inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace report_detail

inline std::string metrics_csv_row(const Scenario& sc, const RunResult& r) {
  using report_detail::fixed3;
  const auto& c = sc.config;
  const auto& m = r.metrics;
  std::ostringstream os;
  os << report_detail::csv_field(sc.id) << ',' << c.seed << ',' << c.m << ',' << c.sigma << ',' << c.epsilon << ','
     << to_string(c.mode) << ',' << fixed3(m.throughput_dps) << ',' << fixed3(to_micros(m.max_delay)) << ','
     << fixed3(to_micros(m.p99_delay)) << ',' << m.overall_max_backlog() << ',' << m.primary_replacements << ','
     << m.violations.size();
  return os.str();
}

inline void write_log_csv(std::ostream& os, const ExecutionLog& log) {
  os << "round,position,digest,result\n";
  for (const auto& e : log) os << e << '\n';
}

inline void write_trace_jsonl(std::ostream& os, const std::vector<TraceRecord>& trace) {
  for (const auto& t : trace) {
    nlohmann::json j{{"t_us", to_micros(t.time)}, {"instance", t.instance}, {"round", t.round}, {"kind", t.kind}};
    if (t.replica >= 0)
      j["replica"] = t.replica;
    else
      j["replica"] = nullptr;
    os << j.dump() << '\n';
  }
}

inline void write_summary(std::ostream& os, const Scenario& sc, const RunResult& r) {
  using report_detail::fixed3;
  const auto& c = sc.config;
  const auto& m = r.metrics;
  os << "scenario " << sc.id << "\n";
  os << "  n=" << c.n << " f=" << c.f << " m=" << c.m << " clients=" << c.clients << " sigma=" << c.sigma
     << " epsilon=" << c.epsilon << " mode=" << to_string(c.mode) << " seed=" << c.seed
     << " soft_failures=" << (sc.soft_failures ? "on" : "off") << "\n";
  os << "  faulty replicas:";
  if (r.faulty.empty()) os << " none";
  for (const auto& f : r.faulty) os << ' ' << f;
  os << "\n";
  os << "  decisions " << m.total_decisions << " (" << fixed3(m.throughput_dps) << "/s)\n";
  for (std::size_t k = 0; k < m.decisions_per_sec.size(); ++k)
    os << "    I" << k + 1 << ": " << fixed3(m.decisions_per_sec[k]) << "/s, max backlog " << m.max_backlog[k] << "\n";
  os << "  requests issued " << m.issued_requests << ", confirmed " << m.confirmed_requests << ", decided "
     << m.decided_client_requests << "\n";
  os << "  accept->execute delay max " << fixed3(to_micros(m.max_delay)) << "us, p99 " << fixed3(to_micros(m.p99_delay))
     << "us, bound " << fixed3(to_micros(m.delay_bound)) << "us"
     << (sc.soft_failures ? "" : " (not enforced: soft failures off)") << "\n";
  os << "  backlog bound " << m.backlog_bound << ", liveness bound " << fixed3(to_micros(m.liveness_bound)) << "us\n";
  os << "  bound excesses: delay " << m.delay_bound_exceeded << ", backlog " << m.backlog_bound_exceeded
     << ", liveness " << m.liveness_bound_exceeded << "\n";
  os << "  primary replacements " << m.primary_replacements << ", instance changes " << m.instance_changes_activated
     << ", max clients/instance " << m.max_clients_per_instance << " (cap " << m.load_cap << ")\n";
  os << "  execution logs " << (r.comparison.equal ? "identical" : "DIVERGE");
  if (!r.comparison.equal)
    os << " at round " << r.comparison.round << " position " << r.comparison.position << " (replica "
       << r.comparison.replica.value_or(ReplicaId{}) << ")";
  os << "\n";
  os << "  violations " << m.violations.size() << "\n";
  for (const auto& v : m.violations)
    os << "    t=" << fixed3(to_micros(v.time)) << "us round " << v.round << " " << v.kind << ": " << v.detail << "\n";
  if (!r.diagnostic.empty()) {
    os << "  trace window before abort:\n";
    for (const auto& t : r.diagnostic)
      os << "    t=" << fixed3(to_micros(t.time)) << "us replica " << t.replica << " I" << t.instance << " round "
         << t.round << " " << t.kind << "\n";
  }
  os << "  result " << (r.passed() ? "PASS" : "FAIL") << "\n";
}

/// Writes metrics.csv, replica_<id>.csv, summary.txt and (if recorded) trace.jsonl.
inline void write_run_outputs(const std::filesystem::path& dir, const Scenario& sc, const RunResult& r) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream os(dir / "metrics.csv");
    os << kMetricsCsvHeader << '\n' << metrics_csv_row(sc, r) << '\n';
  }
  for (const auto& [rid, log] : r.logs) {
    std::ofstream os(dir / ("replica_" + std::to_string(rid.value) + ".csv"));
    write_log_csv(os, log);
  }
  {
    std::ofstream os(dir / "summary.txt");
    write_summary(os, sc, r);
  }
  if (!r.trace.empty()) {
    std::ofstream os(dir / "trace.jsonl");
    write_trace_jsonl(os, r.trace);
  }
}

}  // namespace pwc
