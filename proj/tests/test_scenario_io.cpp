#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "pwc/report.hpp"
#include "pwc/scenario_io.hpp"
#include "pwc/verify.hpp"

using namespace pwc;

namespace {

const std::string kMinimal = R"({
  "schema_version": 1,
  "id": "mini",
  "config": {"n": 4, "f": 1, "m": 2, "clients": 4}
})";

std::string fixture(const std::string& name) { return std::string(PWC_SCENARIO_DIR) + "/" + name; }

ScenarioParseError parse_error(const std::string& text) {
  try {
    parse_scenario(text, "t.json");
  } catch (const ScenarioParseError& e) {
    return e;
  }
  ADD_FAILURE() << "expected a parse error for " << text;
  return ScenarioParseError("", "", "");
}

}  // namespace

TEST(ParseScenario, MinimalDocumentUsesDefaults) {
  const auto sc = parse_scenario(kMinimal);
  EXPECT_EQ(sc.id, "mini");
  EXPECT_EQ(sc.config.m, 2u);
  EXPECT_EQ(sc.config.sigma, 3u);
  EXPECT_EQ(sc.config.epsilon, default_skip_size(3, TimingModel{}));
  EXPECT_TRUE(sc.soft_failures);
  EXPECT_TRUE(sc.faults.empty());
}

TEST(ParseScenario, FullDocument) {
  const auto sc = parse_scenario(R"({
    "schema_version": 1, "id": "full",
    "config": {"n": 7, "f": 2, "m": 3, "clients": 9, "sigma": 4, "epsilon": 6, "mode": "in_place_recovery", "seed": 42,
               "timing": {"base_round_us": 20, "failure_detection_us": 400, "control_transfer_us": 50,
                          "latency_jitter_us": 2.5, "execution_us": 1, "initial_backoff_rounds": 3}},
    "soft_failures": false, "duration_us": 1234,
    "faults": [{"replica": 1, "at_us": 100, "profile": {"kind": "crash", "at_round": 3}},
               {"replica": 2, "at_us": 0, "profile": {"kind": "ignore_clients", "clients": [0, 4]}}],
    "workload": {"patience_rounds": 9, "default": {"requests": 3, "operation": {"kind": "transfer", "from": "a", "to": "b", "value": 5}},
                 "clients": {"2": {"requests": 7}}},
    "ledger": {"a": 100}
  })");
  EXPECT_EQ(sc.config.mode, FailureMode::InPlaceRecovery);
  EXPECT_EQ(sc.config.timing.latency_jitter, micros(2.5));
  EXPECT_EQ(sc.config.timing.initial_backoff, 3u);
  EXPECT_EQ(sc.duration, micros(1234));
  ASSERT_EQ(sc.faults.size(), 2u);
  const auto& crash = std::get<Crash>(sc.faults[0].profile);
  EXPECT_EQ(crash.at_round, 3u);
  EXPECT_EQ(crash.since, micros(100));
  EXPECT_EQ(std::get<IgnoreClients>(sc.faults[1].profile).clients, (std::set<ClientId>{ClientId{0}, ClientId{4}}));
  EXPECT_EQ(sc.workload.of(ClientId{2}).requests, 7u);
  EXPECT_EQ(sc.workload.of(ClientId{2}).op.kind, OperationTemplate::Kind::Transfer);  // inherits the default
  EXPECT_EQ(sc.workload.of(ClientId{3}).requests, 3u);
  EXPECT_EQ(sc.ledger.amount("a"), 100u);
}

TEST(ParseScenario, SyntaxErrorHasLineAndColumn) {
  const auto e = parse_error("{\n  \"schema_version\": 1,\n  \"id\": ,\n}");
  EXPECT_EQ(e.line(), 3u);
  EXPECT_GT(e.column(), 1u);
  EXPECT_NE(std::string(e.what()).find("t.json:3:"), std::string::npos) << e.what();
}

TEST(ParseScenario, UnknownKeyNamesItsPath) {
  EXPECT_EQ(parse_error(R"({"schema_version": 1, "config": {"n": 4, "f": 1, "m": 1, "clients": 2, "gap": 3}})").key(),
            "/config/gap");
  EXPECT_EQ(parse_error(R"({"schema_version": 1, "colour": 1, "config": {"n": 4, "f": 1, "m": 1, "clients": 2}})").key(),
            "/colour");
}

TEST(ParseScenario, TypeAndValueErrors) {
  EXPECT_EQ(parse_error(R"({"schema_version": 1, "config": {"n": -4, "f": 1, "m": 1, "clients": 2}})").key(), "/config/n");
  EXPECT_EQ(parse_error(R"({"schema_version": 1, "config": {"n": 4, "f": 1, "m": 1}})").key(), "/config/clients");
  EXPECT_EQ(parse_error(R"({"schema_version": 2, "config": {"n": 4, "f": 1, "m": 1, "clients": 2}})").key(),
            "/schema_version");
  EXPECT_EQ(parse_error(R"({"schema_version": 1, "config": {"n": 4, "f": 1, "m": 1, "clients": 2, "mode": "fast"}})").key(),
            "/config/mode");
  EXPECT_EQ(parse_error(R"({"schema_version": 1, "config": {"n": 4, "f": 1, "m": 1, "clients": 2},
                            "faults": [{"replica": 1, "profile": {"kind": "explode"}}]})")
                .key(),
            "/faults/0/profile/kind");
}

TEST(ParseScenario, SemanticErrorsMapToSection) {
  EXPECT_EQ(parse_error(R"({"schema_version": 1, "config": {"n": 3, "f": 1, "m": 1, "clients": 2}})").key(), "/config");
  EXPECT_EQ(parse_error(R"({"schema_version": 1, "config": {"n": 4, "f": 1, "m": 1, "clients": 2},
                            "faults": [{"replica": 1, "profile": {"kind": "crash"}},
                                       {"replica": 2, "profile": {"kind": "crash"}}]})")
                .key(),
            "/");
}

TEST(ParseScenario, RoundTripsThroughJson) {
  for (const auto& entry : std::filesystem::directory_iterator(PWC_SCENARIO_DIR)) {
    if (entry.path().extension() != ".json") continue;
    const auto sc = load_scenario(entry.path().string());
    const auto text = to_json(sc);
    EXPECT_EQ(to_json(parse_scenario(text)), text) << entry.path();
  }
  const auto built = validate_scenario(ignoring_primary_scenario(FailureMode::InPlaceRecovery));
  EXPECT_EQ(to_json(parse_scenario(to_json(built))), to_json(built));
}

TEST(ParseScenario, FixturesMatchBuiltInScenarios) {
  EXPECT_EQ(to_json(load_scenario(fixture("crash_outage.json"))), to_json(crash_outage_scenario()));
  EXPECT_EQ(to_json(load_scenario(fixture("waitfree.json"))), to_json(waitfree_scenario()));
  EXPECT_EQ(to_json(load_scenario(fixture("ignore_ur.json"))),
            to_json(ignoring_primary_scenario(FailureMode::UnifiedReplacement)));
}

TEST(LoadScenario, MissingFileIsAParseError) {
  EXPECT_THROW(load_scenario("/nonexistent/scenario.json"), ScenarioParseError);
}

TEST(Override, AppliesKnownKeys) {
  auto sc = parse_scenario_raw(kMinimal);
  apply_override(sc, "seed", "17");
  apply_override(sc, "mode", "in_place_recovery");
  apply_override(sc, "jitter_us", "3.5");
  apply_override(sc, "soft_failures", "off");
  apply_override(sc, "requests", "4");
  sc = validate_scenario(sc);
  EXPECT_EQ(sc.config.seed, 17u);
  EXPECT_EQ(sc.config.mode, FailureMode::InPlaceRecovery);
  EXPECT_EQ(sc.config.timing.latency_jitter, micros(3.5));
  EXPECT_FALSE(sc.soft_failures);
  EXPECT_EQ(sc.workload.defaults.requests, 4u);
}

TEST(Override, RejectsBadInput) {
  auto sc = parse_scenario_raw(kMinimal);
  EXPECT_THROW(apply_override(sc, "colour", "1"), OverrideError);
  EXPECT_THROW(apply_override(sc, "n", "four"), OverrideError);
  EXPECT_THROW(apply_override(sc, "n", "-1"), OverrideError);
  EXPECT_THROW(apply_override(sc, "throttle", "2"), OverrideError);
  EXPECT_THROW(split_override("seed"), OverrideError);
  EXPECT_EQ(split_override("grid=a=b"), (std::pair<std::string, std::string>{"grid", "a=b"}));
}

TEST(Override, EveryAdvertisedKeyIsAccepted) {
  for (const auto& key : override_keys()) {
    auto sc = load_scenario_raw(fixture("sweep_throttle.json"));
    const std::string value = key == "mode" ? "in_place_recovery" : key == "soft_failures" || key == "instance_changes" ? "true" : "2";
    EXPECT_NO_THROW(apply_override(sc, key, value)) << key;
  }
}

TEST(Report, MetricsRowMatchesHeader) {
  const auto sc = load_scenario(fixture("healthy_ur.json"));
  const auto r = run(sc);
  const auto row = metrics_csv_row(sc, r);
  auto columns = [](const std::string& s) { return std::count(s.begin(), s.end(), ',') + 1; };
  EXPECT_EQ(columns(row), columns(kMetricsCsvHeader));
  EXPECT_EQ(row.rfind("healthy-ur,5,3,", 0), 0u) << row;
  EXPECT_NE(row.find(",unified_replacement,"), std::string::npos);
}

TEST(Report, WritesRunDirectory) {
  auto sc = load_scenario(fixture("healthy_ur.json"));
  sc.record_trace = true;
  const auto r = run(sc);
  const auto dir = std::filesystem::temp_directory_path() / "pwc_report_test";
  std::filesystem::remove_all(dir);
  write_run_outputs(dir, sc, r);
  for (const char* f : {"metrics.csv", "summary.txt", "trace.jsonl", "replica_0.csv", "replica_3.csv"})
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  std::ifstream log(dir / "replica_0.csv");
  std::string header;
  std::getline(log, header);
  EXPECT_EQ(header, "round,position,digest,result");
  std::filesystem::remove_all(dir);
}
