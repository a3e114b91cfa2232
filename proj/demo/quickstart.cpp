// Builds a scenario in code, crashes one primary, and prints what happened.

#include <iostream>

#include "pwc/pwc.hpp"

int main() {
  pwc::Scenario sc;
  sc.id = "quickstart";
  sc.config.n = 4;
  sc.config.f = 1;
  sc.config.m = 3;
  sc.config.clients = 6;
  sc.config.mode = pwc::FailureMode::UnifiedReplacement;
  sc.workload.defaults.requests = 20;
  sc.workload.defaults.op = {pwc::OperationTemplate::Kind::Ring, {}, {}, 0, 5, {"alice", "bob", "eve"}};
  sc.ledger.balances = {{"alice", 100}, {"bob", 100}, {"eve", 100}};
  sc.duration = pwc::micros(3000);
  sc = pwc::inject(sc, {pwc::ReplicaId{1}, pwc::micros(800), pwc::Crash{}});

  const auto result = pwc::run(sc);
  pwc::write_summary(std::cout, sc, result);

  for (const auto& c : result.control)
    std::cout << "instance " << c.instance << " failed in round " << c.failed_round << ", "
              << c.old_primary << " -> " << c.new_primary << ", resumed at round " << c.resume_round << "\n";
  return result.passed() ? 0 : 1;
}
