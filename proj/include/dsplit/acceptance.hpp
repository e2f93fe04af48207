#pragma once

#include <string>
#include <vector>

#include "dsplit/experiment.hpp"

namespace dsplit {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string measured;
  std::string required;
};

struct SuiteReport {
  std::string suite;
  std::vector<CriterionResult> criteria;
  double seconds = 0.0;
  bool pass() const;
};

// "[PASS] 3 lyapunov: measured ... required ..."
std::string format_line(const CriterionResult& r);

// configs shipped with the source tree
std::string default_config_dir();

// fast: criteria 1-8 on the reference configs, the determinism criterion
// reruns 1-7 into a second directory and byte-compares the outputs.
// full: fast plus longer n-scaling sweeps.
SuiteReport run_suite(const std::string& suite, const std::string& config_dir, const std::string& root);

}  // namespace dsplit
