#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace kzpp {

struct VerifyCheck {
  std::string name;
  double value = 0.0;
  double bound = 0.0;
  bool pass = false;
};

struct VerifyReport {
  std::string suite;
  std::vector<VerifyCheck> checks;

  bool pass() const;
  nlohmann::json to_json() const;
};

/// Suite names accepted by run_verify_suite.
const std::vector<std::string>& verify_suites();

/// Runs the oracle checks behind `suite` (transforms, rates, memoization,
/// dpp, reduction or all). Throws ConfigError for an unknown suite.
VerifyReport run_verify_suite(const std::string& suite);

}  // namespace kzpp
