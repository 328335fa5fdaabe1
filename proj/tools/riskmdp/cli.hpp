#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "riskmdp/model.hpp"

namespace riskmdp::cli {

enum ExitCode : int {
  kOk = 0,
  kModelError = 2,
  kGuardError = 3,
  kSolverError = 4,
  kResidualViolation = 5,
};

inline constexpr int kReportVersion = 1;

/// Runs one invocation. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// FNV-1a 64-bit hash of the canonical model JSON, as "fnv1a64:<16 hex digits>".
std::string model_digest(const MdpModel& model);

}  // namespace riskmdp::cli
