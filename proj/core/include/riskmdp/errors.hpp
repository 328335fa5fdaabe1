#pragma once

#include <stdexcept>
#include <string>

namespace riskmdp {

/// Malformed or inconsistent model input (bad JSON, dimension mismatch,
/// row-sum violation, support violation).
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An enumeration guard was exceeded (grid rows or pure-policy count).
class GuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The LP pipeline failed: infeasible/unbounded where a bounded optimum is
/// guaranteed, numerical breakdown, or a violated structural invariant such
/// as monotonicity of the resolution sequence.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Certification found an inconsistency it refuses to resolve silently
/// (ambiguous level clustering, non-bracketing bisection).
class VerificationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace riskmdp
