#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace caplab {

// Thrown when a routine's mathematical hypotheses are not met by the supplied
// problem (wrong regularity class, failed sign condition, missing reference
// level, ...).  The CLI maps this to exit code 2.
class InapplicableError : public std::runtime_error {
public:
  explicit InapplicableError(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when an iterative method exhausts its budget.  Carries the residual
// history so callers can see whether the iteration was stalling or diverging.
// The CLI maps this to exit code 3.
class NonConvergenceError : public std::runtime_error {
public:
  NonConvergenceError(const std::string& what, std::vector<double> residuals = {})
      : std::runtime_error(what), residual_history(std::move(residuals)) {}
  std::vector<double> residual_history;
};

// Thrown when the quasilinear problem leaves the elliptic regime (gradient
// hits the validity interval boundary, lambda1 collapses).  Exit code 3.
class RegimeError : public std::runtime_error {
public:
  explicit RegimeError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace caplab
