#pragma once

// The nonlinearity f(u) on the right-hand side, its derivative, and its
// primitive F(u) = integral of f over [0,u].

#include <memory>
#include <string>

#include "caplab/expr.hpp"

namespace caplab {

enum class SourceKind { ConstantH, Capillary, Custom };

class SourceTerm {
 public:
  static SourceTerm zero();                    // f = 0
  static SourceTerm constant_h(double H);      // f = H
  static SourceTerm capillary(double kappa);   // f = -kappa*u
  static SourceTerm custom(const std::string& expression);  // grammar: + - * / ^ exp sin cos ( ) u
  // "const:<H>" | "capillary:<kappa>" | "expr:<expression>"  (bare expression also accepted)
  static SourceTerm parse(const std::string& spec);

  double f(double u) const;
  double f_prime(double u) const;
  double F(double u) const;  // closed form for builtins, adaptive quadrature (tol 1e-10) otherwise

  SourceKind kind() const { return kind_; }
  double param() const { return param_; }  // H or kappa
  const std::string& name() const { return name_; }
  // user-asserted flag: f analytic near its relevant base point (not machine-checked)
  bool analytic_flag() const { return analytic_; }
  SourceTerm& set_analytic_flag(bool v) {
    analytic_ = v;
    return *this;
  }

 private:
  SourceKind kind_ = SourceKind::Custom;
  double param_ = 0;
  std::string name_;
  bool analytic_ = false;
  expr::NodePtr f_ast_, fp_ast_;  // customs only
};

struct HalfplaneConditionReport {
  bool holds = false;
  bool primitive_nonpositive = false;  // F <= 0 at all samples in range (sampled verdict)
  bool zero_level_ok = false;          // F(0) >= 1/sqrt(1+c^2) - 1
  double max_F = 0;                    // max of F over samples
  double argmax_u = 0;
  double threshold = 0;                // 1/sqrt(1+c^2) - 1
};

// Existence test for a one-dimensional solution on a half-plane with wall slope c:
// F must stay nonpositive and F(0) must clear 1/sqrt(1+c^2) - 1.
HalfplaneConditionReport check_halfplane_condition(const SourceTerm& source, double c,
                                                   double u_lo = -100.0, double u_hi = 100.0,
                                                   int n_samples = 10000);

}  // namespace caplab
