#include "caplab/source_term.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "caplab/quadrature.hpp"

namespace caplab {

SourceTerm SourceTerm::zero() { return constant_h(0.0); }

SourceTerm SourceTerm::constant_h(double H) {
  SourceTerm s;
  s.kind_ = SourceKind::ConstantH;
  s.param_ = H;
  std::ostringstream os;
  os << "const:" << H;
  s.name_ = os.str();
  s.analytic_ = true;
  return s;
}

SourceTerm SourceTerm::capillary(double kappa) {
  SourceTerm s;
  s.kind_ = SourceKind::Capillary;
  s.param_ = kappa;
  std::ostringstream os;
  os << "capillary:" << kappa;
  s.name_ = os.str();
  s.analytic_ = true;
  return s;
}

SourceTerm SourceTerm::custom(const std::string& expression) {
  SourceTerm s;
  s.kind_ = SourceKind::Custom;
  s.name_ = "expr:" + expression;
  s.f_ast_ = expr::parse(expression);
  s.fp_ast_ = expr::derivative(s.f_ast_);
  return s;
}

SourceTerm SourceTerm::parse(const std::string& spec) {
  auto colon = spec.find(':');
  std::string head = spec.substr(0, colon == std::string::npos ? spec.size() : colon);
  std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);
  auto number = [&](const std::string& what) {
    size_t used = 0;
    double v = 0;
    try {
      v = std::stod(rest, &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("bad " + what + " '" + rest + "'");
    }
    if (used != rest.size() || !std::isfinite(v))
      throw std::invalid_argument("bad " + what + " '" + rest + "'");
    return v;
  };
  if (head == "const") return constant_h(number("H"));
  if (head == "capillary") return capillary(number("kappa"));
  if (head == "expr") return custom(rest);
  return custom(spec);  // bare expression
}

double SourceTerm::f(double u) const {
  switch (kind_) {
    case SourceKind::ConstantH: return param_;
    case SourceKind::Capillary: return -param_ * u;
    case SourceKind::Custom: return expr::eval(f_ast_, u);
  }
  return 0;
}

double SourceTerm::f_prime(double u) const {
  switch (kind_) {
    case SourceKind::ConstantH: return 0;
    case SourceKind::Capillary: return -param_;
    case SourceKind::Custom: return expr::eval(fp_ast_, u);
  }
  return 0;
}

double SourceTerm::F(double u) const {
  switch (kind_) {
    case SourceKind::ConstantH: return param_ * u;
    case SourceKind::Capillary: return -param_ * u * u / 2.0;
    case SourceKind::Custom: break;
  }
  if (u == 0.0) return 0.0;
  return adaptive_simpson([this](double s) { return f(s); }, 0.0, u, 1e-10);
}

HalfplaneConditionReport check_halfplane_condition(const SourceTerm& source, double c,
                                                   double u_lo, double u_hi, int n_samples) {
  HalfplaneConditionReport rep;
  rep.threshold = 1.0 / std::sqrt(1.0 + c * c) - 1.0;
  rep.max_F = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n_samples; ++i) {
    double u = u_lo + (u_hi - u_lo) * i / (n_samples - 1.0);
    double Fv = source.F(u);
    if (Fv > rep.max_F) {
      rep.max_F = Fv;
      rep.argmax_u = u;
    }
  }
  // tiny slack absorbs quadrature noise in custom primitives; decision margins in
  // the problems of interest are far larger
  rep.primitive_nonpositive = rep.max_F <= 1e-12;
  rep.zero_level_ok = source.F(0.0) >= rep.threshold;
  rep.holds = rep.primitive_nonpositive && rep.zero_level_ok;
  return rep;
}

}  // namespace caplab
