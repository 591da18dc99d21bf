#include "caplab/operator_profile.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "caplab/quadrature.hpp"

namespace caplab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double parse_positive_double(const std::string& s, const std::string& what) {
  size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("bad " + what + " '" + s + "'");
  }
  if (used != s.size() || !std::isfinite(v))
    throw std::invalid_argument("bad " + what + " '" + s + "'");
  return v;
}

}  // namespace

std::string regularity_name(RegularityClass c) {
  switch (c) {
    case RegularityClass::A: return "A";
    case RegularityClass::AStrong: return "AStrong";
    case RegularityClass::ASuperStrong: return "ASuperStrong";
  }
  return "?";
}

void OperatorProfile::require_valid(double t) const {
  if (!(t >= 0.0) || t >= t_max_) {
    std::ostringstream os;
    os << "slope t=" << t << " outside validity interval [0, ";
    if (std::isinf(t_max_))
      os << "inf";
    else
      os << t_max_;
    os << ") of profile " << name_;
    throw std::domain_error(os.str());
  }
}

double OperatorProfile::a(double t) const {
  require_valid(t);
  return a_fn_(t);
}

double OperatorProfile::a_prime(double t) const {
  require_valid(t);
  if (ap_fn_) return ap_fn_(t);
  // numeric fallback for customs without an analytic derivative
  const double h = 1e-6;
  if (t >= h)
    return (a_fn_(t + h) - a_fn_(t - h)) / (2 * h);
  return (-3 * a_fn_(t) + 4 * a_fn_(t + h) - a_fn_(t + 2 * h)) / (2 * h);
}

LambdaPair OperatorProfile::eval_lambda(double t) const {
  require_valid(t);
  double av = a_fn_(t);
  double apv = ap_fn_ ? ap_fn_(t) : a_prime(t);
  return {av + t * apv, av};
}

OperatorProfile OperatorProfile::mean_curvature() {
  OperatorProfile p;
  p.name_ = "mean-curvature";
  p.tag_ = BuiltinTag::MeanCurvature;
  p.class_ = RegularityClass::ASuperStrong;
  p.a_fn_ = [](double t) { return 1.0 / std::sqrt(1.0 + t * t); };
  p.ap_fn_ = [](double t) { return -t * std::pow(1.0 + t * t, -1.5); };
  return p;
}

OperatorProfile OperatorProfile::p_laplacian(double pexp) {
  if (!(pexp > 1.0)) throw std::invalid_argument("p-laplacian needs p > 1");
  OperatorProfile p;
  {
    std::ostringstream os;
    os << "p-laplacian:" << pexp;
    p.name_ = os.str();
  }
  p.tag_ = BuiltinTag::PLaplacian;
  p.params_ = {pexp};
  p.class_ = (pexp == 2.0) ? RegularityClass::ASuperStrong : RegularityClass::A;
  p.a_fn_ = [pexp](double t) { return std::pow(t, pexp - 2.0); };
  p.ap_fn_ = [pexp](double t) { return (pexp - 2.0) * std::pow(t, pexp - 3.0); };
  return p;
}

OperatorProfile OperatorProfile::pq_laplacian(double pexp, double qexp) {
  if (!(pexp >= 2.0) || !(qexp >= 2.0))
    throw std::invalid_argument("pq-laplacian needs p, q >= 2");
  OperatorProfile p;
  {
    std::ostringstream os;
    os << "pq-laplacian:" << pexp << ":" << qexp;
    p.name_ = os.str();
  }
  p.tag_ = BuiltinTag::PQLaplacian;
  p.params_ = {pexp, qexp};
  double lo = std::min(pexp, qexp), hi = std::max(pexp, qexp);
  if (lo > 2.0) {
    p.class_ = RegularityClass::A;  // a(0) = 0
  } else if (hi == 2.0 || hi == 3.0 || hi >= 4.0) {
    p.class_ = RegularityClass::ASuperStrong;
  } else if (hi >= 3.0) {
    p.class_ = RegularityClass::AStrong;  // hi in (3,4): a' only Hoelder at 0
  } else {
    p.class_ = RegularityClass::A;  // hi in (2,3): a' blows up at 0
  }
  p.a_fn_ = [pexp, qexp](double t) {
    return std::pow(t, pexp - 2.0) + std::pow(t, qexp - 2.0);
  };
  p.ap_fn_ = [pexp, qexp](double t) {
    return (pexp - 2.0) * std::pow(t, pexp - 3.0) + (qexp - 2.0) * std::pow(t, qexp - 3.0);
  };
  return p;
}

OperatorProfile OperatorProfile::exponential() {
  OperatorProfile p;
  p.name_ = "exponential";
  p.tag_ = BuiltinTag::Exponential;
  p.class_ = RegularityClass::ASuperStrong;
  p.a_fn_ = [](double t) { return std::exp(t * t); };
  p.ap_fn_ = [](double t) { return 2.0 * t * std::exp(t * t); };
  return p;
}

OperatorProfile OperatorProfile::polytropic(double gamma) {
  if (!(gamma > 1.0)) throw std::invalid_argument("polytropic needs gamma > 1");
  OperatorProfile p;
  {
    std::ostringstream os;
    os << "polytropic:" << gamma;
    p.name_ = os.str();
  }
  p.tag_ = BuiltinTag::Polytropic;
  p.params_ = {gamma};
  p.class_ = RegularityClass::ASuperStrong;
  p.t_max_ = std::sqrt(2.0 / (gamma + 1.0));  // sonic slope
  p.a_fn_ = [gamma](double t) {
    return std::pow(1.0 - (gamma - 1.0) * t * t / 2.0, 1.0 / (gamma - 1.0));
  };
  p.ap_fn_ = [gamma](double t) {
    return -t * std::pow(1.0 - (gamma - 1.0) * t * t / 2.0, (2.0 - gamma) / (gamma - 1.0));
  };
  return p;
}

OperatorProfile OperatorProfile::custom(std::string name, std::function<double(double)> a,
                                        std::function<double(double)> a_prime,
                                        RegularityClass declared_class, double t_max) {
  if (!a) throw std::invalid_argument("custom profile needs a()");
  OperatorProfile p;
  p.name_ = std::move(name);
  p.tag_ = BuiltinTag::Custom;
  p.class_ = declared_class;
  p.t_max_ = t_max;
  p.a_fn_ = std::move(a);
  p.ap_fn_ = std::move(a_prime);
  return p;
}

OperatorProfile OperatorProfile::parse(const std::string& spec) {
  std::vector<std::string> parts;
  size_t start = 0;
  while (true) {
    size_t colon = spec.find(':', start);
    if (colon == std::string::npos) {
      parts.push_back(spec.substr(start));
      break;
    }
    parts.push_back(spec.substr(start, colon - start));
    start = colon + 1;
  }
  const std::string& head = parts[0];
  auto want = [&](size_t n) {
    if (parts.size() != n)
      throw std::invalid_argument("profile '" + spec + "': wrong number of parameters");
  };
  if (head == "mean-curvature") {
    want(1);
    return mean_curvature();
  }
  if (head == "p-laplacian") {
    want(2);
    return p_laplacian(parse_positive_double(parts[1], "p"));
  }
  if (head == "pq-laplacian") {
    want(3);
    return pq_laplacian(parse_positive_double(parts[1], "p"),
                        parse_positive_double(parts[2], "q"));
  }
  if (head == "exponential") {
    want(1);
    return exponential();
  }
  if (head == "polytropic") {
    want(2);
    return polytropic(parse_positive_double(parts[1], "gamma"));
  }
  throw std::invalid_argument("unknown operator profile '" + spec + "'");
}

double OperatorProfile::G(double s) const {
  require_valid(s);
  switch (tag_) {
    case BuiltinTag::MeanCurvature:
      return 1.0 - 1.0 / std::sqrt(1.0 + s * s);
    case BuiltinTag::PLaplacian: {
      double p = params_[0];
      return (p - 1.0) * std::pow(s, p) / p;
    }
    case BuiltinTag::PQLaplacian: {
      double p = params_[0], q = params_[1];
      return (p - 1.0) * std::pow(s, p) / p + (q - 1.0) * std::pow(s, q) / q;
    }
    case BuiltinTag::Exponential: {
      double s2 = s * s;
      return ((2.0 * s2 - 1.0) * std::exp(s2) + 1.0) / 2.0;
    }
    case BuiltinTag::Polytropic: {
      double g = params_[0];
      double w = 1.0 - (g - 1.0) * s * s / 2.0;
      return s * s * a_fn_(s) - (1.0 - std::pow(w, g / (g - 1.0))) / g;
    }
    case BuiltinTag::Custom:
      break;
  }
  if (s == 0.0) return 0.0;
  return adaptive_simpson([this](double t) { return t * lambda1(t); }, 0.0, s, 1e-10);
}

double OperatorProfile::sup_ta() const {
  switch (tag_) {
    case BuiltinTag::MeanCurvature:
      return 1.0;  // t/sqrt(1+t^2) increases to 1
    case BuiltinTag::PLaplacian:
    case BuiltinTag::PQLaplacian:
    case BuiltinTag::Exponential:
      return kInf;  // t*a(t) -> inf
    case BuiltinTag::Polytropic: {
      // t*a increases on the whole validity interval (its derivative is lambda1 > 0)
      double g = params_[0];
      return t_max_ * std::pow(2.0 / (g + 1.0), 1.0 / (g - 1.0));
    }
    case BuiltinTag::Custom:
      break;
  }
  double hi = std::isinf(t_max_) ? 1e6 : 0.999999 * t_max_;
  double best = 0;
  for (double t : log_spaced(1e-8, hi, 2048)) best = std::max(best, t * a_fn_(t));
  return best;
}

MatA matrix_A(const OperatorProfile& profile, double gx, double gy) {
  double m = std::hypot(gx, gy);
  if (m < 1e-14) {
    double a0 = profile.a(0.0);
    return {a0, 0.0, a0};
  }
  double av = profile.a(m);
  double s = profile.a_prime(m) / m;
  return {av + s * gx * gx, s * gx * gy, av + s * gy * gy};
}

std::vector<double> default_t_samples(const OperatorProfile& profile, bool include_zero) {
  double hi = std::min(100.0, 0.995 * profile.t_max());
  std::vector<double> ts;
  if (include_zero) ts.push_back(0.0);
  for (double t : log_spaced(1e-6, hi, 512)) ts.push_back(t);
  return ts;
}

RegularityReport check_regularity_class(const OperatorProfile& profile,
                                        const std::vector<double>& samples) {
  if (samples.empty()) throw std::invalid_argument("check_regularity_class: empty sample grid");
  RegularityReport rep;
  rep.declared = profile.regularity_class();

  // class A: a > 0 and lambda1 > 0 at every positive sample
  bool holds_a = true;
  for (double t : samples) {
    if (t <= 0.0) continue;
    auto [l1, l2] = profile.eval_lambda(t);
    if (!(l2 > 0.0) || !(l1 > 0.0)) {
      holds_a = false;
      rep.first_violation_t = t;
      rep.note = !(l2 > 0.0) ? "a(t) <= 0" : "lambda1(t) <= 0";
      break;
    }
  }
  if (!holds_a) {
    rep.sampled.reset();
    return rep;
  }

  // AStrong additionally: a(0) > 0 finite and lambda1 finite positive at 0
  bool holds_strong = true;
  {
    double a0 = profile.a(0.0);
    double ap0 = profile.a_prime(0.0);
    double l10 = a0 + 0.0 * ap0;  // NaN if ap0 infinite
    if (!std::isfinite(a0) || !(a0 > 0.0)) {
      holds_strong = false;
      rep.note = "a(0) not finite positive";
    } else if (!std::isfinite(ap0) || !std::isfinite(l10) || !(l10 > 0.0)) {
      holds_strong = false;
      rep.note = "a'(0+) not finite (lambda1 undefined at 0)";
    }
    if (!holds_strong) rep.first_violation_t = 0.0;
  }
  if (!holds_strong) {
    rep.sampled = RegularityClass::A;
    rep.consistent = rep.declared == RegularityClass::A;
    return rep;
  }

  // ASuperStrong additionally: a' locally Lipschitz down to t=0.  Probe the
  // dyadic difference quotients D_k = |a'(2 t_k) - a'(t_k)| / t_k; for a' that is
  // only Hoelder at 0 they grow geometrically, for Lipschitz a' they stay bounded.
  bool holds_super = true;
  {
    double t_ref = std::min(0.25, profile.t_max() / 4.0);
    double d_first = 0, d_last = 0;
    for (int k = 1; k <= 20; ++k) {
      double tk = t_ref * std::ldexp(1.0, -k);
      double dk = std::abs(profile.a_prime(2 * tk) - profile.a_prime(tk)) / tk;
      if (k == 1) d_first = dk;
      d_last = dk;
    }
    if (d_last > 50.0 * (d_first + 1e-9)) {
      holds_super = false;
      rep.first_violation_t = t_ref * std::ldexp(1.0, -20);
      rep.note = "a' difference quotients blow up near 0 (not locally Lipschitz)";
    }
  }
  rep.sampled = holds_super ? RegularityClass::ASuperStrong : RegularityClass::AStrong;
  rep.consistent = rep.sampled == rep.declared;
  return rep;
}

RegularityReport check_regularity_class(const OperatorProfile& profile) {
  return check_regularity_class(profile, default_t_samples(profile, true));
}

MeanCurvatureTypeReport check_mean_curvature_type(const OperatorProfile& profile, double c1,
                                                  double c2,
                                                  const std::vector<double>& samples) {
  MeanCurvatureTypeReport rep;
  rep.c1 = c1;
  rep.c2 = c2;
  for (double t : samples) {
    if (t <= 0.0) continue;
    auto [l1, l2] = profile.eval_lambda(t);
    double r1 = t * t * l1 / l2;
    double r2 = t * l2;
    if (r1 > rep.max_ratio1) {
      rep.max_ratio1 = r1;
      rep.argmax_t1 = t;
    }
    if (r2 > rep.max_ratio2) {
      rep.max_ratio2 = r2;
      rep.argmax_t2 = t;
    }
  }
  rep.holds = rep.max_ratio1 <= c1 && rep.max_ratio2 <= c2;
  return rep;
}

MeanCurvatureTypeReport check_mean_curvature_type(const OperatorProfile& profile, double c1,
                                                  double c2) {
  return check_mean_curvature_type(profile, c1, c2, default_t_samples(profile, false));
}

}  // namespace caplab
