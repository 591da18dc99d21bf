#include "caplab/profile_ode.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "caplab/errors.hpp"

namespace caplab {

std::string termination_name(Termination t) {
  switch (t) {
    case Termination::SpanExhausted: return "span_exhausted";
    case Termination::EllipticityLoss: return "ellipticity_loss";
    case Termination::SlopeLimit: return "slope_limit";
  }
  return "?";
}

std::string profile_class_name(ProfileClass c) {
  switch (c) {
    case ProfileClass::AffineHalfPlane: return "affine_half_plane";
    case ProfileClass::CylinderArc: return "cylinder_arc";
    case ProfileClass::CapillaryProfile: return "capillary_profile";
    case ProfileClass::Unclassified: return "unclassified";
  }
  return "?";
}

double first_integral(const OperatorProfile& profile, const SourceTerm& source,
                      double u, double uprime) {
  const double s = std::abs(uprime);
  if (!(s < profile.t_max()))
    throw std::domain_error("first_integral: slope outside the validity interval");
  return profile.G(s) + source.F(u);
}

namespace {

struct Leg {
  std::vector<double> t, u, v;
  Termination term = Termination::SpanExhausted;
};

// Forward integration on [0, length] with u(0)=u0, u'(0)=c.
Leg integrate_forward(const OperatorProfile& profile, const SourceTerm& source,
                      double u0, double c, double length, double step) {
  Leg leg;
  const double tmax = profile.t_max();
  const double lam_floor = 1e-10;

  bool stopped = false;
  Termination stop_reason = Termination::SpanExhausted;
  auto accel = [&](double y, double v) -> std::optional<double> {
    const double s = std::abs(v);
    if (!(s < tmax)) {
      stop_reason = Termination::SlopeLimit;
      return std::nullopt;
    }
    const double lam1 = profile.lambda1(s);
    if (lam1 < lam_floor) {
      stop_reason = Termination::EllipticityLoss;
      return std::nullopt;
    }
    return -source.f(y) / lam1;
  };

  double t = 0.0, y = u0, v = c;
  leg.t.push_back(t);
  leg.u.push_back(y);
  leg.v.push_back(v);

  const long nfull = static_cast<long>(std::floor(length / step + 1e-9));
  const double rem = length - static_cast<double>(nfull) * step;
  const long nsteps = nfull + (rem > 1e-12 * step ? 1 : 0);

  for (long k = 0; k < nsteps && !stopped; ++k) {
    const double h = (k < nfull) ? step : rem;
    // classical RK4 on (y, v)' = (v, accel)
    auto k1 = accel(y, v);
    if (!k1) { stopped = true; break; }
    auto k2 = accel(y + 0.5 * h * v, v + 0.5 * h * *k1);
    if (!k2) { stopped = true; break; }
    auto k3 = accel(y + 0.5 * h * (v + 0.5 * h * *k1), v + 0.5 * h * *k2);
    if (!k3) { stopped = true; break; }
    auto k4 = accel(y + h * (v + 0.5 * h * *k2), v + h * *k3);
    if (!k4) { stopped = true; break; }

    const double k1y = v;
    const double k2y = v + 0.5 * h * *k1;
    const double k3y = v + 0.5 * h * *k2;
    const double k4y = v + h * *k3;
    const double ynew = y + h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
    const double vnew = v + h / 6.0 * (*k1 + 2.0 * *k2 + 2.0 * *k3 + *k4);

    if (!(std::abs(vnew) < tmax)) {
      stop_reason = Termination::SlopeLimit;
      stopped = true;
      break;
    }
    t = (k < nfull) ? (static_cast<double>(k + 1) * step) : length;
    y = ynew;
    v = vnew;
    leg.t.push_back(t);
    leg.u.push_back(y);
    leg.v.push_back(v);
    if (profile.lambda1(std::abs(v)) < lam_floor) {
      stop_reason = Termination::EllipticityLoss;
      stopped = true;
      break;
    }
  }
  leg.term = stopped ? stop_reason : Termination::SpanExhausted;
  return leg;
}

} // namespace

ProfileSolution shoot(const OperatorProfile& profile, const SourceTerm& source,
                      double u0, double c, std::array<double, 2> t_span,
                      double step) {
  if (!(step > 0.0))
    throw std::invalid_argument("shoot: step must be positive");
  if (!std::isfinite(u0) || !std::isfinite(c))
    throw std::invalid_argument("shoot: initial data must be finite");
  if (!(std::abs(c) < profile.t_max()))
    throw std::domain_error("shoot: initial slope outside the validity interval");
  if (!(t_span[0] <= 0.0 && t_span[1] >= 0.0) || !(t_span[1] > t_span[0]))
    throw std::invalid_argument("shoot: t_span must be a nondegenerate interval containing 0");
  if (profile.regularity_class() == RegularityClass::A)
    throw InapplicableError("shoot: profile '" + profile.name() +
                            "' is only class A; the explicit ODE form needs "
                            "lambda1 bounded away from zero near slope 0");

  ProfileSolution sol;
  sol.step = step;
  sol.profile_name = profile.name();
  sol.source_name = source.name();

  Leg fwd = integrate_forward(profile, source, u0, c, t_span[1], step);
  if (t_span[0] < 0.0) {
    // u(-t) solves the same equation with initial slope -c; integrate forward
    // and reflect.
    Leg bwd = integrate_forward(profile, source, u0, -c, -t_span[0], step);
    for (std::size_t k = bwd.t.size(); k-- > 1;) {
      sol.t_grid.push_back(-bwd.t[k]);
      sol.u.push_back(bwd.u[k]);
      sol.u_prime.push_back(-bwd.v[k]);
    }
    sol.termination = (fwd.term != Termination::SpanExhausted) ? fwd.term : bwd.term;
  } else {
    sol.termination = fwd.term;
  }
  for (std::size_t k = 0; k < fwd.t.size(); ++k) {
    sol.t_grid.push_back(fwd.t[k]);
    sol.u.push_back(fwd.u[k]);
    sol.u_prime.push_back(fwd.v[k]);
  }
  sol.E_trace.resize(sol.t_grid.size());
  for (std::size_t k = 0; k < sol.t_grid.size(); ++k)
    sol.E_trace[k] = first_integral(profile, source, sol.u[k], sol.u_prime[k]);
  return sol;
}

namespace {

// Least-squares line u = alpha + beta*t; returns max |residual|.
double line_fit_deviation(const std::vector<double>& t, const std::vector<double>& u) {
  const std::size_t n = t.size();
  double st = 0, su = 0, stt = 0, stu = 0;
  for (std::size_t i = 0; i < n; ++i) {
    st += t[i];
    su += u[i];
    stt += t[i] * t[i];
    stu += t[i] * u[i];
  }
  const double dn = static_cast<double>(n);
  const double det = dn * stt - st * st;
  double alpha, beta;
  if (std::abs(det) < 1e-300) {
    alpha = su / dn;
    beta = 0.0;
  } else {
    beta = (dn * stu - st * su) / det;
    alpha = (su - beta * st) / dn;
  }
  double dev = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    dev = std::max(dev, std::abs(u[i] - (alpha + beta * t[i])));
  return dev;
}

struct CircleFit {
  double cx, cy;       // fitted center (t, u) coordinates
  double mean_dist;    // measured mean distance of the data to the center
  double max_dev_R0;   // max | dist - R0 |
};

// Algebraic (Kaasa) least squares for the center, then one Gauss-Newton step
// with the radius frozen at R0.
CircleFit fit_circle_fixed_radius(const std::vector<double>& x,
                                  const std::vector<double>& y, double R0) {
  const std::size_t n = x.size();
  // Kaasa: minimize sum (x^2+y^2 + D x + E y + F)^2 over (D,E,F).
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0, sxz = 0, syz = 0, sz = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double z = x[i] * x[i] + y[i] * y[i];
    sx += x[i]; sy += y[i]; sz += z;
    sxx += x[i] * x[i]; syy += y[i] * y[i]; sxy += x[i] * y[i];
    sxz += x[i] * z; syz += y[i] * z;
  }
  const double dn = static_cast<double>(n);
  // Normal equations for (D, E, F).
  double M[3][3] = {{sxx, sxy, sx}, {sxy, syy, sy}, {sx, sy, dn}};
  double rhs[3] = {-sxz, -syz, -sz};
  // Gaussian elimination with partial pivoting on the 3x3 system.
  int piv[3] = {0, 1, 2};
  for (int colu = 0; colu < 3; ++colu) {
    int best = colu;
    for (int r = colu + 1; r < 3; ++r)
      if (std::abs(M[piv[r]][colu]) > std::abs(M[piv[best]][colu])) best = r;
    std::swap(piv[colu], piv[best]);
    const double d = M[piv[colu]][colu];
    if (std::abs(d) < 1e-300) continue; // degenerate data; GN step will not help either
    for (int r = colu + 1; r < 3; ++r) {
      const double fac = M[piv[r]][colu] / d;
      for (int cc = colu; cc < 3; ++cc) M[piv[r]][cc] -= fac * M[piv[colu]][cc];
      rhs[piv[r]] -= fac * rhs[piv[colu]];
    }
  }
  double sol3[3] = {0, 0, 0};
  for (int r = 2; r >= 0; --r) {
    double acc = rhs[piv[r]];
    for (int cc = r + 1; cc < 3; ++cc) acc -= M[piv[r]][cc] * sol3[cc];
    sol3[r] = (std::abs(M[piv[r]][r]) < 1e-300) ? 0.0 : acc / M[piv[r]][r];
  }
  double cx = -0.5 * sol3[0];
  double cy = -0.5 * sol3[1];

  // One Gauss-Newton step on the center with radius frozen at R0:
  // residuals r_i = dist_i - R0, Jacobian rows -(p_i - c)/dist_i.
  double JtJ00 = 0, JtJ01 = 0, JtJ11 = 0, Jtr0 = 0, Jtr1 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - cx, dy = y[i] - cy;
    const double dist = std::hypot(dx, dy);
    if (dist < 1e-12) continue;
    const double ux = dx / dist, uy = dy / dist;
    const double ri = dist - R0;
    JtJ00 += ux * ux; JtJ01 += ux * uy; JtJ11 += uy * uy;
    Jtr0 += ux * ri; Jtr1 += uy * ri;
  }
  const double det = JtJ00 * JtJ11 - JtJ01 * JtJ01;
  if (std::abs(det) > 1e-300) {
    // GN update: c <- c + (JtJ)^{-1} Jtr (J = -u_i, so the signs cancel).
    cx += (JtJ11 * Jtr0 - JtJ01 * Jtr1) / det;
    cy += (JtJ00 * Jtr1 - JtJ01 * Jtr0) / det;
  }

  CircleFit fit{cx, cy, 0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    const double dist = std::hypot(x[i] - cx, y[i] - cy);
    fit.mean_dist += dist;
    fit.max_dev_R0 = std::max(fit.max_dev_R0, std::abs(dist - R0));
  }
  fit.mean_dist /= static_cast<double>(n);
  return fit;
}

} // namespace

Classification classify(const ProfileSolution& sol, const OperatorProfile& profile,
                        const SourceTerm& source, double tol) {
  (void)profile;
  if (sol.t_grid.size() < 4)
    throw std::invalid_argument("classify: need at least 4 nodes");
  Classification out;

  const double line_dev = line_fit_deviation(sol.t_grid, sol.u);
  if (line_dev <= tol) {
    out.kind = ProfileClass::AffineHalfPlane;
    out.max_deviation = line_dev;
    return out;
  }

  if (source.kind() == SourceKind::ConstantH && source.param() != 0.0) {
    const double R0 = 1.0 / std::abs(source.param());
    CircleFit fit = fit_circle_fixed_radius(sol.t_grid, sol.u, R0);
    if (fit.max_dev_R0 <= tol) {
      out.kind = ProfileClass::CylinderArc;
      out.radius = fit.mean_dist;
      out.center = {fit.cx, fit.cy};
      out.max_deviation = fit.max_dev_R0;
      return out;
    }
    out.max_deviation = fit.max_dev_R0;
  }

  if (source.kind() == SourceKind::Capillary) {
    // Tag passthrough guarded by first-integral conservation.
    const double span = sol.t_grid.back() - sol.t_grid.front();
    double drift = 0.0;
    for (double e : sol.E_trace) drift = std::max(drift, std::abs(e - sol.E_trace.front()));
    const double gate = 1e-8 * (1.0 + std::abs(sol.E_trace.front())) * std::max(span, 1.0);
    if (drift <= gate) {
      out.kind = ProfileClass::CapillaryProfile;
      out.max_deviation = drift;
      return out;
    }
    out.note = "capillary tag rejected: first-integral drift " + std::to_string(drift);
    out.kind = ProfileClass::Unclassified;
    return out;
  }

  out.kind = ProfileClass::Unclassified;
  out.note = "terminated: " + termination_name(sol.termination);
  return out;
}

std::array<double, 2> monotone_span(const ProfileSolution& sol) {
  const double thr = 1e-12;
  const double t0 = sol.t_grid.front();
  if (sol.u_prime.empty() || std::abs(sol.u_prime.front()) <= thr)
    return {t0, t0};
  const double sgn = sol.u_prime.front() > 0 ? 1.0 : -1.0;
  double t_end = t0;
  for (std::size_t k = 0; k < sol.t_grid.size(); ++k) {
    if (sgn * sol.u_prime[k] > thr)
      t_end = sol.t_grid[k];
    else
      break;
  }
  return {t0, t_end};
}

} // namespace caplab
