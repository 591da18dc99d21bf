// Acceptance gate: fifteen end-to-end checks, one pass/fail line each.
// Exits nonzero if any criterion fails.  Expensive solves are shared through
// the memoized fixtures below.

#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "caplab/domain.hpp"
#include "caplab/elliptic.hpp"
#include "caplab/energy.hpp"
#include "caplab/errors.hpp"
#include "caplab/identities.hpp"
#include "caplab/linearized.hpp"
#include "caplab/operator_profile.hpp"
#include "caplab/profile_ode.hpp"
#include "caplab/source_term.hpp"
#include "caplab/splitting.hpp"

using namespace caplab;

namespace {

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof(buf), f, ap);
  va_end(ap);
  return buf;
}

// ---------------------------------------------------------------------------
// shared solves
// ---------------------------------------------------------------------------

// capillary strip: kappa=1, walls x=0 and x=1 at heights 0 and b2, picked so
// the right-wall slope magnitude is 0.4
constexpr double kStripB2 = 0.29302914380687407;

const GridField& strip_main() {
  static const GridField f = [] {
    DomainSpec2D spec = DomainSpec2D::strip(1.0, {-2.0, 2.0});
    spec.component(1)->b = 0.0;
    spec.component(2)->b = kStripB2;
    auto grid = std::make_shared<const Grid>(build_grid(spec, 1.0 / 64));
    return solve_dirichlet(OperatorProfile::mean_curvature(), SourceTerm::capillary(1.0),
                           grid);
  }();
  return f;
}

// spherical cap: disk of radius 1, f = 1, boundary height sqrt(3); the exact
// solution is the sphere slice u = sqrt(4 - r^2)
const GridField& disk_cap(double h) {
  static std::map<double, GridField> cache;
  auto it = cache.find(h);
  if (it == cache.end()) {
    DomainSpec2D spec = DomainSpec2D::disk({0.0, 0.0}, 1.0);
    spec.component(1)->b = std::sqrt(3.0);
    auto grid = std::make_shared<const Grid>(build_grid(spec, h));
    it = cache.emplace(h, solve_dirichlet(OperatorProfile::mean_curvature(),
                                          SourceTerm::constant_h(1.0), grid))
             .first;
  }
  return it->second;
}

// tall capillary strip for the calibration inequality
const GridField& calib_strip() {
  static const GridField f = [] {
    DomainSpec2D spec = DomainSpec2D::strip(1.0, {-8.5, 8.5});
    spec.component(1)->b = 0.2;
    spec.component(2)->b = 0.31009170831226451;
    auto grid = std::make_shared<const Grid>(build_grid(spec, 1.0 / 64));
    return solve_dirichlet(OperatorProfile::mean_curvature(), SourceTerm::capillary(1.0),
                           grid);
  }();
  return f;
}

// symmetric slab: walls x=0 and x=0.5 both at height 0.5, kappa=7; the
// solution dips to an interior minimum line and the two halves glue
const GridField& glue_slab() {
  static const GridField f = [] {
    DomainSpec2D spec = DomainSpec2D::slab(CurveFn::constant(0.0), CurveFn::constant(0.5),
                                           {-1.0, 1.0});
    spec.component(1)->b = 0.5;
    spec.component(2)->b = 0.5;
    auto grid = std::make_shared<const Grid>(build_grid(spec, 1.0 / 128));
    return solve_dirichlet(OperatorProfile::mean_curvature(), SourceTerm::capillary(7.0),
                           grid);
  }();
  return f;
}

// rectangle with u = sin x cosh y injected (an exact solution of the minimal
// surface equation, used as the manufactured Bochner target)
GridField manufactured(double h) {
  DomainSpec2D spec = DomainSpec2D::rectangle(0.1, 1.0, 0.1, 0.9);
  auto grid = std::make_shared<const Grid>(build_grid(spec, h));
  GridField f(grid);
  f.inject([](double x, double y) { return std::sin(x) * std::cosh(y); });
  return f;
}

// ---------------------------------------------------------------------------
// criteria
// ---------------------------------------------------------------------------

bool c1(std::string& d) {
  const auto mc = OperatorProfile::mean_curvature();
  const auto src = SourceTerm::constant_h(1.0);
  const ProfileSolution sol = shoot(mc, src, 1.0, 0.0, {-0.9, 0.9}, 1e-4);
  double sup = 0;
  for (std::size_t k = 0; k < sol.t_grid.size(); ++k)
    sup = std::max(sup, std::abs(sol.u[k] - std::sqrt(1.0 - sol.t_grid[k] * sol.t_grid[k])));
  const Classification cls = classify(sol, mc, src, 1e-3);
  const bool ok = sup <= 1e-6 && cls.kind == ProfileClass::CylinderArc &&
                  std::abs(cls.radius - 1.0) <= 1e-4;
  d = fmt("arc sup error %.3e, %s radius %.8f", sup, profile_class_name(cls.kind).c_str(),
          cls.radius);
  return ok;
}

bool c2(std::string& d) {
  const auto mc = OperatorProfile::mean_curvature();
  const auto src = SourceTerm::capillary(1.0);
  std::mt19937 rng(12345);
  std::uniform_real_distribution<double> U(-0.5, 0.5);
  auto drift = [](const ProfileSolution& s) {
    double m = 0;
    for (double E : s.E_trace) m = std::max(m, std::abs(E - s.E_trace.front()));
    return m / (s.t_grid.back() - s.t_grid.front());
  };
  double worst = 0, sum_c = 0, sum_f = 0;
  for (int k = 0; k < 20; ++k) {
    const double u0 = U(rng), c = U(rng);
    const double dc = drift(shoot(mc, src, u0, c, {0.0, 1.0}, 4e-3));
    const double df = drift(shoot(mc, src, u0, c, {0.0, 1.0}, 2e-3));
    worst = std::max(worst, dc);
    sum_c += dc;
    sum_f += df;
  }
  const double factor = sum_c / sum_f;
  const bool ok = worst <= 1e-8 && factor >= 12.0 && factor <= 20.0;
  d = fmt("worst drift %.3e per unit t, halving factor %.2f", worst, factor);
  return ok;
}

bool c3(std::string& d) {
  double sup[2] = {0, 0}, nmean[2] = {0, 0};
  const double hs[2] = {1.0 / 32, 1.0 / 64};
  bool neumann_ok = true;
  for (int m = 0; m < 2; ++m) {
    const GridField& f = disk_cap(hs[m]);
    const Grid& g = f.grid();
    for (int k = 0; k < g.nx * g.ny; ++k) {
      const double v = f.at(k);
      if (!std::isfinite(v)) continue;
      const double x = g.x_of(k % g.nx), y = g.y_of(k / g.nx);
      sup[m] = std::max(sup[m], std::abs(v - std::sqrt(4.0 - x * x - y * y)));
    }
    const NeumannReport nr = neumann_trace(f);
    nmean[m] = nr.find(1)->mean;
    neumann_ok = neumann_ok && std::abs(nmean[m] - 1.0 / std::sqrt(3.0)) <= 5 * hs[m];
  }
  const double ratio = sup[0] / sup[1];
  const bool ok = ratio >= 3.5 && ratio <= 4.5 && neumann_ok;
  d = fmt("sup errors %.3e/%.3e ratio %.2f, neumann means %.6f/%.6f (exact %.6f)", sup[0],
          sup[1], ratio, nmean[0], nmean[1], 1.0 / std::sqrt(3.0));
  return ok;
}

bool c4(std::string& d) {
  const auto mc = OperatorProfile::mean_curvature();
  IdentityReport rep[2];
  double sides[2] = {0, 0};
  const double hs[2] = {1.0 / 32, 1.0 / 64};
  for (int m = 0; m < 2; ++m) {
    DomainSpec2D spec = DomainSpec2D::annulus({0.0, 0.0}, 0.5, 1.0);
    auto grid = std::make_shared<const Grid>(build_grid(spec, hs[m]));
    GridField f(grid);
    f.inject([](double x, double y) { return x * x + y * y; });
    for (const auto& r : verify_pointwise_identities(f, mc))
      if (r.id == "L4.1-2") rep[m] = r;
    // the two geometric sides themselves: |grad^T m|^2 + u_nu^2 |II|^2 = 4
    const LevelSetGeometry geo(f);
    for (int k : grid->interior) {
      if (!geo.stencil_ok(k)) continue;
      const FramePoint fp = geo.at(k);
      if (!fp.ok) continue;
      sides[m] = std::max(sides[m], std::abs(fp.gtm2 + fp.m * fp.m * fp.ii2 - 4.0));
    }
  }
  const IdentityReport joined = with_ratio(rep[0], rep[1]);
  const bool ok = sides[0] <= 50 * hs[0] * hs[0] && sides[1] <= 50 * hs[1] * hs[1] &&
                  rep[0].sup_residual <= 50 * hs[0] * hs[0] &&
                  rep[1].sup_residual <= 50 * hs[1] * hs[1] && joined.ratio &&
                  *joined.ratio >= 3.0;
  d = fmt("side deviation %.2e/%.2e, residual %.2e/%.2e, halving ratio %.2f", sides[0],
          sides[1], rep[0].sup_residual, rep[1].sup_residual,
          joined.ratio ? *joined.ratio : 0.0);
  return ok;
}

bool c5(std::string& d) {
  const auto mc = OperatorProfile::mean_curvature();
  double sup[3];
  const double hs[3] = {1.0 / 32, 1.0 / 64, 1.0 / 128};
  for (int m = 0; m < 3; ++m)
    sup[m] = verify_bochner(manufactured(hs[m]), mc, BochnerVariant::A).sup_residual;
  const double ord1 = std::log2(sup[0] / sup[1]), ord2 = std::log2(sup[1] / sup[2]);
  const bool ok = ord1 >= 1.8 && ord2 >= 1.8;
  d = fmt("residuals %.3e/%.3e/%.3e, orders %.2f/%.2f", sup[0], sup[1], sup[2], ord1, ord2);
  return ok;
}

bool c6(std::string& d) {
  const GridField& f = strip_main();
  const auto mc = OperatorProfile::mean_curvature();
  const KillingDerivative kd =
      killing_derivative(f, mc, SourceTerm::capillary(1.0), KillingField2D::translation(1, 0));
  const double h = f.grid().h;
  const double boxes[3][4] = {{5 * h, 1.0 - 5 * h, -1.5, 1.5},
                              {0.1, 0.9, -1.0, 1.0},
                              {0.15, 0.85, -0.6, 0.6}};
  auto tent = [](double t, double a, double b) {
    if (t <= a || t >= b) return 0.0;
    return 1.0 - std::abs(t - 0.5 * (a + b)) / (0.5 * (b - a));
  };
  bool ok = true;
  std::string parts;
  for (const auto& B : boxes) {
    GridField phi(f.grid_ptr());
    phi.inject([&](double x, double y) { return tent(x, B[0], B[1]) * tent(y, B[2], B[3]); });
    const PoincareReport r = verify_poincare(f, kd.w, phi, Mask::all(), mc);
    ok = ok && r.slack >= -1e-3 * r.lhs;
    parts += fmt(" %.2e(lhs %.3f)", r.slack, r.lhs);
  }
  d = "tent slacks" + parts;
  return ok;
}

bool c7(std::string& d) {
  const GridField& f = disk_cap(1.0 / 64);
  const BoundaryIdentityReport r = verify_boundary_identity(
      f, OperatorProfile::mean_curvature(), KillingField2D::translation(1, 0), 1);
  const double tol = 10 * f.grid().h;
  d = fmt("sup residual %.3e vs %.3e (%d points)", r.sup_residual, tol, r.points);
  return r.sup_residual <= tol;
}

bool c8(std::string& d) {
  const GridField& f = strip_main();
  const auto mc = OperatorProfile::mean_curvature();
  const auto src = SourceTerm::capillary(1.0);
  const Mask masks[3] = {Mask::rect(0, 1, -0.75, 0.75), Mask::rect(0, 1, -1.5, 1.5),
                         Mask::all()};
  double lam[3];
  for (int m = 0; m < 3; ++m) lam[m] = stability_lambda1(f, mc, src, masks[m]).lambda_min;
  const bool ok = lam[0] >= -1e-6 && lam[1] >= -1e-6 && lam[2] >= -1e-6 &&
                  lam[0] >= lam[1] - 1e-12 && lam[1] >= lam[2] - 1e-12;
  d = fmt("lambda_min %.6f >= %.6f >= %.6f over growing masks", lam[0], lam[1], lam[2]);
  return ok;
}

bool c9(std::string& d) {
  const auto mc = OperatorProfile::mean_curvature();
  const KillingDerivative ws = killing_derivative(
      strip_main(), mc, SourceTerm::capillary(1.0), KillingField2D::translation(1, 0));
  const SignClass s1 = sign_trichotomy_check(ws.w, Mask::all());
  const KillingDerivative wc = killing_derivative(
      disk_cap(1.0 / 64), mc, SourceTerm::constant_h(1.0), KillingField2D::translation(1, 0));
  const SignClass s2 = sign_trichotomy_check(wc.w, Mask::all());
  d = fmt("strip u_x is %s, cap u_x is %s", sign_class_name(s1).c_str(),
          sign_class_name(s2).c_str());
  return s1 == SignClass::Positive && s2 == SignClass::Mixed;
}

bool c10(std::string& d) {
  const SplitReport rs = detect_splitting(strip_main());
  const SplitReport rc = detect_splitting(disk_cap(1.0 / 64));
  const double dir_err =
      std::max(std::abs(rs.direction[0] - 1.0), std::abs(rs.direction[1]));
  const bool ok = rs.is_1d && dir_err <= 1e-3 && rs.mismatch <= 1e-4 && !rc.is_1d;
  d = fmt("strip is_1d=%d dir err %.2e mismatch %.3e; cap is_1d=%d", int(rs.is_1d), dir_err,
          rs.mismatch, int(rc.is_1d));
  return ok;
}

bool c11(std::string& d) {
  const GlueReport r = glue_check(glue_slab());
  // slab walls run along e2; the crit-set line must stay parallel to them
  const double angle = std::asin(std::min(1.0, std::abs(r.crit.line_dir[0])));
  const bool ok = r.wall_gradient_ok && r.halves_1d && r.aligned && r.profiles_match &&
                  r.verdict && angle <= 1e-2;
  d = fmt("clauses a=%d b=%d c=%d d=%d, crit line angle %.2e rad", int(r.wall_gradient_ok),
          int(r.halves_1d), int(r.aligned), int(r.profiles_match), angle);
  return ok;
}

bool c12(std::string& d) {
  auto theta = [](double t) { return std::log(t); };
  const auto cuts = log_cutoff_sequence({10, 100, 1000, 10000}, theta, std::exp(1.0));
  auto one = [](double) { return 1.0; };
  // chord length of the level {rho = t} inside the unit-width strip
  auto ell = [](double t) { return t <= 1.0 ? M_PI * t : 2 * t * std::asin(1.0 / t); };
  bool dec = true, bounded = true;
  double prev = 1e300, first = 0, last = 0;
  for (const auto& c : cuts) {
    const double E = radial_cutoff_energy(c, one, ell);
    if (first == 0) first = E;
    last = E;
    if (E > c.decay_bound() + 0.05) bounded = false;
    if (E >= prev) dec = false;
    prev = E;
  }
  d = fmt("energies %.3e -> %.3e over four decades, %s, %s", first, last,
          dec ? "decreasing" : "NOT decreasing", bounded ? "under bound" : "OVER bound");
  return dec && bounded;
}

bool c13(std::string& d) {
  const EnergyReport r =
      calibration_bound(calib_strip(), OperatorProfile::mean_curvature(),
                        SourceTerm::capillary(1.0), Mask::all(), CalibCase::II,
                        std::nullopt, {2, 4, 8});
  bool all = r.verdict;
  std::string parts;
  for (const auto& e : r.entries) {
    all = all && e.pass;
    parts += fmt(" R=%g %.4f<=%.3f", e.R, e.lhs, e.rhs);
  }
  d = "case ii" + parts + fmt(" (C_ta %.3f, C0 %.3f)", r.C_ta, r.C0);
  return all;
}

bool c14(std::string& d) {
  const GridField& f = strip_main();
  const GradientBoundReport r = gradient_bound_check(f, OperatorProfile::mean_curvature(),
                                                     SourceTerm::capillary(1.0));
  const double h = f.grid().h;
  const bool ok = r.verdict && r.sup_interior <= 1.0 + 5 * h;
  d = fmt("sup |grad u| %.6f interior, %.6f boundary, bound %.2f + 5h", r.sup_interior,
          r.sup_boundary, r.bound);
  return ok;
}

bool c15(std::string& d) {
  const auto mc_rep = check_mean_curvature_type(OperatorProfile::mean_curvature(), 1, 1);
  const auto pl_rep = check_mean_curvature_type(OperatorProfile::p_laplacian(3), 10, 10);
  // ratios above 10 on (0,100] mean no C1, C2 <= 10 can work for the p-laplacian
  const bool ok = mc_rep.holds && !pl_rep.holds && pl_rep.max_ratio1 > 10 &&
                  pl_rep.max_ratio2 > 10;
  d = fmt("mean-curvature holds at C1=C2=1; p-laplacian(3) ratios %.0f/%.0f exceed 10",
          pl_rep.max_ratio1, pl_rep.max_ratio2);
  return ok;
}

} // namespace

int main() {
  struct Item {
    int n;
    const char* what;
    bool (*run)(std::string&);
  };
  const Item items[] = {
      {1, "1D circle-arc rigidity", c1},
      {2, "first-integral conservation", c2},
      {3, "spherical-cap 2D oracle", c3},
      {4, "curvature identity on |x|^2", c4},
      {5, "Bochner convergence order", c5},
      {6, "weighted Poincare inequality", c6},
      {7, "boundary identity on the cap", c7},
      {8, "strip stability", c8},
      {9, "sign trichotomy", c9},
      {10, "1D splitting detection", c10},
      {11, "two-piece gluing", c11},
      {12, "log-cutoff energy decay", c12},
      {13, "calibration inequality", c13},
      {14, "interior gradient bound", c14},
      {15, "mean-curvature-type gate", c15},
  };
  int failed = 0;
  for (const Item& it : items) {
    std::string detail;
    bool ok = false;
    try {
      ok = it.run(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    std::printf("criterion %02d (%s): %s — %s\n", it.n, it.what, ok ? "pass" : "FAIL",
                detail.c_str());
    if (!ok) ++failed;
  }
  std::printf("%d/15 criteria passed\n", 15 - failed);
  return failed == 0 ? 0 : 1;
}
