#include "caplab/identities.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "caplab/domain.hpp"
#include "caplab/elliptic.hpp"
#include "caplab/errors.hpp"

namespace caplab {

namespace {
const double kNaN = std::numeric_limits<double>::quiet_NaN();

// Interior node whose four stencil arms are full lattice steps.  Values
// differentiated again (the m field in particular) must come from uniform
// stencils: the truncation-error coefficient of a cut arm differs from its
// neighbours', and differencing across that jump costs an order.
bool clean_node(const Grid& g, int flat) {
  if (g.type[flat] != NodeType::Interior) return false;
  for (int d = 0; d < 4; ++d)
    if (g.arm(flat, d).theta != 1.0) return false;
  return true;
}
}

// ---------------------------------------------------------------------------
// LevelSetGeometry
// ---------------------------------------------------------------------------

LevelSetGeometry::LevelSetGeometry(const GridField& u, double exclusion_tol)
    : u_(u), m_(u.grid_ptr()), tol_(exclusion_tol) {
  const Grid& g = u.grid();
  if (tol_ <= 0) tol_ = 10.0 * g.h;
  const auto& interior = g.interior;
  parallel_for(interior.size(), [&](std::size_t k) {
    const int flat = interior[k];
    const double dx = u_.deriv_x(flat), dy = u_.deriv_y(flat);
    if (std::isfinite(dx) && std::isfinite(dy)) m_.at(flat) = std::hypot(dx, dy);
  });
}

bool LevelSetGeometry::stencil_ok(int flat) const {
  const Grid& g = u_.grid();
  const int i = flat % g.nx, j = flat / g.nx;
  if (i < 1 || i >= g.nx - 1 || j < 1 || j >= g.ny - 1) return false;
  for (int dj = -1; dj <= 1; ++dj)
    for (int di = -1; di <= 1; ++di)
      if (g.type[g.idx(i + di, j + dj)] != NodeType::Interior) return false;
  // The node itself and the four m-stencil neighbours must differentiate on
  // uniform arms (see clean_node).
  const int cross[5] = {flat, flat - 1, flat + 1, flat - g.nx, flat + g.nx};
  for (int c : cross)
    if (!clean_node(g, c)) return false;
  return true;
}

FramePoint LevelSetGeometry::at(int flat) const {
  FramePoint f;
  if (!stencil_ok(flat)) return f;
  const Grid& g = u_.grid();
  const int nx = g.nx;
  const double h = g.h;

  const double gx = u_.deriv_x(flat), gy = u_.deriv_y(flat);
  f.m = std::hypot(gx, gy);
  if (!(f.m > tol_)) return f;  // near the critical set: nu is unreliable
  f.nx = gx / f.m;
  f.ny = gy / f.m;

  f.hxx = u_.deriv_xx(flat);
  f.hyy = u_.deriv_yy(flat);
  f.hxy = (u_.at(flat + nx + 1) - u_.at(flat + nx - 1) - u_.at(flat - nx + 1) +
           u_.at(flat - nx - 1)) /
          (4 * h * h);

  f.mx = (m_.at(flat + 1) - m_.at(flat - 1)) / (2 * h);
  f.my = (m_.at(flat + nx) - m_.at(flat - nx)) / (2 * h);
  if (!std::isfinite(f.mx) || !std::isfinite(f.my) || !std::isfinite(f.hxy)) return f;

  f.unn = f.nx * (f.hxx * f.nx + f.hxy * f.ny) + f.ny * (f.hxy * f.nx + f.hyy * f.ny);
  const double proj = f.mx * f.nx + f.my * f.ny;
  const double tx = f.mx - proj * f.nx, ty = f.my - proj * f.ny;
  f.gtm2 = tx * tx + ty * ty;
  const double taux = -f.ny, tauy = f.nx;
  const double tHt = taux * (f.hxx * taux + f.hxy * tauy) +
                     tauy * (f.hxy * taux + f.hyy * tauy);
  f.ii2 = (tHt * tHt) / (f.m * f.m);
  f.ok = true;
  return f;
}

// ---------------------------------------------------------------------------
// verify_pointwise_identities
// ---------------------------------------------------------------------------

IdentityReport with_ratio(IdentityReport coarse, const IdentityReport& fine) {
  if (fine.sup_residual > 0) coarse.ratio = coarse.sup_residual / fine.sup_residual;
  return coarse;
}

std::vector<IdentityReport> verify_pointwise_identities(const GridField& field,
                                                        const OperatorProfile& profile,
                                                        double exclusion_tol) {
  const Grid& g = field.grid();
  LevelSetGeometry geo(field, exclusion_tol);

  std::vector<IdentityReport> reps(6);
  for (int k = 0; k < 6; ++k) {
    reps[k].id = "L4.1-" + std::to_string(k + 1);
    reps[k].h = g.h;
  }

  int nodes = 0, excluded = 0;
  for (int flat : g.interior) {
    if (!geo.stencil_ok(flat)) continue;
    const FramePoint f = geo.at(flat);
    if (!f.ok) {
      ++excluded;
      continue;
    }
    ++nodes;
    const double gx = f.m * f.nx, gy = f.m * f.ny;
    const double taux = -f.ny, tauy = f.nx;
    const double Hnx = f.hxx * f.nx + f.hxy * f.ny, Hny = f.hxy * f.nx + f.hyy * f.ny;
    const double tHn = taux * Hnx + tauy * Hny;
    const double tHt = taux * (f.hxx * taux + f.hxy * tauy) +
                       tauy * (f.hxy * taux + f.hyy * tauy);
    const MatA A = matrix_A(profile, gx, gy);
    const double l1 = profile.lambda1(f.m), l2 = profile.lambda2(f.m);

    // 1: grad m = H nu
    reps[0].sup_residual =
        std::max(reps[0].sup_residual, std::hypot(f.mx - Hnx, f.my - Hny));
    // 2: |H|_F^2 - |grad m|^2 = |grad^T m|^2 + m^2 |II|^2
    {
      const double lhs = (f.hxx * f.hxx + 2 * f.hxy * f.hxy + f.hyy * f.hyy) -
                         (f.mx * f.mx + f.my * f.my);
      const double rhs = f.gtm2 + tHt * tHt;
      reps[1].sup_residual = std::max(reps[1].sup_residual, std::abs(lhs - rhs));
    }
    // 3: <A grad m, grad m> = lambda2 |grad^T m|^2 + lambda1 unn^2
    {
      const double lhs = f.mx * (A.xx * f.mx + A.xy * f.my) +
                         f.my * (A.xy * f.mx + A.yy * f.my);
      const double rhs = l2 * f.gtm2 + l1 * f.unn * f.unn;
      reps[2].sup_residual = std::max(reps[2].sup_residual, std::abs(lhs - rhs));
    }
    // 4: |H grad u|^2 = m^2 (unn^2 + |grad^T m|^2)
    {
      const double Hgx = f.hxx * gx + f.hxy * gy, Hgy = f.hxy * gx + f.hyy * gy;
      const double lhs = Hgx * Hgx + Hgy * Hgy;
      const double rhs = f.m * f.m * (f.unn * f.unn + f.gtm2);
      reps[3].sup_residual = std::max(reps[3].sup_residual, std::abs(lhs - rhs));
    }
    // 5: tr((AH)^2) = lambda1^2 unn^2 + 2 lambda1 lambda2 (tau H nu)^2 + lambda2^2 (tau H tau)^2
    {
      const double Pxx = A.xx * f.hxx + A.xy * f.hxy, Pxy = A.xx * f.hxy + A.xy * f.hyy;
      const double Pyx = A.xy * f.hxx + A.yy * f.hxy, Pyy = A.xy * f.hxy + A.yy * f.hyy;
      const double lhs = Pxx * Pxx + 2 * Pxy * Pyx + Pyy * Pyy;
      const double rhs = l1 * l1 * f.unn * f.unn + 2 * l1 * l2 * tHn * tHn + l2 * l2 * tHt * tHt;
      reps[4].sup_residual = std::max(reps[4].sup_residual, std::abs(lhs - rhs));
    }
    // 6: <A grad m, grad u> = m lambda1 unn
    {
      const double lhs = gx * (A.xx * f.mx + A.xy * f.my) +
                         gy * (A.xy * f.mx + A.yy * f.my);
      const double rhs = f.m * l1 * f.unn;
      reps[5].sup_residual = std::max(reps[5].sup_residual, std::abs(lhs - rhs));
    }
  }
  if (nodes == 0)
    throw InapplicableError("verify_pointwise_identities: no admissible nodes "
                            "(field too small or gradient below the exclusion cutoff)");
  for (auto& r : reps) {
    r.nodes = nodes;
    r.excluded = excluded;
  }
  return reps;
}

// ---------------------------------------------------------------------------
// verify_bochner
// ---------------------------------------------------------------------------

IdentityReport verify_bochner(const GridField& field, const OperatorProfile& profile,
                              BochnerVariant variant, const SourceTerm* solved_source,
                              double exclusion_tol) {
  const Grid& g = field.grid();
  if (g.nx < 11 || g.ny < 11)
    throw std::invalid_argument("verify_bochner: field too small for wide stencils "
                                "(need at least 11 nodes per axis)");
  const int nx = g.nx;
  const double h = g.h;
  LevelSetGeometry geo(field, exclusion_tol);
  const GridField& m = geo.m_field();

  IdentityReport rep;
  rep.id = variant == BochnerVariant::A ? "bochner-A" : "bochner-B";
  rep.h = h;

  auto interior_block = [&](int flat, int r) {
    const int i = flat % nx, j = flat / nx;
    if (i < r || i >= nx - r || j < r || j >= g.ny - r) return false;
    for (int dj = -r; dj <= r; ++dj)
      for (int di = -r; di <= r; ++di)
        if (!clean_node(g, g.idx(i + di, j + dj))) return false;
    return true;
  };

  // Scalar carried by the flux: m^2 for variant A, m for variant B.
  auto scal = [&](int flat) -> double {
    const double v = m.at(flat);
    return variant == BochnerVariant::A ? v * v : v;
  };
  // V = A(grad u) grad(scal) at a node (central differences of the m field).
  auto Vfield = [&](int flat, double& vx, double& vy) {
    const double sx = (scal(flat + 1) - scal(flat - 1)) / (2 * h);
    const double sy = (scal(flat + nx) - scal(flat - nx)) / (2 * h);
    const MatA A = matrix_A(profile, field.deriv_x(flat), field.deriv_y(flat));
    vx = A.xx * sx + A.xy * sy;
    vy = A.xy * sx + A.yy * sy;
  };
  // a(m) grad u at a node, for differentiating the operator itself.
  auto Ffield = [&](int flat, double& fx, double& fy) {
    const double gx = field.deriv_x(flat), gy = field.deriv_y(flat);
    const double a = profile.a(std::hypot(gx, gy));
    fx = a * gx;
    fy = a * gy;
  };
  auto divA = [&](int flat) -> double {  // div(a(m) grad u) at a node
    double fxe, fye, fxw, fyw, fxn, fyn, fxs, fys;
    Ffield(flat + 1, fxe, fye);
    Ffield(flat - 1, fxw, fyw);
    Ffield(flat + nx, fxn, fyn);
    Ffield(flat - nx, fxs, fys);
    return (fxe - fxw) / (2 * h) + (fyn - fys) / (2 * h);
  };

  int nodes = 0, excluded = 0;
  for (int flat : g.interior) {
    if (!interior_block(flat, 2)) continue;
    const FramePoint f = geo.at(flat);
    if (!f.ok) {
      ++excluded;
      continue;
    }
    // LHS: (1/2) div V  (variant A)  or  m div V  (variant B)
    double vxe, vye, vxw, vyw, vxn, vyn, vxs, vys;
    Vfield(flat + 1, vxe, vye);
    Vfield(flat - 1, vxw, vyw);
    Vfield(flat + nx, vxn, vyn);
    Vfield(flat - nx, vxs, vys);
    const double divV = (vxe - vxw) / (2 * h) + (vyn - vys) / (2 * h);
    const double lhs = variant == BochnerVariant::A ? 0.5 * divV : f.m * divV;

    const double l1 = profile.lambda1(f.m), l2 = profile.lambda2(f.m);
    const double m2ii2 = f.m * f.m * f.ii2;
    const double ric = 0.0;  // flat plane
    double gterm;
    if (solved_source) {
      gterm = -solved_source->f_prime(field.at(flat)) * f.m * f.m;
    } else {
      const double dE = divA(flat + 1), dW = divA(flat - 1);
      const double dN = divA(flat + nx), dS = divA(flat - nx);
      gterm = ((dE - dW) / (2 * h)) * (f.m * f.nx) + ((dN - dS) / (2 * h)) * (f.m * f.ny);
    }
    double rhs;
    if (variant == BochnerVariant::A)
      rhs = l1 * f.unn * f.unn + (l1 + l2) * f.gtm2 + l2 * m2ii2 + l2 * ric + gterm;
    else
      rhs = l1 * f.gtm2 + l2 * m2ii2 + l2 * ric + gterm;

    rep.sup_residual = std::max(rep.sup_residual, std::abs(lhs - rhs));
    ++nodes;
  }
  if (nodes == 0)
    throw InapplicableError("verify_bochner: no admissible nodes for the wide stencil");
  rep.nodes = nodes;
  rep.excluded = excluded;
  return rep;
}

// ---------------------------------------------------------------------------
// verify_poincare
// ---------------------------------------------------------------------------

PoincareReport verify_poincare(const GridField& field, const GridField& w,
                               const GridField& phi, const Mask& mask,
                               const OperatorProfile& profile) {
  const Grid& g = field.grid();
  const int nx = g.nx;
  const double h = g.h;

  // Hypothesis checks: w positive on the mask, phi compactly supported.
  for (int flat : g.interior) {
    const double x = g.x_of(flat % nx), y = g.y_of(flat / nx);
    if (mask(x, y) && !(w.at(flat) > 0))
      throw InapplicableError("verify_poincare: w is not positive on the mask at (" +
                              std::to_string(x) + ", " + std::to_string(y) + ")");
  }
  LevelSetGeometry geo(field, 0.0);
  for (int flat : g.interior) {
    if (geo.stencil_ok(flat)) continue;
    const double p = phi.at(flat);
    if (std::isfinite(p) && std::abs(p) > 1e-14)
      throw std::invalid_argument(
          "verify_poincare: cutoff does not vanish near the boundary");
  }

  // Node field q = phi m / w (zero where phi vanishes).
  GridField q(field.grid_ptr());
  const GridField& m = geo.m_field();
  for (int flat : g.interior) {
    const double p = phi.at(flat);
    q.at(flat) = (p == 0.0) ? 0.0 : p * m.at(flat) / w.at(flat);
  }

  PoincareReport rep;
  // Cell sums for the gradient integrals (row-major, deterministic).
  for (int j = 0; j + 1 < g.ny; ++j) {
    for (int i = 0; i + 1 < nx; ++i) {
      const int c00 = g.idx(i, j), c10 = c00 + 1, c01 = c00 + nx, c11 = c01 + 1;
      if (g.type[c00] != NodeType::Interior || g.type[c10] != NodeType::Interior ||
          g.type[c01] != NodeType::Interior || g.type[c11] != NodeType::Interior)
        continue;
      const double p00 = phi.at(c00), p10 = phi.at(c10), p01 = phi.at(c01),
                   p11 = phi.at(c11);
      if (p00 == 0.0 && p10 == 0.0 && p01 == 0.0 && p11 == 0.0) continue;
      if (!std::isfinite(p00 + p10 + p01 + p11)) continue;
      const double ux = (field.at(c10) + field.at(c11) - field.at(c00) - field.at(c01)) /
                        (2 * h);
      const double uy = (field.at(c01) + field.at(c11) - field.at(c00) - field.at(c10)) /
                        (2 * h);
      const MatA A = matrix_A(profile, ux, uy);
      const double mc = std::hypot(ux, uy);
      const double px = (p10 + p11 - p00 - p01) / (2 * h);
      const double py = (p01 + p11 - p00 - p10) / (2 * h);
      rep.lhs += h * h * mc * mc *
                 (px * (A.xx * px + A.xy * py) + py * (A.xy * px + A.yy * py));
      const double qx = (q.at(c10) + q.at(c11) - q.at(c00) - q.at(c01)) / (2 * h);
      const double qy = (q.at(c01) + q.at(c11) - q.at(c00) - q.at(c10)) / (2 * h);
      const double wc = 0.25 * (w.at(c00) + w.at(c10) + w.at(c01) + w.at(c11));
      rep.rhs_quotient += h * h * wc * wc *
                          (qx * (A.xx * qx + A.xy * qy) + qy * (A.xy * qx + A.yy * qy));
      ++rep.cells;
    }
  }
  // Node sum for the curvature term.
  for (int flat : g.interior) {
    const double p = phi.at(flat);
    if (!std::isfinite(p) || p == 0.0) continue;
    const FramePoint f = geo.at(flat);
    if (!f.ok) continue;
    const double l1 = profile.lambda1(f.m), l2 = profile.lambda2(f.m);
    rep.rhs_geometry += h * h * p * p * (l1 * f.gtm2 + l2 * f.m * f.m * f.ii2);
    ++rep.geometry_nodes;
  }
  rep.slack = rep.lhs - rep.rhs_geometry - rep.rhs_quotient;
  return rep;
}

// ---------------------------------------------------------------------------
// verify_boundary_identity
// ---------------------------------------------------------------------------

BoundaryIdentityReport verify_boundary_identity(const GridField& field,
                                                const OperatorProfile& profile,
                                                const KillingField2D& X, int comp) {
  const Grid& g = field.grid();
  const double h = g.h;
  if (comp <= 0 || comp >= static_cast<int>(g.comp_bpoints.size()) ||
      g.comp_bpoints[comp].empty())
    throw std::invalid_argument("verify_boundary_identity: unknown component " +
                                std::to_string(comp));

  // Preconditions: u and its normal derivative constant along the component.
  NeumannReport ntr = neumann_trace(field);
  const NeumannComponent* nc = ntr.find(comp);
  if (!nc || !std::isfinite(nc->mean))
    throw InapplicableError("verify_boundary_identity: no Neumann trace on component " +
                            std::to_string(comp));
  if (nc->max_dev >= 10 * h * h)
    throw InapplicableError(
        "verify_boundary_identity: normal derivative varies along component " +
        std::to_string(comp) + " (dev " + std::to_string(nc->max_dev) + ")");
  const auto& list = g.comp_bpoints[comp];
  double bmin = std::numeric_limits<double>::infinity(), bmax = -bmin;
  for (int b : list) {
    const double v = field.bvalue(b);
    if (std::isfinite(v)) {
      bmin = std::min(bmin, v);
      bmax = std::max(bmax, v);
    }
  }
  if (bmax - bmin >= 10 * h * h)
    throw InapplicableError("verify_boundary_identity: u varies along component " +
                            std::to_string(comp));

  BoundaryIdentityReport rep;
  rep.comp = comp;
  rep.c_mean = nc->mean;

  // Node fields to sample on inward rays: m = |grad u| and w = <grad u, X>.
  LevelSetGeometry geo(field, 0.0);
  const GridField& mfield = geo.m_field();
  GridField wfield(field.grid_ptr());
  for (int flat : g.interior) {
    const double x = g.x_of(flat % g.nx), y = g.y_of(flat / g.nx);
    const auto Xv = X.X(x, y);
    wfield.at(flat) = field.deriv_x(flat) * Xv[0] + field.deriv_y(flat) * Xv[1];
  }

  const int n = static_cast<int>(list.size());
  const bool wrap = g.spec.shape == ShapeKind::Disk || g.spec.shape == ShapeKind::Annulus;

  // Boundary values from the traces: m = |c|, w = c <eta, X>.
  std::vector<double> mb(n, kNaN), wb(n, kNaN), sarc(n, 0.0);
  for (int k = 0; k < n; ++k) {
    const BPoint& bp = g.bpoints[list[k]];
    const double t = nc->traces[k];
    if (bp.corner || !std::isfinite(t)) continue;
    const auto Xv = X.X(bp.x, bp.y);
    mb[k] = std::abs(t);
    wb[k] = t * (bp.nx * Xv[0] + bp.ny * Xv[1]);
  }
  for (int k = 1; k < n; ++k) {
    const BPoint& a = g.bpoints[list[k - 1]];
    const BPoint& b = g.bpoints[list[k]];
    sarc[k] = sarc[k - 1] + std::hypot(b.x - a.x, b.y - a.y);
  }

  auto sample = [&](const GridField& fld, double x, double y) -> double {
    try {
      return fld.interp(x, y);
    } catch (const std::exception&) {
      return kNaN;
    }
  };

  for (int k = 0; k < n; ++k) {
    const BPoint& bp = g.bpoints[list[k]];
    if (bp.corner || !std::isfinite(mb[k])) {
      ++rep.skipped;
      continue;
    }
    // Tangential neighbours along the chain (wrapping on circles).
    const int km = (k > 0) ? k - 1 : (wrap ? n - 1 : -1);
    const int kp = (k + 1 < n) ? k + 1 : (wrap ? 0 : -1);
    if (km < 0 || kp < 0 || !std::isfinite(mb[km]) || !std::isfinite(mb[kp])) {
      ++rep.skipped;
      continue;
    }
    double sa = sarc[k] - sarc[km], sb = sarc[kp] - sarc[k];
    if (km == n - 1 && k == 0) {
      const BPoint& a = g.bpoints[list[km]];
      sa = std::hypot(bp.x - a.x, bp.y - a.y);
    }
    if (kp == 0 && k == n - 1) {
      const BPoint& b = g.bpoints[list[kp]];
      sb = std::hypot(b.x - bp.x, b.y - bp.y);
    }
    if (!(sa > 0) || !(sb > 0)) {
      ++rep.skipped;
      continue;
    }
    // d/ds along the chain by the nonuniform central formula.
    auto dtan = [&](const std::vector<double>& v) {
      return (-sb / (sa * (sa + sb))) * v[km] + ((sb - sa) / (sa * sb)) * v[k] +
             (sa / (sb * (sa + sb))) * v[kp];
    };
    const double dmt = dtan(mb), dwt = dtan(wb);
    // Unit tangent along increasing chain parameter.
    const BPoint& pm = g.bpoints[list[km]];
    const BPoint& pp = g.bpoints[list[kp]];
    double tx = pp.x - pm.x, ty = pp.y - pm.y;
    const double tn = std::hypot(tx, ty);
    if (!(tn > 0)) {
      ++rep.skipped;
      continue;
    }
    tx /= tn;
    ty /= tn;

    // Inward-normal derivatives from three samples on the ray p0 + s*h*eta.
    double ms[3], ws[3];
    bool good = true;
    for (int s = 1; s <= 3 && good; ++s) {
      const double px = bp.x + s * h * bp.nx, py = bp.y + s * h * bp.ny;
      ms[s - 1] = sample(mfield, px, py);
      ws[s - 1] = sample(wfield, px, py);
      good = std::isfinite(ms[s - 1]) && std::isfinite(ws[s - 1]);
    }
    if (!good) {
      ++rep.skipped;
      continue;
    }
    const double dmn = (-5 * ms[0] + 8 * ms[1] - 3 * ms[2]) / (2 * h);
    const double dwn = (-5 * ws[0] + 8 * ws[1] - 3 * ws[2]) / (2 * h);

    // Assemble grad m and grad w at the boundary point.
    const double gmx = dmn * bp.nx + dmt * tx, gmy = dmn * bp.ny + dmt * ty;
    const double gwx = dwn * bp.nx + dwt * tx, gwy = dwn * bp.ny + dwt * ty;

    const double c = nc->traces[k];  // signed inward derivative
    const double m0 = mb[k], w0 = wb[k];
    const MatA A = matrix_A(profile, c * bp.nx, c * bp.ny);
    // grad(m^2/2) = m grad m.
    const double v1x = m0 * gmx, v1y = m0 * gmy;
    const double term1 = w0 * (bp.nx * (A.xx * v1x + A.xy * v1y) +
                               bp.ny * (A.xy * v1x + A.yy * v1y));
    const double term2 = m0 * m0 * (bp.nx * (A.xx * gwx + A.xy * gwy) +
                                    bp.ny * (A.xy * gwx + A.yy * gwy));
    const auto J = X.grad(bp.x, bp.y);
    const double Jex = J[0] * bp.nx + J[1] * bp.ny;  // (grad X) eta, x-component
    const double Jey = J[2] * bp.nx + J[3] * bp.ny;
    const double term3 =
        profile.lambda1(m0) * m0 * m0 * c * (bp.nx * Jex + bp.ny * Jey);

    rep.sup_residual = std::max(rep.sup_residual, std::abs(term1 - term2 + term3));
    ++rep.points;
  }
  if (rep.points == 0)
    throw InapplicableError("verify_boundary_identity: no evaluable boundary points");
  return rep;
}

// ---------------------------------------------------------------------------
// divergence_check
// ---------------------------------------------------------------------------

DivergenceReport divergence_check(
    const GridField& field, const std::function<std::array<double, 2>(double, double)>& W,
    const Mask& mask, const std::function<double(double, double)>& lower_bound,
    double tol) {
  const Grid& g = field.grid();
  const double h = g.h;
  if (tol <= 0) tol = 10.0 * h;

  DivergenceReport rep;
  double wscale = 0.0;
  for (int flat : g.interior) {
    const double x = g.x_of(flat % g.nx), y = g.y_of(flat / g.nx);
    if (!mask(x, y)) continue;
    const auto Wp = W(x, y);
    wscale = std::max({wscale, std::abs(Wp[0]), std::abs(Wp[1])});
  }
  const double gate = tol * std::max(1.0, wscale);

  // Interior sum of the lower bound, the cut check, and the divergence check.
  for (int flat : g.interior) {
    const double x = g.x_of(flat % g.nx), y = g.y_of(flat / g.nx);
    if (!mask(x, y)) continue;
    const double offs[4][2] = {{-h, 0.0}, {h, 0.0}, {0.0, -h}, {0.0, h}};
    bool on_cut = false;
    for (const auto& o : offs)
      if (!mask(x + o[0], y + o[1])) on_cut = true;
    if (on_cut) {
      const auto Wp = W(x, y);
      rep.sup_W_on_cut = std::max(rep.sup_W_on_cut, std::hypot(Wp[0], Wp[1]));
    }
    rep.interior_term += h * h * lower_bound(x, y);
    ++rep.interior_nodes;
    const double divW = (W(x + h, y)[0] - W(x - h, y)[0]) / (2 * h) +
                        (W(x, y + h)[1] - W(x, y - h)[1]) / (2 * h);
    if (divW < lower_bound(x, y) - gate)
      throw InapplicableError(
          "divergence_check: lower bound exceeds div W at (" + std::to_string(x) + ", " +
          std::to_string(y) + ")");
  }
  if (rep.sup_W_on_cut > gate)
    throw std::invalid_argument(
        "divergence_check: W does not vanish on the interior mask boundary (sup " +
        std::to_string(rep.sup_W_on_cut) + ")");

  // Real-boundary flux with the inward conormal.
  for (int id : g.spec.real_component_ids()) {
    if (id >= static_cast<int>(g.comp_bpoints.size())) continue;
    for (int b : g.comp_bpoints[id]) {
      const BPoint& bp = g.bpoints[b];
      if (!mask(bp.x, bp.y)) continue;
      const auto Wp = W(bp.x, bp.y);
      rep.boundary_term += bp.hweight * (Wp[0] * bp.nx + Wp[1] * bp.ny);
      ++rep.boundary_points;
    }
  }
  rep.slack = -(rep.boundary_term + rep.interior_term);
  return rep;
}

} // namespace caplab
