#include "caplab/linearized.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "caplab/domain.hpp"
#include "caplab/errors.hpp"

namespace caplab {

namespace {
const double kNaN = std::numeric_limits<double>::quiet_NaN();
}

// ---------------------------------------------------------------------------
// KillingField2D
// ---------------------------------------------------------------------------

KillingField2D KillingField2D::translation(double vx, double vy) {
  const double n = std::hypot(vx, vy);
  if (!(n > 0)) throw std::invalid_argument("KillingField2D: zero translation direction");
  KillingField2D k;
  k.kind = Kind::Translation;
  k.v = {vx / n, vy / n};
  return k;
}

KillingField2D KillingField2D::rotation(double px, double py) {
  KillingField2D k;
  k.kind = Kind::Rotation;
  k.p = {px, py};
  return k;
}

KillingField2D KillingField2D::parse(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos)
    throw std::invalid_argument("KillingField2D: expected 'translate:vx,vy' or 'rotate:px,py'");
  const std::string head = text.substr(0, colon);
  const std::string tail = text.substr(colon + 1);
  const auto comma = tail.find(',');
  if (comma == std::string::npos)
    throw std::invalid_argument("KillingField2D: expected two comma-separated numbers");
  double a, b;
  try {
    std::size_t e1 = 0, e2 = 0;
    a = std::stod(tail.substr(0, comma), &e1);
    b = std::stod(tail.substr(comma + 1), &e2);
    if (e1 != comma || e2 != tail.size() - comma - 1)
      throw std::invalid_argument("trailing characters");
  } catch (const std::exception&) {
    throw std::invalid_argument("KillingField2D: could not parse '" + tail + "' as numbers");
  }
  if (head == "translate") return translation(a, b);
  if (head == "rotate") return rotation(a, b);
  throw std::invalid_argument("KillingField2D: unknown kind '" + head + "'");
}

std::array<double, 2> KillingField2D::X(double x, double y) const {
  if (kind == Kind::Translation) return v;
  return {-(y - p[1]), x - p[0]};
}

std::array<double, 4> KillingField2D::grad(double, double) const {
  if (kind == Kind::Translation) return {0, 0, 0, 0};
  return {0, -1, 1, 0};
}

std::string KillingField2D::describe() const {
  std::ostringstream os;
  if (kind == Kind::Translation)
    os << "translate:" << v[0] << "," << v[1];
  else
    os << "rotate:" << p[0] << "," << p[1];
  return os.str();
}

// ---------------------------------------------------------------------------
// Mask
// ---------------------------------------------------------------------------

Mask Mask::all() { return Mask{}; }

Mask Mask::rect(double x0, double x1, double y0, double y1) {
  Mask m;
  std::ostringstream os;
  os << "rect[" << x0 << "," << x1 << "]x[" << y0 << "," << y1 << "]";
  m.name = os.str();
  m.contains = [=](double x, double y) {
    return x >= x0 && x <= x1 && y >= y0 && y <= y1;
  };
  return m;
}

Mask Mask::disk(double cx, double cy, double r) {
  Mask m;
  std::ostringstream os;
  os << "disk(" << cx << "," << cy << ";" << r << ")";
  m.name = os.str();
  m.contains = [=](double x, double y) { return std::hypot(x - cx, y - cy) <= r; };
  return m;
}

// ---------------------------------------------------------------------------
// assemble_A
// ---------------------------------------------------------------------------

std::vector<TensorSample> assemble_A(const GridField& field, const OperatorProfile& profile) {
  if (profile.regularity_class() == RegularityClass::A)
    throw InapplicableError("assemble_A: profile '" + profile.name() +
                            "' is only class A; the tensor degenerates at zero gradient");
  const Grid& g = field.grid();
  std::vector<TensorSample> out;
  for_each_full_cell(field, [&](const CellSample& c) {
    const double s = std::hypot(c.gx, c.gy);
    if (!(s < profile.t_max()) || profile.lambda1(s) < 1e-12)
      throw RegimeError("assemble_A: lambda1 degenerate on cell at (" +
                        std::to_string(c.cx) + ", " + std::to_string(c.cy) + ")");
    TensorSample t;
    t.i = c.i;
    t.j = c.j;
    t.cx = c.cx;
    t.cy = c.cy;
    t.gx = c.gx;
    t.gy = c.gy;
    t.A = matrix_A(profile, c.gx, c.gy);
    out.push_back(t);
  });
  (void)g;
  return out;
}

// ---------------------------------------------------------------------------
// stability_lambda1
// ---------------------------------------------------------------------------

namespace {

// Q1 element stiffness for a constant 2x2 tensor on an h x h cell, 2x2 Gauss.
// Node order within the cell: 00, 10, 01, 11.
void cell_stiffness(const MatA& A, double h, double K[4][4]) {
  static const double gp = 0.5 - 0.5 / std::sqrt(3.0);  // Gauss points on [0,1]
  const double q[2] = {gp, 1.0 - gp};
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) K[r][c] = 0.0;
  for (int ix = 0; ix < 2; ++ix) {
    for (int iy = 0; iy < 2; ++iy) {
      const double X = q[ix], Y = q[iy];
      // Shape gradients of the bilinear basis on the unit cell, scaled by 1/h.
      const double dx[4] = {-(1 - Y) / h, (1 - Y) / h, -Y / h, Y / h};
      const double dy[4] = {-(1 - X) / h, -X / h, (1 - X) / h, X / h};
      const double wq = 0.25 * h * h;  // Gauss weight times Jacobian
      for (int r = 0; r < 4; ++r) {
        const double Ax = A.xx * dx[r] + A.xy * dy[r];
        const double Ay = A.xy * dx[r] + A.yy * dy[r];
        for (int c = 0; c < 4; ++c) K[r][c] += wq * (Ax * dx[c] + Ay * dy[c]);
      }
    }
  }
}

} // namespace

StabilityReport stability_lambda1(const GridField& field, const OperatorProfile& profile,
                                  const SourceTerm& source, const Mask& mask) {
  const Grid& g = field.grid();
  StabilityReport rep;
  rep.mask_name = mask.name;

  // Active cells: all four corners are interior nodes inside the mask.
  std::vector<char> active(static_cast<std::size_t>(g.nx) * g.ny, 0);
  std::vector<int> cell_count(g.type.size(), 0);  // active cells touching a node
  for (int j = 0; j + 1 < g.ny; ++j) {
    for (int i = 0; i + 1 < g.nx; ++i) {
      bool ok = true;
      for (int dj = 0; dj < 2 && ok; ++dj)
        for (int di = 0; di < 2 && ok; ++di) {
          const int flat = g.idx(i + di, j + dj);
          ok = g.type[flat] == NodeType::Interior && mask(g.x_of(i + di), g.y_of(j + dj));
        }
      if (!ok) continue;
      active[g.idx(i, j)] = 1;
      for (int dj = 0; dj < 2; ++dj)
        for (int di = 0; di < 2; ++di) ++cell_count[g.idx(i + di, j + dj)];
    }
  }
  // Free nodes carry all four incident cells (zero values elsewhere).
  std::vector<int> row_of(g.type.size(), -1);
  std::vector<int>& flat_of = rep.free_flat;
  for (int j = 1; j + 1 < g.ny; ++j)
    for (int i = 1; i + 1 < g.nx; ++i) {
      const int flat = g.idx(i, j);
      if (cell_count[flat] == 4) {
        row_of[flat] = static_cast<int>(flat_of.size());
        flat_of.push_back(flat);
      }
    }
  const int n = static_cast<int>(flat_of.size());
  rep.free_nodes = n;
  if (n == 0)
    throw InapplicableError("stability_lambda1: mask '" + mask.name +
                            "' contains no interior nodes with full neighbourhoods");

  // Assemble K over active cells; A at the cell center, reaction term lumped.
  std::vector<Eigen::Triplet<double>> trips;
  const double h = g.h;
  double Kc[4][4];
  for (int j = 0; j + 1 < g.ny; ++j) {
    for (int i = 0; i + 1 < g.nx; ++i) {
      if (!active[g.idx(i, j)]) continue;
      const double u00 = field.at(g.idx(i, j)), u10 = field.at(g.idx(i + 1, j));
      const double u01 = field.at(g.idx(i, j + 1)), u11 = field.at(g.idx(i + 1, j + 1));
      const double gx = (u10 + u11 - u00 - u01) / (2 * h);
      const double gy = (u01 + u11 - u00 - u10) / (2 * h);
      const double s = std::hypot(gx, gy);
      if (!(s < profile.t_max()) || profile.lambda1(s) < 1e-12)
        throw RegimeError("stability_lambda1: lambda1 degenerate inside the mask");
      cell_stiffness(matrix_A(profile, gx, gy), h, Kc);
      const int corner[4] = {g.idx(i, j), g.idx(i + 1, j), g.idx(i, j + 1),
                             g.idx(i + 1, j + 1)};
      for (int r = 0; r < 4; ++r) {
        if (row_of[corner[r]] < 0) continue;
        for (int c = 0; c < 4; ++c) {
          if (row_of[corner[c]] < 0) continue;
          trips.emplace_back(row_of[corner[r]], row_of[corner[c]], Kc[r][c]);
        }
        // Lumped reaction: each active cell contributes h^2/4 per corner.
        trips.emplace_back(row_of[corner[r]], row_of[corner[r]],
                           -source.f_prime(field.at(corner[r])) * h * h / 4.0);
      }
    }
  }
  Eigen::SparseMatrix<double> K(n, n);
  K.setFromTriplets(trips.begin(), trips.end());
  const double mass = h * h;  // lumped mass per free node

  // Inverse power iteration on (K - shift*M).
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  double shift = 0.0;
  auto factor = [&](double s) -> bool {
    Eigen::SparseMatrix<double> Ks = K;
    if (s != 0.0) {
      Eigen::SparseMatrix<double> M(n, n);
      M.setIdentity();
      Ks -= (s * mass) * M;
    }
    lu.compute(Ks);
    return lu.info() == Eigen::Success;
  };
  if (!factor(0.0)) {
    // Singular stiffness at zero shift: retry slightly below zero.
    double scale = 0.0;
    for (int k = 0; k < K.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(K, k); it; ++it)
        scale = std::max(scale, std::abs(it.value()));
    shift = -1e-8 * std::max(1.0, scale / mass);
    if (!factor(shift))
      throw NonConvergenceError("stability_lambda1: factorization failed even with shift",
                                {shift});
  }
  rep.shift = shift;

  Eigen::VectorXd phi = Eigen::VectorXd::Constant(n, 1.0);
  // Seed with a bump so symmetric modes are reachable.
  for (int r = 0; r < n; ++r) {
    const int flat = flat_of[r];
    phi[r] = 1.0 + 0.01 * std::sin(0.7 * (flat % g.nx)) * std::cos(0.3 * (flat / g.nx));
  }
  phi /= phi.norm();
  double lambda = 0.0, lambda_prev = std::numeric_limits<double>::max();
  for (int it = 0; it < 500; ++it) {
    Eigen::VectorXd z = lu.solve(mass * phi);
    const double zn = z.norm();
    if (!(zn > 0) || !std::isfinite(zn))
      throw NonConvergenceError("stability_lambda1: inverse iteration collapsed", {});
    phi = z / zn;
    const Eigen::VectorXd Kphi = K * phi;
    lambda = phi.dot(Kphi) / (mass * phi.squaredNorm());
    rep.iterations = it + 1;
    if (std::abs(lambda - lambda_prev) <= 1e-10 * (1.0 + std::abs(lambda))) break;
    lambda_prev = lambda;
  }
  rep.lambda_min = lambda;
  rep.eigenvector.assign(phi.data(), phi.data() + n);
  return rep;
}

// ---------------------------------------------------------------------------
// killing_derivative
// ---------------------------------------------------------------------------

KillingDerivative killing_derivative(const GridField& field, const OperatorProfile& profile,
                                     const SourceTerm& source, const KillingField2D& X) {
  const Grid& g = field.grid();
  KillingDerivative out{GridField(field.grid_ptr()), 0.0, 0};
  GridField& w = out.w;

  for (int flat : g.interior) {
    const double x = g.x_of(flat % g.nx), y = g.y_of(flat / g.nx);
    const auto Xv = X.X(x, y);
    w.at(flat) = field.deriv_x(flat) * Xv[0] + field.deriv_y(flat) * Xv[1];
  }

  // Residual of the linearized equation at nodes at least two cells inside:
  // the 5x5 neighbourhood must be interior so every stencil piece is uniform.
  const int nx = g.nx;
  auto deep_interior = [&](int flat) {
    const int i = flat % nx, j = flat / nx;
    if (i < 2 || i >= nx - 2 || j < 2 || j >= g.ny - 2) return false;
    for (int dj = -2; dj <= 2; ++dj)
      for (int di = -2; di <= 2; ++di)
        if (g.type[g.idx(i + di, j + dj)] != NodeType::Interior) return false;
    return true;
  };

  const double h = g.h;
  auto cy = [&](const GridField& f, int flat) {  // central d/dy on the uniform stencil
    return (f.at(flat + nx) - f.at(flat - nx)) / (2 * h);
  };
  auto cx = [&](const GridField& f, int flat) {
    return (f.at(flat + 1) - f.at(flat - 1)) / (2 * h);
  };

  for (int flat : g.interior) {
    if (!deep_interior(flat)) continue;
    // Edge fluxes of w with A frozen at u's edge gradients.
    double div = 0.0;
    for (int dir = 0; dir < 4; ++dir) {
      const int step = (dir == 0) ? -1 : (dir == 1) ? 1 : (dir == 2) ? -nx : nx;
      const int axis = dir < 2 ? 0 : 1;
      const double sign = (dir == 1 || dir == 3) ? 1.0 : -1.0;
      const int q = flat + step;
      const double gun = sign * (field.at(q) - field.at(flat)) / h;
      const double gut = axis == 0 ? 0.5 * (cy(field, flat) + cy(field, q))
                                   : 0.5 * (cx(field, flat) + cx(field, q));
      const MatA A = axis == 0 ? matrix_A(profile, gun, gut) : matrix_A(profile, gut, gun);
      const double gwn = sign * (w.at(q) - w.at(flat)) / h;
      const double gwt = axis == 0 ? 0.5 * (cy(w, flat) + cy(w, q))
                                   : 0.5 * (cx(w, flat) + cx(w, q));
      const double Ann = axis == 0 ? A.xx : A.yy;
      const double flux = Ann * gwn + A.xy * gwt;
      div += sign * flux / h;
    }
    const double r = std::abs(div + source.f_prime(field.at(flat)) * w.at(flat));
    out.sup_residual = std::max(out.sup_residual, r);
    ++out.nodes_checked;
  }
  return out;
}

// ---------------------------------------------------------------------------
// sign_trichotomy_check
// ---------------------------------------------------------------------------

std::string sign_class_name(SignClass s) {
  switch (s) {
    case SignClass::IdenticallyZero: return "IdenticallyZero";
    case SignClass::Positive: return "Positive";
    case SignClass::Negative: return "Negative";
    default: return "Mixed";
  }
}

SignClass sign_trichotomy_check(const GridField& w, const Mask& mask, double tol) {
  const Grid& g = w.grid();
  double sup = -std::numeric_limits<double>::infinity();
  double inf = std::numeric_limits<double>::infinity();
  double grad_scale = 0.0;
  bool any = false;
  for (int flat : g.interior) {
    const double x = g.x_of(flat % g.nx), y = g.y_of(flat / g.nx);
    if (!mask(x, y)) continue;
    const double v = w.at(flat);
    if (!std::isfinite(v)) continue;
    any = true;
    sup = std::max(sup, v);
    inf = std::min(inf, v);
    if (tol <= 0) {
      const double dx = w.deriv_x(flat), dy = w.deriv_y(flat);
      if (std::isfinite(dx) && std::isfinite(dy))
        grad_scale = std::max(grad_scale, std::hypot(dx, dy));
    }
  }
  if (!any) throw InapplicableError("sign_trichotomy_check: no masked interior values");
  if (tol <= 0) tol = 10.0 * g.h * g.h * std::max(1.0, grad_scale);
  const bool has_pos = sup > tol, has_neg = inf < -tol;
  if (!has_pos && !has_neg) return SignClass::IdenticallyZero;
  if (has_pos && !has_neg) return SignClass::Positive;
  if (!has_pos && has_neg) return SignClass::Negative;
  return SignClass::Mixed;
}

} // namespace caplab
