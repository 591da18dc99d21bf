#include "caplab/elliptic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "caplab/errors.hpp"
#include "caplab/profile_ode.hpp"

namespace caplab {

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();
const double kInf = std::numeric_limits<double>::infinity();

// First-derivative coefficients on (west, here, east) with spacings a, b.
struct D1 {
  double cw, cp, ce;
};
D1 d1_coeffs(double a, double b) {
  return {-b / (a * (a + b)), (b - a) / (a * b), a / (b * (a + b))};
}

// The discrete system: unknowns at interior nodes, Dirichlet values at
// boundary points, optional zero-flux (reflected) artificial arms.
struct System {
  const Grid& g;
  const OperatorProfile& prof;
  const SourceTerm& src;
  std::vector<int> row_of;       // lattice flat -> unknown row (-1 fixed/outside)
  std::vector<int> flat_of;      // row -> lattice flat
  std::vector<double> bvals;     // per bpoint; NaN on reflected artificial points
  std::vector<char> reflect;     // per bpoint: arm flux suppressed
  double guard_slope;            // 0.999 * t_max
  int n = 0;

  System(const Grid& grid, const OperatorProfile& p, const SourceTerm& s)
      : g(grid), prof(p), src(s) {
    row_of.assign(g.type.size(), -1);
    for (int flat : g.interior) {
      row_of[flat] = n++;
      flat_of.push_back(flat);
    }
    bvals.assign(g.bpoints.size(), kNaN);
    reflect.assign(g.bpoints.size(), 0);
    guard_slope = 0.999 * prof.t_max();
    if (!std::isfinite(guard_slope)) guard_slope = kInf;
  }

  int arm_step(int dir) const {
    switch (dir) {
      case 0: return -1;
      case 1: return 1;
      case 2: return -g.nx;
      default: return g.nx;
    }
  }

  // Value at the far end of an arm.  Reflected artificial arms mirror the
  // opposite neighbour (zero-flux symmetry).
  double node_or_bval(const std::vector<double>& u_lat, int flat, int dir) const {
    const Arm& a = g.arms[4 * flat + dir];
    if (a.bindex < 0) return u_lat[flat + arm_step(dir)];
    if (!reflect[a.bindex]) return bvals[a.bindex];
    const int opp = dir ^ 1;
    const Arm& o = g.arms[4 * flat + opp];
    if (o.bindex < 0) return u_lat[flat + arm_step(opp)];
    if (!reflect[o.bindex]) return bvals[o.bindex];
    return u_lat[flat];
  }

  // Arm-aware first derivative of u along the given axis (0 = x, 1 = y) at an
  // interior node.
  double transverse(const std::vector<double>& u_lat, int flat, int axis) const {
    const int dlo = axis == 0 ? 0 : 2, dhi = axis == 0 ? 1 : 3;
    const double a = g.arms[4 * flat + dlo].theta * g.h;
    const double b = g.arms[4 * flat + dhi].theta * g.h;
    const D1 c = d1_coeffs(a, b);
    return c.cw * node_or_bval(u_lat, flat, dlo) + c.cp * u_lat[flat] +
           c.ce * node_or_bval(u_lat, flat, dhi);
  }

  // Jacobian rows of transverse() with respect to interior unknowns.
  void transverse_terms(int flat, int axis, double w,
                        std::vector<std::pair<int, double>>& out) const {
    const int dlo = axis == 0 ? 0 : 2, dhi = axis == 0 ? 1 : 3;
    const Arm& lo = g.arms[4 * flat + dlo];
    const Arm& hi = g.arms[4 * flat + dhi];
    const double a = lo.theta * g.h, b = hi.theta * g.h;
    const D1 c = d1_coeffs(a, b);
    const int step = axis == 0 ? 1 : g.nx;
    auto endpoint = [&](const Arm& arm, int own_step, double coeff) {
      if (arm.bindex < 0) {
        if (row_of[flat + own_step] >= 0)
          out.emplace_back(row_of[flat + own_step], w * coeff);
      } else if (reflect[arm.bindex]) {
        // Mirrored endpoint: the coefficient lands on the opposite neighbour.
        const Arm& o = g.arms[4 * flat + (own_step == step ? dlo : dhi)];
        if (o.bindex < 0 && row_of[flat - own_step] >= 0)
          out.emplace_back(row_of[flat - own_step], w * coeff);
        else if (o.bindex >= 0 && reflect[o.bindex])
          out.emplace_back(row_of[flat], w * coeff);
      }
    };
    endpoint(lo, -step, c.cw);
    out.emplace_back(row_of[flat], w * c.cp);
    endpoint(hi, step, c.ce);
  }

  struct Edge {
    double flux = 0;     // a(|g|) * g_normal
    double gx = 0, gy = 0;
    bool valid = true;
    bool suppressed = false;  // reflected artificial arm: flux = 0
  };

  // Flux through an arm of an interior node.  dir in {0..3}; the normal axis
  // is x for W/E arms and y for S/N.
  Edge edge(const std::vector<double>& u_lat, int flat, int dir) const {
    Edge e;
    const Arm& arm = g.arms[4 * flat + dir];
    if (arm.bindex >= 0 && reflect[arm.bindex]) {
      e.suppressed = true;
      return e;
    }
    const int axis = dir < 2 ? 0 : 1;
    const double d = arm.theta * g.h;
    const double uP = u_lat[flat];
    const double uQ = node_or_bval(u_lat, flat, dir);
    const double sign = (dir == 1 || dir == 3) ? 1.0 : -1.0;
    // Outward-oriented normal gradient: (uQ - uP)/d toward E/N, reversed W/S.
    const double gn = sign * (uQ - uP) / d;
    double gt;
    if (arm.bindex < 0) {
      gt = 0.5 * (transverse(u_lat, flat, 1 - axis) +
                  transverse(u_lat, flat + arm_step(dir), 1 - axis));
    } else {
      gt = transverse(u_lat, flat, 1 - axis);
    }
    e.gx = axis == 0 ? gn : gt;
    e.gy = axis == 0 ? gt : gn;
    const double s = std::hypot(e.gx, e.gy);
    if (!(s < guard_slope) || !std::isfinite(s)) {
      e.valid = false;
      return e;
    }
    if (prof.lambda1(s) < 1e-12) {
      e.valid = false;
      return e;
    }
    e.flux = prof.a(s) * gn;
    return e;
  }

  // Divergence scale factors at an interior node.
  double dx_avg(int flat) const {
    return 0.5 * (g.arms[4 * flat + 0].theta + g.arms[4 * flat + 1].theta) * g.h;
  }
  double dy_avg(int flat) const {
    return 0.5 * (g.arms[4 * flat + 2].theta + g.arms[4 * flat + 3].theta) * g.h;
  }

  // Residual at one interior node; +inf when any edge left the regime.
  double node_residual(const std::vector<double>& u_lat, int flat) const {
    double div = 0.0;
    for (int dir = 0; dir < 4; ++dir) {
      const Edge e = edge(u_lat, flat, dir);
      if (e.suppressed) continue;
      if (!e.valid) return kInf;
      const double scale = (dir < 2) ? dx_avg(flat) : dy_avg(flat);
      // edge() returns cartesian flux components: E/N enter with +, W/S with -.
      div += ((dir == 1 || dir == 3) ? e.flux : -e.flux) / scale;
    }
    return div + src.f(u_lat[flat]);
  }

  double sup_residual(const std::vector<double>& u_lat) const {
    double sup = 0.0;
    for (int flat : g.interior) {
      const double r = std::abs(node_residual(u_lat, flat));
      if (!(r <= sup)) sup = r;  // propagates NaN/inf
      if (!std::isfinite(sup)) return kInf;
    }
    return sup;
  }

  // Assembles the Jacobian (triplets) and residual vector.  The state must be
  // valid (finite sup_residual).
  void assemble(const std::vector<double>& u_lat,
                std::vector<Eigen::Triplet<double>>& trips,
                Eigen::VectorXd& phi) const {
    trips.clear();
    phi.resize(n);
    std::vector<std::pair<int, double>> dgt;  // d(transverse)/d(unknowns)
    for (int row = 0; row < n; ++row) {
      const int flat = flat_of[row];
      double div = 0.0;
      for (int dir = 0; dir < 4; ++dir) {
        const Arm& arm = g.arms[4 * flat + dir];
        if (arm.bindex >= 0 && reflect[arm.bindex]) continue;
        const Edge e = edge(u_lat, flat, dir);
        const int axis = dir < 2 ? 0 : 1;
        const double d = arm.theta * g.h;
        const double scale = (dir < 2) ? dx_avg(flat) : dy_avg(flat);
        const double sign = (dir == 1 || dir == 3) ? 1.0 : -1.0;
        div += sign * e.flux / scale;
        // dF/d(g_normal), dF/d(g_transverse) from the tensor A(g).
        const MatA A = matrix_A(prof, e.gx, e.gy);
        const double dF_dgn = (axis == 0) ? A.xx : A.yy;
        const double dF_dgt = A.xy;
        // g_normal = sign * (uQ - uP)/d; the edge enters the divergence as
        // sign * flux / scale, so the sign squares away on the normal part.
        trips.emplace_back(row, row, -dF_dgn / (scale * d));
        if (arm.bindex < 0) {
          const int q = flat + arm_step(dir);
          if (row_of[q] >= 0)
            trips.emplace_back(row, row_of[q], dF_dgn / (scale * d));
        }
        // transverse part
        dgt.clear();
        if (arm.bindex < 0) {
          transverse_terms(flat, 1 - axis, 0.5, dgt);
          transverse_terms(flat + arm_step(dir), 1 - axis, 0.5, dgt);
        } else {
          transverse_terms(flat, 1 - axis, 1.0, dgt);
        }
        for (const auto& [col, w] : dgt)
          trips.emplace_back(row, col, (sign * dF_dgt / scale) * w);
      }
      phi[row] = div + src.f(u_lat[flat]);
      trips.emplace_back(row, row, src.f_prime(u_lat[flat]));
    }
  }
};

// Restores a solved field's boundary state (Dirichlet traces plus any
// zero-flux truncation arms recorded in the metadata note).
void adopt_field_state(System& sys, const GridField& field) {
  sys.bvals = field.bvalues();
  if (field.meta().note.find("artificial:reflect") != std::string::npos)
    for (std::size_t k = 0; k < sys.g.bpoints.size(); ++k)
      if (sys.g.bpoints[k].comp == 0) sys.reflect[k] = 1;
}

// Fills Dirichlet values (and artificial-edge policy) into the system.
void set_boundary_data(System& sys, const SolveOptions& opt,
                       const OperatorProfile& prof, const SourceTerm& src) {
  const Grid& g = sys.g;
  const DomainSpec2D& spec = g.spec;
  ArtificialPolicy pol = opt.artificial;
  if (pol == ArtificialPolicy::Auto)
    pol = (spec.shape == ShapeKind::Strip || spec.shape == ShapeKind::Slab)
              ? ArtificialPolicy::ProfileExtension
              : ArtificialPolicy::Reflect;

  for (std::size_t k = 0; k < g.bpoints.size(); ++k) {
    const BPoint& bp = g.bpoints[k];
    if (bp.comp == 0) continue;
    const BoundaryComponent* comp = spec.component(bp.comp);
    double v = comp ? comp->b : 0.0;
    if (opt.dirichlet_override) v = opt.dirichlet_override(bp.comp, bp.x, bp.y);
    sys.bvals[k] = v;
  }

  // Artificial truncation edges.
  bool any_artificial = false;
  for (const BPoint& bp : g.bpoints)
    if (bp.comp == 0) any_artificial = true;
  if (!any_artificial) return;

  if (pol == ArtificialPolicy::Reflect) {
    for (std::size_t k = 0; k < g.bpoints.size(); ++k)
      if (g.bpoints[k].comp == 0) sys.reflect[k] = 1;
    return;
  }

  // ProfileExtension: one section profile per truncation end (strip/slab
  // walls are x-graphs, the truncation lines are y = const).
  if (spec.shape != ShapeKind::Strip && spec.shape != ShapeKind::Slab)
    throw InapplicableError("profile-extension artificial data needs a strip or slab domain");
  const BoundaryComponent* c1 = spec.component(1);
  const BoundaryComponent* c2 = spec.component(2);
  const double b1 = c1 ? c1->b : 0.0;
  const double b2 = c2 ? c2->b : 0.0;
  for (int end = 0; end < 2; ++end) {
    const double yend = spec.y_extent[end];
    double xl, xr;
    if (spec.shape == ShapeKind::Strip) {
      xl = 0.0;
      xr = spec.T;
    } else {
      xl = spec.phi1(yend);
      xr = spec.phi2(yend);
    }
    double bl = b1, br = b2;
    if (opt.dirichlet_override) {
      bl = opt.dirichlet_override(1, xl, yend);
      br = opt.dirichlet_override(2, xr, yend);
    }
    SectionProfile sec = solve_section_bvp(prof, src, xl, xr, bl, br, g.h / 4.0);
    const double ymid = 0.5 * (spec.y_extent[0] + spec.y_extent[1]);
    for (std::size_t k = 0; k < g.bpoints.size(); ++k) {
      const BPoint& bp = g.bpoints[k];
      if (bp.comp != 0) continue;
      const bool lower = bp.y < ymid;
      if ((end == 0) != lower) continue;
      sys.bvals[k] = sec.eval(bp.x);
    }
  }
}

} // namespace

// ---------------------------------------------------------------------------
// solve_dirichlet
// ---------------------------------------------------------------------------

namespace {

// One Newton solve (shared by the harmonic initializer and the main loop).
struct NewtonOutcome {
  int iters = 0;
  double final_residual = 0;
  std::vector<double> history;
};

NewtonOutcome newton_loop(System& sys, std::vector<double>& u_lat,
                          const SolveOptions& opt) {
  NewtonOutcome out;
  Eigen::SparseMatrix<double> J(sys.n, sys.n);
  Eigen::VectorXd phi(sys.n);
  std::vector<Eigen::Triplet<double>> trips;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  bool analyzed = false;

  double res = sys.sup_residual(u_lat);
  out.history.push_back(res);
  if (!std::isfinite(res))
    throw RegimeError("solve_dirichlet: initial state outside the elliptic regime");

  for (int it = 0; it < opt.max_iter; ++it) {
    if (res <= opt.tol) {
      out.final_residual = res;
      return out;
    }
    sys.assemble(u_lat, trips, phi);
    J.setFromTriplets(trips.begin(), trips.end());
    if (!analyzed) {
      lu.analyzePattern(J);
      analyzed = true;
    }
    lu.factorize(J);
    if (lu.info() != Eigen::Success)
      throw NonConvergenceError("solve_dirichlet: singular Jacobian", out.history);
    Eigen::VectorXd delta = lu.solve(-phi);

    // Damping: halve until the residual decreases; accept at the floor if the
    // state is at least inside the regime.
    double t = 1.0;
    std::vector<double> trial = u_lat;
    double trial_res = kInf;
    while (true) {
      for (int r = 0; r < sys.n; ++r)
        trial[sys.flat_of[r]] = u_lat[sys.flat_of[r]] + t * delta[r];
      trial_res = sys.sup_residual(trial);
      if (trial_res < res) break;
      if (t <= opt.damping_floor) break;
      t *= 0.5;
    }
    if (!std::isfinite(trial_res))
      throw RegimeError("solve_dirichlet: ellipticity lost (step rejected down to the damping floor)");
    u_lat = trial;
    res = trial_res;
    out.history.push_back(res);
    out.iters = it + 1;
  }
  if (res <= opt.tol) {
    out.final_residual = res;
    return out;
  }
  throw NonConvergenceError("solve_dirichlet: no convergence after " +
                                std::to_string(opt.max_iter) + " iterations (residual " +
                                std::to_string(res) + ")",
                            out.history);
}

} // namespace

GridField solve_dirichlet(const OperatorProfile& profile, const SourceTerm& source,
                          std::shared_ptr<const Grid> grid, const SolveOptions& options) {
  if (profile.regularity_class() == RegularityClass::A)
    throw InapplicableError("solve_dirichlet: profile '" + profile.name() +
                            "' is only class A; the solver needs lambda1 > 0 near slope 0");
  const Grid& g = *grid;

  System sys(g, profile, source);
  set_boundary_data(sys, options, profile, source);

  // Lattice state: Dirichlet values at boundary lattice nodes, zero elsewhere.
  std::vector<double> u_lat(g.type.size(), 0.0);
  auto push_boundary_nodes = [&](std::vector<double>& lat) {
    for (std::size_t flat = 0; flat < g.type.size(); ++flat) {
      if (g.type[flat] != NodeType::Boundary) continue;
      const int b = g.bpoint_of_node[flat];
      if (b >= 0 && std::isfinite(sys.bvals[b])) lat[flat] = sys.bvals[b];
    }
  };
  push_boundary_nodes(u_lat);

  // Harmonic initial guess: same discretization with a == 1, f == 0 (a linear
  // problem, so the Newton loop converges in one step).
  {
    OperatorProfile laplace = OperatorProfile::custom(
        "laplace_init", [](double) { return 1.0; }, [](double) { return 0.0; },
        RegularityClass::ASuperStrong);
    SourceTerm zero = SourceTerm::zero();
    System hsys(g, laplace, zero);
    hsys.bvals = sys.bvals;
    hsys.reflect = sys.reflect;
    SolveOptions hopt;
    hopt.max_iter = 3;
    hopt.tol = 1e-9;
    try {
      newton_loop(hsys, u_lat, hopt);
    } catch (const NonConvergenceError&) {
      // Harmonic warm start is best-effort; fall through with whatever state
      // the loop reached.
    }
  }
  if (!std::isfinite(sys.sup_residual(u_lat))) {
    // Steep warm start: fall back to the flat mean of the Dirichlet data.
    double mean = 0;
    int cnt = 0;
    for (double v : sys.bvals)
      if (std::isfinite(v)) {
        mean += v;
        ++cnt;
      }
    mean = cnt ? mean / cnt : 0.0;
    std::fill(u_lat.begin(), u_lat.end(), mean);
    push_boundary_nodes(u_lat);
  }

  NewtonOutcome out = newton_loop(sys, u_lat, options);

  GridField field(grid);
  for (std::size_t flat = 0; flat < g.type.size(); ++flat)
    if (g.type[flat] != NodeType::Outside) field.at(static_cast<int>(flat)) = u_lat[flat];
  for (std::size_t k = 0; k < g.bpoints.size(); ++k) {
    if (std::isfinite(sys.bvals[k])) {
      field.bvalue(static_cast<int>(k)) = sys.bvals[k];
    } else {
      // Reflected artificial point: mirror the nearest inward lattice value so
      // interpolation near the truncation edge stays usable.
      const BPoint& bp = g.bpoints[k];
      const int i = static_cast<int>(std::lround((bp.x - g.x0) / g.h + bp.nx));
      const int j = static_cast<int>(std::lround((bp.y - g.y0) / g.h + bp.ny));
      double v = kNaN;
      if (g.is_interior(i, j)) v = u_lat[g.idx(i, j)];
      if (!std::isfinite(v) && bp.owner >= 0) v = u_lat[bp.owner];
      field.bvalue(static_cast<int>(k)) = v;
    }
  }
  // Reflected artificial lattice nodes also mirror inward for interpolation.
  for (std::size_t flat = 0; flat < g.type.size(); ++flat) {
    if (g.type[flat] != NodeType::Boundary) continue;
    const int b = g.bpoint_of_node[flat];
    if (b >= 0 && !std::isfinite(sys.bvals[b]))
      field.at(static_cast<int>(flat)) = field.bvalue(b);
  }

  field.meta().profile = profile.name();
  field.meta().source = source.name();
  field.meta().newton_iters = out.iters;
  field.meta().final_residual = out.final_residual;
  bool any_reflect = false;
  for (char r : sys.reflect) any_reflect |= (r != 0);
  if (any_reflect) field.meta().note = "artificial:reflect";
  return field;
}

double residual(const GridField& field, const OperatorProfile& profile,
                const SourceTerm& source) {
  System sys(field.grid(), profile, source);
  adopt_field_state(sys, field);
  return sys.sup_residual(field.values());
}

// ---------------------------------------------------------------------------
// neumann_trace
// ---------------------------------------------------------------------------

const NeumannComponent* NeumannReport::find(int comp) const {
  for (const auto& c : components)
    if (c.comp == comp) return &c;
  return nullptr;
}

NeumannReport neumann_trace(const GridField& field) {
  const Grid& g = field.grid();
  NeumannReport rep;
  for (int id : g.spec.real_component_ids()) {
    if (id >= static_cast<int>(g.comp_bpoints.size())) continue;
    const auto& list = g.comp_bpoints[id];
    NeumannComponent comp;
    comp.comp = id;
    comp.traces.reserve(list.size());
    double wsum = 0, acc = 0;
    for (int b : list) {
      // Corner points carry a bisector normal; their directional derivative
      // measures a mixed direction and is left out of the statistics.
      const double t = g.bpoints[b].corner ? kNaN : field.boundary_inward_derivative(b);
      comp.traces.push_back(t);
      if (std::isfinite(t)) {
        const double w = g.bpoints[b].hweight;
        acc += w * t;
        wsum += w;
      }
    }
    comp.mean = wsum > 0 ? acc / wsum : kNaN;
    for (double t : comp.traces)
      if (std::isfinite(t))
        comp.max_dev = std::max(comp.max_dev, std::abs(t - comp.mean));
    rep.components.push_back(std::move(comp));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// solve_section_bvp and radial_solve
// ---------------------------------------------------------------------------

double SectionProfile::eval(double xq) const {
  if (x.empty()) return kNaN;
  if (xq <= x.front()) return u.front();
  if (xq >= x.back()) return u.back();
  const auto it = std::upper_bound(x.begin(), x.end(), xq);
  const std::size_t k = static_cast<std::size_t>(it - x.begin());
  const double t = (xq - x[k - 1]) / (x[k] - x[k - 1]);
  return (1 - t) * u[k - 1] + t * u[k];
}

double SectionProfile::eval_slope(double xq) const {
  if (x.empty()) return kNaN;
  if (xq <= x.front()) return uprime.front();
  if (xq >= x.back()) return uprime.back();
  const auto it = std::upper_bound(x.begin(), x.end(), xq);
  const std::size_t k = static_cast<std::size_t>(it - x.begin());
  const double t = (xq - x[k - 1]) / (x[k] - x[k - 1]);
  return (1 - t) * uprime[k - 1] + t * uprime[k];
}

SectionProfile solve_section_bvp(const OperatorProfile& profile, const SourceTerm& source,
                                 double x_left, double x_right, double b_left,
                                 double b_right, double step) {
  if (!(x_right > x_left))
    throw std::invalid_argument("solve_section_bvp: need x_left < x_right");
  const double L = x_right - x_left;

  auto endpoint_gap = [&](double c) -> double {
    ProfileSolution sol = shoot(profile, source, b_left, c, {0.0, L}, step);
    if (sol.t_grid.back() < L - 1e-12) {
      // Terminated early; the sign of the slope says which way it ran off.
      return sol.u_prime.back() >= 0 ? kInf : -kInf;
    }
    return sol.u.back() - b_right;
  };

  // endpoint_gap is increasing in c (comparison); bracket a sign change.
  const double cmax = std::isfinite(profile.t_max()) ? 0.999 * profile.t_max() : 1e6;
  double g0 = endpoint_gap(0.0);
  double lo, hi;
  if (g0 == 0.0) {
    lo = hi = 0.0;
  } else if (g0 < 0.0) {
    lo = 0.0;
    hi = std::min(1.0, cmax);
    while (endpoint_gap(hi) < 0.0) {
      if (hi >= cmax)
        throw NonConvergenceError("solve_section_bvp: failed to bracket the slope");
      hi = std::min(2.0 * hi, cmax);
    }
  } else {
    hi = 0.0;
    lo = -std::min(1.0, cmax);
    while (endpoint_gap(lo) > 0.0) {
      if (lo <= -cmax)
        throw NonConvergenceError("solve_section_bvp: failed to bracket the slope");
      lo = std::max(2.0 * lo, -cmax);
    }
  }
  double c = 0.0;
  if (lo != hi) {
    for (int it = 0; it < 200; ++it) {
      c = 0.5 * (lo + hi);
      const double gm = endpoint_gap(c);
      if (std::abs(gm) <= 1e-13 && std::isfinite(gm)) break;
      if (gm > 0)
        hi = c;
      else
        lo = c;
      if (hi - lo < 1e-16 * (1.0 + std::abs(c))) break;
    }
  }

  ProfileSolution sol = shoot(profile, source, b_left, c, {0.0, L}, step);
  SectionProfile sec;
  sec.x_left = x_left;
  sec.x_right = x_right;
  sec.c_left = c;
  sec.x.reserve(sol.t_grid.size());
  for (double t : sol.t_grid) sec.x.push_back(x_left + t);
  sec.u = sol.u;
  sec.uprime = sol.u_prime;
  return sec;
}

namespace {

// Radial shoot from r=0 with u(0)=u0, u'(0)=0; returns the solution on [0,R]
// or a truncated one when the regime ends.
RadialSolution radial_shoot(const OperatorProfile& prof, const SourceTerm& src,
                            double u0, double R, double step) {
  RadialSolution out;
  const double tmax = prof.t_max();
  // Start with the symmetric expansion u(d) = u0 + d^2/2 * u''(0),
  // u''(0) = -f(u0)/(lambda1(0) + a(0)).
  const double s0 = -src.f(u0) / (prof.lambda1(0.0) + prof.a(0.0));
  out.r = {0.0};
  out.u = {u0};
  out.u_prime = {0.0};
  double r = step;
  double y = u0 + 0.5 * step * step * s0;
  double v = step * s0;

  auto accel = [&](double rr, double yy, double vv) -> std::optional<double> {
    const double s = std::abs(vv);
    if (!(s < tmax)) return std::nullopt;
    const double lam1 = prof.lambda1(s);
    if (lam1 < 1e-10) return std::nullopt;
    return -(src.f(yy) + prof.a(s) * vv / rr) / lam1;
  };

  out.r.push_back(r);
  out.u.push_back(y);
  out.u_prime.push_back(v);
  while (r < R - 1e-12) {
    const double h = std::min(step, R - r);
    auto k1 = accel(r, y, v);
    if (!k1) break;
    auto k2 = accel(r + 0.5 * h, y + 0.5 * h * v, v + 0.5 * h * *k1);
    if (!k2) break;
    auto k3 = accel(r + 0.5 * h, y + 0.5 * h * (v + 0.5 * h * *k1), v + 0.5 * h * *k2);
    if (!k3) break;
    auto k4 = accel(r + h, y + h * (v + 0.5 * h * *k2), v + h * *k3);
    if (!k4) break;
    const double k1y = v, k2y = v + 0.5 * h * *k1, k3y = v + 0.5 * h * *k2, k4y = v + h * *k3;
    const double ynew = y + h / 6 * (k1y + 2 * k2y + 2 * k3y + k4y);
    const double vnew = v + h / 6 * (*k1 + 2 * *k2 + 2 * *k3 + *k4);
    if (!(std::abs(vnew) < tmax)) break;
    r += h;
    y = ynew;
    v = vnew;
    out.r.push_back(r);
    out.u.push_back(y);
    out.u_prime.push_back(v);
  }
  return out;
}

RadialSolution annulus_radial_newton(const OperatorProfile& prof, const SourceTerm& src,
                                     double R_in, double R_out, double b_in, double b_out,
                                     double step) {
  const int m = std::max(8, static_cast<int>(std::lround((R_out - R_in) / step)));
  const double hr = (R_out - R_in) / m;
  std::vector<double> r(m + 1), u(m + 1);
  for (int i = 0; i <= m; ++i) {
    r[i] = R_in + i * hr;
    u[i] = b_in + (b_out - b_in) * i / m;  // linear warm start
  }
  const double tmax = prof.t_max();

  auto resid = [&](const std::vector<double>& w, int i) -> double {
    const double gE = (w[i + 1] - w[i]) / hr, gW = (w[i] - w[i - 1]) / hr;
    if (!(std::abs(gE) < 0.999 * tmax) || !(std::abs(gW) < 0.999 * tmax)) return kInf;
    const double rE = r[i] + 0.5 * hr, rW = r[i] - 0.5 * hr;
    const double FE = prof.a(std::abs(gE)) * gE, FW = prof.a(std::abs(gW)) * gW;
    return (rE * FE - rW * FW) / (r[i] * hr) + src.f(w[i]);
  };
  auto sup_resid = [&](const std::vector<double>& w) -> double {
    double s = 0;
    for (int i = 1; i < m; ++i) {
      const double q = std::abs(resid(w, i));
      if (!(q <= s)) s = q;
      if (!std::isfinite(s)) return kInf;
    }
    return s;
  };

  double res = sup_resid(u);
  std::vector<double> history{res};
  if (!std::isfinite(res))
    throw RegimeError("radial_solve: warm start outside the elliptic regime");
  for (int it = 0; it < 50; ++it) {
    if (res <= 1e-12) break;
    // Tridiagonal Newton system.
    std::vector<double> dl(m - 1), dm(m - 1), du(m - 1), rhs(m - 1);
    for (int i = 1; i < m; ++i) {
      const double gE = (u[i + 1] - u[i]) / hr, gW = (u[i] - u[i - 1]) / hr;
      const double rE = r[i] + 0.5 * hr, rW = r[i] - 0.5 * hr;
      const double lE = prof.lambda1(std::abs(gE)), lW = prof.lambda1(std::abs(gW));
      const int k = i - 1;
      dm[k] = (-rE * lE / hr - rW * lW / hr) / (r[i] * hr) + src.f_prime(u[i]);
      du[k] = (rE * lE / hr) / (r[i] * hr);
      dl[k] = (rW * lW / hr) / (r[i] * hr);
      rhs[k] = -resid(u, i);
    }
    // Thomas algorithm.
    for (int k = 1; k < m - 1; ++k) {
      const double wfac = dl[k] / dm[k - 1];
      dm[k] -= wfac * du[k - 1];
      rhs[k] -= wfac * rhs[k - 1];
    }
    std::vector<double> delta(m - 1);
    delta[m - 2] = rhs[m - 2] / dm[m - 2];
    for (int k = m - 3; k >= 0; --k) delta[k] = (rhs[k] - du[k] * delta[k + 1]) / dm[k];

    double t = 1.0;
    std::vector<double> trial = u;
    double trial_res = kInf;
    while (true) {
      for (int i = 1; i < m; ++i) trial[i] = u[i] + t * delta[i - 1];
      trial_res = sup_resid(trial);
      if (trial_res < res) break;
      if (t <= 0.0009765625) break;
      t *= 0.5;
    }
    if (!std::isfinite(trial_res))
      throw RegimeError("radial_solve: ellipticity lost in the annulus iteration");
    u = trial;
    res = trial_res;
    history.push_back(res);
  }
  if (res > 1e-10)
    throw NonConvergenceError("radial_solve: annulus Newton stalled", history);

  RadialSolution out;
  out.r = r;
  out.u = u;
  out.u_prime.resize(m + 1);
  for (int i = 1; i < m; ++i) out.u_prime[i] = (u[i + 1] - u[i - 1]) / (2 * hr);
  out.u_prime[0] = (-3 * u[0] + 4 * u[1] - u[2]) / (2 * hr);
  out.u_prime[m] = (3 * u[m] - 4 * u[m - 1] + u[m - 2]) / (2 * hr);
  return out;
}

} // namespace

RadialSolution radial_solve(const OperatorProfile& profile, const SourceTerm& source,
                            const DomainSpec2D& spec, double h) {
  if (profile.regularity_class() == RegularityClass::A)
    throw InapplicableError("radial_solve: class-A profile rejected");
  const double step = h / 4.0;
  if (spec.shape == ShapeKind::Annulus) {
    const BoundaryComponent* cin = spec.component(1);
    const BoundaryComponent* cout = spec.component(2);
    return annulus_radial_newton(profile, source, spec.R_in, spec.R_out,
                                 cin ? cin->b : 0.0, cout ? cout->b : 0.0, step);
  }
  if (spec.shape != ShapeKind::Disk)
    throw std::invalid_argument("radial_solve: domain must be a disk or an annulus");

  const BoundaryComponent* comp = spec.component(1);
  const double b = comp ? comp->b : 0.0;
  const double R = spec.R;

  auto gap = [&](double u0) -> double {
    RadialSolution sol = radial_shoot(profile, source, u0, R, step);
    if (sol.r.back() < R - 1e-12)
      return sol.u_prime.back() >= 0 ? kInf : -kInf;
    return sol.u.back() - b;
  };

  // gap is increasing in u0; expand a bracket around b.
  double radius = std::max(1.0, std::abs(b));
  double lo = b - radius, hi = b + radius;
  int guard = 0;
  while (gap(lo) > 0) {
    lo -= radius;
    radius *= 2;
    if (++guard > 60) throw NonConvergenceError("radial_solve: no lower bracket");
  }
  guard = 0;
  radius = std::max(1.0, std::abs(b));
  while (gap(hi) < 0) {
    hi += radius;
    radius *= 2;
    if (++guard > 60) throw NonConvergenceError("radial_solve: no upper bracket");
  }
  double u0 = b;
  for (int it = 0; it < 200; ++it) {
    u0 = 0.5 * (lo + hi);
    const double gm = gap(u0);
    if (std::isfinite(gm) && std::abs(gm) <= 1e-13) break;
    if (gm > 0)
      hi = u0;
    else
      lo = u0;
    if (hi - lo < 1e-16 * (1 + std::abs(u0))) break;
  }
  RadialSolution sol = radial_shoot(profile, source, u0, R, step);
  if (sol.r.back() < R - 1e-12)
    throw NonConvergenceError("radial_solve: converged u0 still leaves the regime before r=R");
  return sol;
}

// ---------------------------------------------------------------------------
// gradient_bound_check and flux_balance
// ---------------------------------------------------------------------------

GradientBoundReport gradient_bound_check(const GridField& field,
                                         const OperatorProfile& profile,
                                         const SourceTerm& source) {
  (void)profile;
  const Grid& g = field.grid();

  double umin = kInf, umax = -kInf;
  for (int flat : g.interior) {
    umin = std::min(umin, field.at(flat));
    umax = std::max(umax, field.at(flat));
  }
  for (double v : field.bvalues())
    if (std::isfinite(v)) {
      umin = std::min(umin, v);
      umax = std::max(umax, v);
    }
  for (int k = 0; k <= 1000; ++k) {
    const double u = umin + (umax - umin) * k / 1000.0;
    if (source.f_prime(u) > 1e-12)
      throw InapplicableError("gradient_bound_check: f' > 0 at u = " + std::to_string(u) +
                              "; the interior gradient bound needs nonincreasing f");
    if (!std::isfinite(source.f(u)))
      throw InapplicableError("gradient_bound_check: f unbounded on the field's range");
  }

  GradientBoundReport rep;
  for (int flat : g.interior)
    rep.sup_interior = std::max(rep.sup_interior,
                                std::hypot(field.deriv_x(flat), field.deriv_y(flat)));

  // Boundary gradient: inward normal derivative plus tangential derivative of
  // the trace along the ordered component chain.
  for (int id : g.spec.real_component_ids()) {
    if (id >= static_cast<int>(g.comp_bpoints.size())) continue;
    const auto& list = g.comp_bpoints[id];
    for (std::size_t k = 0; k < list.size(); ++k) {
      const double dn = field.boundary_inward_derivative(list[k]);
      if (!std::isfinite(dn)) continue;
      double dt = 0;
      if (list.size() >= 3) {
        const std::size_t kp = (k + 1 < list.size()) ? k + 1 : k;
        const std::size_t km = (k > 0) ? k - 1 : k;
        const BPoint& P = g.bpoints[list[kp]];
        const BPoint& M = g.bpoints[list[km]];
        const double ds = std::hypot(P.x - M.x, P.y - M.y);
        if (ds > 0) dt = (field.bvalue(list[kp]) - field.bvalue(list[km])) / ds;
      }
      rep.sup_boundary = std::max(rep.sup_boundary, std::hypot(dn, dt));
    }
  }

  rep.bound = std::max(1.0, rep.sup_boundary);  // sqrt(n/2) = 1 in n = 2
  rep.verdict = rep.sup_interior <= rep.bound + 5.0 * g.h;
  return rep;
}

FluxBalance flux_balance(const GridField& field, const OperatorProfile& profile,
                         const SourceTerm& source) {
  const Grid& g = field.grid();
  System sys(g, profile, source);
  adopt_field_state(sys, field);

  FluxBalance out;
  for (int flat : g.interior) {
    const double vol = sys.dx_avg(flat) * sys.dy_avg(flat);
    out.interior_source_sum += vol * source.f(field.at(flat));
    for (int dir = 0; dir < 4; ++dir) {
      const Arm& arm = g.arms[4 * flat + dir];
      if (arm.bindex < 0) continue;  // interior edge: cancels in the telescoping sum
      const System::Edge e = sys.edge(field.values(), flat, dir);
      if (!e.valid || e.suppressed) continue;
      const double sign = (dir == 1 || dir == 3) ? 1.0 : -1.0;
      const double width = (dir < 2) ? sys.dy_avg(flat) : sys.dx_avg(flat);
      out.boundary_flux_sum += width * sign * e.flux;
    }
  }
  // Interior edges between nodes with different transverse widths do not
  // cancel exactly; that defect is part of the reported mismatch.
  for (int flat : g.interior) {
    for (int dir = 1; dir < 4; dir += 2) {  // E and N: visit each edge once
      const Arm& arm = g.arms[4 * flat + dir];
      if (arm.bindex >= 0) continue;
      const int other = flat + sys.arm_step(dir);
      const System::Edge e = sys.edge(field.values(), flat, dir);
      if (!e.valid) continue;
      const double wP = (dir < 2) ? sys.dy_avg(flat) : sys.dx_avg(flat);
      const double wQ = (dir < 2) ? sys.dy_avg(other) : sys.dx_avg(other);
      out.boundary_flux_sum += (wP - wQ) * e.flux;
    }
  }
  out.mismatch = std::abs(out.boundary_flux_sum + out.interior_source_sum);
  return out;
}

} // namespace caplab
