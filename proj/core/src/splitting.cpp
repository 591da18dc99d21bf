#include "caplab/splitting.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

#include "caplab/domain.hpp"
#include "caplab/elliptic.hpp"
#include "caplab/errors.hpp"
#include "caplab/identities.hpp"
#include "caplab/operator_profile.hpp"
#include "caplab/source_term.hpp"

namespace caplab {

namespace {
const double kNaN = std::numeric_limits<double>::quiet_NaN();

// TLS line through a point cloud: centroid + principal axis of the second
// moments; residual is the RMS distance to that line.
void fit_line(const std::vector<double>& xs, const std::vector<double>& ys,
              CritSummary& out) {
  const std::size_t n = xs.size();
  if (n == 0) return;
  double cx = 0, cy = 0;
  for (std::size_t k = 0; k < n; ++k) {
    cx += xs[k];
    cy += ys[k];
  }
  cx /= n;
  cy /= n;
  out.line_point = {cx, cy};
  if (n == 1) {
    out.line_dir = {0, 0};
    out.line_residual = 0;
    return;
  }
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double dx = xs[k] - cx, dy = ys[k] - cy;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  // eigen-decomposition of the 2x2 moment matrix
  const double tr = sxx + syy, det = sxx * syy - sxy * sxy;
  const double disc = std::sqrt(std::max(0.0, tr * tr / 4 - det));
  const double lam_big = tr / 2 + disc, lam_small = tr / 2 - disc;
  double vx = sxy, vy = lam_big - sxx;
  if (std::abs(vx) + std::abs(vy) < 1e-300) {
    vx = (sxx >= syy) ? 1 : 0;  // already axis-aligned
    vy = (sxx >= syy) ? 0 : 1;
  }
  const double nv = std::hypot(vx, vy);
  out.line_dir = {vx / nv, vy / nv};
  out.line_residual = std::sqrt(std::max(0.0, lam_small) / n);
}

CritSummary critical_set_in(const GridField& field, double tol, const Mask& region) {
  const Grid& g = field.grid();
  if (tol <= 0) tol = 10 * g.h;
  CritSummary out;
  out.tol = tol;

  std::vector<char> crit(g.nx * g.ny, 0), comp(g.nx * g.ny, 0);
  std::vector<double> xs, ys;
  for (int flat : g.interior) {
    const double x = g.x_of(flat % g.nx), y = g.y_of(flat / g.nx);
    if (!region(x, y)) continue;
    const double m = std::hypot(field.deriv_x(flat), field.deriv_y(flat));
    if (m <= tol) {
      crit[flat] = 1;
      out.nodes.push_back(flat);
      xs.push_back(x);
      ys.push_back(y);
    } else {
      comp[flat] = 1;
    }
  }

  // flood fill of the complement, 4-neighbor over interior lattice nodes
  std::vector<char> seen(g.nx * g.ny, 0);
  for (int flat = 0; flat < g.nx * g.ny; ++flat) {
    if (!comp[flat] || seen[flat]) continue;
    ++out.complement_components;
    std::deque<int> todo{flat};
    seen[flat] = 1;
    while (!todo.empty()) {
      const int f = todo.front();
      todo.pop_front();
      const int i = f % g.nx, j = f / g.nx;
      const int nb[4] = {f - 1, f + 1, f - g.nx, f + g.nx};
      const bool in[4] = {i > 0, i + 1 < g.nx, j > 0, j + 1 < g.ny};
      for (int d = 0; d < 4; ++d) {
        if (!in[d] || !comp[nb[d]] || seen[nb[d]]) continue;
        seen[nb[d]] = 1;
        todo.push_back(nb[d]);
      }
    }
  }

  fit_line(xs, ys, out);
  out.collinear = out.nodes.size() >= 8 && out.line_residual <= 5 * g.h;
  return out;
}

// linear interpolation on an increasing uniform-ish grid; NaN outside
double interp_profile(const std::vector<double>& t, const std::vector<double>& v,
                      double q) {
  if (t.size() < 2 || q < t.front() - 1e-12 || q > t.back() + 1e-12) return kNaN;
  auto it = std::upper_bound(t.begin(), t.end(), q);
  std::size_t k = std::min<std::size_t>(std::max<std::ptrdiff_t>(1, it - t.begin()),
                                        t.size() - 1);
  const double w = (q - t[k - 1]) / (t[k] - t[k - 1]);
  return (1 - w) * v[k - 1] + w * v[k];
}

}  // namespace

CritSummary critical_set(const GridField& field, double tol) {
  return critical_set_in(field, tol, Mask::all());
}

std::pair<GridField, GridField> geometry_fields(const GridField& field,
                                                double exclusion_tol) {
  const Grid& g = field.grid();
  LevelSetGeometry geo(field, exclusion_tol);
  GridField ii2(field.grid_ptr()), gtm2(field.grid_ptr());
  ii2.fill(kNaN);
  gtm2.fill(kNaN);
  for (int flat : g.interior) {
    const FramePoint fp = geo.at(flat);
    if (!fp.ok) continue;
    ii2.at(flat) = fp.ii2;
    gtm2.at(flat) = fp.gtm2;
  }
  return {std::move(ii2), std::move(gtm2)};
}

SplitReport detect_splitting(const GridField& field, double tol, const Mask& region) {
  const Grid& g = field.grid();
  const double h = g.h;
  SplitReport rep;
  rep.tol = tol > 0 ? tol : 100 * h * h;
  rep.crit = critical_set_in(field, 0.0, region);

  LevelSetGeometry geo(field);
  double avg_nx = 0, avg_ny = 0, cx = 0, cy = 0;
  std::vector<int> ok_nodes;
  for (int flat : g.interior) {
    const double x = g.x_of(flat % g.nx), y = g.y_of(flat / g.nx);
    if (!region(x, y)) continue;
    if (!geo.stencil_ok(flat)) continue;
    const FramePoint fp = geo.at(flat);
    if (!fp.ok) {
      ++rep.excluded;
      continue;
    }
    ++rep.nodes_checked;
    rep.sup_ii2 = std::max(rep.sup_ii2, fp.ii2);
    rep.sup_gtm2 = std::max(rep.sup_gtm2, fp.gtm2);
    avg_nx += fp.nx;
    avg_ny += fp.ny;
    cx += x;
    cy += y;
    ok_nodes.push_back(flat);
  }
  if (rep.nodes_checked == 0) return rep;  // nothing admissible: not 1D, report only

  const double an = std::hypot(avg_nx, avg_ny);
  if (an > 1e-12 * rep.nodes_checked)
    rep.direction = {avg_nx / an, avg_ny / an};
  rep.is_1d = rep.sup_ii2 <= rep.tol && rep.sup_gtm2 <= rep.tol;
  if (!rep.is_1d || (rep.direction[0] == 0 && rep.direction[1] == 0)) return rep;

  // anchor: admissible node nearest the admissible centroid
  cx /= rep.nodes_checked;
  cy /= rep.nodes_checked;
  int best = ok_nodes.front();
  double bestd = 1e300;
  for (int flat : ok_nodes) {
    const double dx = g.x_of(flat % g.nx) - cx, dy = g.y_of(flat / g.nx) - cy;
    const double d = dx * dx + dy * dy;
    if (d < bestd) {
      bestd = d;
      best = flat;
    }
  }
  rep.anchor = {g.x_of(best % g.nx), g.y_of(best / g.nx)};
  const double dx = rep.direction[0], dy = rep.direction[1];

  // sample u along the axis through the anchor, step h, both ways
  const int kmax = (int)std::ceil((g.nx + g.ny) * 1.5) + 2;
  auto sample = [&](int k, double& val) {
    const double px = rep.anchor[0] + k * h * dx, py = rep.anchor[1] + k * h * dy;
    if (!region(px, py)) return false;
    // interp extrapolates past the boundary from the last valued block, so the
    // walk has to stop on its own once the axis leaves the domain
    const int ni = (int)std::lround((px - g.x0) / h), nj = (int)std::lround((py - g.y0) / h);
    if (!g.has_value(ni, nj)) return false;
    try {
      val = field.interp(px, py);
    } catch (const std::domain_error&) {
      return false;
    }
    return std::isfinite(val);
  };
  std::vector<double> tneg, uneg, tpos, upos;
  for (int k = 0; k >= -kmax; --k) {
    double v;
    if (!sample(k, v)) break;
    tneg.push_back(k * h);
    uneg.push_back(v);
  }
  for (int k = 1; k <= kmax; ++k) {
    double v;
    if (!sample(k, v)) break;
    tpos.push_back(k * h);
    upos.push_back(v);
  }
  ProfileSolution& prof = rep.profile;
  for (std::size_t k = tneg.size(); k-- > 0;) {
    prof.t_grid.push_back(tneg[k]);
    prof.u.push_back(uneg[k]);
  }
  for (std::size_t k = 0; k < tpos.size(); ++k) {
    prof.t_grid.push_back(tpos[k]);
    prof.u.push_back(upos[k]);
  }
  prof.step = h;
  prof.termination = Termination::SpanExhausted;
  prof.profile_name = field.meta().profile;
  prof.source_name = field.meta().source;
  const std::size_t n = prof.u.size();
  prof.u_prime.resize(n, 0);
  if (n >= 3) {
    prof.u_prime[0] = (-3 * prof.u[0] + 4 * prof.u[1] - prof.u[2]) / (2 * h);
    prof.u_prime[n - 1] =
        (3 * prof.u[n - 1] - 4 * prof.u[n - 2] + prof.u[n - 3]) / (2 * h);
    for (std::size_t k = 1; k + 1 < n; ++k)
      prof.u_prime[k] = (prof.u[k + 1] - prof.u[k - 1]) / (2 * h);
  }

  // field vs the reconstruction, over the admissible nodes
  for (int flat : ok_nodes) {
    const double sx = g.x_of(flat % g.nx) - rep.anchor[0];
    const double sy = g.y_of(flat / g.nx) - rep.anchor[1];
    const double v = interp_profile(prof.t_grid, prof.u, sx * dx + sy * dy);
    if (std::isfinite(v))
      rep.mismatch_field = std::max(rep.mismatch_field, std::abs(field.at(flat) - v));
  }

  // reconstruction vs an independent shoot with the same seed
  rep.mismatch_shoot = 0;
  try {
    const OperatorProfile op = OperatorProfile::parse(field.meta().profile);
    const SourceTerm src = SourceTerm::parse(field.meta().source);
    const std::size_t k0 = tneg.size() - 1;  // index of t = 0
    double c = prof.u_prime[k0];
    if (n >= k0 + 3)
      c = (-3 * prof.u[k0] + 4 * prof.u[k0 + 1] - prof.u[k0 + 2]) / (2 * h);
    ProfileSolution sol = shoot(op, src, prof.u[k0], c,
                                {prof.t_grid.front(), prof.t_grid.back()}, h);
    for (std::size_t k = 0; k < n; ++k) {
      const double v = interp_profile(sol.t_grid, sol.u, prof.t_grid[k]);
      if (std::isfinite(v))
        rep.mismatch_shoot = std::max(rep.mismatch_shoot, std::abs(prof.u[k] - v));
    }
    prof.E_trace.resize(n, 0);
    for (std::size_t k = 0; k < n; ++k)
      prof.E_trace[k] = first_integral(op, src, prof.u[k], prof.u_prime[k]);
  } catch (const std::exception&) {
    // no usable metadata: the reconstruction stands alone
  }
  rep.mismatch = std::max(rep.mismatch_field, rep.mismatch_shoot);
  return rep;
}

GlueReport glue_check(const GridField& field, double tol) {
  const Grid& g = field.grid();
  const double h = g.h;
  const ShapeKind shape = g.spec.shape;
  if (shape != ShapeKind::Slab && shape != ShapeKind::Strip)
    throw InapplicableError("glue check: needs a slab or strip domain, got " +
                            shape_name(shape));

  GlueReport rep;
  const double crit_tol = tol > 0 ? tol : 10 * h;
  rep.crit = critical_set(field, crit_tol);
  if (rep.crit.complement_components != 2)
    throw InapplicableError(
        "glue check: critical set does not split the domain in two (components: " +
        std::to_string(rep.crit.complement_components) + ")");

  // (a) boundary gradient bounded away from zero on both real components
  rep.wall_gradient_floor = 10 * crit_tol;
  rep.min_wall_gradient = std::numeric_limits<double>::infinity();
  NeumannReport ntr = neumann_trace(field);
  for (const auto& comp : ntr.components)
    for (double t : comp.traces)
      if (std::isfinite(t))
        rep.min_wall_gradient = std::min(rep.min_wall_gradient, std::abs(t));
  rep.wall_gradient_ok = rep.min_wall_gradient >= rep.wall_gradient_floor;

  // label the two complement components to build the half masks
  std::vector<char> comp(g.nx * g.ny, 0);
  for (int flat : g.interior)
    if (std::hypot(field.deriv_x(flat), field.deriv_y(flat)) > crit_tol)
      comp[flat] = 1;
  auto labels = std::make_shared<std::vector<int>>(g.nx * g.ny, 0);
  int next_label = 0;
  std::vector<double> label_proj(3, 0);  // mean split-axis coordinate per label
  std::vector<int> label_count(3, 0);
  const double npx = -rep.crit.line_dir[1], npy = rep.crit.line_dir[0];  // line normal
  for (int flat = 0; flat < g.nx * g.ny; ++flat) {
    if (!comp[flat] || (*labels)[flat]) continue;
    if (++next_label > 2) break;  // cannot happen: component count checked above
    std::deque<int> todo{flat};
    (*labels)[flat] = next_label;
    while (!todo.empty()) {
      const int f = todo.front();
      todo.pop_front();
      const double px = g.x_of(f % g.nx), py = g.y_of(f / g.nx);
      label_proj[next_label] += px * npx + py * npy;
      ++label_count[next_label];
      const int i = f % g.nx, j = f / g.nx;
      const int nb[4] = {f - 1, f + 1, f - g.nx, f + g.nx};
      const bool in[4] = {i > 0, i + 1 < g.nx, j > 0, j + 1 < g.ny};
      for (int d = 0; d < 4; ++d) {
        if (!in[d] || !comp[nb[d]] || (*labels)[nb[d]]) continue;
        (*labels)[nb[d]] = next_label;
        todo.push_back(nb[d]);
      }
    }
  }
  for (int l = 1; l <= 2; ++l)
    if (label_count[l]) label_proj[l] /= label_count[l];
  const int low_label = label_proj[1] <= label_proj[2] ? 1 : 2;

  auto half_mask = [&](int want) {
    Mask m;
    m.name = want == low_label ? "low-half" : "high-half";
    m.contains = [labels, want, &g](double x, double y) {
      const int i = (int)std::lround((x - g.x0) / g.h);
      const int j = (int)std::lround((y - g.y0) / g.h);
      if (i < 0 || i >= g.nx || j < 0 || j >= g.ny) return false;
      return (*labels)[g.idx(i, j)] == want;
    };
    return m;
  };

  // (b) both halves are 1D
  rep.left = detect_splitting(field, 0.0, half_mask(low_label));
  rep.right = detect_splitting(field, 0.0, half_mask(low_label == 1 ? 2 : 1));
  rep.halves_1d = rep.left.is_1d && rep.right.is_1d;

  // (c) the two directions are parallel/antipodal and the critical line runs
  // parallel to both walls (wall direction from a TLS fit of its bpoints)
  const auto& dl = rep.left.direction;
  const auto& dr = rep.right.direction;
  rep.direction_angle = std::asin(std::min(
      1.0, std::abs(dl[0] * dr[1] - dl[1] * dr[0])));
  rep.line_angle = 0;
  for (int comp_id : g.spec.real_component_ids()) {
    std::vector<double> xs, ys;
    for (int bi : g.comp_bpoints[comp_id]) {
      xs.push_back(g.bpoints[bi].x);
      ys.push_back(g.bpoints[bi].y);
    }
    CritSummary wall;
    fit_line(xs, ys, wall);
    const double cross = wall.line_dir[0] * rep.crit.line_dir[1] -
                         wall.line_dir[1] * rep.crit.line_dir[0];
    rep.line_angle = std::max(rep.line_angle, std::asin(std::min(1.0, std::abs(cross))));
  }
  rep.aligned = rep.direction_angle <= 1e-2 && rep.line_angle <= 1e-2;

  // (d) both reconstructed profiles continue the even shoot out of the minimum
  rep.profile_deviation_tol = 50 * h * h;
  rep.profile_deviation = std::numeric_limits<double>::infinity();
  try {
    const OperatorProfile op = OperatorProfile::parse(field.meta().profile);
    const SourceTerm src = SourceTerm::parse(field.meta().source);
    double u_min = std::numeric_limits<double>::infinity();
    for (int flat : g.interior) u_min = std::min(u_min, field.at(flat));
    const double span = (g.nx + g.ny) * h;
    ProfileSolution mid = shoot(op, src, u_min, 0.0, {-span, span}, h);
    // the forward branch of the shoot, for value-matching the half anchors
    std::vector<double> st, su;
    for (std::size_t k = 0; k < mid.t_grid.size(); ++k)
      if (mid.t_grid[k] >= -1e-12) {
        st.push_back(mid.t_grid[k]);
        su.push_back(mid.u[k]);
      }
    auto half_dev = [&](const SplitReport& half) {
      if (half.profile.u.empty()) return std::numeric_limits<double>::infinity();
      // distance from the minimum at which the shoot reaches the anchor value
      const std::size_t k0 =
          std::lower_bound(half.profile.t_grid.begin(), half.profile.t_grid.end(),
                           -1e-12) -
          half.profile.t_grid.begin();
      const double ua = half.profile.u[k0];
      auto it = std::lower_bound(su.begin(), su.end(), ua);
      if (it == su.begin() || it == su.end())
        return std::numeric_limits<double>::infinity();
      const std::size_t ki = it - su.begin();
      const double w = (ua - su[ki - 1]) / (su[ki] - su[ki - 1]);
      const double t_star = (1 - w) * st[ki - 1] + w * st[ki];
      // moving along the half's direction increases u <=> moves away from crit
      const double orient = half.profile.u_prime[k0] >= 0 ? 1.0 : -1.0;
      double dev = 0;
      for (std::size_t k = 0; k < half.profile.u.size(); ++k) {
        const double s = t_star + orient * half.profile.t_grid[k];
        const double v = interp_profile(st, su, s);
        if (std::isfinite(v)) dev = std::max(dev, std::abs(half.profile.u[k] - v));
      }
      return dev;
    };
    rep.profile_deviation = std::max(half_dev(rep.left), half_dev(rep.right));
  } catch (const std::exception&) {
    // unusable metadata: deviation stays infinite and the clause fails
  }
  rep.profiles_match = rep.profile_deviation <= rep.profile_deviation_tol;

  rep.verdict =
      rep.wall_gradient_ok && rep.halves_1d && rep.aligned && rep.profiles_match;
  return rep;
}

}  // namespace caplab
