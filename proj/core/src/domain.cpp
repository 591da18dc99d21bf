#include "caplab/domain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "caplab/grid_field.hpp"

namespace caplab {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

std::string shape_name(ShapeKind k) {
  switch (k) {
    case ShapeKind::Strip: return "strip";
    case ShapeKind::Rectangle: return "rectangle";
    case ShapeKind::Disk: return "disk";
    case ShapeKind::Annulus: return "annulus";
    case ShapeKind::Epigraph: return "epigraph";
    case ShapeKind::Slab: return "slab";
  }
  return "?";
}

std::string sign_pattern_name(SignPattern s) {
  switch (s) {
    case SignPattern::Plus: return "+";
    case SignPattern::Minus: return "-";
    case SignPattern::Zero: return "0";
    case SignPattern::Mixed: return "mixed";
  }
  return "?";
}

CurveFn CurveFn::parse(const std::string& e) {
  CurveFn f;
  f.source = e;
  f.ast = expr::parse(e);
  return f;
}

CurveFn CurveFn::constant(double v) {
  CurveFn f;
  f.source = std::to_string(v);
  f.ast = expr::parse(f.source);
  return f;
}

// ---------------------------------------------------------------------------
// Spec builders
// ---------------------------------------------------------------------------

namespace {
std::vector<BoundaryComponent> default_components(const std::vector<int>& ids) {
  std::vector<BoundaryComponent> comps;
  for (int id : ids) comps.push_back(BoundaryComponent{id, 0.0, std::nullopt});
  return comps;
}
} // namespace

DomainSpec2D DomainSpec2D::strip(double T, std::array<double, 2> y_extent) {
  DomainSpec2D s;
  s.shape = ShapeKind::Strip;
  s.T = T;
  s.y_extent = y_extent;
  s.components = default_components(s.real_component_ids());
  return s;
}

DomainSpec2D DomainSpec2D::rectangle(double a, double b, double c, double d) {
  DomainSpec2D s;
  s.shape = ShapeKind::Rectangle;
  s.a = a; s.b = b; s.c = c; s.d = d;
  s.components = default_components(s.real_component_ids());
  return s;
}

DomainSpec2D DomainSpec2D::disk(std::array<double, 2> center, double R) {
  DomainSpec2D s;
  s.shape = ShapeKind::Disk;
  s.center = center;
  s.R = R;
  s.components = default_components(s.real_component_ids());
  return s;
}

DomainSpec2D DomainSpec2D::annulus(std::array<double, 2> center, double R_in, double R_out) {
  DomainSpec2D s;
  s.shape = ShapeKind::Annulus;
  s.center = center;
  s.R_in = R_in;
  s.R_out = R_out;
  s.components = default_components(s.real_component_ids());
  return s;
}

DomainSpec2D DomainSpec2D::epigraph(CurveFn phi, std::array<double, 2> y_extent, double depth) {
  DomainSpec2D s;
  s.shape = ShapeKind::Epigraph;
  s.phi = std::move(phi);
  s.y_extent = y_extent;
  s.depth = depth;
  double phimax = -std::numeric_limits<double>::infinity();
  for (int k = 0; k <= 4096; ++k) {
    const double y = y_extent[0] + (y_extent[1] - y_extent[0]) * k / 4096.0;
    phimax = std::max(phimax, s.phi(y));
  }
  s.x_cap = phimax + depth;
  s.components = default_components(s.real_component_ids());
  return s;
}

DomainSpec2D DomainSpec2D::slab(CurveFn phi1, CurveFn phi2, std::array<double, 2> y_extent) {
  DomainSpec2D s;
  s.shape = ShapeKind::Slab;
  s.phi1 = std::move(phi1);
  s.phi2 = std::move(phi2);
  s.y_extent = y_extent;
  s.components = default_components(s.real_component_ids());
  return s;
}

std::vector<int> DomainSpec2D::real_component_ids() const {
  switch (shape) {
    case ShapeKind::Strip: return {1, 2};
    case ShapeKind::Rectangle: return {1, 2, 3, 4};
    case ShapeKind::Disk: return {1};
    case ShapeKind::Annulus: return {1, 2};
    case ShapeKind::Epigraph: return {1};
    case ShapeKind::Slab: return {1, 2};
  }
  return {};
}

const BoundaryComponent* DomainSpec2D::component(int id) const {
  for (const auto& comp : components)
    if (comp.id == id) return &comp;
  return nullptr;
}

BoundaryComponent* DomainSpec2D::component(int id) {
  for (auto& comp : components)
    if (comp.id == id) return &comp;
  return nullptr;
}

bool DomainSpec2D::inside(double x, double y) const {
  switch (shape) {
    case ShapeKind::Strip:
      return x > 0.0 && x < T && y > y_extent[0] && y < y_extent[1];
    case ShapeKind::Rectangle:
      return x > a && x < b && y > c && y < d;
    case ShapeKind::Disk: {
      const double dx = x - center[0], dy = y - center[1];
      return dx * dx + dy * dy < R * R;
    }
    case ShapeKind::Annulus: {
      const double dx = x - center[0], dy = y - center[1];
      const double r2 = dx * dx + dy * dy;
      return r2 > R_in * R_in && r2 < R_out * R_out;
    }
    case ShapeKind::Epigraph:
      return y > y_extent[0] && y < y_extent[1] && x > phi(y) && x < x_cap;
    case ShapeKind::Slab:
      return y > y_extent[0] && y < y_extent[1] && x > phi1(y) && x < phi2(y);
  }
  return false;
}

void DomainSpec2D::validate() const {
  auto bad = [](const std::string& msg) { throw std::invalid_argument("domain spec: " + msg); };
  switch (shape) {
    case ShapeKind::Strip:
      if (!(T > 0)) bad("strip needs T > 0");
      break;
    case ShapeKind::Rectangle:
      if (!(a < b && c < d)) bad("rectangle needs a < b and c < d");
      break;
    case ShapeKind::Disk:
      if (!(R > 0)) bad("disk needs R > 0");
      break;
    case ShapeKind::Annulus:
      if (!(0 < R_in && R_in < R_out)) bad("annulus needs 0 < R_in < R_out");
      break;
    case ShapeKind::Epigraph:
      if (!phi.valid()) bad("epigraph needs a curve phi");
      if (!(depth > 0)) bad("epigraph needs depth > 0");
      break;
    case ShapeKind::Slab: {
      if (!phi1.valid() || !phi2.valid()) bad("slab needs curves phi1, phi2");
      for (int k = 0; k <= 512; ++k) {
        const double y = y_extent[0] + (y_extent[1] - y_extent[0]) * k / 512.0;
        if (!(phi1(y) < phi2(y))) bad("slab needs phi1 < phi2 on the sampled extent");
      }
      break;
    }
  }
  if (shape != ShapeKind::Rectangle && shape != ShapeKind::Disk && shape != ShapeKind::Annulus) {
    if (!(y_extent[0] < y_extent[1])) bad("y_extent must be a nondegenerate interval");
  }
  const auto ids = real_component_ids();
  for (const auto& comp : components) {
    if (std::find(ids.begin(), ids.end(), comp.id) == ids.end())
      bad("component id " + std::to_string(comp.id) + " unknown for shape " + caplab::shape_name(shape));
    int count = 0;
    for (const auto& other : components)
      if (other.id == comp.id) ++count;
    if (count != 1) bad("duplicate component id " + std::to_string(comp.id));
  }
}

// ---------------------------------------------------------------------------
// Boundary classification helpers
// ---------------------------------------------------------------------------

namespace {

struct BCls {
  int comp = 0;
  double nx = 0, ny = 0;
  bool corner = false;
};

double curve_slope(const CurveFn& f, const expr::NodePtr& dast, double y) {
  (void)f;
  return expr::eval(dast, y);
}

// Everything build_grid needs to query a shape, with derivative ASTs cached.
struct ShapeOps {
  const DomainSpec2D& spec;
  expr::NodePtr dphi, dphi1, dphi2;

  explicit ShapeOps(const DomainSpec2D& s) : spec(s) {
    if (s.phi.valid()) dphi = expr::derivative(s.phi.ast);
    if (s.phi1.valid()) dphi1 = expr::derivative(s.phi1.ast);
    if (s.phi2.valid()) dphi2 = expr::derivative(s.phi2.ast);
  }

  // Is (x, y) within tol of the analytic boundary?
  bool near_boundary(double x, double y, double tol) const {
    const auto& s = spec;
    switch (s.shape) {
      case ShapeKind::Strip: {
        const bool in_y = y >= s.y_extent[0] - tol && y <= s.y_extent[1] + tol;
        const bool in_x = x >= -tol && x <= s.T + tol;
        const bool on_wall = std::abs(x) <= tol || std::abs(x - s.T) <= tol;
        const bool on_end = std::abs(y - s.y_extent[0]) <= tol || std::abs(y - s.y_extent[1]) <= tol;
        return (on_wall && in_y) || (on_end && in_x);
      }
      case ShapeKind::Rectangle: {
        const bool in_y = y >= s.c - tol && y <= s.d + tol;
        const bool in_x = x >= s.a - tol && x <= s.b + tol;
        const bool on_v = std::abs(x - s.a) <= tol || std::abs(x - s.b) <= tol;
        const bool on_h = std::abs(y - s.c) <= tol || std::abs(y - s.d) <= tol;
        return (on_v && in_y) || (on_h && in_x);
      }
      case ShapeKind::Disk: {
        const double r = std::hypot(x - s.center[0], y - s.center[1]);
        return std::abs(r - s.R) <= tol;
      }
      case ShapeKind::Annulus: {
        const double r = std::hypot(x - s.center[0], y - s.center[1]);
        return std::abs(r - s.R_in) <= tol || std::abs(r - s.R_out) <= tol;
      }
      case ShapeKind::Epigraph: {
        const bool in_y = y >= s.y_extent[0] - tol && y <= s.y_extent[1] + tol;
        const double px = s.phi(y);
        const bool in_x = x >= px - tol && x <= s.x_cap + tol;
        const bool on_wall = in_y && std::abs(x - px) <= tol;
        const bool on_cap = in_y && std::abs(x - s.x_cap) <= tol;
        const bool on_end = in_x &&
            (std::abs(y - s.y_extent[0]) <= tol || std::abs(y - s.y_extent[1]) <= tol);
        return on_wall || on_cap || on_end;
      }
      case ShapeKind::Slab: {
        const bool in_y = y >= s.y_extent[0] - tol && y <= s.y_extent[1] + tol;
        const double p1 = s.phi1(y), p2 = s.phi2(y);
        const bool in_x = x >= p1 - tol && x <= p2 + tol;
        const bool on_wall = in_y && (std::abs(x - p1) <= tol || std::abs(x - p2) <= tol);
        const bool on_end = in_x &&
            (std::abs(y - s.y_extent[0]) <= tol || std::abs(y - s.y_extent[1]) <= tol);
        return on_wall || on_end;
      }
    }
    return false;
  }

  // Component id and inward normal for a point on (or very near) the
  // boundary.  Ties at corners prefer real components; a real/artificial
  // corner keeps the real id but averages the two normals (so that +eps*eta
  // still enters the interior).
  BCls classify(double x, double y) const {
    const auto& s = spec;
    const double ylo = s.y_extent[0], yhi = s.y_extent[1];
    auto corner_mix = [](BCls base, double ax, double ay) {
      base.nx += ax;
      base.ny += ay;
      const double n = std::hypot(base.nx, base.ny);
      base.nx /= n;
      base.ny /= n;
      base.corner = true;
      return base;
    };
    switch (s.shape) {
      case ShapeKind::Strip: {
        const double d1 = std::abs(x), d2 = std::abs(x - s.T);
        const double e1 = std::abs(y - ylo), e2 = std::abs(y - yhi);
        const double dreal = std::min(d1, d2), dart = std::min(e1, e2);
        const double corner_tol = 1e-9 * std::max(1.0, s.T);
        if (dreal <= dart + 1e-12) {
          BCls b = (d1 <= d2) ? BCls{1, 1.0, 0.0} : BCls{2, -1.0, 0.0};
          if (dart <= corner_tol)  // wall meets a truncation end
            return corner_mix(b, 0.0, (e1 <= e2) ? 1.0 : -1.0);
          return b;
        }
        return (e1 <= e2) ? BCls{0, 0.0, 1.0} : BCls{0, 0.0, -1.0};
      }
      case ShapeKind::Rectangle: {
        const double d1 = std::abs(x - s.a), d2 = std::abs(x - s.b);
        const double e1 = std::abs(y - s.c), e2 = std::abs(y - s.d);
        const double dv = std::min(d1, d2), dh = std::min(e1, e2);
        const double corner_tol = 1e-9 * std::max({1.0, s.b - s.a, s.d - s.c});
        if (dv <= dh + 1e-12) {
          BCls b = (d1 <= d2) ? BCls{1, 1.0, 0.0} : BCls{2, -1.0, 0.0};
          if (dh <= corner_tol)
            return corner_mix(b, 0.0, (e1 <= e2) ? 1.0 : -1.0);
          return b;
        }
        return (e1 <= e2) ? BCls{3, 0.0, 1.0} : BCls{4, 0.0, -1.0};
      }
      case ShapeKind::Disk: {
        const double dx = x - s.center[0], dy = y - s.center[1];
        const double r = std::hypot(dx, dy);
        return BCls{1, -dx / r, -dy / r};
      }
      case ShapeKind::Annulus: {
        const double dx = x - s.center[0], dy = y - s.center[1];
        const double r = std::hypot(dx, dy);
        if (std::abs(r - s.R_in) <= std::abs(r - s.R_out))
          return BCls{1, dx / r, dy / r};
        return BCls{2, -dx / r, -dy / r};
      }
      case ShapeKind::Epigraph: {
        const double dwall = std::abs(x - s.phi(y));
        const double dcap = std::abs(x - s.x_cap);
        const double e1 = std::abs(y - ylo), e2 = std::abs(y - yhi);
        const double dart = std::min({dcap, e1, e2});
        const double corner_tol = 1e-9 * std::max(1.0, yhi - ylo);
        if (dwall <= dart + 1e-12) {
          const double slope = curve_slope(s.phi, dphi, y);
          const double n = std::hypot(1.0, slope);
          BCls b{1, 1.0 / n, -slope / n};
          if (std::min(e1, e2) <= corner_tol)
            return corner_mix(b, 0.0, (e1 <= e2) ? 1.0 : -1.0);
          return b;
        }
        if (dcap <= std::min(e1, e2)) {
          BCls b{0, -1.0, 0.0};
          if (std::min(e1, e2) <= corner_tol)
            return corner_mix(b, 0.0, (e1 <= e2) ? 1.0 : -1.0);
          return b;
        }
        return (e1 <= e2) ? BCls{0, 0.0, 1.0} : BCls{0, 0.0, -1.0};
      }
      case ShapeKind::Slab: {
        const double d1 = std::abs(x - s.phi1(y)), d2 = std::abs(x - s.phi2(y));
        const double e1 = std::abs(y - ylo), e2 = std::abs(y - yhi);
        const double dreal = std::min(d1, d2), dart = std::min(e1, e2);
        const double corner_tol = 1e-9 * std::max(1.0, yhi - ylo);
        if (dreal <= dart + 1e-12) {
          BCls b;
          if (d1 <= d2) {
            const double slope = curve_slope(s.phi1, dphi1, y);
            const double n = std::hypot(1.0, slope);
            b = BCls{1, 1.0 / n, -slope / n};
          } else {
            const double slope = curve_slope(s.phi2, dphi2, y);
            const double n = std::hypot(1.0, slope);
            b = BCls{2, -1.0 / n, slope / n};
          }
          if (dart <= corner_tol)
            return corner_mix(b, 0.0, (e1 <= e2) ? 1.0 : -1.0);
          return b;
        }
        return (e1 <= e2) ? BCls{0, 0.0, 1.0} : BCls{0, 0.0, -1.0};
      }
    }
    return BCls{};
  }

  // Bounding box of the (truncated) domain.
  void bounding_box(double& xlo, double& xhi, double& ylo, double& yhi) const {
    const auto& s = spec;
    switch (s.shape) {
      case ShapeKind::Strip:
        xlo = 0; xhi = s.T; ylo = s.y_extent[0]; yhi = s.y_extent[1];
        return;
      case ShapeKind::Rectangle:
        xlo = s.a; xhi = s.b; ylo = s.c; yhi = s.d;
        return;
      case ShapeKind::Disk:
        xlo = s.center[0] - s.R; xhi = s.center[0] + s.R;
        ylo = s.center[1] - s.R; yhi = s.center[1] + s.R;
        return;
      case ShapeKind::Annulus:
        xlo = s.center[0] - s.R_out; xhi = s.center[0] + s.R_out;
        ylo = s.center[1] - s.R_out; yhi = s.center[1] + s.R_out;
        return;
      case ShapeKind::Epigraph: {
        double pmin = std::numeric_limits<double>::infinity();
        for (int k = 0; k <= 4096; ++k) {
          const double y = s.y_extent[0] + (s.y_extent[1] - s.y_extent[0]) * k / 4096.0;
          pmin = std::min(pmin, s.phi(y));
        }
        xlo = pmin; xhi = s.x_cap; ylo = s.y_extent[0]; yhi = s.y_extent[1];
        return;
      }
      case ShapeKind::Slab: {
        double pmin = std::numeric_limits<double>::infinity();
        double pmax = -std::numeric_limits<double>::infinity();
        for (int k = 0; k <= 4096; ++k) {
          const double y = s.y_extent[0] + (s.y_extent[1] - s.y_extent[0]) * k / 4096.0;
          pmin = std::min(pmin, s.phi1(y));
          pmax = std::max(pmax, s.phi2(y));
        }
        xlo = pmin; xhi = pmax; ylo = s.y_extent[0]; yhi = s.y_extent[1];
        return;
      }
    }
  }
};

} // namespace

// ---------------------------------------------------------------------------
// build_grid
// ---------------------------------------------------------------------------

Grid build_grid(const DomainSpec2D& spec, double h) {
  if (!(h > 0)) throw std::invalid_argument("build_grid: h must be positive");
  spec.validate();
  ShapeOps ops(spec);

  Grid g;
  g.h = h;
  g.spec = spec;

  double xlo = 0, xhi = 0, ylo = 0, yhi = 0;
  ops.bounding_box(xlo, xhi, ylo, yhi);
  g.x0 = xlo;
  g.y0 = ylo;
  g.nx = static_cast<int>(std::ceil((xhi - xlo) / h - 1e-9)) + 1;
  g.ny = static_cast<int>(std::ceil((yhi - ylo) / h - 1e-9)) + 1;
  if (g.nx < 2 || g.ny < 2) throw std::invalid_argument("build_grid: empty interior (h too large)");
  if (static_cast<long>(g.nx) * g.ny > 64L * 1000 * 1000)
    throw std::invalid_argument("build_grid: lattice would exceed 64M nodes");

  const double snap = 1e-9 * h;
  g.type.assign(static_cast<std::size_t>(g.nx) * g.ny, NodeType::Outside);
  g.bpoint_of_node.assign(g.type.size(), -1);
  g.arms.assign(4 * g.type.size(), Arm{});

  // Pass 1: node classification.
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const double x = g.x_of(i), y = g.y_of(j);
      if (ops.near_boundary(x, y, snap)) {
        g.type[g.idx(i, j)] = NodeType::Boundary;
      } else if (spec.inside(x, y)) {
        g.type[g.idx(i, j)] = NodeType::Interior;
      }
    }
  }

  // Register on-lattice boundary points.
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const int flat = g.idx(i, j);
      if (g.type[flat] != NodeType::Boundary) continue;
      const double x = g.x_of(i), y = g.y_of(j);
      BCls cls = ops.classify(x, y);
      BPoint bp;
      bp.x = x; bp.y = y;
      bp.comp = cls.comp;
      bp.nx = cls.nx; bp.ny = cls.ny;
      bp.corner = cls.corner;
      bp.owner = -1; bp.dir = -1;
      g.bpoint_of_node[flat] = static_cast<int>(g.bpoints.size());
      g.bpoints.push_back(bp);
    }
  }

  // Pass 2: interior arms, cutting against the boundary where needed.
  const int di[4] = {-1, 1, 0, 0};
  const int dj[4] = {0, 0, -1, 1};
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const int flat = g.idx(i, j);
      if (g.type[flat] != NodeType::Interior) continue;
      g.interior.push_back(flat);
      const double x = g.x_of(i), y = g.y_of(j);
      for (int dir = 0; dir < 4; ++dir) {
        const int ni = i + di[dir], nj = j + dj[dir];
        const bool in_lattice = ni >= 0 && ni < g.nx && nj >= 0 && nj < g.ny;
        if (in_lattice && g.type[g.idx(ni, nj)] == NodeType::Interior) {
          g.arms[4 * flat + dir] = Arm{1.0, -1};
          continue;
        }
        if (in_lattice && g.type[g.idx(ni, nj)] == NodeType::Boundary) {
          g.arms[4 * flat + dir] = Arm{1.0, g.bpoint_of_node[g.idx(ni, nj)]};
          continue;
        }
        // Bisect for the boundary crossing on the segment P -> P + h*dir.
        double lo = 0.0, hi = 1.0;
        for (int it = 0; it < 50; ++it) {
          const double mid = 0.5 * (lo + hi);
          if (spec.inside(x + mid * h * di[dir], y + mid * h * dj[dir]))
            lo = mid;
          else
            hi = mid;
        }
        double scut = 0.5 * (lo + hi);
        const double cut_x = x + scut * h * di[dir], cut_y = y + scut * h * dj[dir];
        // Very short arms make the one-sided stencils ill-conditioned; nudge
        // the point out to theta = 1e-3 (displacement <= 1e-3*h).
        const double theta = std::clamp(scut, 1e-3, 1.0);
        BCls cls = ops.classify(cut_x, cut_y);
        BPoint bp;
        bp.x = x + theta * h * di[dir];
        bp.y = y + theta * h * dj[dir];
        bp.comp = cls.comp;
        bp.nx = cls.nx; bp.ny = cls.ny;
        bp.corner = cls.corner;
        bp.owner = flat; bp.dir = dir;
        g.arms[4 * flat + dir] = Arm{theta, static_cast<int>(g.bpoints.size())};
        g.bpoints.push_back(bp);
      }
    }
  }

  if (g.interior.empty()) throw std::invalid_argument("build_grid: empty interior");

  // Group boundary points per component and order them along the curve.
  int max_id = 0;
  for (int id : spec.real_component_ids()) max_id = std::max(max_id, id);
  g.comp_bpoints.assign(static_cast<std::size_t>(max_id) + 1, {});
  for (std::size_t k = 0; k < g.bpoints.size(); ++k)
    g.comp_bpoints[g.bpoints[k].comp].push_back(static_cast<int>(k));

  auto order_by = [&](std::vector<int>& list, auto key) {
    std::sort(list.begin(), list.end(), [&](int lhs, int rhs) {
      const double kl = key(g.bpoints[lhs]), kr = key(g.bpoints[rhs]);
      if (kl != kr) return kl < kr;
      return lhs < rhs;
    });
  };
  const bool circular = spec.shape == ShapeKind::Disk || spec.shape == ShapeKind::Annulus;
  for (int id : spec.real_component_ids()) {
    auto& list = g.comp_bpoints[id];
    if (circular) {
      order_by(list, [&](const BPoint& p) {
        return std::atan2(p.y - spec.center[1], p.x - spec.center[0]);
      });
    } else if (spec.shape == ShapeKind::Rectangle && (id == 3 || id == 4)) {
      order_by(list, [](const BPoint& p) { return p.x; });
    } else {
      order_by(list, [](const BPoint& p) { return p.y; });
    }
    if (list.size() < 8)
      throw std::invalid_argument("build_grid: component " + std::to_string(id) +
                                  " has only " + std::to_string(list.size()) +
                                  " boundary points; decrease h");
    // Chordal trapezoid weights for boundary line integrals.
    const std::size_t n = list.size();
    auto gap = [&](std::size_t p, std::size_t q) {
      const BPoint& A = g.bpoints[list[p]];
      const BPoint& B = g.bpoints[list[q]];
      return std::hypot(A.x - B.x, A.y - B.y);
    };
    for (std::size_t k = 0; k < n; ++k) {
      double w = 0.0;
      if (circular) {
        w = 0.5 * (gap(k, (k + 1) % n) + gap(k, (k + n - 1) % n));
      } else {
        if (k > 0) w += 0.5 * gap(k, k - 1);
        if (k + 1 < n) w += 0.5 * gap(k, k + 1);
      }
      g.bpoints[list[k]].hweight = w;
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// mildly_transverse
// ---------------------------------------------------------------------------

TransversalityReport mildly_transverse(const DomainSpec2D& spec,
                                       std::array<double, 2> v,
                                       const std::vector<int>& components) {
  const double vnorm = std::hypot(v[0], v[1]);
  if (std::abs(vnorm - 1.0) > 1e-9)
    throw std::invalid_argument("mildly_transverse: v must be a unit vector");
  const auto ids = spec.real_component_ids();
  ShapeOps ops(spec);

  TransversalityReport rep;
  rep.verdict = true;
  for (int id : components) {
    if (std::find(ids.begin(), ids.end(), id) == ids.end())
      throw std::invalid_argument("mildly_transverse: unknown component id " + std::to_string(id));
    const int nsamp = 256;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < nsamp; ++k) {
      double nx = 0, ny = 0;
      switch (spec.shape) {
        case ShapeKind::Strip:
          nx = (id == 1) ? 1.0 : -1.0; ny = 0.0;
          break;
        case ShapeKind::Rectangle:
          if (id == 1) { nx = 1; ny = 0; }
          else if (id == 2) { nx = -1; ny = 0; }
          else if (id == 3) { nx = 0; ny = 1; }
          else { nx = 0; ny = -1; }
          break;
        case ShapeKind::Disk: {
          const double th = 2.0 * kPi * k / nsamp;
          nx = -std::cos(th); ny = -std::sin(th);
          break;
        }
        case ShapeKind::Annulus: {
          const double th = 2.0 * kPi * k / nsamp;
          const double s = (id == 1) ? 1.0 : -1.0;
          nx = s * std::cos(th); ny = s * std::sin(th);
          break;
        }
        case ShapeKind::Epigraph: {
          const double y = spec.y_extent[0] + (spec.y_extent[1] - spec.y_extent[0]) * (k + 0.5) / nsamp;
          const double slope = expr::eval(ops.dphi, y);
          const double n = std::hypot(1.0, slope);
          nx = 1.0 / n; ny = -slope / n;
          break;
        }
        case ShapeKind::Slab: {
          const double y = spec.y_extent[0] + (spec.y_extent[1] - spec.y_extent[0]) * (k + 0.5) / nsamp;
          const double slope = expr::eval((id == 1) ? ops.dphi1 : ops.dphi2, y);
          const double n = std::hypot(1.0, slope);
          const double s = (id == 1) ? 1.0 : -1.0;
          nx = s / n; ny = -s * slope / n;
          break;
        }
      }
      const double dot = nx * v[0] + ny * v[1];
      lo = std::min(lo, dot);
      hi = std::max(hi, dot);
    }
    TransversalityReport::Entry e;
    e.comp = id;
    e.min_dot = lo;
    e.max_dot = hi;
    const double thr = 1e-12;
    if (hi > thr && lo < -thr) e.sign = SignPattern::Mixed;
    else if (hi > thr) e.sign = SignPattern::Plus;
    else if (lo < -thr) e.sign = SignPattern::Minus;
    else e.sign = SignPattern::Zero;
    if (e.sign == SignPattern::Mixed) rep.verdict = false;
    rep.entries.push_back(e);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// partial_star
// ---------------------------------------------------------------------------

std::vector<int> partial_star(const DomainSpec2D& spec, const GridField& field,
                              double tol) {
  const Grid& g = field.grid();
  std::vector<int> hit;
  for (int id : spec.real_component_ids()) {
    if (id >= static_cast<int>(g.comp_bpoints.size())) continue;
    bool found = false;
    for (int b : g.comp_bpoints[id]) {
      const double d = field.boundary_inward_derivative(b);
      if (std::isfinite(d) && std::abs(d) > tol) {
        found = true;
        break;
      }
    }
    if (found) hit.push_back(id);
  }
  return hit;
}

// ---------------------------------------------------------------------------
// volume_growth
// ---------------------------------------------------------------------------

VolumeGrowthReport volume_growth(const Grid& grid, const std::vector<double>& R_list) {
  for (std::size_t k = 1; k < R_list.size(); ++k)
    if (!(R_list[k] > R_list[k - 1]))
      throw std::invalid_argument("volume_growth: R_list must be increasing");

  VolumeGrowthReport rep;
  rep.R = R_list;
  const double xmax = grid.x_of(grid.nx - 1), ymax = grid.y_of(grid.ny - 1);
  for (double R : R_list) {
    long count = 0;
    for (int flat : grid.interior) {
      const int i = flat % grid.nx, j = flat / grid.nx;
      const double x = grid.x_of(i), y = grid.y_of(j);
      if (x * x + y * y <= R * R) ++count;
    }
    rep.area.push_back(static_cast<double>(count) * grid.h * grid.h);
    rep.truncated.push_back(-R < grid.x0 || R > xmax || -R < grid.y0 || R > ymax);
    const double Rv = R;
    rep.ratio.push_back(Rv > 1.0 + 1e-9
                            ? rep.area.back() / (Rv * Rv * std::log(Rv))
                            : std::numeric_limits<double>::quiet_NaN());
  }

  // Fitted exponent: least-squares slope of log(area) against log(R).
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t k = 0; k < R_list.size(); ++k) {
    if (rep.area[k] <= 0) continue;
    const double lx = std::log(R_list[k]), ly = std::log(rep.area[k]);
    sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
    ++n;
  }
  if (n >= 2 && std::abs(n * sxx - sx * sx) > 1e-300)
    rep.fitted_exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);

  std::vector<double> valid;
  for (double r : rep.ratio)
    if (std::isfinite(r)) valid.push_back(r);
  rep.consistent = valid.size() >= 3;
  for (std::size_t k = valid.size() >= 3 ? valid.size() - 3 : 0; k + 1 < valid.size(); ++k)
    if (!(valid[k + 1] < valid[k])) rep.consistent = false;
  return rep;
}

} // namespace caplab
