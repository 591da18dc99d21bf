#include "caplab/grid_field.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <thread>

namespace caplab {

int thread_count() {
  static const int cached = [] {
    const char* env = std::getenv("CAPLAB_THREADS");
    if (!env) return 1;
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || v < 1) return 1;
    return static_cast<int>(std::min(v, 64L));
  }();
  return cached;
}

void parallel_for(long n, const std::function<void(long)>& body) {
  const int nt = static_cast<int>(std::min<long>(thread_count(), n));
  if (nt <= 1) {
    for (long k = 0; k < n; ++k) body(k);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(nt);
  for (int w = 0; w < nt; ++w) {
    const long lo = n * w / nt, hi = n * (w + 1) / nt;
    pool.emplace_back([&body, lo, hi] {
      for (long k = lo; k < hi; ++k) body(k);
    });
  }
  for (auto& t : pool) t.join();
}

namespace {
const double kNaN = std::numeric_limits<double>::quiet_NaN();
}

GridField::GridField(std::shared_ptr<const Grid> grid)
    : grid_(std::move(grid)),
      values_(grid_->type.size(), kNaN),
      bvalues_(grid_->bpoints.size(), kNaN) {}

void GridField::fill(double v) {
  inject([v](double, double) { return v; });
}

void GridField::inject(const std::function<double(double, double)>& fn) {
  const Grid& g = *grid_;
  parallel_for(static_cast<long>(g.type.size()), [&](long flat) {
    if (g.type[flat] == NodeType::Outside) return;
    const int i = static_cast<int>(flat) % g.nx, j = static_cast<int>(flat) / g.nx;
    values_[flat] = fn(g.x_of(i), g.y_of(j));
  });
  parallel_for(static_cast<long>(g.bpoints.size()), [&](long k) {
    bvalues_[k] = fn(g.bpoints[k].x, g.bpoints[k].y);
  });
}

double GridField::arm_value(int flat, int dir) const {
  const Arm& a = grid_->arm(flat, dir);
  if (a.bindex >= 0) return bvalues_[a.bindex];
  static const int off_i[4] = {-1, 1, 0, 0};
  static const int off_j[4] = {0, 0, -1, 1};
  return values_[flat + off_i[dir] + off_j[dir] * grid_->nx];
}

namespace {
// Nonuniform three-point formulas on values (uW, uP, uE) with spacings a
// (west) and b (east); second-order for the first derivative, first-order in
// the nonuniform case (second on a uniform arm pair) for the second.
double d1_nonuniform(double uW, double uP, double uE, double a, double b) {
  return uW * (-b / (a * (a + b))) + uP * ((b - a) / (a * b)) + uE * (a / (b * (a + b)));
}
double d2_nonuniform(double uW, double uP, double uE, double a, double b) {
  return 2.0 * (uW / (a * (a + b)) - uP / (a * b) + uE / (b * (a + b)));
}
} // namespace

double GridField::deriv_x(int flat) const {
  const double h = grid_->h;
  const double a = grid_->arm(flat, 0).theta * h;
  const double b = grid_->arm(flat, 1).theta * h;
  return d1_nonuniform(arm_value(flat, 0), values_[flat], arm_value(flat, 1), a, b);
}

double GridField::deriv_y(int flat) const {
  const double h = grid_->h;
  const double a = grid_->arm(flat, 2).theta * h;
  const double b = grid_->arm(flat, 3).theta * h;
  return d1_nonuniform(arm_value(flat, 2), values_[flat], arm_value(flat, 3), a, b);
}

double GridField::deriv_xx(int flat) const {
  const double h = grid_->h;
  const double a = grid_->arm(flat, 0).theta * h;
  const double b = grid_->arm(flat, 1).theta * h;
  return d2_nonuniform(arm_value(flat, 0), values_[flat], arm_value(flat, 1), a, b);
}

double GridField::deriv_yy(int flat) const {
  const double h = grid_->h;
  const double a = grid_->arm(flat, 2).theta * h;
  const double b = grid_->arm(flat, 3).theta * h;
  return d2_nonuniform(arm_value(flat, 2), values_[flat], arm_value(flat, 3), a, b);
}

namespace {
// 3x3 block-centre offsets in increasing distance from the target node.
const std::vector<std::pair<int, int>>& block_offsets() {
  static const std::vector<std::pair<int, int>> offsets = [] {
    std::vector<std::pair<int, int>> v;
    for (int oy = -2; oy <= 2; ++oy)
      for (int ox = -2; ox <= 2; ++ox) v.emplace_back(ox, oy);
    std::sort(v.begin(), v.end(), [](const auto& p, const auto& q) {
      const int dp = p.first * p.first + p.second * p.second;
      const int dq = q.first * q.first + q.second * q.second;
      if (dp != dq) return dp < dq;
      return p < q;
    });
    return v;
  }();
  return offsets;
}

double lagrange3(double xi, int node) {
  // Quadratic Lagrange basis on nodes {-1, 0, 1}.
  switch (node) {
    case 0: return 0.5 * xi * (xi - 1.0);
    case 1: return 1.0 - xi * xi;
    default: return 0.5 * xi * (xi + 1.0);
  }
}
} // namespace

double GridField::interp(double x, double y) const {
  const Grid& g = *grid_;
  const double fi = (x - g.x0) / g.h, fj = (y - g.y0) / g.h;
  const int ic = std::clamp(static_cast<int>(std::lround(fi)), 0, g.nx - 1);
  const int jc = std::clamp(static_cast<int>(std::lround(fj)), 0, g.ny - 1);

  for (const auto& [ox, oy] : block_offsets()) {
    const int ci = ic + ox, cj = jc + oy;
    if (ci < 1 || ci > g.nx - 2 || cj < 1 || cj > g.ny - 2) continue;
    bool ok = true;
    for (int dj = -1; dj <= 1 && ok; ++dj)
      for (int di = -1; di <= 1 && ok; ++di)
        if (!std::isfinite(values_[g.idx(ci + di, cj + dj)])) ok = false;
    if (!ok) continue;
    const double xi = fi - ci, eta = fj - cj;
    double acc = 0.0;
    for (int dj = -1; dj <= 1; ++dj)
      for (int di = -1; di <= 1; ++di)
        acc += values_[g.idx(ci + di, cj + dj)] * lagrange3(xi, di + 1) * lagrange3(eta, dj + 1);
    return acc;
  }

  // Bilinear fallback on the containing cell.
  const int i0 = std::clamp(static_cast<int>(std::floor(fi)), 0, g.nx - 2);
  const int j0 = std::clamp(static_cast<int>(std::floor(fj)), 0, g.ny - 2);
  const double u00 = values_[g.idx(i0, j0)], u10 = values_[g.idx(i0 + 1, j0)];
  const double u01 = values_[g.idx(i0, j0 + 1)], u11 = values_[g.idx(i0 + 1, j0 + 1)];
  if (std::isfinite(u00) && std::isfinite(u10) && std::isfinite(u01) && std::isfinite(u11)) {
    const double s = fi - i0, t = fj - j0;
    return (1 - s) * (1 - t) * u00 + s * (1 - t) * u10 + (1 - s) * t * u01 + s * t * u11;
  }
  throw std::domain_error("interp: no valued stencil near the requested point");
}

double GridField::boundary_inward_derivative(int bindex) const {
  const BPoint& bp = grid_->bpoints[bindex];
  const double h = grid_->h;
  try {
    const double u1 = interp(bp.x + h * bp.nx, bp.y + h * bp.ny);
    const double u2 = interp(bp.x + 2 * h * bp.nx, bp.y + 2 * h * bp.ny);
    const double u0 = bvalues_[bindex];
    if (std::isfinite(u0)) return (-3.0 * u0 + 4.0 * u1 - u2) / (2.0 * h);
    const double u3 = interp(bp.x + 3 * h * bp.nx, bp.y + 3 * h * bp.ny);
    return (-5.0 * u1 + 8.0 * u2 - 3.0 * u3) / (2.0 * h);
  } catch (const std::domain_error&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

void for_each_full_cell(const GridField& f,
                        const std::function<void(const CellSample&)>& body) {
  const Grid& g = f.grid();
  const double h = g.h;
  for (int j = 0; j + 1 < g.ny; ++j) {
    for (int i = 0; i + 1 < g.nx; ++i) {
      const double u00 = f.at(g.idx(i, j)), u10 = f.at(g.idx(i + 1, j));
      const double u01 = f.at(g.idx(i, j + 1)), u11 = f.at(g.idx(i + 1, j + 1));
      if (!std::isfinite(u00) || !std::isfinite(u10) || !std::isfinite(u01) ||
          !std::isfinite(u11))
        continue;
      CellSample s;
      s.i = i;
      s.j = j;
      s.cx = g.x_of(i) + 0.5 * h;
      s.cy = g.y_of(j) + 0.5 * h;
      s.u = 0.25 * (u00 + u10 + u01 + u11);
      s.gx = (u10 + u11 - u00 - u01) / (2.0 * h);
      s.gy = (u01 + u11 - u00 - u10) / (2.0 * h);
      body(s);
    }
  }
}

} // namespace caplab
