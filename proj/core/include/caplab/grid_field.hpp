#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "caplab/domain.hpp"

namespace caplab {

// Worker count from the CAPLAB_THREADS environment variable (default 1).
int thread_count();

// Runs body(k) for k in [0, n) on thread_count() workers with a fixed chunked
// partition.  Only for pointwise work with disjoint writes; body must not
// throw.  Results are deterministic because the partition never feeds back
// into the values.
void parallel_for(long n, const std::function<void(long)>& body);

struct FieldMetadata {
  std::string profile;
  std::string source;
  std::string note;
  int newton_iters = 0;
  double final_residual = 0.0;
};

// Scalar field on a Grid: lattice values (NaN outside the domain) plus trace
// values aligned with grid.bpoints.  Boundary lattice nodes carry their value
// in both arrays.
class GridField {
public:
  explicit GridField(std::shared_ptr<const Grid> grid);

  const Grid& grid() const { return *grid_; }
  const std::shared_ptr<const Grid>& grid_ptr() const { return grid_; }

  double& at(int flat) { return values_[flat]; }
  double at(int flat) const { return values_[flat]; }
  double value(int i, int j) const { return values_[grid_->idx(i, j)]; }
  double& bvalue(int bindex) { return bvalues_[bindex]; }
  double bvalue(int bindex) const { return bvalues_[bindex]; }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& bvalues() { return bvalues_; }
  const std::vector<double>& bvalues() const { return bvalues_; }
  FieldMetadata& meta() { return meta_; }
  const FieldMetadata& meta() const { return meta_; }

  // Sets every interior/boundary node and every boundary point.
  void fill(double v);
  void inject(const std::function<double(double, double)>& fn);

  // Value at the endpoint of a stencil arm of an interior node.
  double arm_value(int flat, int dir) const;

  // Arm-aware nonuniform second-order derivatives at an interior node.
  double deriv_x(int flat) const;
  double deriv_y(int flat) const;
  double deriv_xx(int flat) const;
  double deriv_yy(int flat) const;

  // Biquadratic interpolation on the nearest fully-valued 3x3 lattice block
  // (search shifts inward); bilinear fallback on the containing cell; throws
  // std::domain_error when no valued stencil exists.
  double interp(double x, double y) const;

  // One-sided second-order inward normal derivative at a boundary point:
  // (-3 u0 + 4 u1 - u2)/(2h) with u0 the trace value and u1, u2 interpolated
  // at h, 2h along eta.  Falls back to the interior-only stencil at h, 2h, 3h
  // when the trace value is unset; NaN when interpolation fails.
  double boundary_inward_derivative(int bindex) const;

private:
  std::shared_ptr<const Grid> grid_;
  std::vector<double> values_;
  std::vector<double> bvalues_;
  FieldMetadata meta_;
};

// A lattice cell whose four corners all carry values; the integration
// primitive for area integrals (midpoint rule with bilinear corner data).
struct CellSample {
  int i = 0, j = 0;      // lower-left corner
  double cx = 0, cy = 0; // cell center
  double u = 0;          // corner average (value at the center)
  double gx = 0, gy = 0; // bilinear gradient at the center
};

// Visits full cells in row-major order (deterministic accumulation).
void for_each_full_cell(const GridField& f,
                        const std::function<void(const CellSample&)>& body);

} // namespace caplab
