#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "caplab/expr.hpp"

namespace caplab {

class GridField;

// ---------------------------------------------------------------------------
// Domain specifications
// ---------------------------------------------------------------------------

enum class ShapeKind { Strip, Rectangle, Disk, Annulus, Epigraph, Slab };

std::string shape_name(ShapeKind k);

struct BoundaryComponent {
  int id = 1;                              // real components use ids >= 1
  double b = 0.0;                          // Dirichlet value on the component
  std::optional<double> expected_neumann;  // reference c_j = |du/deta|, when known
};

// A 1D curve given by an expression in the parameter variable 'u'.  Walls are
// graphs x = phi(y), so the parameter is the y coordinate.
struct CurveFn {
  std::string source;
  expr::NodePtr ast;
  double operator()(double y) const { return expr::eval(ast, y); }
  bool valid() const { return static_cast<bool>(ast); }
  static CurveFn parse(const std::string& e);
  static CurveFn constant(double v);
};

// Supported shapes (walls are x-graphs over y; y is the translation/truncation
// direction for the unbounded ones):
//   Strip      {0 < x < T} x y_extent
//   Rectangle  [a,b] x [c,d]
//   Disk       |p - center| < R
//   Annulus    R_in < |p - center| < R_out
//   Epigraph   {x > phi(y)} x y_extent, truncated at x = max(phi) + depth
//   Slab       {phi1(y) < x < phi2(y)} x y_extent
// Truncation edges of unbounded shapes are "artificial" boundary (component id
// 0) and are excluded from transversality checks and boundary integrals.
struct DomainSpec2D {
  ShapeKind shape = ShapeKind::Strip;
  double T = 1.0;                          // Strip
  double a = 0, b = 1, c = 0, d = 1;       // Rectangle
  std::array<double, 2> center{0.0, 0.0};  // Disk / Annulus
  double R = 1.0;                          // Disk
  double R_in = 0.5, R_out = 1.0;          // Annulus
  CurveFn phi;                             // Epigraph
  double depth = 1.0;                      // Epigraph x-truncation margin
  double x_cap = 0.0;                      // Epigraph: max(phi) + depth (set by builder)
  CurveFn phi1, phi2;                      // Slab
  std::array<double, 2> y_extent{-1.0, 1.0};
  std::vector<BoundaryComponent> components;

  static DomainSpec2D strip(double T, std::array<double, 2> y_extent);
  static DomainSpec2D rectangle(double a, double b, double c, double d);
  static DomainSpec2D disk(std::array<double, 2> center, double R);
  static DomainSpec2D annulus(std::array<double, 2> center, double R_in, double R_out);
  static DomainSpec2D epigraph(CurveFn phi, std::array<double, 2> y_extent, double depth);
  static DomainSpec2D slab(CurveFn phi1, CurveFn phi2, std::array<double, 2> y_extent);

  // Real component ids for the shape, in the canonical order:
  //   Strip/Slab: 1 = left wall, 2 = right wall; Disk/Epigraph: 1;
  //   Annulus: 1 = inner, 2 = outer; Rectangle: 1..4 = left,right,bottom,top.
  std::vector<int> real_component_ids() const;
  const BoundaryComponent* component(int id) const;
  BoundaryComponent* component(int id);

  bool inside(double x, double y) const;  // strict interior test
  void validate() const;                  // throws std::invalid_argument
};

// ---------------------------------------------------------------------------
// Grids
// ---------------------------------------------------------------------------

enum class NodeType : unsigned char { Outside = 0, Interior = 1, Boundary = 2 };

// A boundary point: either a lattice node lying on the analytic boundary or
// the intersection of a lattice segment with the boundary curve (a cut).
struct BPoint {
  double x = 0, y = 0;
  int comp = 0;            // component id; 0 = artificial truncation edge
  double nx = 0, ny = 0;   // inward unit normal
  double hweight = 0;      // trapezoid weight for boundary line integrals
  int owner = -1;          // interior node whose arm produced the cut (-1: on-lattice)
  int dir = -1;            // arm direction from owner (0=W,1=E,2=S,3=N), -1: on-lattice
  bool corner = false;     // two boundary pieces meet here; normal is the bisector
  bool artificial() const { return comp == 0; }
};

// One stencil arm of an interior node.  theta in (0,1] scales the lattice
// spacing; bindex < 0 means the neighbour is the adjacent lattice node
// (interior), otherwise the value lives at bpoints[bindex].
struct Arm {
  double theta = 1.0;
  int bindex = -1;
};

struct Grid {
  double h = 0;
  int nx = 0, ny = 0;        // lattice dimensions; node (i,j) at (x0+i*h, y0+j*h)
  double x0 = 0, y0 = 0;
  std::vector<NodeType> type;       // nx*ny, row-major (j*nx+i)
  std::vector<Arm> arms;            // 4 per node (W,E,S,N), meaningful for Interior
  std::vector<BPoint> bpoints;
  std::vector<int> bpoint_of_node;  // Boundary lattice node -> bpoint index, else -1
  std::vector<std::vector<int>> comp_bpoints;  // [component id] -> ordered bpoint indices
  std::vector<int> interior;        // flat indices of interior nodes, row-major
  DomainSpec2D spec;

  int idx(int i, int j) const { return j * nx + i; }
  double x_of(int i) const { return x0 + i * h; }
  double y_of(int j) const { return y0 + j * h; }
  bool is_interior(int i, int j) const {
    return i >= 0 && i < nx && j >= 0 && j < ny && type[idx(i, j)] == NodeType::Interior;
  }
  bool has_value(int i, int j) const {  // interior or valued boundary lattice node
    if (i < 0 || i >= nx || j < 0 || j >= ny) return false;
    return type[idx(i, j)] != NodeType::Outside;
  }
  const Arm& arm(int flat, int dir) const { return arms[4 * flat + dir]; }
};

// Builds the structured grid: lattice anchored at the bounding box of the
// domain, nodes classified strictly inside / on the analytic boundary /
// outside, stencil arms cut against the boundary by bisection.  Each real
// boundary component must receive at least 8 boundary points.
Grid build_grid(const DomainSpec2D& spec, double h);

// ---------------------------------------------------------------------------
// Geometric hypothesis checks
// ---------------------------------------------------------------------------

enum class SignPattern { Plus, Minus, Zero, Mixed };

std::string sign_pattern_name(SignPattern s);

struct TransversalityReport {
  struct Entry {
    int comp = 0;
    SignPattern sign = SignPattern::Zero;
    double min_dot = 0, max_dot = 0;
  };
  std::vector<Entry> entries;
  bool verdict = false;  // true iff no listed component is Mixed
};

// Samples <eta, v> along each listed real component (256 samples of the
// analytic parameterization) and reports the sign pattern.
TransversalityReport mildly_transverse(const DomainSpec2D& spec,
                                       std::array<double, 2> v,
                                       const std::vector<int>& components);

// Ids of real components where the inward normal derivative of the field
// exceeds tol somewhere (sampled at the component's boundary points with a
// one-sided second-order difference).
std::vector<int> partial_star(const DomainSpec2D& spec, const GridField& field,
                              double tol);

struct VolumeGrowthReport {
  std::vector<double> R;
  std::vector<double> area;          // node-count area of  domain ∩ B_R(0)
  std::vector<double> ratio;         // area / (R^2 log R), for R > 1
  std::vector<bool> truncated;       // B_R exceeded the lattice extent
  double fitted_exponent = 0;        // slope of log area vs log R
  bool consistent = false;           // ratio decreasing over the last three radii
};

VolumeGrowthReport volume_growth(const Grid& grid, const std::vector<double>& R_list);

} // namespace caplab
