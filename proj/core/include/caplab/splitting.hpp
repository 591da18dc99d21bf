#pragma once

#include <array>
#include <utility>
#include <vector>

#include "caplab/grid_field.hpp"
#include "caplab/linearized.hpp"
#include "caplab/profile_ode.hpp"

namespace caplab {

// Critical set {|grad u| <= tol} and how it sits in the domain: does its
// complement stay connected, and do the critical nodes line up?
struct CritSummary {
  std::vector<int> nodes;            // flat indices with |grad u| <= tol
  int complement_components = 0;     // flood-fill count of {|grad u| > tol}
  double line_residual = 0;          // RMS distance to the total-least-squares line
  std::array<double, 2> line_point{0, 0};  // centroid of the set
  std::array<double, 2> line_dir{0, 0};    // unit direction of the fitted line
  bool collinear = false;            // >= 8 nodes and residual <= 5h
  double tol = 0;
};

CritSummary critical_set(const GridField& field, double tol = 0.0);  // default 10 h

// Verdict of the 1D-splitting test on a field: the level-set second
// fundamental form and the tangential gradient of |grad u| both vanish to
// discretization accuracy iff u factors through a line.
struct SplitReport {
  bool is_1d = false;
  std::array<double, 2> direction{0, 0};  // normalized average of nu
  double sup_ii2 = 0;                     // sup |II|^2 over the admissible region
  double sup_gtm2 = 0;                    // sup |grad^T |grad u||^2
  int nodes_checked = 0;
  int excluded = 0;                       // m below the frame cutoff
  double tol = 0;
  // 1D reconstruction (filled when is_1d): u sampled along the direction
  // through the anchor node, t = signed distance from the anchor.
  ProfileSolution profile;
  std::array<double, 2> anchor{0, 0};
  double mismatch_field = 0;  // sup |u(x) - u0(<x - anchor, dir>)|
  double mismatch_shoot = 0;  // sup |u0 - RK4 shoot seeded with (u0(0), u0'(0))|
  double mismatch = 0;        // max of the two
  CritSummary crit;
};

// The |II|^2 and |grad^T |grad u||^2 node fields (NaN where the frame is not
// computable: short stencil or |grad u| below the cutoff).
std::pair<GridField, GridField> geometry_fields(const GridField& field,
                                                double exclusion_tol = 0.0);

// tol <= 0 picks 100 h^2.  region restricts the admissible nodes (used to test
// the two halves of a glued configuration separately).
SplitReport detect_splitting(const GridField& field, double tol = 0.0,
                             const Mask& region = Mask::all());

// Two-piece gluing verdict on a slab-like domain whose critical set separates
// it: checks (a) nondegenerate boundary gradient, (b) both halves 1D,
// (c) directions and critical line aligned with the walls, (d) both
// reconstructed profiles agree with the even shoot from the interior minimum.
struct GlueReport {
  CritSummary crit;
  bool wall_gradient_ok = false;  // (a)
  double min_wall_gradient = 0;
  double wall_gradient_floor = 0;
  bool halves_1d = false;         // (b)
  SplitReport left, right;        // lower/higher side along the split axis
  bool aligned = false;           // (c)
  double direction_angle = 0;     // between the half directions, mod pi
  double line_angle = 0;          // worst crit-line vs wall-line angle
  bool profiles_match = false;    // (d)
  double profile_deviation = 0;
  double profile_deviation_tol = 0;
  bool verdict = false;
};

GlueReport glue_check(const GridField& field, double tol = 0.0);

}  // namespace caplab
