#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "caplab/grid_field.hpp"
#include "caplab/operator_profile.hpp"
#include "caplab/source_term.hpp"

namespace caplab {

// Rigid motions of the plane (the ambient isometry generators): translations
// along a unit vector and rotations about a point.
struct KillingField2D {
  enum class Kind { Translation, Rotation };
  Kind kind = Kind::Translation;
  std::array<double, 2> v{1, 0};  // unit direction (translations)
  std::array<double, 2> p{0, 0};  // center (rotations)

  static KillingField2D translation(double vx, double vy);
  static KillingField2D rotation(double px, double py);
  // "translate:vx,vy" or "rotate:px,py"
  static KillingField2D parse(const std::string& text);

  std::array<double, 2> X(double x, double y) const;
  // Row-major [dX1/dx, dX1/dy, dX2/dx, dX2/dy]; always antisymmetric.
  std::array<double, 4> grad(double x, double y) const;
  std::string describe() const;
};

// Node subdomain used for stability masks and sign checks.
struct Mask {
  std::string name = "all";
  std::function<bool(double, double)> contains;  // empty = whole domain

  bool operator()(double x, double y) const { return !contains || contains(x, y); }
  static Mask all();
  static Mask rect(double x0, double x1, double y0, double y1);
  static Mask disk(double cx, double cy, double r);
};

// The gradient-dependent diffusion tensor sampled on full grid cells.
struct TensorSample {
  int i = 0, j = 0;        // cell (lower-left corner node)
  double cx = 0, cy = 0;   // cell center
  double gx = 0, gy = 0;   // bilinear gradient of u at the center
  MatA A{0, 0, 0};
};

// Samples A(grad u) cell by cell.  Throws InapplicableError for a class-A
// profile and RegimeError when lambda1 degenerates on some cell.
std::vector<TensorSample> assemble_A(const GridField& field, const OperatorProfile& profile);

struct StabilityReport {
  double lambda_min = 0;       // Rayleigh quotient of the stored eigenvector
  double shift = 0;            // inverse-iteration shift actually used
  int iterations = 0;
  int free_nodes = 0;
  std::string mask_name;
  std::vector<double> eigenvector;  // per free node
  std::vector<int> free_flat;       // lattice indices of the free nodes
};

// Smallest eigenvalue of K phi = lambda M phi where K is the quadratic form
// int <A(grad u) grad phi, grad phi> - f'(u) phi^2 over the masked interior
// (zero boundary values) and M is the lumped mass matrix.
StabilityReport stability_lambda1(const GridField& field, const OperatorProfile& profile,
                                  const SourceTerm& source, const Mask& mask);

struct KillingDerivative {
  GridField w;            // <grad u, X> at interior nodes
  double sup_residual = 0;  // sup |div(A(grad u) grad w) + f'(u) w| well inside
  int nodes_checked = 0;
};

// Differentiates the solution along a rigid motion and measures how well the
// result solves the linearized equation (A frozen at grad u).
KillingDerivative killing_derivative(const GridField& field, const OperatorProfile& profile,
                                     const SourceTerm& source, const KillingField2D& X);

enum class SignClass { IdenticallyZero, Positive, Negative, Mixed };
std::string sign_class_name(SignClass s);

// Classifies the sign of w over the masked interior nodes.  tol <= 0 picks the
// default 10 h^2 max(1, sup |grad w|).
SignClass sign_trichotomy_check(const GridField& w, const Mask& mask, double tol = 0.0);

} // namespace caplab
