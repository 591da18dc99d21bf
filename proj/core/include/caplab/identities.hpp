#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "caplab/grid_field.hpp"
#include "caplab/linearized.hpp"
#include "caplab/operator_profile.hpp"
#include "caplab/source_term.hpp"

namespace caplab {

// Pointwise second-order geometry of the level-set foliation of u at a node:
// gradient frame, Hessian, and the derived curvature quantities.
struct FramePoint {
  bool ok = false;      // usable: full stencil and |grad u| above the cutoff
  double m = 0;         // |grad u|
  double nx = 0, ny = 0;  // unit gradient nu
  double hxx = 0, hxy = 0, hyy = 0;
  double mx = 0, my = 0;  // grad m, central differences of the m field
  double unn = 0;         // nu^T H nu
  double gtm2 = 0;        // |tangential part of grad m|^2
  double ii2 = 0;         // |II|^2 of the level set through the node
};

// Caches |grad u| on the lattice and serves FramePoints.  The m field is
// differentiated again for grad m, so curvature residuals converge at O(h^2)
// instead of collapsing to round-off on polynomial data.
class LevelSetGeometry {
 public:
  // exclusion_tol <= 0 picks the default 10 h.
  LevelSetGeometry(const GridField& u, double exclusion_tol = 0.0);

  FramePoint at(int flat) const;
  const GridField& m_field() const { return m_; }
  double exclusion_tol() const { return tol_; }
  // true when the 3x3 block around flat is interior (frame computable)
  bool stencil_ok(int flat) const;

 private:
  const GridField& u_;
  GridField m_;
  double tol_;
};

struct IdentityReport {
  std::string id;       // "L4.1-1".."L4.1-6", "bochner-A", "bochner-B", ...
  double h = 0;
  double sup_residual = 0;
  int nodes = 0;        // admissible evaluation points
  int excluded = 0;     // rejected by the |grad u| exclusion
  std::optional<double> ratio;  // coarse/fine residual, when a second level ran
};

// Sets coarse.ratio from a matching run at half the spacing.
IdentityReport with_ratio(IdentityReport coarse, const IdentityReport& fine);

// Verifies the six pointwise curvature identities linking grad|grad u|, the
// Hessian, and the level-set second fundamental form.  Each identity is
// evaluated through two independent discrete routes so the residual measures
// genuine discretization error.
std::vector<IdentityReport> verify_pointwise_identities(const GridField& field,
                                                        const OperatorProfile& profile,
                                                        double exclusion_tol = 0.0);

enum class BochnerVariant { A, B };

// Verifies the weighted Bochner formulas:
//   A:  (1/2) div(A grad m^2) = lambda1 unn^2 + (lambda1+lambda2)|grad^T m|^2
//         + lambda2 m^2 |II|^2 + lambda2 Ric(grad u, grad u) + <grad(div A grad u), grad u>
//   B:  m div(A grad m)       = lambda1 |grad^T m|^2 + lambda2 m^2 |II|^2
//         + lambda2 Ric(grad u, grad u) + <grad(div A grad u), grad u>
// (Ric = 0 in the flat plane, kept as an explicit zero.)  With solved_source
// given, the last term uses the equation: -f'(u) m^2; otherwise it is obtained
// by differentiating div(A grad u) numerically.
IdentityReport verify_bochner(const GridField& field, const OperatorProfile& profile,
                              BochnerVariant variant,
                              const SourceTerm* solved_source = nullptr,
                              double exclusion_tol = 0.0);

struct PoincareReport {
  double lhs = 0;            // int m^2 <A grad phi, grad phi>
  double rhs_geometry = 0;   // int phi^2 {lambda1 |grad^T m|^2 + lambda2 m^2 |II|^2}
  double rhs_quotient = 0;   // int w^2 <A grad(phi m / w), grad(phi m / w)>
  double slack = 0;          // lhs - rhs_geometry - rhs_quotient
  int geometry_nodes = 0;
  int cells = 0;
};

// Weighted Poincare inequality on a cutoff: requires w > 0 wherever the mask
// holds and phi to vanish near the boundary of the grid.
PoincareReport verify_poincare(const GridField& field, const GridField& w,
                               const GridField& phi, const Mask& mask,
                               const OperatorProfile& profile);

struct BoundaryIdentityReport {
  int comp = 0;
  double c_mean = 0;         // mean Neumann trace on the component
  double sup_residual = 0;
  int points = 0;            // boundary points evaluated
  int skipped = 0;           // corners and points with failed inward sampling
};

// First-variation boundary identity along one Dirichlet component for a rigid
// motion X:  <w A grad(m^2/2) - m^2 A grad w, eta> + lambda1 m^2 c <eta, grad_eta X>
// must vanish when u and its normal derivative are constant on the component.
BoundaryIdentityReport verify_boundary_identity(const GridField& field,
                                                const OperatorProfile& profile,
                                                const KillingField2D& X, int comp);

struct DivergenceReport {
  double boundary_term = 0;  // sum over real boundary points in the mask of <W, eta> weights
  double interior_term = 0;  // node sum of the lower bound h
  double slack = 0;          // -(boundary_term + interior_term), expected >= -O(h)
  double sup_W_on_cut = 0;   // |W| on the interior mask boundary (should vanish)
  int boundary_points = 0;
  int interior_nodes = 0;
};

// Discrete divergence-theorem inequality: for W vanishing on the interior
// boundary of the masked region and lower_bound <= div W, the flux of W
// through the real boundary plus the integral of lower_bound is nonpositive.
DivergenceReport divergence_check(
    const GridField& field,
    const std::function<std::array<double, 2>(double, double)>& W, const Mask& mask,
    const std::function<double(double, double)>& lower_bound, double tol = 0.0);

} // namespace caplab
