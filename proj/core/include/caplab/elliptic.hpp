#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "caplab/domain.hpp"
#include "caplab/errors.hpp"
#include "caplab/grid_field.hpp"
#include "caplab/operator_profile.hpp"
#include "caplab/source_term.hpp"

namespace caplab {

// What to impose on artificial truncation edges of unbounded shapes:
//   ProfileExtension - Dirichlet values from the 1D cross-section two-point
//                      problem (the natural choice for strips and slabs);
//   Reflect          - zero flux through the edge (insulated arm).
// Auto picks ProfileExtension for Strip/Slab and Reflect otherwise.
enum class ArtificialPolicy { Auto, ProfileExtension, Reflect };

struct SolveOptions {
  int max_iter = 50;
  double tol = 1e-10;
  double damping_floor = 0.0009765625; // 2^-10
  ArtificialPolicy artificial = ArtificialPolicy::Auto;
  // Optional override of the per-component Dirichlet constants; called as
  // (component id, x, y).  Applies to real components only.
  std::function<double(int, double, double)> dirichlet_override;
};

// Damped Newton on the conservative edge-flux discretization of
// div(a(|grad u|) grad u) + f(u) = 0 with Dirichlet data from the domain's
// boundary components.  Throws NonConvergenceError / RegimeError /
// InapplicableError (class-A profile).
GridField solve_dirichlet(const OperatorProfile& profile, const SourceTerm& source,
                          std::shared_ptr<const Grid> grid,
                          const SolveOptions& options = {});

// Sup-norm of the discrete residual div(a grad u) + f(u) over interior nodes
// of an existing field (same discretization as the solver).
double residual(const GridField& field, const OperatorProfile& profile,
                const SourceTerm& source);

struct NeumannComponent {
  int comp = 0;
  double mean = 0;     // hweight-weighted mean of the inward normal derivative
  double max_dev = 0;  // max |trace - mean|
  std::vector<double> traces;  // aligned with grid.comp_bpoints[comp]
};

struct NeumannReport {
  std::vector<NeumannComponent> components;
  const NeumannComponent* find(int comp) const;
};

// Overdetermined boundary data: one-sided second-order inward derivative at
// every real boundary point, summarized per component.
NeumannReport neumann_trace(const GridField& field);

struct RadialSolution {
  std::vector<double> r, u, u_prime;
};

// Exact-oracle radial solver: shooting with u'(0)=0 for a disk, damped Newton
// on the conservative 1D system for an annulus.  Step is h/4.
RadialSolution radial_solve(const OperatorProfile& profile, const SourceTerm& source,
                            const DomainSpec2D& spec, double h);

struct GradientBoundReport {
  double sup_interior = 0;
  double sup_boundary = 0;
  double bound = 0;  // max{ sqrt(n/2) = 1, sup_boundary }
  bool verdict = false;
};

// Interior gradient bound check; requires f' <= 0 on the field's value range
// (InapplicableError otherwise).  Verdict: sup_interior <= bound + 5h.
GradientBoundReport gradient_bound_check(const GridField& field,
                                         const OperatorProfile& profile,
                                         const SourceTerm& source);

struct FluxBalance {
  double boundary_flux_sum = 0;    // sum of outward fluxes through boundary arms
  double interior_source_sum = 0;  // sum of f(u) * cell volume
  double mismatch = 0;             // | boundary + interior |
};

// Discrete divergence theorem diagnostic for a solved field.
FluxBalance flux_balance(const GridField& field, const OperatorProfile& profile,
                         const SourceTerm& source);

struct SectionProfile {
  double x_left = 0, x_right = 0;
  double c_left = 0;  // shooting slope at the left end
  std::vector<double> x, u, uprime;
  double eval(double xq) const;        // linear interpolation
  double eval_slope(double xq) const;  // linear interpolation of u'
};

// 1D two-point problem  (a(|u'|)u')' + f(u) = 0, u(xl)=bl, u(xr)=br  by
// bisection on the left slope.  Used for artificial-edge extension values and
// as an independent cross-check of quasi-1D solves.
SectionProfile solve_section_bvp(const OperatorProfile& profile, const SourceTerm& source,
                                 double x_left, double x_right, double b_left,
                                 double b_right, double step);

} // namespace caplab
