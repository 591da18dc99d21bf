#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "caplab/grid_field.hpp"
#include "caplab/linearized.hpp"
#include "caplab/operator_profile.hpp"
#include "caplab/source_term.hpp"

namespace caplab {

// Radial cutoff from the slowly-divergent-integral construction:
// psi(t) = int_{R1}^t ds/(s theta(s)), support radius rj solves
// psi(rj) = 2 psi(Rj), and the profile interpolates 2(1 - psi(t)/psi(rj))
// between the plateau {t <= Rj} and the support edge.
class RadialCutoff {
public:
  RadialCutoff(std::function<double(double)> theta, double R1, double Rj);

  double value(double t) const;   // 1 on the plateau, 0 beyond rj
  double slope(double t) const;   // d/dt value, nonpositive
  double psi(double t) const;

  double Rj() const { return Rj_; }
  double rj() const { return rj_; }
  double psi_Rj() const { return psi_Rj_; }
  // Energy decay bound of the construction: 8/(psi(rj)^2 theta(Rj)) + 4/psi(rj),
  // valid whenever the weight satisfies int_{B_R} f <= R^2 theta(R).
  double decay_bound() const { return bound_; }

private:
  std::function<double(double)> theta_;
  double R1_, Rj_, rj_, psi_Rj_, bound_;
};

// One cutoff per entry of R_list (increasing, each > R1).  theta must be
// positive and nondecreasing on [R1, inf) with divergent int ds/(s theta(s)).
std::vector<RadialCutoff> log_cutoff_sequence(const std::vector<double>& R_list,
                                              const std::function<double(double)>& theta,
                                              double R1);

// Midpoint-rule integral over interior cells of |grad u|^2 <A(grad u) grad phi, grad phi>.
double energy_integral(const GridField& field, const GridField& phi,
                       const OperatorProfile& profile);

// Weighted cutoff integral for a radial weight: int f(r) |grad phi_j|^2 over the
// plane region whose circle-of-radius-r cross-section has length ell(r).  Used
// for semi-analytic checks of the cutoff construction without a grid.
double radial_cutoff_energy(const RadialCutoff& cutoff,
                            const std::function<double(double)>& f_of_r,
                            const std::function<double(double)>& ell_of_r,
                            double tol = 1e-10);

enum class CalibCase { I, II, III, IV, V, VI };
const char* calib_case_name(CalibCase c);         // "i".."vi"
std::optional<CalibCase> parse_calib_case(const std::string& s);

struct CalibrationEntry {
  double R = 0;
  double lhs = 0;        // int_{mask, rho<=R} a(|grad u|)|grad u|^2
  double rhs = 0;
  double area = 0;       // lattice measure of the mask ball the case uses
  double hausdorff = 0;  // boundary arc measure term (cases i and vi)
  bool truncated = false;        // the comparison ball leaves the grid window
  bool beyond_threshold = false; // R above the case's validity threshold
  bool pass = false;
};

struct EnergyReport {
  std::string cutoff;              // descriptor of the cutoff family, if any
  std::vector<double> energies;    // per-cutoff energy values
  std::string case_tag;            // "i".."vi" for calibration runs
  std::vector<CalibrationEntry> entries;
  // assembled constant and its ingredients
  double C_ta = 0;      // sup t a(t)
  double C0 = 0;        // bound on the relevant part of |f(u)|
  double b = 0;         // boundary reference constant
  double inf_u = 0;
  double threshold_R = 0;
  bool verdict = false;
};

// Quantitative calibration inequality on the solved field: for each R,
// lhs = int over {rho <= R} of a(|grad u|)|grad u|^2 against the case's
// area/arc-measure bound with the constant assembled from measured
// ingredients.  rho = sqrt(x^2 + y^2 + u^2).  Hypothesis failures throw
// InapplicableError naming the violated hypothesis.
EnergyReport calibration_bound(const GridField& field, const OperatorProfile& profile,
                               const SourceTerm& source, const Mask& mask,
                               CalibCase which, std::optional<double> b,
                               const std::vector<double>& R_list);

// Three-piece logarithmic cutoff in rho: 1 for rho <= sqrt(R),
// 2 log(R/rho)/log(R) in between, 0 beyond R.  Requires R > 1.
GridField rho_cutoff(const GridField& field, double R);

// Annulus chaining: given per-R calibration values V(R), checks
// int_{sqrt(R)<=rho<=R} a|grad u|^2 / rho^2 <= C3 (V(R)/R^2 + int V(s)/s^3 ds)
// with C3 = 2 from the integration by parts.
struct AnnulusChainEntry {
  double R = 0;
  double lhs = 0;
  double rhs = 0;
  bool pass = false;
};
std::vector<AnnulusChainEntry> annulus_chain_check(const GridField& field,
                                                   const OperatorProfile& profile,
                                                   const Mask& mask,
                                                   const std::vector<double>& R_list);

struct DispatchFacts {
  std::vector<double> radii{2, 4, 8};  // rho-cutoff radii for the energy trend
  std::optional<double> b;             // case-i reference constant
  bool assert_u_bounded = false;       // caller vouches u stays bounded off-window
  bool assert_volume_r_log = false;    // caller vouches |mask cap B_R| = o(R log R)
};

struct DispatchReport {
  MeanCurvatureTypeReport gate;          // profile admissibility record
  std::vector<std::string> applicable;   // case tags whose hypotheses hold
  std::vector<std::string> failures;     // "case: violated hypothesis" for the rest
  std::string chosen;                    // first applicable tag, empty if none
  std::vector<double> radii;
  std::vector<double> energies;          // energy_integral over rho-cutoffs
  bool energies_decreasing = false;
  bool verdict = false;  // a case applies and the energies decrease
};

// Evaluates the measurable hypotheses of the six calibration cases on the
// masked field, picks the first applicable one, and tracks the cutoff
// energies.  Throws InapplicableError when the profile is not of
// mean-curvature type (t^2 lambda1 <= 10 lambda2 <= 10/t).
DispatchReport moderate_energy_dispatch(const GridField& field,
                                        const OperatorProfile& profile,
                                        const SourceTerm& source, const Mask& mask,
                                        const DispatchFacts& facts = {});

}  // namespace caplab
