#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "caplab/operator_profile.hpp"
#include "caplab/source_term.hpp"

namespace caplab {

// One-dimensional profiles u(t) solving  (a(|u'|) u')' + f(u) = 0,
// integrated in the explicit form u'' = -f(u) / lambda1(|u'|).

enum class Termination {
  SpanExhausted,   // reached the end of the requested t interval
  EllipticityLoss, // lambda1(|u'|) dropped below 1e-10 (vertical tangent)
  SlopeLimit,      // |u'| reached the validity interval boundary t_max
};

std::string termination_name(Termination t);

enum class ProfileClass {
  AffineHalfPlane,
  CylinderArc,
  CapillaryProfile,
  Unclassified,
};

std::string profile_class_name(ProfileClass c);

struct Classification {
  ProfileClass kind = ProfileClass::Unclassified;
  // CylinderArc only: fitted circle.  radius is the measured mean distance of
  // the data to the fitted center (compare against 1/|H|).
  double radius = 0.0;
  std::array<double, 2> center{0.0, 0.0};
  double max_deviation = 0.0; // from the fitted model (line / circle of radius 1/|H|)
  std::string note;
};

struct ProfileSolution {
  std::vector<double> t_grid;  // increasing, contains the shoot start t=0
  std::vector<double> u;
  std::vector<double> u_prime;
  std::vector<double> E_trace; // first integral along the solution
  Termination termination = Termination::SpanExhausted;
  double step = 0.0;
  std::string profile_name;
  std::string source_name;
};

// Classical RK4 shoot from t=0 with u(0)=u0, u'(0)=c over t_span (which must
// contain 0; a span with negative left end is integrated backwards via the
// time-reversal symmetry of the equation and merged).  Halts early when
// lambda1(|u'|) < 1e-10 or |u'| reaches profile.t_max; the partial solution up
// to the last accepted node is returned with the corresponding termination tag.
ProfileSolution shoot(const OperatorProfile& profile, const SourceTerm& source,
                      double u0, double c, std::array<double, 2> t_span,
                      double step);

// E = G(|u'|) + F(u) with G(s) = integral of sigma*lambda1(sigma) on [0,s];
// constant along exact solutions.
double first_integral(const OperatorProfile& profile, const SourceTerm& source,
                      double u, double uprime);

Classification classify(const ProfileSolution& sol, const OperatorProfile& profile,
                        const SourceTerm& source, double tol);

// Maximal initial subinterval of t_grid on which u' keeps a strict sign
// (threshold 1e-12).  Degenerate [t0, t0] when u' starts at zero.
std::array<double, 2> monotone_span(const ProfileSolution& sol);

} // namespace caplab
