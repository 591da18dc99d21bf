#pragma once

// Family of gradient-dependent diffusion coefficients a(|grad u|) for operators
// of the form div(a(|grad u|) grad u), with eigenvalues of the linearization,
// regularity classification, and the mean-curvature-type growth test.

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace caplab {

// ordering matters: later = stronger assumptions
enum class RegularityClass { A = 0, AStrong = 1, ASuperStrong = 2 };

enum class BuiltinTag { MeanCurvature, PLaplacian, PQLaplacian, Exponential, Polytropic, Custom };

struct LambdaPair {
  double lambda1;  // a(t) + t a'(t), eigenvalue along the gradient direction
  double lambda2;  // a(t), eigenvalue orthogonal to it
};

std::string regularity_name(RegularityClass c);

class OperatorProfile {
 public:
  static OperatorProfile mean_curvature();             // a = 1/sqrt(1+t^2)
  static OperatorProfile p_laplacian(double p);        // a = t^(p-2), p > 1
  static OperatorProfile pq_laplacian(double p, double q);  // a = t^(p-2) + t^(q-2), p,q >= 2
  static OperatorProfile exponential();                // a = exp(t^2)
  static OperatorProfile polytropic(double gamma);     // a = (1-(g-1)t^2/2)^(1/(g-1)), t < sqrt(2/(g+1))
  // a_prime may be empty: central difference with step 1e-6 is used instead
  static OperatorProfile custom(std::string name, std::function<double(double)> a,
                                std::function<double(double)> a_prime,
                                RegularityClass declared_class,
                                double t_max = std::numeric_limits<double>::infinity());
  // "mean-curvature" | "p-laplacian:<p>" | "pq-laplacian:<p>:<q>" | "exponential" | "polytropic:<gamma>"
  static OperatorProfile parse(const std::string& spec);

  const std::string& name() const { return name_; }
  BuiltinTag tag() const { return tag_; }
  RegularityClass regularity_class() const { return class_; }
  double t_max() const { return t_max_; }
  // builtin parameters (p, q, gamma, ...); empty for parameterless profiles
  const std::vector<double>& params() const { return params_; }

  double a(double t) const;        // throws std::domain_error outside [0, t_max)
  double a_prime(double t) const;
  LambdaPair eval_lambda(double t) const;
  double lambda1(double t) const { return eval_lambda(t).lambda1; }
  double lambda2(double t) const { return eval_lambda(t).lambda2; }

  // G(s) = integral of sigma*lambda1(sigma) over [0,s]; closed form for builtins,
  // adaptive quadrature (tol 1e-10) for customs
  double G(double s) const;

  // sup of t*a(t) over (0, t_max); +inf when unbounded.  Closed form for builtins,
  // log-grid scan for customs (heuristic, reported as such by callers).
  double sup_ta() const;

 private:
  OperatorProfile() = default;
  void require_valid(double t) const;

  std::string name_;
  BuiltinTag tag_ = BuiltinTag::Custom;
  RegularityClass class_ = RegularityClass::A;
  double t_max_ = std::numeric_limits<double>::infinity();
  std::vector<double> params_;
  std::function<double(double)> a_fn_, ap_fn_;
};

// Symmetric 2x2 matrix A(X) = (a'(|X|)/|X|) X (x) X + a(|X|) Id evaluated at X=(gx,gy).
struct MatA {
  double xx, xy, yy;
};
MatA matrix_A(const OperatorProfile& profile, double gx, double gy);

struct RegularityReport {
  RegularityClass declared;
  // strongest class whose sampled sign conditions all hold; empty if even class A fails
  std::optional<RegularityClass> sampled;
  bool consistent = false;  // sampled present and equal to declared
  double first_violation_t = std::numeric_limits<double>::quiet_NaN();
  std::string note;
};

RegularityReport check_regularity_class(const OperatorProfile& profile,
                                        const std::vector<double>& samples);
// default grid: t=0 plus 512 log-spaced samples in [1e-6, min(100, 0.995 t_max)]
RegularityReport check_regularity_class(const OperatorProfile& profile);

struct MeanCurvatureTypeReport {
  bool holds = false;
  double max_ratio1 = 0;  // sup over samples of t^2 lambda1 / lambda2, compared with C1
  double max_ratio2 = 0;  // sup over samples of t * lambda2, compared with C2
  double argmax_t1 = 0, argmax_t2 = 0;
  double c1 = 0, c2 = 0;
};

MeanCurvatureTypeReport check_mean_curvature_type(const OperatorProfile& profile, double c1,
                                                  double c2, const std::vector<double>& samples);
// default grid: 512 log-spaced samples in (0, min(100, 0.995 t_max)]
MeanCurvatureTypeReport check_mean_curvature_type(const OperatorProfile& profile, double c1,
                                                  double c2);

std::vector<double> default_t_samples(const OperatorProfile& profile, bool include_zero);

}  // namespace caplab
