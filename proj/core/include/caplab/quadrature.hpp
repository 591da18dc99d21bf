#pragma once

#include <functional>
#include <vector>

namespace caplab {

// Adaptive Simpson with Richardson correction; tol is an absolute target.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-10, int max_depth = 48);

// Bisection on [lo, hi]; requires f(lo) and f(hi) of opposite sign (or zero).
// Stops when |f(mid)| <= ftol or the bracket collapses.
double bisect(const std::function<double(double)>& f, double lo, double hi,
              double ftol = 1e-10, int max_iter = 200);

// n log-spaced samples in [lo, hi], lo > 0.
std::vector<double> log_spaced(double lo, double hi, int n);

}  // namespace caplab
