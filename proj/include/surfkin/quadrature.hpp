#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

namespace surfkin {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1].
QuadratureRule gauss_legendre(std::size_t n);

/// Rule on [a, b] after z = a + (b-a)(1 - cos t)/2, t in [0, pi]. The Jacobian absorbs
/// inverse-square-root endpoint behaviour and turns square-root kinks into smooth functions.
QuadratureRule cosine_mapped_rule(double a, double b, const QuadratureRule& reference);

/// Adaptive Gauss-Kronrod integral of a smooth f over [a, b].
/// Throws NumericalError when the error estimate exceeds max(abs_tol, 10 rel_tol |value|).
double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double rel_tol = 1e-10, double abs_tol = 1e-13);

struct Bracket {
  double inside;   // endpoint where f <= 0
  double outside;  // endpoint where f > 0
};

/// Root of a monotone function on [lo, hi] with f(lo), f(hi) of opposite sign.
/// Bracketing TOMS 748 iteration driven to full double precision.
Bracket bracket_root(const std::function<double(double)>& f, double lo, double hi, double f_lo,
                     double f_hi, const char* what);

}  // namespace surfkin
