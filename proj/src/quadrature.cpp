#include "surfkin/quadrature.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "surfkin/errors.hpp"

namespace surfkin {

QuadratureRule gauss_legendre(std::size_t n) {
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const double kk = static_cast<double>(k);
        const double p2 = ((2.0 * kk - 1.0) * x * p1 - (kk - 1.0) * p0) / kk;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0, p1 = x;
      dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

QuadratureRule cosine_mapped_rule(double a, double b, const QuadratureRule& reference) {
  QuadratureRule out;
  const double half = 0.5 * (b - a);
  for (std::size_t i = 0; i < reference.nodes.size(); ++i) {
    const double t = 0.5 * std::numbers::pi * (reference.nodes[i] + 1.0);
    out.nodes.push_back(a + half * (1.0 - std::cos(t)));
    out.weights.push_back(reference.weights[i] * 0.5 * std::numbers::pi * half * std::sin(t));
  }
  return out;
}

double integrate_adaptive(const std::function<double(double)>& f, double a, double b, double rel_tol,
                          double abs_tol) {
  if (!(b > a)) return 0.0;
  // Shallow recursion: leaf error estimates are summed, so a deep tree would only
  // accumulate the rounding noise floor of f.
  double err = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 8, rel_tol, &err);
  if (!std::isfinite(value) || err > std::max(abs_tol, 10.0 * rel_tol * std::abs(value))) {
    std::ostringstream msg;
    msg << "quadrature did not converge on [" << a << ", " << b << "]: value " << value
        << ", error estimate " << err;
    throw NumericalError(msg.str());
  }
  return value;
}

Bracket bracket_root(const std::function<double(double)>& f, double lo, double hi, double f_lo,
                     double f_hi, const char* what) {
  if (f_lo == 0.0) return {lo, lo};
  if (f_hi == 0.0) return {hi, hi};
  if ((f_lo > 0.0) == (f_hi > 0.0) || !std::isfinite(f_lo) || !std::isfinite(f_hi)) {
    std::ostringstream msg;
    msg << what << ": root not bracketed on [" << lo << ", " << hi << "] (f = " << f_lo << ", "
        << f_hi << ")";
    throw NumericalError(msg.str());
  }
  std::uintmax_t iters = 200;
  const auto r = boost::math::tools::toms748_solve(
      f, lo, hi, f_lo, f_hi, boost::math::tools::eps_tolerance<double>(52), iters);
  const double a = r.first, b = r.second;
  if (a == b) return {a, a};
  // Keep the endpoint on the allowed side (f <= 0) as the turning point.
  return f(a) <= 0.0 ? Bracket{a, b} : Bracket{b, a};
}

}  // namespace surfkin
