#include "frailcomp/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>

#include "frailcomp/error.hpp"

namespace frailcomp {

namespace {

GaussRule build_rule(std::size_t n) {
  GaussRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  // Newton iteration on P_n from the Chebyshev-like initial guess.
  for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // recompute derivative at the converged root
    double p0 = 1.0, p1 = x;
    for (std::size_t k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
      p0 = p1;
      p1 = p2;
    }
    dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.nodes[i] = -x;
    r.nodes[n - 1 - i] = x;
    r.weights[i] = w;
    r.weights[n - 1 - i] = w;
  }
  return r;
}

double adaptive_step(const std::function<double(double)>& f, double a, double b, double whole, double rel_tol,
                     int depth, int max_depth) {
  const GaussRule& rule = gauss_legendre(15);
  const double m = 0.5 * (a + b);
  const double left = integrate_fixed(rule, f, a, m);
  const double right = integrate_fixed(rule, f, m, b);
  const double refined = left + right;
  if (!std::isfinite(refined)) {
    std::ostringstream os;
    os << "quadrature produced a non-finite value on [" << a << ", " << b << "]";
    throw NumericError(os.str());
  }
  if (std::abs(refined - whole) <= rel_tol * std::abs(refined) + 1e-300) return refined;
  if (depth >= max_depth) {
    std::ostringstream os;
    os.precision(10);
    os << "quadrature did not converge on segment [" << a << ", " << b << "]";
    throw NumericError(os.str());
  }
  return adaptive_step(f, a, m, left, rel_tol, depth + 1, max_depth) +
         adaptive_step(f, m, b, right, rel_tol, depth + 1, max_depth);
}

}  // namespace

const GaussRule& gauss_legendre(std::size_t n) {
  if (n == 15) {
    static const GaussRule r15 = build_rule(15);
    return r15;
  }
  if (n == 31) {
    static const GaussRule r31 = build_rule(31);
    return r31;
  }
  static std::mutex mu;
  static std::map<std::size_t, GaussRule> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, build_rule(n)).first;
  return it->second;
}

double integrate_adaptive(const std::function<double(double)>& f, double a, double b, double rel_tol, int max_depth) {
  if (b <= a) return 0.0;
  const double whole = integrate_fixed(gauss_legendre(15), f, a, b);
  return adaptive_step(f, a, b, whole, rel_tol, 0, max_depth);
}

}  // namespace frailcomp
