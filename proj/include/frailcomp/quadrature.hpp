#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace frailcomp {

struct GaussRule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

// Cached Gauss-Legendre rule with n nodes.
const GaussRule& gauss_legendre(std::size_t n);

// Fixed rule mapped onto [a, b].
template <class F>
double integrate_fixed(const GaussRule& rule, F&& f, double a, double b) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) acc += rule.weights[i] * f(mid + half * rule.nodes[i]);
  return acc * half;
}

// 15-node Gauss-Legendre on [a, b] compared with the two-half refinement;
// the halves are bisected again while they disagree by more than rel_tol.
// Throws NumericError naming the segment when max_depth is exhausted.
double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double rel_tol = 1e-8, int max_depth = 30);

}  // namespace frailcomp
