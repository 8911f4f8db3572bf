#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace frailcomp {

struct BfgsOptions {
  double grad_tol = 1e-5;     // infinity norm
  double rel_f_tol = 1e-9;
  std::size_t max_iter = 500;
  double max_step = 2.0;      // cap on the first trial step length (inf norm)
  // Optional box; empty means unbounded. Steps are projected onto the box and
  // components held at a bound by the gradient are excluded from the
  // convergence test.
  std::vector<double> lower;
  std::vector<double> upper;
};

struct BfgsResult {
  std::vector<double> x;
  double f = 0.0;
  std::vector<double> grad;
  std::vector<bool> at_bound;
  std::size_t iterations = 0;
  bool converged = false;
  std::string message;
};

// Minimizes f. `fg` returns f(x) and fills the gradient; non-finite values
// are treated as infeasible and trigger backtracking.
using ObjectiveWithGradient = std::function<double(const std::vector<double>& x, std::vector<double>& grad)>;
using Objective = std::function<double(const std::vector<double>& x)>;

BfgsResult bfgs_minimize(const Objective& f, const ObjectiveWithGradient& fg, std::vector<double> x0,
                         const BfgsOptions& opts = {});

}  // namespace frailcomp
