#include "frailcomp/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "frailcomp/error.hpp"

namespace frailcomp {

namespace {

double inf_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

using Mat = std::vector<std::vector<double>>;

Mat identity(std::size_t n, double scale = 1.0) {
  Mat m(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) m[i][i] = scale;
  return m;
}

std::vector<double> mat_vec(const Mat& m, const std::vector<double>& v) {
  std::vector<double> out(v.size(), 0.0);
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = dot(m[i], v);
  return out;
}

// Inverse-Hessian BFGS update.
void bfgs_update(Mat& h, const std::vector<double>& s, const std::vector<double>& y) {
  const std::size_t n = s.size();
  const double sy = dot(s, y);
  const auto hy = mat_vec(h, y);
  const double yhy = dot(y, hy);
  const double a = (sy + yhy) / (sy * sy);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      h[i][j] += a * s[i] * s[j] - (hy[i] * s[j] + s[i] * hy[j]) / sy;
    }
  }
}

// Inverse of the diagonal curvature from second differences of f with a
// coarse step; directions with non-positive or unresolved curvature get a
// step of at most max_step.
Mat diagonal_scaling(const Objective& f, const std::vector<double>& x, double f0, const std::vector<double>& g,
                     double max_step) {
  const std::size_t n = x.size();
  Mat h = identity(n);
  std::vector<double> y = x;
  for (std::size_t i = 0; i < n; ++i) {
    const double step = 1e-2 * std::max(1.0, std::abs(x[i]));
    y[i] = x[i] + step;
    const double fp = f(y);
    y[i] = x[i] - step;
    const double fm = f(y);
    y[i] = x[i];
    const double c = (fp - 2.0 * f0 + fm) / (step * step);
    const double cap = max_step / std::max(std::abs(g[i]), 1e-12);
    h[i][i] = (std::isfinite(c) && c > 0.0) ? std::min(1.0 / c, cap) : std::min(1.0, cap);
  }
  return h;
}

}  // namespace

BfgsResult bfgs_minimize(const Objective& f, const ObjectiveWithGradient& fg, std::vector<double> x0,
                         const BfgsOptions& opts) {
  const std::size_t n = x0.size();
  const double inf = std::numeric_limits<double>::infinity();
  const std::vector<double> lo = opts.lower.empty() ? std::vector<double>(n, -inf) : opts.lower;
  const std::vector<double> hi = opts.upper.empty() ? std::vector<double>(n, inf) : opts.upper;
  if (lo.size() != n || hi.size() != n) throw ConfigError("optimizer bounds do not match the parameter count");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(lo[i] <= hi[i])) throw ConfigError("optimizer lower bound exceeds upper bound");
  }
  auto project = [&](std::vector<double>& x) {
    for (std::size_t i = 0; i < n; ++i) x[i] = std::clamp(x[i], lo[i], hi[i]);
  };
  // components pressed against a bound by the descent direction
  auto held = [&](const std::vector<double>& x, const std::vector<double>& g) {
    std::vector<bool> h(n);
    for (std::size_t i = 0; i < n; ++i) h[i] = (x[i] <= lo[i] && g[i] > 0.0) || (x[i] >= hi[i] && g[i] < 0.0);
    return h;
  };
  auto free_norm = [&](const std::vector<double>& x, const std::vector<double>& g) {
    const auto h = held(x, g);
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!h[i]) m = std::max(m, std::abs(g[i]));
    }
    return m;
  };

  BfgsResult r;
  r.x = std::move(x0);
  project(r.x);
  r.grad.assign(n, 0.0);
  r.f = fg(r.x, r.grad);
  if (!std::isfinite(r.f) || !std::isfinite(inf_norm(r.grad))) {
    throw NumericError("objective is not finite at the initial values; try rescaled initial values");
  }
  auto finish = [&](bool converged, const std::string& msg) {
    r.converged = converged;
    r.message = msg;
    r.at_bound.assign(n, false);
    for (std::size_t i = 0; i < n; ++i) r.at_bound[i] = r.x[i] <= lo[i] || r.x[i] >= hi[i];
    return r;
  };
  Mat h = diagonal_scaling(f, r.x, r.f, r.grad, opts.max_step);
  bool fresh = true;
  double rel_change = inf;

  for (r.iterations = 0; r.iterations < opts.max_iter; ++r.iterations) {
    const double gnorm = free_norm(r.x, r.grad);
    if (gnorm < opts.grad_tol && rel_change < opts.rel_f_tol) return finish(true, "converged");
    const auto hold = held(r.x, r.grad);
    auto direction = [&] {
      auto g = r.grad;
      for (std::size_t i = 0; i < n; ++i) {
        if (hold[i]) g[i] = 0.0;
      }
      auto d = mat_vec(h, g);
      for (std::size_t i = 0; i < n; ++i) d[i] = hold[i] ? 0.0 : -d[i];
      return d;
    };
    auto d = direction();
    double slope = dot(d, r.grad);
    if (!(slope < 0.0)) {
      h = diagonal_scaling(f, r.x, r.f, r.grad, opts.max_step);
      fresh = true;
      d = direction();
      slope = dot(d, r.grad);
    }
    double alpha = 1.0;
    const double dn = inf_norm(d);
    if (dn > opts.max_step) alpha = opts.max_step / dn;

    std::vector<double> x_new(n);
    double f_new = inf;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      for (std::size_t i = 0; i < n; ++i) x_new[i] = r.x[i] + alpha * d[i];
      project(x_new);
      double decrease = 0.0;
      for (std::size_t i = 0; i < n; ++i) decrease += r.grad[i] * (x_new[i] - r.x[i]);
      f_new = f(x_new);
      if (std::isfinite(f_new) && f_new <= r.f + 1e-4 * decrease) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      if (gnorm < opts.grad_tol) return finish(true, "converged (no further decrease possible)");
      if (!fresh) {
        h = diagonal_scaling(f, r.x, r.f, r.grad, opts.max_step);
        fresh = true;
        continue;
      }
      return finish(false, "line search failed");
    }
    std::vector<double> g_new(n);
    f_new = fg(x_new, g_new);
    std::vector<double> s(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = x_new[i] - r.x[i];
      y[i] = g_new[i] - r.grad[i];
    }
    const double sy = dot(s, y);
    rel_change = std::abs(r.f - f_new) / std::max(1.0, std::abs(f_new));
    r.x = std::move(x_new);
    r.f = f_new;
    r.grad = std::move(g_new);
    if (rel_change < opts.rel_f_tol && free_norm(r.x, r.grad) >= opts.grad_tol && !fresh) {
      // stalled in a flat direction: the quasi-Newton scale is lost, rebuild it
      h = diagonal_scaling(f, r.x, r.f, r.grad, opts.max_step);
      fresh = true;
      continue;
    }
    if (sy > 1e-12 * std::sqrt(dot(s, s) * dot(y, y))) {
      bfgs_update(h, s, y);
      fresh = false;
    }
  }
  const bool ok = free_norm(r.x, r.grad) < opts.grad_tol && rel_change < opts.rel_f_tol;
  return finish(ok, ok ? "converged" : "iteration limit reached");
}

}  // namespace frailcomp
