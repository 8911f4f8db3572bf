#include "frailcomp/frailty.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "frailcomp/error.hpp"

namespace frailcomp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_choose(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

double log_sum_exp(const std::vector<double>& v) {
  double mx = kNegInf;
  for (double x : v) mx = std::max(mx, x);
  if (!std::isfinite(mx)) return mx;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - mx);
  return mx + std::log(acc);
}

// log of shape (shape + 1) ... (shape + d - 1) / rate^d, accurate for large shape
double log_rising_ratio(double shape, double rate, int d) {
  if (d > 64) return std::lgamma(shape + d) - std::lgamma(shape) - d * std::log(rate);
  double acc = 0.0;
  for (int i = 0; i < d; ++i) {
    const double r = (shape + i) / rate;
    acc += std::abs(r - 1.0) < 0.5 ? std::log1p((shape - rate + i) / rate) : std::log(r);
  }
  return acc;
}

void require_event(const FrailtySpec& f, std::size_t j) {
  if (j < 1 || j > f.n_events()) throw ConfigError("event " + std::to_string(j) + " out of range");
  if (!f.in_set[j - 1]) throw ConfigError("event " + std::to_string(j) + " carries no frailty");
}

}  // namespace

void FrailtySpec::validate() const {
  if (in_set.size() != k.size()) throw ConfigError("frailty: per-event vectors differ in length");
  if (!(k0 >= 0.0) || !std::isfinite(k0)) throw ConfigError("frailty: k0 must be finite and >= 0");
  for (std::size_t j = 0; j < k.size(); ++j) {
    if (in_set[j] && !(k[j] > 0.0 && std::isfinite(k[j]))) {
      throw ConfigError("frailty: k_" + std::to_string(j + 1) + " must be finite and > 0");
    }
  }
}

double SignedLog::value() const { return sign * std::exp(log_abs); }

double gamma_laplace(double shape, double rate, double s) {
  if (shape == 0.0) return 1.0;
  return std::exp(-shape * std::log1p(s / rate));
}

SignedLog gamma_laplace_deriv(double shape, double rate, double s, int d) {
  SignedLog r;
  r.sign = (d % 2 == 0) ? 1 : -1;
  if (shape == 0.0) {
    // degenerate at zero: phi == 1, all derivatives vanish
    r.log_abs = d == 0 ? 0.0 : kNegInf;
    return r;
  }
  r.log_abs = log_rising_ratio(shape, rate, d) - (shape + d) * std::log1p(s / rate);
  return r;
}

double laplace(const FrailtySpec& f, std::size_t m, double s) {
  if (m == 0) return gamma_laplace(f.k0, f.k0, s);
  require_event(f, m);
  return gamma_laplace(f.k[m - 1], f.omega(m - 1), s);
}

SignedLog laplace_deriv(const FrailtySpec& f, std::size_t m, double s, int d) {
  if (d < 0) throw ConfigError("derivative order must be >= 0");
  if (m == 0) return gamma_laplace_deriv(f.k0, f.k0, s, d);
  require_event(f, m);
  return gamma_laplace_deriv(f.k[m - 1], f.omega(m - 1), s, d);
}

double correlation(const FrailtySpec& f, std::size_t j, std::size_t j2) {
  require_event(f, j);
  require_event(f, j2);
  if (j == j2) throw ConfigError("correlation needs two distinct events");
  return f.omega0() / std::sqrt(f.omega(j - 1) * f.omega(j2 - 1));
}

double kendalls_tau(const FrailtySpec& f, std::size_t j) {
  require_event(f, j);
  return 1.0 / (2.0 * f.omega(j - 1) + 1.0);
}

double log_marginal_survival(const FrailtySpec& f, std::span<const double> cum_haz) {
  double acc = 0.0;
  double shared = 0.0;
  for (std::size_t j = 0; j < f.n_events(); ++j) {
    if (f.in_set[j]) {
      const double w = f.omega(j);
      acc -= f.k[j] * std::log1p(cum_haz[j] / w);
      shared += cum_haz[j] / w;
    } else {
      acc -= cum_haz[j];
    }
  }
  if (f.k0 > 0.0) acc -= f.k0 * std::log1p(shared);
  return acc;
}

double marginal_event_factor(const FrailtySpec& f, std::span<const double> cum_haz, std::size_t j) {
  const double surv = std::exp(log_marginal_survival(f, cum_haz));
  if (!f.in_set[j]) return surv;
  double shared = 0.0;
  for (std::size_t l = 0; l < f.n_events(); ++l) {
    if (f.in_set[l]) shared += cum_haz[l] / f.omega(l);
  }
  const double w = f.omega(j);
  return surv * (f.k0 / w / (1.0 + shared) + f.k[j] / w / (1.0 + cum_haz[j] / w));
}

double marginal_event_factor_independent(const FrailtySpec& f, std::span<const double> cum_haz, std::size_t j) {
  if (f.k0 != 0.0) throw ConfigError("independent-frailty form requires k0 == 0");
  double log_v = 0.0;
  for (std::size_t l = 0; l < f.n_events(); ++l) {
    if (!f.in_set[l]) {
      log_v -= cum_haz[l];
      continue;
    }
    const double kl = f.k[l];
    const double power = (l == j) ? kl + 1.0 : kl;
    log_v -= power * std::log1p(cum_haz[l] / kl);
  }
  return std::exp(log_v);
}

double log_frailty_integral_grid(const FrailtySpec& f, std::span<const int> events, std::span<const double> hdot) {
  const std::size_t J = f.n_events();
  std::vector<std::size_t> set;
  double outside = 0.0;
  for (std::size_t j = 0; j < J; ++j) {
    if (f.in_set[j]) set.push_back(j);
    else outside -= hdot[j];
  }
  double s0 = 0.0;
  for (std::size_t j : set) s0 += f.omega0() / f.omega(j) * hdot[j];

  std::vector<int> x(set.size(), 0);
  std::vector<double> terms;
  while (true) {
    int total_x = 0;
    for (int v : x) total_x += v;
    SignedLog shared = gamma_laplace_deriv(f.k0, f.omega0(), s0, total_x);
    double log_term = shared.log_abs;
    int sign = ((total_x % 2 == 0) ? 1 : -1) * shared.sign;
    if (std::isfinite(log_term)) {
      for (std::size_t a = 0; a < set.size(); ++a) {
        const std::size_t j = set[a];
        const int d = events[j];
        if (x[a] > 0) log_term += x[a] * std::log(f.omega0() / f.omega(j));
        SignedLog own = gamma_laplace_deriv(f.k[j], f.omega(j), hdot[j], d - x[a]);
        log_term += log_choose(d, x[a]) + own.log_abs;
        sign *= (((d - x[a]) % 2 == 0) ? 1 : -1) * own.sign;
      }
      if (sign < 0) throw NumericError("negative term in the frailty likelihood grid");
      terms.push_back(log_term);
    }
    // advance the mixed-radix counter
    std::size_t a = 0;
    while (a < set.size()) {
      if (x[a] < events[set[a]]) {
        ++x[a];
        break;
      }
      x[a] = 0;
      ++a;
    }
    if (a == set.size()) break;
  }
  return log_sum_exp(terms) + outside;
}

double log_frailty_integral_independent(const FrailtySpec& f, std::span<const int> events,
                                        std::span<const double> hdot) {
  if (f.k0 != 0.0) throw ConfigError("independent-frailty likelihood requires k0 == 0");
  double acc = 0.0;
  for (std::size_t j = 0; j < f.n_events(); ++j) {
    if (!f.in_set[j]) {
      acc -= hdot[j];
      continue;
    }
    const double k = f.k[j];
    const int d = events[j];
    acc += log_rising_ratio(k, k, d) - (k + d) * std::log1p(hdot[j] / k);
  }
  return acc;
}

}  // namespace frailcomp
