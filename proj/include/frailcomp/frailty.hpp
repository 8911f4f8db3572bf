#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace frailcomp {

// Correlated gamma frailty Z_j = (w0/wj) Y0 + Yj with Y0 ~ Gamma(k0, 1/k0),
// Yj ~ Gamma(kj, 1/(k0+kj)). Events outside the frailty set have Z = 1.
// k0 == 0 means no shared component.
struct FrailtySpec {
  double k0 = 0.0;
  std::vector<double> k;         // per event, ignored when !in_set[j]
  std::vector<bool> in_set;      // per event

  std::size_t n_events() const { return k.size(); }
  bool has_frailty(std::size_t j) const { return in_set.at(j); }
  bool independent() const { return k0 == 0.0; }
  double omega0() const { return k0; }
  double omega(std::size_t j) const { return k0 + k.at(j); }
  void validate() const;
};

struct SignedLog {
  double log_abs = 0.0;
  int sign = 1;
  double value() const;
};

// Laplace transform of Gamma(shape, scale 1/rate): (1 + s/rate)^(-shape).
double gamma_laplace(double shape, double rate, double s);
SignedLog gamma_laplace_deriv(double shape, double rate, double s, int d);

// Component m: 0 is the shared Y0, m >= 1 is event m (1-based).
double laplace(const FrailtySpec& f, std::size_t m, double s);
SignedLog laplace_deriv(const FrailtySpec& f, std::size_t m, double s, int d);

// Events are 1-based here, matching status codes.
double correlation(const FrailtySpec& f, std::size_t j, std::size_t j2);
double kendalls_tau(const FrailtySpec& f, std::size_t j);

// log E[exp(-sum_j Z_j H_j)] for per-event cumulative hazards (0-based).
double log_marginal_survival(const FrailtySpec& f, std::span<const double> cum_haz);

// E[Z_j exp(-sum_l Z_l H_l)], the frailty factor of the event-j sub-density
// (j 0-based).
double marginal_event_factor(const FrailtySpec& f, std::span<const double> cum_haz, std::size_t j);

// Same quantity through the k0 == 0 product form; throws if k0 != 0.
double marginal_event_factor_independent(const FrailtySpec& f, std::span<const double> cum_haz,
                                         std::size_t j);

// log of the frailty integral in the closed-form family likelihood:
// E[prod_j Z_j^d_j exp(-Z_j Hdot_j)], expanded over the (d_1+1)x...x(d_J+1)
// binomial grid. Works for any k0 >= 0.
double log_frailty_integral_grid(const FrailtySpec& f, std::span<const int> events,
                                 std::span<const double> hdot);

// Product form, k0 == 0 only.
double log_frailty_integral_independent(const FrailtySpec& f, std::span<const int> events,
                                        std::span<const double> hdot);

}  // namespace frailcomp
