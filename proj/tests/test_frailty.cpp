#include <doctest.h>

#include <cmath>
#include <random>

#include "frailcomp/error.hpp"
#include "frailcomp/frailty.hpp"
#include "frailcomp/simulation.hpp"
#include "oracles.hpp"

using namespace frailcomp;

namespace {

FrailtySpec spec(double k0, double k1, double k2) {
  FrailtySpec f;
  f.k0 = k0;
  f.k = {k1, k2};
  f.in_set = {true, true};
  return f;
}

}  // namespace

TEST_CASE("Laplace transform values") {
  const auto f = spec(0.7, 1.3, 2.1);
  for (std::size_t m = 0; m <= 2; ++m) CHECK(laplace(f, m, 0.0) == 1.0);
  CHECK(gamma_laplace(1.0, 1.0, 1.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(gamma_laplace(0.0, 0.0, 3.0) == 1.0);
  CHECK_THROWS_AS(laplace(spec(0.0, 1.0, 1.0), 3, 0.5), ConfigError);
}

TEST_CASE("Laplace derivatives match finite differences") {
  const auto f = spec(0.7, 1.3, 2.1);
  for (std::size_t m = 0; m <= 2; ++m) {
    for (double s : {0.05, 0.4, 2.5}) {
      for (int d = 1; d <= 4; ++d) {
        const double h = 1e-3 * std::max(1.0, s);
        const auto prev = [&](double x) { return laplace_deriv(f, m, x, d - 1).value(); };
        // five-point stencil on the (d-1)th derivative
        const double fd = (-prev(s + 2 * h) + 8 * prev(s + h) - 8 * prev(s - h) + prev(s - 2 * h)) / (12 * h);
        const double exact = laplace_deriv(f, m, s, d).value();
        CAPTURE(m);
        CAPTURE(d);
        CAPTURE(s);
        CHECK(std::abs(fd - exact) < 1e-6 * std::abs(exact));
      }
    }
  }
  CHECK(laplace_deriv(f, 1, 0.3, 0).value() == doctest::Approx(laplace(f, 1, 0.3)).epsilon(1e-14));
  CHECK_THROWS_AS(laplace_deriv(f, 1, 0.3, -1), ConfigError);
}

TEST_CASE("derivatives stay accurate for very large shape") {
  // (k)_d / k^d -> 1 as k grows; log-gamma differences lose this entirely
  const auto r = gamma_laplace_deriv(1e12, 1e12, 0.0, 3);
  CHECK(std::abs(r.log_abs - (std::log1p(1e-12) + std::log1p(2e-12))) < 1e-20);
}

TEST_CASE("correlation and Kendall's tau") {
  CHECK(correlation(spec(0.0, 2.0, 3.0), 1, 2) == 0.0);
  CHECK(correlation(spec(1.0, 1.0, 1.0), 1, 2) == doctest::Approx(0.5));
  CHECK(kendalls_tau(spec(0.0, 1.0, 1.0), 1) == doctest::Approx(1.0 / 3.0));
  CHECK(kendalls_tau(spec(0.0, 3.5, 1.0), 1) == doctest::Approx(0.125));
  CHECK_THROWS_AS(correlation(spec(0.5, 1.0, 1.0), 1, 1), ConfigError);
}

TEST_CASE("validation") {
  CHECK_NOTHROW(spec(0.0, 1.0, 2.0).validate());
  CHECK_THROWS_AS(spec(-1.0, 1.0, 2.0).validate(), ConfigError);
  CHECK_THROWS_AS(spec(0.0, 0.0, 2.0).validate(), ConfigError);
  auto f = spec(0.0, 1.0, 2.0);
  f.in_set = {true};
  CHECK_THROWS_AS(f.validate(), ConfigError);
}

TEST_CASE("marginal survival and event factors match quadrature") {
  for (const auto& f : {spec(0.0, 3.5, 2.9), spec(0.5, 1.2, 0.8), spec(2.0, 0.6, 4.0)}) {
    for (const std::vector<double> h : {std::vector<double>{0.1, 0.05}, {1.7, 0.3}, {0.0, 2.2}}) {
      const double ref = oracle::marginal_survival(f, h);
      CHECK(std::exp(log_marginal_survival(f, h)) == doctest::Approx(ref).epsilon(1e-9));
      for (std::size_t j = 0; j < 2; ++j) {
        const double ev = oracle::frailty_expectation(f, [&](std::size_t l, double z) {
          return (l == j ? z : 1.0) * std::exp(-z * h[l]);
        });
        CHECK(marginal_event_factor(f, h, j) == doctest::Approx(ev).epsilon(1e-9));
        if (f.k0 == 0.0) {
          CHECK(std::abs(marginal_event_factor_independent(f, h, j) - marginal_event_factor(f, h, j)) <
                1e-9 * marginal_event_factor(f, h, j));
        }
      }
    }
  }
  CHECK_THROWS_AS(marginal_event_factor_independent(spec(0.5, 1.0, 1.0), std::vector<double>{0.1, 0.1}, 0),
                  ConfigError);
}

TEST_CASE("events outside the frailty set have unit frailty") {
  FrailtySpec f = spec(0.0, 2.0, 1.0);
  f.in_set = {true, false};
  const std::vector<double> h = {0.4, 0.9};
  CHECK(log_marginal_survival(f, h) == doctest::Approx(-2.0 * std::log1p(0.2) - 0.9));
}

TEST_CASE("binomial grid integral") {
  SUBCASE("matches quadrature with a shared component") {
    for (const auto& f : {spec(0.5, 1.2, 0.8), spec(1.5, 2.5, 0.6)}) {
      for (const std::vector<int> d : {std::vector<int>{0, 0}, {1, 0}, {2, 1}, {3, 2}}) {
        const std::vector<double> hdot = {0.9, 0.35};
        const double ref = oracle::frailty_expectation(f, [&](std::size_t j, double z) {
          return std::pow(z, d[j]) * std::exp(-z * hdot[j]);
        });
        CHECK(std::exp(log_frailty_integral_grid(f, d, hdot)) == doctest::Approx(ref).epsilon(1e-8));
      }
    }
  }
  SUBCASE("agrees with the product form when k0 = 0") {
    const auto f = spec(0.0, 3.5, 2.9);
    for (const std::vector<int> d : {std::vector<int>{0, 0}, {1, 2}, {4, 1}}) {
      const std::vector<double> hdot = {1.3, 0.2};
      const double a = log_frailty_integral_grid(f, d, hdot);
      const double b = log_frailty_integral_independent(f, d, hdot);
      CHECK(std::abs(a - b) < 1e-9 * std::max(1.0, std::abs(b)));
    }
    CHECK_THROWS_AS(log_frailty_integral_independent(spec(0.1, 1.0, 1.0), std::vector<int>{0, 0},
                                                     std::vector<double>{0.1, 0.1}),
                    ConfigError);
  }
}

TEST_CASE("drawn frailties have mean 1 and variance 1/(k0+kj)") {
  const auto f = spec(0.8, 1.2, 2.7);
  std::mt19937_64 rng(7);
  const int n = 200000;
  double s[2] = {0, 0}, ss[2] = {0, 0}, cross = 0;
  for (int i = 0; i < n; ++i) {
    const auto z = draw_frailties(f, rng);
    for (int j = 0; j < 2; ++j) {
      s[j] += z[j];
      ss[j] += z[j] * z[j];
    }
    cross += z[0] * z[1];
  }
  for (int j = 0; j < 2; ++j) {
    const double mean = s[j] / n, var = ss[j] / n - mean * mean;
    const double v = 1.0 / f.omega(j);
    CHECK(std::abs(mean - 1.0) < 4.0 * std::sqrt(v / n));
    CHECK(var == doctest::Approx(v).epsilon(0.03));
  }
  const double cov = cross / n - (s[0] / n) * (s[1] / n);
  const double corr = cov * std::sqrt(f.omega(0) * f.omega(1));
  CHECK(corr == doctest::Approx(correlation(f, 1, 2)).epsilon(0.05));
}
