#include <doctest.h>

#include <cmath>

#include "frailcomp/error.hpp"
#include "frailcomp/estimation.hpp"
#include "frailcomp/optimizer.hpp"
#include "frailcomp/simulation.hpp"

using namespace frailcomp;

namespace {

Dataset simulate(TvcKind kind, std::size_t n, std::uint64_t seed) {
  auto d = reference_design(kind, Dependence::medium);
  d.n_families = n;
  d.seed = seed;
  return generate(d);
}

// One fit on 500 PE families shared by the checks below.
const FitResult& pe_fit() {
  static const FitResult r = [] {
    const auto ds = simulate(TvcKind::PE, 500, 2024);
    return fit(ds, reference_design(TvcKind::PE, Dependence::medium).spec);
  }();
  return r;
}

const Dataset& pe_data() {
  static const Dataset ds = simulate(TvcKind::PE, 500, 2024);
  return ds;
}

}  // namespace

TEST_CASE("BFGS on the Rosenbrock function") {
  Objective f = [](const std::vector<double>& x) {
    return 100 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1 - x[0], 2);
  };
  ObjectiveWithGradient fg = [&](const std::vector<double>& x, std::vector<double>& g) {
    g[0] = -400 * x[0] * (x[1] - x[0] * x[0]) - 2 * (1 - x[0]);
    g[1] = 200 * (x[1] - x[0] * x[0]);
    return f(x);
  };
  const auto r = bfgs_minimize(f, fg, {-1.2, 1.0});
  CHECK(r.converged);
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(r.x[1] == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("BFGS with a box") {
  // minimum at (3, -1); the box stops the first coordinate at 2
  Objective f = [](const std::vector<double>& x) { return std::pow(x[0] - 3, 2) + 2 * std::pow(x[1] + 1, 2); };
  ObjectiveWithGradient fg = [&](const std::vector<double>& x, std::vector<double>& g) {
    g[0] = 2 * (x[0] - 3);
    g[1] = 4 * (x[1] + 1);
    return f(x);
  };
  BfgsOptions o;
  o.lower = {-2.0, -2.0};
  o.upper = {2.0, 2.0};
  const auto r = bfgs_minimize(f, fg, {0.0, 0.0}, o);
  CHECK(r.converged);
  CHECK(r.x[0] == 2.0);
  CHECK(r.x[1] == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK(r.at_bound == std::vector<bool>{true, false});
  o.upper = {2.0};
  CHECK_THROWS_AS(bfgs_minimize(f, fg, {0.0, 0.0}, o), ConfigError);
}

TEST_CASE("BFGS on a flat direction converges") {
  // f approaches its infimum only as x[1] -> inf, like a vanishing frailty variance
  Objective f = [](const std::vector<double>& x) { return std::pow(x[0] - 1, 2) + std::exp(-x[1]); };
  ObjectiveWithGradient fg = [&](const std::vector<double>& x, std::vector<double>& g) {
    g[0] = 2 * (x[0] - 1);
    g[1] = -std::exp(-x[1]);
    return f(x);
  };
  const auto r = bfgs_minimize(f, fg, {0.0, 0.0});
  CHECK(r.converged);
  CHECK(std::exp(-r.x[1]) < 1e-5);
}

TEST_CASE("non-finite objective at the start") {
  Objective f = [](const std::vector<double>&) { return std::nan(""); };
  ObjectiveWithGradient fg = [](const std::vector<double>&, std::vector<double>&) { return std::nan(""); };
  CHECK_THROWS_AS(bfgs_minimize(f, fg, {0.0}), NumericError);
}

TEST_CASE("default initial values") {
  const auto spec = reference_design(TvcKind::CO, Dependence::medium).spec;
  const auto ds = simulate(TvcKind::CO, 50, 3);
  const auto init = default_init(spec, ds);
  CHECK(init.names == parameter_names(spec));
  CHECK(init.at("beta_gene_1") == 0.0);
  CHECK(init.at("log_eta_1_tvc1") == 0.0);
  CHECK(init.at("eta0_1_tvc1") == 0.0);
  CHECK(init.at("log_k_2") == doctest::Approx(std::log(2.0)));
  CHECK(std::isfinite(init.at("log_lambda_1")));

  Dataset censored = ds;
  for (auto& f : censored.families) {
    for (auto& m : f.members) {
      if (m.status == 2) m.status = 0;
    }
  }
  CHECK_THROWS_AS(default_init(spec, censored), DataError);
}

TEST_CASE("fit on simulated PE data") {
  const auto& r = pe_fit();
  REQUIRE(r.convergence.converged);
  REQUIRE(r.cov_ok);
  const auto se = r.standard_errors();
  const std::size_t g = r.theta.index_of("beta_gene_1");
  CHECK(std::abs(r.theta.values[g] - 1.95) < 3.0 * se[g]);
  CHECK(se[g] == doctest::Approx(0.12).epsilon(0.35));
  CHECK(r.aic == doctest::Approx(-2 * r.loglik + 2 * static_cast<double>(r.theta.size())));
  CHECK(r.n_families == 500);
  CHECK(r.data_fingerprint == dataset_fingerprint(pe_data()));
}

TEST_CASE("score sum vanishes at the estimate") {
  const auto& r = pe_fit();
  const auto scores = family_scores(r.spec, r.theta.values, pe_data());
  for (std::size_t a = 0; a < r.theta.size(); ++a) {
    if (std::find(r.at_bound.begin(), r.at_bound.end(), r.theta.names[a]) != r.at_bound.end()) continue;
    double s = 0.0;
    for (const auto& u : scores) s += u[a];
    CAPTURE(r.theta.names[a]);
    CHECK(std::abs(s) < 1e-3 * std::sqrt(500.0));
  }
}

TEST_CASE("refitting from the estimate is a fixed point") {
  const auto& r = pe_fit();
  FitOptions o;
  o.compute_cov = false;
  const auto again = fit(pe_data(), r.spec, r.theta, o);
  CHECK(again.convergence.converged);
  for (std::size_t a = 0; a < r.theta.size(); ++a) CHECK(std::abs(again.theta.values[a] - r.theta.values[a]) < 1e-6);
}

TEST_CASE("sandwich covariance") {
  SUBCASE("scalar model by hand") {
    // I = 4, J = 2: V = J / I^2
    const auto v = sandwich_from({{4.0}}, {{2.0}}, {"theta"});
    CHECK(v[0][0] == doctest::Approx(0.125));
  }
  SUBCASE("two-parameter model by hand") {
    const Matrix info = {{2.0, 0.5}, {0.5, 1.0}};
    const Matrix meat = {{1.0, 0.2}, {0.2, 3.0}};
    const double det = 2.0 * 1.0 - 0.25;
    const double inv[2][2] = {{1.0 / det, -0.5 / det}, {-0.5 / det, 2.0 / det}};
    const auto v = sandwich_from(info, meat, {"a", "b"});
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        double e = 0.0;
        for (int k = 0; k < 2; ++k) {
          for (int l = 0; l < 2; ++l) e += inv[i][k] * meat[k][l] * inv[l][j];
        }
        CHECK(v[i][j] == doctest::Approx(e).epsilon(1e-12));
      }
    }
  }
  SUBCASE("singular information names the direction") {
    try {
      sandwich_from({{1.0, 0.0}, {0.0, 0.0}}, {{1.0, 0.0}, {0.0, 1.0}}, {"log_rho_1", "log_k_2"});
      FAIL("expected an error");
    } catch (const NumericError& e) {
      CHECK(std::string(e.what()).find("log_k_2") != std::string::npos);
    }
  }
  SUBCASE("symmetric and close to the inverse information") {
    const auto& r = pe_fit();
    std::vector<bool> fixed(r.theta.size(), false);
    for (const auto& n : r.at_bound) fixed[r.theta.index_of(n)] = true;
    const auto s = sandwich_cov(r.spec, r.theta.values, pe_data(), {}, fixed);
    std::vector<std::size_t> free;
    for (std::size_t a = 0; a < r.theta.size(); ++a) {
      if (!fixed[a]) free.push_back(a);
      for (std::size_t b = 0; b < r.theta.size(); ++b) CHECK(std::abs(s.cov[a][b] - s.cov[b][a]) < 1e-10);
    }
    Matrix sub(free.size(), std::vector<double>(free.size())), unit = sub;
    for (std::size_t a = 0; a < free.size(); ++a) {
      unit[a][a] = 1.0;
      for (std::size_t b = 0; b < free.size(); ++b) sub[a][b] = s.information[free[a]][free[b]];
    }
    // I^-1 as the sandwich of I^-1 with meat I
    std::vector<std::string> names(free.size(), "p");
    const auto inv_info = sandwich_from(sub, sub, names);
    for (std::size_t a = 0; a < free.size(); ++a) {
      const double ratio = s.cov[free[a]][free[a]] / inv_info[a][a];
      CAPTURE(r.theta.names[free[a]]);
      CHECK(ratio > 0.5);
      CHECK(ratio < 2.0);
    }
  }
}

TEST_CASE("parameters on the frailty bound are held fixed") {
  const auto& r = pe_fit();
  const auto se = r.standard_errors();
  for (const auto& n : r.at_bound) {
    CHECK(n.rfind("log_k", 0) == 0);
    CHECK(std::abs(r.theta.at(n)) == doctest::Approx(std::log(1000.0)));
    CHECK(se[r.theta.index_of(n)] == 0.0);
  }
  FitOptions bad;
  bad.frailty_log_bound = 0.0;
  CHECK_THROWS_AS(fit(pe_data(), r.spec, std::nullopt, bad), ConfigError);
}

TEST_CASE("comparison and likelihood-ratio identities") {
  FitResult a;
  a.theta.values.assign(9, 0.0);
  a.loglik = -100.0;
  a.aic = 2 * 100.0 + 2 * 9;
  a.n_families = 10;
  a.data_fingerprint = 42;
  a.convergence.converged = true;
  FitResult b = a;
  b.theta.values.assign(11, 0.0);
  b.aic = 2 * 100.0 + 2 * 11;

  const auto same = lrt(a, a, 1);
  CHECK(same.statistic == 0.0);
  CHECK(same.p_value == 1.0);
  const auto rows = compare({&b, &a}, {"CO", "PE"});
  CHECK(rows[0].label == "PE");
  CHECK(rows[1].delta_aic == doctest::Approx(2.0 * (11 - 9)));

  FitResult c = a;
  c.loglik = -98.0;
  const auto t = lrt(c, a, 2);
  CHECK(t.statistic == doctest::Approx(4.0));
  CHECK(t.p_value == doctest::Approx(std::exp(-2.0)).epsilon(1e-12));
  CHECK_THROWS_AS(lrt(c, a, 0), ConfigError);

  FitResult other = a;
  other.data_fingerprint = 7;
  CHECK_THROWS_AS(compare({&a, &other}, {"x", "y"}), DataError);
  CHECK_THROWS_AS(lrt(a, other, 1), DataError);
}

TEST_CASE("reference distributions") {
  CHECK(normal_two_sided_p(1.959963984540054) == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(normal_two_sided_p(0.0) == doctest::Approx(1.0));
  CHECK(chi_square_upper_p(3.841458820694124, 1) == doctest::Approx(0.05).epsilon(1e-10));
}

TEST_CASE("null TVC effect stays within three standard errors") {
  auto d = reference_design(TvcKind::PE, Dependence::medium);
  d.truth.set("beta_1_tvc1", 0.0);
  d.n_families = 250;
  FitOptions o;
  int inside = 0, total = 0;
  for (std::uint64_t s = 1; s <= 20; ++s) {
    d.seed = 500 + s;
    const auto r = fit(generate(d), d.spec, std::nullopt, o);
    if (!r.convergence.converged || !r.cov_ok) continue;
    const std::size_t i = r.theta.index_of("beta_1_tvc1");
    ++total;
    if (std::abs(r.theta.values[i]) < 3.0 * r.standard_errors()[i]) ++inside;
  }
  CHECK(total >= 19);
  CHECK(inside >= 0.95 * total);
}

TEST_CASE("TVC model selection") {
  const auto ds = simulate(TvcKind::CO, 300, 77);
  FitOptions o;
  o.compute_cov = false;
  const auto sel = select_tvc_model(ds, reference_design(TvcKind::PE, Dependence::medium).spec, o);
  REQUIRE(sel.fits.size() == 3);
  CHECK(sel.fits[0].spec.causes[0].tvcs[0].kind == TvcKind::PE);
  CHECK(sel.fits[1].spec.causes[0].tvcs[0].kind == TvcKind::ED);
  CHECK(sel.fits[2].spec.causes[0].tvcs[0].kind == TvcKind::CO);
  REQUIRE(sel.table.size() == 3);
  for (std::size_t i = 1; i < 3; ++i) CHECK(sel.table[i].aic >= sel.table[i - 1].aic);
  CHECK(to_string(sel.best) == sel.table[0].label);
}
