#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "frailcomp/config.hpp"
#include "frailcomp/error.hpp"

using namespace frailcomp;

namespace {

FitResult sample_fit() {
  FitResult r;
  r.spec = default_spec(2, TvcKind::ED);
  std::vector<double> v;
  for (std::size_t i = 0; i < r.spec.n_params(); ++i) v.push_back(0.1 * static_cast<double>(i) - 0.3);
  r.theta = make_parameters(r.spec, v);
  const std::size_t p = v.size();
  r.cov.assign(p, std::vector<double>(p, 0.0));
  for (std::size_t i = 0; i < p; ++i) r.cov[i][i] = 0.01 * static_cast<double>(i + 1);
  r.cov[0][1] = r.cov[1][0] = 0.002;
  r.cov_ok = true;
  r.cov_message = "ok";
  r.at_bound = {"log_k_2"};
  r.loglik = -1234.5;
  r.aic = 2.0 * 1234.5 + 2.0 * static_cast<double>(p);
  r.n_families = 17;
  r.data_fingerprint = 0xfeedbeef01234567ULL;
  r.convergence.converged = true;
  r.convergence.iterations = 42;
  r.convergence.restarts = 1;
  r.convergence.grad_norm = 3e-6;
  r.convergence.message = "converged";
  return r;
}

}  // namespace

TEST_CASE("model block round trip") {
  ModelSpec spec = default_spec(3, TvcKind::CO);
  spec.frailty_events = {true, false, true};
  spec.causes[2].tvcs.push_back({1, TvcKind::PE});
  spec.validate();
  const auto back = model_spec_from_json(model_spec_to_json(spec));
  CHECK(back == spec);
  CHECK(parameter_names(back) == parameter_names(spec));
}

TEST_CASE("model block defaults and errors") {
  const auto spec = model_spec_from_json(json::object());
  CHECK(spec.n_events() == 2);
  CHECK(spec.age_origin == 15.0);
  CHECK(spec.frailty_events == std::vector<bool>{true, true});
  CHECK_FALSE(spec.correlated);

  CHECK_THROWS_AS(model_spec_from_json(json{{"event", 2}}), ConfigError);
  CHECK_THROWS_AS(model_spec_from_json(json{{"events", 0}}), ConfigError);
  CHECK_THROWS_AS(model_spec_from_json(json{{"events", 2}, {"causes", json::array({json::object()})}}), ConfigError);
  CHECK_THROWS_AS(model_spec_from_json(json{{"frailty", {{"events", {3}}}}}), ConfigError);
  CHECK_THROWS_AS(model_spec_from_json(json::parse(R"({"causes": [{"tvcs": [{"kind": "XX"}]}, {}]})")), ConfigError);
  CHECK_THROWS_AS(model_spec_from_json(json::array()), ConfigError);
}

TEST_CASE("parameters block") {
  const auto spec = default_spec(2, TvcKind::PE);
  json j{{"parameters", json::object()}};
  const auto names = parameter_names(spec);
  for (std::size_t i = 0; i < names.size(); ++i) j["parameters"][names[i]] = 0.5 * static_cast<double>(i);
  const auto p = parameters_from_json(spec, j);
  REQUIRE(p);
  CHECK(p->values[3] == 1.5);
  CHECK(parameters_to_json(*p) == j["parameters"]);
  CHECK_FALSE(parameters_from_json(spec, json::object()));

  auto missing = j;
  missing["parameters"].erase(names[0]);
  CHECK_THROWS_AS(parameters_from_json(spec, missing), ConfigError);
  auto extra = j;
  extra["parameters"]["log_k0"] = 0.0;
  CHECK_THROWS_AS(parameters_from_json(spec, extra), ConfigError);
  auto text = j;
  text["parameters"][names[1]] = "1.0";
  CHECK_THROWS_AS(parameters_from_json(spec, text), ConfigError);
}

TEST_CASE("simulation block") {
  const auto d = sim_design_from_json(json::parse(R"({"tvc_model": "co", "dependence": "high",
                                                       "n_families": 25, "seed": 8})"));
  const auto ref = reference_design(TvcKind::CO, Dependence::high);
  CHECK(d.truth.values == ref.truth.values);
  CHECK(d.n_families == 25);
  CHECK(d.seed == 8);

  json explicit_model{{"model", model_spec_to_json(ref.spec)}};
  explicit_model["model"]["parameters"] = parameters_to_json(ref.truth);
  CHECK(sim_design_from_json(explicit_model).truth.values == ref.truth.values);
  explicit_model["model"].erase("parameters");
  CHECK_THROWS_AS(sim_design_from_json(explicit_model), ConfigError);

  CHECK_THROWS_AS(sim_design_from_json(json{{"families", 3}}), ConfigError);
  CHECK_THROWS_AS(sim_design_from_json(json{{"n_families", 0}}), ConfigError);
  CHECK_THROWS_AS(sim_design_from_json(json{{"allele_freq", 1.0}}), ConfigError);
  CHECK_THROWS_AS(sim_design_from_json(json{{"dependence", "extreme"}}), ConfigError);
  CHECK_THROWS_AS(sim_design_from_json(json{{"seed", "one"}}), ConfigError);
}

TEST_CASE("fit options") {
  const auto defaults = fit_options_from_json(nullptr);
  CHECK(defaults.frailty_log_bound == doctest::Approx(std::log(1000.0)));
  const auto o = fit_options_from_json(json::parse(R"({"threads": 0, "max_iter": 9, "compute_cov": false})"));
  CHECK(o.threads == 1);
  CHECK(o.max_iter == 9);
  CHECK_FALSE(o.compute_cov);
  CHECK(fit_options_from_json(json{{"frailty_log_bound", nullptr}}).frailty_log_bound ==
        std::numeric_limits<double>::infinity());
  CHECK(fit_options_from_json(json{{"frailty_log_bound", 3.0}}).frailty_log_bound == 3.0);
  CHECK_THROWS_AS(fit_options_from_json(json{{"frailty_log_bound", 0.0}}), ConfigError);
  CHECK_THROWS_AS(fit_options_from_json(json{{"frailty_log_bound", -1.0}}), ConfigError);
  CHECK_THROWS_AS(fit_options_from_json(json{{"grad_tol", 0.0}}), ConfigError);
  CHECK_THROWS_AS(fit_options_from_json(json{{"thread", 2}}), ConfigError);

  const auto l = load_options_from_json(json{{"n_events", 3}, {"late_event_as_unaffected", true}});
  CHECK(l.n_events == 3);
  CHECK(l.late_event_as_unaffected);
  CHECK_THROWS_AS(load_options_from_json(json{{"n_events", 0}}), ConfigError);
}

TEST_CASE("fit result round trip") {
  const auto r = sample_fit();
  const json j = fit_result_to_json(r);
  const auto back = fit_result_from_json(json::parse(j.dump()));
  CHECK(back.spec == r.spec);
  CHECK(back.theta.names == r.theta.names);
  CHECK(back.theta.values == r.theta.values);
  CHECK(back.cov == r.cov);
  CHECK(back.cov_ok);
  CHECK(back.at_bound == r.at_bound);
  CHECK(back.loglik == r.loglik);
  CHECK(back.aic == r.aic);
  CHECK(back.n_families == 17);
  CHECK(back.data_fingerprint == r.data_fingerprint);
  CHECK(back.convergence.iterations == 42);
  CHECK(back.convergence.restarts == 1);
  CHECK(back.convergence.message == "converged");
  CHECK(fit_result_to_json(back) == j);

  CHECK(j["parameters"][0]["se"].get<double>() == doctest::Approx(0.1));
  const double z = r.theta.values[0] / 0.1;
  CHECK(j["parameters"][0]["p_value"].get<double>() == doctest::Approx(std::erfc(std::abs(z) / std::sqrt(2.0))));

  auto no_cov = r;
  no_cov.cov_ok = false;
  const json jn = fit_result_to_json(no_cov);
  CHECK(jn["cov"].is_null());
  CHECK(jn["parameters"][0]["se"].is_null());
  CHECK_FALSE(fit_result_from_json(jn).cov_ok);
}

TEST_CASE("fit result errors") {
  const json good = fit_result_to_json(sample_fit());
  CHECK_THROWS_AS(fit_result_from_json(json::object()), ConfigError);
  auto bad_cov = good;
  bad_cov["cov"].erase(0);
  CHECK_THROWS_AS(fit_result_from_json(bad_cov), ConfigError);
  auto bad_bound = good;
  bad_bound["at_bound"] = {"log_k_9"};
  CHECK_THROWS(fit_result_from_json(bad_bound));
  auto bad_fp = good;
  bad_fp["data_fingerprint"] = "zz";
  CHECK_THROWS_AS(fit_result_from_json(bad_fp), ConfigError);
}

TEST_CASE("fit table csv") {
  auto r = sample_fit();
  std::ostringstream os;
  write_fit_table_csv(os, r);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "parameter,estimate,se,p_value");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    CHECK(std::count(line.begin(), line.end(), ',') == 3);
  }
  CHECK(rows == r.theta.size());
  r.cov_ok = false;
  std::ostringstream na;
  write_fit_table_csv(na, r);
  CHECK(na.str().find(",NA,NA\n") != std::string::npos);
}

TEST_CASE("risk profiles") {
  const auto p = risk_profile_from_json(json::parse(R"({"genotype": 0, "tvc_ages": [35.5, null], "label": "x"})"));
  CHECK(p.genotype == 0);
  REQUIRE(p.tvc_ages.size() == 2);
  CHECK(*p.tvc_ages[0] == 35.5);
  CHECK_FALSE(p.tvc_ages[1]);
  CHECK(p.label == "x");
  CHECK_THROWS_AS(risk_profile_from_json(json{{"genotype", 2}}), ConfigError);
  CHECK_THROWS_AS(risk_profile_from_json(json{{"tvc_ages", {-1.0}}}), ConfigError);
  CHECK_THROWS_AS(risk_profile_from_json(json{{"age", 3}}), ConfigError);
}

TEST_CASE("provenance line") {
  // published FNV-1a 64-bit test vectors
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a("foobar") == 0x85944171f73967e8ULL);

  const json a = json::parse(R"({"seed": 1, "n_families": 5})");
  const json b = json::parse(R"({"n_families": 5, "seed": 1})");
  const std::string line = provenance_line(a);
  CHECK(line == provenance_line(b));
  CHECK(line != provenance_line(json{{"seed", 2}, {"n_families", 5}}));
  CHECK(line.rfind(std::string("# frailcomp ") + FRAILCOMP_VERSION + " ", 0) == 0);
  CHECK(line.size() == std::string("# frailcomp ").size() + std::string(FRAILCOMP_VERSION).size() + 1 + 16);
}
