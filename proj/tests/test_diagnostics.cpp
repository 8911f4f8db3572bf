#include <doctest.h>

#include <cmath>
#include <sstream>

#include "frailcomp/diagnostics.hpp"
#include "frailcomp/simulation.hpp"

using namespace frailcomp;

namespace {

Dataset one_family() {
  Dataset ds;
  ds.tvc_names = {"tvc"};
  Family f;
  f.fam_id = "3";
  auto add = [&](const std::string& id, double t, int status, int g) {
    Individual ind;
    ind.fam_id = "3";
    ind.ind_id = id;
    ind.time = t;
    ind.status = status;
    ind.genotype = g;
    ind.tvc_ages = {std::nullopt};
    f.members.push_back(ind);
  };
  add("3-1", 48.0, 1, 1);
  add("3-2", 12.0, 0, 0);  // before the risk starts
  add("3-3", 66.0, 2, 1);
  f.members[0].is_proband = true;
  f.members[0].exam_age = 50.0;
  ds.families.push_back(f);
  return ds;
}

Model pe_truth() {
  const auto d = reference_design(TvcKind::PE, Dependence::medium);
  return decode(d.spec, d.truth.values);
}

}  // namespace

TEST_CASE("posterior frailty") {
  CHECK(posterior_frailty(2.0, 0.0, 0, 0.0) == 1.0);
  CHECK(posterior_frailty(2.0, 0.5, 0, 1e-12) == doctest::Approx(1.0));
  CHECK(posterior_frailty(2.0, 0.0, 1, 0.5) == doctest::Approx(3.0 / 2.5));
}

TEST_CASE("residuals of a small family") {
  const auto ds = one_family();
  const auto m = pe_truth();
  const auto t = martingale_residuals(m, ds);
  REQUIRE(t.individual.size() == 6);
  REQUIRE(t.family.size() == 2);
  for (const auto& r : t.individual) {
    if (r.ind_id == "3-2") CHECK(r.residual == 0.0);
  }
  // event 1 row of member 3-1: 1 - z H with z = (1 + k1) / (H + k1)
  const double h = cause_cum_hazard(m.causes[0], 48.0, 1, TvcAges(ds.families[0].members[0].tvc_ages));
  const double k1 = m.frailty.k[0];
  const auto& first = t.individual[0];
  CHECK(first.event == 1);
  CHECK(first.posterior_frailty == doctest::Approx((1.0 + k1) / (h + k1)));
  CHECK(first.residual == doctest::Approx(1.0 - first.posterior_frailty * h));
  CHECK(t.family[0].n_members == 3);
  CHECK(first.proband);
  double family_mean = 0.0;
  for (const auto& r : t.individual) {
    if (r.event == 1) family_mean += r.residual / 3.0;
  }
  CHECK(t.family[0].mean_residual == doctest::Approx(family_mean).epsilon(1e-14));

  const auto summed = martingale_residuals(m, ds, PosteriorKind::family_summed);
  CHECK(summed.individual[0].posterior_frailty == summed.individual[1].posterior_frailty);

  std::ostringstream a, b;
  write_residuals_csv(a, t);
  write_family_residuals_csv(b, t);
  CHECK(a.str().rfind("famID,indID,event,residual,posterior_frailty,proband\n", 0) == 0);
  CHECK(b.str().rfind("famID,event,mean_residual,n_members\n", 0) == 0);
}

TEST_CASE("events without frailty use unit posterior") {
  auto m = pe_truth();
  m.frailty.in_set = {true, false};
  const auto t = martingale_residuals(m, one_family());
  for (const auto& r : t.individual) {
    if (r.event == 2) CHECK(r.posterior_frailty == 1.0);
  }
}

TEST_CASE("grand mean near zero on a self-simulated fit") {
  auto d = reference_design(TvcKind::PE, Dependence::medium);
  d.seed = 31;
  const auto ds = generate(d);
  FitOptions o;
  o.compute_cov = false;
  const auto r = fit(ds, d.spec, std::nullopt, o);
  REQUIRE(r.convergence.converged);
  const Model m = decode(r.spec, r.theta.values);
  const auto relatives = martingale_residuals(m, ds, PosteriorKind::family_summed).grand_mean(false);
  REQUIRE(relatives.size() == 2);
  for (double v : relatives) CHECK(std::abs(v) < 0.02);
  // probands are ascertained on their event, which lifts the all-member mean
  const auto t = martingale_residuals(m, ds);
  CHECK(t.grand_mean(true)[0] > t.grand_mean(false)[0]);
  for (const auto& row : t.individual) CHECK(row.residual <= 1.0);
}
