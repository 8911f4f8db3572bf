#include "frailcomp/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <thread>

#include "frailcomp/error.hpp"

namespace frailcomp {

namespace {

template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

[[noreturn]] void rethrow_with_family(const std::string& fam_id, const std::exception& e) {
  const std::string msg = "family " + fam_id + ": " + e.what();
  if (dynamic_cast<const DataError*>(&e)) throw DataError(msg);
  if (dynamic_cast<const ConfigError*>(&e)) throw ConfigError(msg);
  throw NumericError(msg);
}

double pairwise_range(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_range(v.first(half)) + pairwise_range(v.subspan(half));
}

}  // namespace

double family_loglik(const Model& model, const Family& fam) {
  const std::size_t J = model.n_events();
  std::vector<int> events(J, 0);
  std::vector<double> hdot(J, 0.0);
  double log_haz = 0.0;
  for (const auto& ind : fam.members) {
    const TvcAges ages(ind.tvc_ages);
    for (std::size_t j = 0; j < J; ++j) {
      hdot[j] += cause_cum_hazard(model.causes[j], ind.time, ind.genotype, ages);
    }
    if (ind.status > 0) {
      const auto j = static_cast<std::size_t>(ind.status - 1);
      if (j >= J) throw DataError("member " + ind.ind_id + " has status " + std::to_string(ind.status) +
                                  " but the model has " + std::to_string(J) + " events");
      ++events[j];
      log_haz += std::log(cause_hazard(model.causes[j], ind.time, ind.genotype, ages));
    }
  }
  const double frail = model.frailty.independent()
                           ? log_frailty_integral_independent(model.frailty, events, hdot)
                           : log_frailty_integral_grid(model.frailty, events, hdot);
  const double out = log_haz + frail;
  if (!std::isfinite(out)) throw NumericError("family " + fam.fam_id + ": log-likelihood is not finite");
  return out;
}

double ascertainment_logprob(const Model& model, const Family& fam) {
  const Individual& p = fam.proband_member();
  if (!p.exam_age) throw DataError("family " + fam.fam_id + ": proband has no exam age");
  const std::size_t J = model.n_events();
  std::vector<double> h(J);
  const TvcAges ages(p.tvc_ages);
  for (std::size_t j = 0; j < J; ++j) h[j] = cause_cum_hazard(model.causes[j], *p.exam_age, p.genotype, ages);
  const double log_s = log_marginal_survival(model.frailty, h);
  if (fam.proband_kind == ProbandKind::unaffected) return log_s;
  const double a = -std::expm1(log_s);
  if (!(a > 0.0)) throw NumericError("family " + fam.fam_id + ": degenerate ascertainment");
  return std::log(a);
}

double family_contribution(const Model& model, const Family& fam) {
  try {
    return family_loglik(model, fam) - ascertainment_logprob(model, fam);
  } catch (const std::exception& e) {
    const std::string what = e.what();
    if (what.rfind("family ", 0) == 0) throw;
    rethrow_with_family(fam.fam_id, e);
  }
}

double pairwise_sum(std::span<const double> v) { return pairwise_range(v); }

std::vector<std::size_t> canonical_order(const Dataset& ds) {
  std::vector<std::size_t> idx(ds.families.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return fam_id_less(ds.families[a].fam_id, ds.families[b].fam_id);
  });
  return idx;
}

std::vector<double> family_contributions(const ModelSpec& spec, std::span<const double> theta, const Dataset& ds,
                                         const EvalOptions& opts) {
  const Model model = decode(spec, theta);
  std::vector<double> out(ds.families.size());
  parallel_for(ds.families.size(), opts.threads,
               [&](std::size_t i) { out[i] = family_contribution(model, ds.families[i]); });
  return out;
}

double total_loglik(const ModelSpec& spec, std::span<const double> theta, const Dataset& ds,
                    const EvalOptions& opts) {
  const auto contrib = family_contributions(spec, theta, ds, opts);
  std::vector<double> ordered;
  ordered.reserve(contrib.size());
  for (std::size_t i : canonical_order(ds)) ordered.push_back(contrib[i]);
  return pairwise_sum(ordered);
}

double score_step(double x) {
  static const double base = std::cbrt(std::numeric_limits<double>::epsilon());
  return base * std::max(1.0, std::abs(x));
}

std::vector<std::vector<double>> family_scores(const ModelSpec& spec, std::span<const double> theta,
                                               const Dataset& ds, const EvalOptions& opts) {
  const std::size_t p = theta.size();
  std::vector<std::vector<double>> scores(ds.families.size(), std::vector<double>(p, 0.0));
  std::vector<double> work(theta.begin(), theta.end());
  for (std::size_t k = 0; k < p; ++k) {
    const double h = score_step(theta[k]);
    work[k] = theta[k] + h;
    const double up = work[k];
    const auto plus = family_contributions(spec, work, ds, opts);
    work[k] = theta[k] - h;
    const double down = work[k];
    const auto minus = family_contributions(spec, work, ds, opts);
    work[k] = theta[k];
    for (std::size_t f = 0; f < ds.families.size(); ++f) scores[f][k] = (plus[f] - minus[f]) / (up - down);
  }
  return scores;
}

std::vector<double> family_score(const ModelSpec& spec, std::span<const double> theta, const Family& fam) {
  const std::size_t p = theta.size();
  std::vector<double> score(p);
  std::vector<double> work(theta.begin(), theta.end());
  for (std::size_t k = 0; k < p; ++k) {
    const double h = score_step(theta[k]);
    work[k] = theta[k] + h;
    const double up = work[k];
    const double plus = family_contribution(decode(spec, work), fam);
    work[k] = theta[k] - h;
    const double down = work[k];
    const double minus = family_contribution(decode(spec, work), fam);
    work[k] = theta[k];
    score[k] = (plus - minus) / (up - down);
  }
  return score;
}

}  // namespace frailcomp
