#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "frailcomp/model.hpp"
#include "frailcomp/pedigree.hpp"

namespace frailcomp {

double family_loglik(const Model& model, const Family& fam);
double ascertainment_logprob(const Model& model, const Family& fam);

// family_loglik - ascertainment_logprob
double family_contribution(const Model& model, const Family& fam);

struct EvalOptions {
  unsigned threads = 1;
};

// Sum over families of the ascertainment-corrected log-likelihood. The
// reduction order is fixed by fam_id and a fixed-shape pairwise tree, so the
// result does not depend on family order or thread count.
double total_loglik(const ModelSpec& spec, std::span<const double> theta, const Dataset& ds,
                    const EvalOptions& opts = {});

// Per-family contributions in dataset order.
std::vector<double> family_contributions(const ModelSpec& spec, std::span<const double> theta,
                                         const Dataset& ds, const EvalOptions& opts = {});

// Central-difference step for parameter value x.
double score_step(double x);

// Per-family score vectors U_f (rows in dataset order).
std::vector<std::vector<double>> family_scores(const ModelSpec& spec, std::span<const double> theta,
                                               const Dataset& ds, const EvalOptions& opts = {});
std::vector<double> family_score(const ModelSpec& spec, std::span<const double> theta, const Family& fam);

// Fixed-shape pairwise summation.
double pairwise_sum(std::span<const double> v);

// Indices of ds.families sorted by fam_id.
std::vector<std::size_t> canonical_order(const Dataset& ds);

}  // namespace frailcomp
