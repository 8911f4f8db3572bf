#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "frailcomp/likelihood.hpp"
#include "frailcomp/model.hpp"
#include "frailcomp/pedigree.hpp"

namespace frailcomp {

using Matrix = std::vector<std::vector<double>>;

struct Convergence {
  bool converged = false;
  std::size_t iterations = 0;
  std::size_t restarts = 0;
  double grad_norm = 0.0;
  std::string message;
};

struct FitResult {
  ModelSpec spec;
  ParameterVector theta;
  Matrix cov;             // sandwich V
  bool cov_ok = false;
  std::string cov_message;
  double loglik = 0.0;
  double aic = 0.0;
  std::size_t n_families = 0;
  std::uint64_t data_fingerprint = 0;
  Convergence convergence;
  // Parameters that finished on a bound; they are held fixed in the
  // covariance, which has zero rows and columns for them.
  std::vector<std::string> at_bound;

  std::vector<double> standard_errors() const;
};

struct FitOptions {
  unsigned threads = 1;
  std::size_t max_restarts = 3;
  std::size_t max_iter = 500;
  double grad_tol = 1e-5;
  double rel_f_tol = 1e-9;
  std::uint64_t jitter_seed = 20240617;
  bool compute_cov = true;
  // Box |log k| <= bound on every frailty shape (variance between 1/1000 and
  // 1000 at the default); infinity removes it.
  double frailty_log_bound = 6.907755278982137;
};

// Event-specific Weibull fits ignoring frailty and covariates; betas 0,
// log k = log 2, log eta = 0, eta0 = 0.
ParameterVector default_init(const ModelSpec& spec, const Dataset& ds);

FitResult fit(const Dataset& ds, const ModelSpec& spec, const std::optional<ParameterVector>& init = {},
              const FitOptions& opts = {});

struct Sandwich {
  Matrix information;  // I_o = -Hessian of the corrected log-likelihood
  Matrix meat;         // J = sum_f U_f U_f^T
  Matrix cov;          // I_o^-1 J I_o^-1
};

// Parameters flagged in `fixed` are left out of the inversion and get zero
// rows and columns.
Sandwich sandwich_cov(const ModelSpec& spec, std::span<const double> theta, const Dataset& ds,
                      const EvalOptions& opts = {}, const std::vector<bool>& fixed = {});

// Same sandwich from precomputed pieces; throws NumericError listing
// near-null directions when `information` is singular.
Matrix sandwich_from(const Matrix& information, const Matrix& meat, const std::vector<std::string>& names);

// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& s);
std::uint64_t dataset_fingerprint(const Dataset& ds);

struct ComparisonRow {
  std::string label;
  std::size_t n_params = 0;
  double loglik = 0.0;
  double aic = 0.0;
  double delta_aic = 0.0;
  bool converged = false;
};

// AIC-ranked; throws DataError when fits were made on different datasets.
std::vector<ComparisonRow> compare(const std::vector<const FitResult*>& fits, const std::vector<std::string>& labels);

struct LrtResult {
  double statistic = 0.0;
  double p_value = 1.0;
  int df = 0;
};

LrtResult lrt(const FitResult& full, const FitResult& null, int df);

struct SelectionResult {
  std::vector<FitResult> fits;             // PE, ED, CO order
  std::vector<ComparisonRow> table;        // AIC ranked
  TvcKind best = TvcKind::PE;
};

// Fits PE, ED and CO variants of `spec`, switching every TVC term's kind.
SelectionResult select_tvc_model(const Dataset& ds, const ModelSpec& spec, const FitOptions& opts = {});

double normal_two_sided_p(double z);
double chi_square_upper_p(double x, int df);

}  // namespace frailcomp
