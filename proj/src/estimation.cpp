#include "frailcomp/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <Eigen/Dense>
#include <boost/math/special_functions/gamma.hpp>

#include "frailcomp/error.hpp"
#include "frailcomp/optimizer.hpp"

namespace frailcomp {

namespace {

// Profile log-likelihood of a Weibull with age origin in log(shape).
struct WeibullProfile {
  std::vector<double> x;   // time - origin for everyone at risk
  double sum_log_event = 0.0;
  double d = 0.0;

  double profile(double log_rho) const {
    const double rho = std::exp(log_rho);
    double sx = 0.0;
    for (double v : x) sx += std::pow(v, rho);
    return d * std::log(rho) + d * std::log(d / sx) + (rho - 1.0) * sum_log_event - d;
  }
  double lambda(double log_rho) const {
    const double rho = std::exp(log_rho);
    double sx = 0.0;
    for (double v : x) sx += std::pow(v, rho);
    return std::pow(d / sx, 1.0 / rho);
  }
};

double golden_max(const std::function<double(double)>& f, double a, double b) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - g * (b - a);
  double d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < 100 && b - a > 1e-8; ++i) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

Eigen::MatrixXd to_eigen(const Matrix& m) {
  const auto n = static_cast<Eigen::Index>(m.size());
  Eigen::MatrixXd e(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(m[i].size()) != n) throw ConfigError("matrix is not square");
    for (Eigen::Index j = 0; j < n; ++j) e(i, j) = m[i][j];
  }
  return e;
}

Matrix from_eigen(const Eigen::MatrixXd& e) {
  Matrix m(e.rows(), std::vector<double>(e.cols()));
  for (Eigen::Index i = 0; i < e.rows(); ++i) {
    for (Eigen::Index j = 0; j < e.cols(); ++j) m[i][j] = e(i, j);
  }
  return m;
}

struct Evaluator {
  const ModelSpec& spec;
  const Dataset& ds;
  EvalOptions eval;

  double neg_loglik(const std::vector<double>& x) const {
    try {
      return -total_loglik(spec, x, ds, eval);
    } catch (const NumericError&) {
      return std::numeric_limits<double>::infinity();
    }
  }

  double neg_loglik_grad(const std::vector<double>& x, std::vector<double>& g) const {
    double f;
    std::vector<std::vector<double>> scores;
    try {
      f = -total_loglik(spec, x, ds, eval);
      scores = family_scores(spec, x, ds, eval);
    } catch (const NumericError&) {
      std::fill(g.begin(), g.end(), std::numeric_limits<double>::quiet_NaN());
      return std::numeric_limits<double>::infinity();
    }
    const auto order = canonical_order(ds);
    std::vector<double> col(order.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
      for (std::size_t i = 0; i < order.size(); ++i) col[i] = scores[order[i]][k];
      g[k] = -pairwise_sum(col);
    }
    return f;
  }
};

}  // namespace

std::vector<double> FitResult::standard_errors() const {
  std::vector<double> se(theta.size(), std::numeric_limits<double>::quiet_NaN());
  if (!cov_ok) return se;
  for (std::size_t i = 0; i < se.size(); ++i) se[i] = std::sqrt(std::max(cov[i][i], 0.0));
  return se;
}

ParameterVector default_init(const ModelSpec& spec, const Dataset& ds) {
  spec.validate();
  std::vector<double> values;
  for (std::size_t j = 0; j < spec.n_events(); ++j) {
    WeibullProfile w;
    for (const auto& fam : ds.families) {
      for (const auto& ind : fam.members) {
        const double x = ind.time - spec.age_origin;
        if (x <= 0.0) continue;
        w.x.push_back(x);
        if (ind.status == static_cast<int>(j + 1)) {
          w.d += 1.0;
          w.sum_log_event += std::log(x);
        }
      }
    }
    if (w.d < 1.0) {
      throw DataError("event " + std::to_string(j + 1) + " has no observed events after the age origin");
    }
    const double log_rho = golden_max([&](double v) { return w.profile(v); }, std::log(0.2), std::log(10.0));
    values.push_back(std::log(w.lambda(log_rho)));
    values.push_back(log_rho);
    values.push_back(0.0);
    for (const auto& t : spec.causes[j].tvcs) {
      values.push_back(0.0);
      if (t.kind != TvcKind::PE) values.push_back(0.0);
      if (t.kind == TvcKind::CO) values.push_back(0.0);
    }
  }
  for (bool in : spec.frailty_events) {
    if (in) values.push_back(std::log(2.0));
  }
  if (spec.correlated) values.push_back(std::log(2.0));
  return make_parameters(spec, std::move(values));
}

FitResult fit(const Dataset& ds, const ModelSpec& spec, const std::optional<ParameterVector>& init,
              const FitOptions& opts) {
  spec.validate();
  if (ds.families.empty()) throw DataError("dataset has no families");
  if (spec.n_tvc_columns() > ds.n_tvc()) {
    throw DataError("model references TVC column " + std::to_string(spec.n_tvc_columns()) + " but the data has " +
                    std::to_string(ds.n_tvc()));
  }
  ParameterVector start = init ? *init : default_init(spec, ds);
  if (start.names != parameter_names(spec)) throw ConfigError("initial parameter names do not match the model");

  Evaluator ev{spec, ds, EvalOptions{opts.threads}};
  Objective f = [&](const std::vector<double>& x) { return ev.neg_loglik(x); };
  ObjectiveWithGradient fg = [&](const std::vector<double>& x, std::vector<double>& g) {
    return ev.neg_loglik_grad(x, g);
  };
  BfgsOptions bo;
  bo.grad_tol = opts.grad_tol;
  bo.rel_f_tol = opts.rel_f_tol;
  bo.max_iter = opts.max_iter;
  if (!(opts.frailty_log_bound > 0.0)) throw ConfigError("frailty_log_bound must be > 0");
  if (std::isfinite(opts.frailty_log_bound)) {
    const double inf = std::numeric_limits<double>::infinity();
    bo.lower.assign(start.size(), -inf);
    bo.upper.assign(start.size(), inf);
    for (std::size_t i = 0; i < start.size(); ++i) {
      if (start.names[i].rfind("log_k", 0) == 0) {
        bo.lower[i] = -opts.frailty_log_bound;
        bo.upper[i] = opts.frailty_log_bound;
      }
    }
  }

  std::mt19937_64 rng(opts.jitter_seed);
  std::normal_distribution<double> jitter(0.0, 0.1);
  BfgsResult best = bfgs_minimize(f, fg, start.values, bo);
  std::size_t restarts = 0;
  while (!best.converged && restarts < opts.max_restarts) {
    ++restarts;
    std::vector<double> x0 = best.x;
    for (double& v : x0) v += jitter(rng);
    BfgsResult r;
    try {
      r = bfgs_minimize(f, fg, x0, bo);
    } catch (const NumericError&) {
      continue;
    }
    if (r.converged || r.f < best.f) best = std::move(r);
  }

  FitResult out;
  out.spec = spec;
  out.theta = make_parameters(spec, best.x);
  out.loglik = -best.f;
  out.aic = -2.0 * out.loglik + 2.0 * static_cast<double>(best.x.size());
  out.n_families = ds.families.size();
  out.data_fingerprint = dataset_fingerprint(ds);
  out.convergence.converged = best.converged;
  out.convergence.iterations = best.iterations;
  out.convergence.restarts = restarts;
  double gn = 0.0;
  for (double g : best.grad) gn = std::max(gn, std::abs(g));
  out.convergence.grad_norm = gn;
  out.convergence.message = best.message;
  std::vector<bool> fixed(best.x.size(), false);
  for (std::size_t i = 0; i < best.at_bound.size(); ++i) {
    if (best.at_bound[i]) {
      fixed[i] = true;
      out.at_bound.push_back(out.theta.names[i]);
    }
  }
  if (opts.compute_cov) {
    try {
      out.cov = sandwich_cov(spec, best.x, ds, EvalOptions{opts.threads}, fixed).cov;
      out.cov_ok = true;
    } catch (const NumericError& e) {
      out.cov_message = e.what();
    }
  }
  return out;
}

Sandwich sandwich_cov(const ModelSpec& spec, std::span<const double> theta, const Dataset& ds,
                      const EvalOptions& opts, const std::vector<bool>& fixed) {
  const std::size_t p = theta.size();
  if (!fixed.empty() && fixed.size() != p) throw ConfigError("fixed-parameter mask does not match the parameters");
  const double base = std::pow(std::numeric_limits<double>::epsilon(), 0.25);
  std::vector<double> h(p);
  for (std::size_t i = 0; i < p; ++i) h[i] = base * std::max(1.0, std::abs(theta[i]));
  std::vector<double> x(theta.begin(), theta.end());
  auto at = [&](std::size_t a, double sa, std::size_t b, double sb) {
    x[a] += sa * h[a];
    x[b] += sb * h[b];
    const double v = total_loglik(spec, x, ds, opts);
    x[a] = theta[a];
    x[b] = theta[b];
    return v;
  };
  const double f0 = total_loglik(spec, theta, ds, opts);
  Matrix info(p, std::vector<double>(p, 0.0));
  // rounding noise of a second difference relative to the curvature it resolves
  const double noise = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(f0));
  for (std::size_t a = 0; a < p; ++a) {
    const double h_max = 0.5 * std::max(1.0, std::abs(theta[a]));
    for (;;) {
      const double fp = at(a, 1.0, a, 1.0);
      const double fm = at(a, -1.0, a, -1.0);
      info[a][a] = -(fp - 2.0 * f0 + fm) / (4.0 * h[a] * h[a]);
      // flat directions need a wider step before rounding stops dominating
      if (std::abs(info[a][a]) * h[a] * h[a] >= 100.0 * noise || 4.0 * h[a] > h_max) break;
      h[a] *= 4.0;
    }
    for (std::size_t b = 0; b < a; ++b) {
      const double v = (at(a, 1, b, 1) - at(a, 1, b, -1) - at(a, -1, b, 1) + at(a, -1, b, -1)) / (4.0 * h[a] * h[b]);
      info[a][b] = info[b][a] = -v;
    }
  }
  const auto scores = family_scores(spec, theta, ds, opts);
  const auto order = canonical_order(ds);
  Matrix meat(p, std::vector<double>(p, 0.0));
  std::vector<double> col(order.size());
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = 0; b <= a; ++b) {
      for (std::size_t i = 0; i < order.size(); ++i) col[i] = scores[order[i]][a] * scores[order[i]][b];
      meat[a][b] = meat[b][a] = pairwise_sum(col);
    }
  }
  Sandwich s;
  std::vector<std::size_t> free;
  for (std::size_t a = 0; a < p; ++a) {
    if (fixed.empty() || !fixed[a]) free.push_back(a);
  }
  const auto names = parameter_names(spec);
  Matrix sub_info(free.size(), std::vector<double>(free.size()));
  Matrix sub_meat = sub_info;
  std::vector<std::string> sub_names;
  for (std::size_t a = 0; a < free.size(); ++a) {
    sub_names.push_back(names[free[a]]);
    for (std::size_t b = 0; b < free.size(); ++b) {
      sub_info[a][b] = info[free[a]][free[b]];
      sub_meat[a][b] = meat[free[a]][free[b]];
    }
  }
  const Matrix sub_cov = sandwich_from(sub_info, sub_meat, sub_names);
  s.cov.assign(p, std::vector<double>(p, 0.0));
  for (std::size_t a = 0; a < free.size(); ++a) {
    for (std::size_t b = 0; b < free.size(); ++b) s.cov[free[a]][free[b]] = sub_cov[a][b];
  }
  s.information = std::move(info);
  s.meat = std::move(meat);
  return s;
}

Matrix sandwich_from(const Matrix& information, const Matrix& meat, const std::vector<std::string>& names) {
  const Eigen::MatrixXd info = to_eigen(information);
  const Eigen::MatrixXd j = to_eigen(meat);
  if (info.rows() != j.rows()) throw ConfigError("information and score matrices differ in size");
  const Eigen::MatrixXd sym = 0.5 * (info + info.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  if (es.info() != Eigen::Success) throw NumericError("eigen decomposition of the information matrix failed");
  const Eigen::VectorXd ev = es.eigenvalues();
  const double top = std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
  std::ostringstream bad;
  for (Eigen::Index k = 0; k < ev.size(); ++k) {
    if (ev(k) > 1e-10 * top) continue;
    const Eigen::VectorXd v = es.eigenvectors().col(k);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    bad << (bad.tellp() > 0 ? "; " : "") << "eigenvalue " << ev(k) << " mostly along "
        << (static_cast<std::size_t>(arg) < names.size() ? names[arg] : std::to_string(arg));
  }
  if (bad.tellp() > 0) throw NumericError("information matrix is singular or not positive definite: " + bad.str());
  const Eigen::MatrixXd inv =
      es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
  Eigen::MatrixXd v = inv * j * inv;
  v = 0.5 * (v + v.transpose());
  return from_eigen(v);
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t dataset_fingerprint(const Dataset& ds) {
  std::ostringstream os;
  write_pedigree(os, ds);
  return fnv1a(os.str());
}

std::vector<ComparisonRow> compare(const std::vector<const FitResult*>& fits, const std::vector<std::string>& labels) {
  if (fits.size() != labels.size()) throw ConfigError("one label per fit is required");
  std::vector<ComparisonRow> rows;
  for (std::size_t i = 0; i < fits.size(); ++i) {
    if (fits[i]->data_fingerprint != fits[0]->data_fingerprint || fits[i]->n_families != fits[0]->n_families) {
      throw DataError("fits '" + labels[0] + "' and '" + labels[i] + "' were made on different datasets");
    }
    rows.push_back({labels[i], fits[i]->theta.size(), fits[i]->loglik, fits[i]->aic, 0.0,
                    fits[i]->convergence.converged});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.aic < b.aic; });
  for (auto& r : rows) r.delta_aic = r.aic - rows.front().aic;
  return rows;
}

LrtResult lrt(const FitResult& full, const FitResult& null, int df) {
  if (df < 1) throw ConfigError("likelihood-ratio df must be >= 1");
  if (full.data_fingerprint != null.data_fingerprint || full.n_families != null.n_families) {
    throw DataError("likelihood-ratio test needs fits on the same dataset");
  }
  LrtResult r;
  r.df = df;
  r.statistic = 2.0 * (full.loglik - null.loglik);
  r.p_value = r.statistic <= 0.0 ? 1.0 : chi_square_upper_p(r.statistic, df);
  return r;
}

SelectionResult select_tvc_model(const Dataset& ds, const ModelSpec& spec, const FitOptions& opts) {
  SelectionResult out;
  const TvcKind kinds[] = {TvcKind::PE, TvcKind::ED, TvcKind::CO};
  for (TvcKind k : kinds) {
    ModelSpec s = spec;
    for (auto& c : s.causes) {
      for (auto& t : c.tvcs) t.kind = k;
    }
    std::optional<ParameterVector> init;
    if (!out.fits.empty()) {
      // start the richer TVC shapes from the PE estimates
      ParameterVector p = default_init(s, ds);
      const auto& pe = out.fits.front().theta;
      for (std::size_t i = 0; i < pe.names.size(); ++i) {
        auto it = std::find(p.names.begin(), p.names.end(), pe.names[i]);
        if (it != p.names.end()) p.values[static_cast<std::size_t>(it - p.names.begin())] = pe.values[i];
      }
      init = std::move(p);
    }
    out.fits.push_back(fit(ds, s, init, opts));
  }
  std::vector<const FitResult*> ptrs;
  for (const auto& f : out.fits) ptrs.push_back(&f);
  out.table = compare(ptrs, {"PE", "ED", "CO"});
  const ComparisonRow* best = nullptr;
  for (const auto& r : out.table) {
    if (r.converged) {
      best = &r;
      break;
    }
  }
  if (!best) best = &out.table.front();
  out.best = parse_tvc_kind(best->label);
  return out;
}

double normal_two_sided_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

double chi_square_upper_p(double x, int df) {
  if (x <= 0.0) return 1.0;
  return boost::math::gamma_q(0.5 * df, 0.5 * x);
}

}  // namespace frailcomp
