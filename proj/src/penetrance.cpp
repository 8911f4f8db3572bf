#include "frailcomp/penetrance.hpp"

#include <algorithm>
#include <cmath>

#include "frailcomp/error.hpp"
#include "frailcomp/likelihood.hpp"
#include "frailcomp/quadrature.hpp"

namespace frailcomp {

namespace {

constexpr double kMaxPanel = 5.0;
constexpr double kZ95 = 1.959963984540054;

std::vector<double> cum_hazards(const Model& model, const RiskProfile& profile, double t) {
  std::vector<double> h(model.n_events());
  const TvcAges ages(profile.tvc_ages);
  for (std::size_t j = 0; j < h.size(); ++j) h[j] = cause_cum_hazard(model.causes[j], t, profile.genotype, ages);
  return h;
}

void check_event(const Model& model, std::size_t event) {
  if (event >= model.n_events()) throw ConfigError("event " + std::to_string(event + 1) + " out of range");
}

template <class Factor>
std::vector<double> integrate_path(const Model& model, const RiskProfile& profile, std::size_t event,
                                   std::span<const double> ages, Factor&& factor) {
  check_event(model, event);
  for (std::size_t i = 1; i < ages.size(); ++i) {
    if (ages[i] < ages[i - 1]) throw ConfigError("penetrance ages must be ascending");
  }
  std::vector<double> out(ages.size(), 0.0);
  if (ages.empty()) return out;
  const double origin = model.causes[event].baseline.origin;
  const double t_max = ages.back();
  if (t_max <= origin) return out;

  std::vector<double> cuts{origin};
  for (const auto& tx : profile.tvc_ages) {
    if (tx && *tx > origin && *tx < t_max) cuts.push_back(*tx);
  }
  for (double a : ages) {
    if (a > origin) cuts.push_back(a);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  const GaussRule& rule = gauss_legendre(31);
  const TvcAges tvc(profile.tvc_ages);
  auto integrand = [&](double u) {
    const auto h = cum_hazards(model, profile, u);
    return cause_hazard(model.causes[event], u, profile.genotype, tvc) * factor(h);
  };

  double acc = 0.0;
  std::size_t next = 0;
  auto record = [&](double upto) {
    while (next < ages.size() && ages[next] <= upto) {
      out[next] = ages[next] <= origin ? 0.0 : acc;
      ++next;
    }
  };
  record(origin);
  for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
    const double a = cuts[c];
    const double b = cuts[c + 1];
    const auto n_panels = static_cast<std::size_t>(std::ceil((b - a) / kMaxPanel));
    const double w = (b - a) / static_cast<double>(n_panels);
    for (std::size_t k = 0; k < n_panels; ++k) {
      const double lo = a + w * static_cast<double>(k);
      const double hi = k + 1 == n_panels ? b : lo + w;
      const double piece = integrate_fixed(rule, integrand, lo, hi);
      if (!std::isfinite(piece)) throw NumericError("penetrance integrand is not finite on a panel");
      acc += piece;
    }
    record(b);
  }
  return out;
}

double quad_form(const std::vector<double>& d, const std::vector<std::vector<double>>& cov) {
  double v = 0.0;
  for (std::size_t a = 0; a < d.size(); ++a) {
    for (std::size_t b = 0; b < d.size(); ++b) v += d[a] * cov[a][b] * d[b];
  }
  return v;
}

double se_from(const std::vector<double>& d, const std::vector<std::vector<double>>& cov) {
  const double v = quad_form(d, cov);
  double scale = 0.0;
  for (std::size_t a = 0; a < d.size(); ++a) scale += d[a] * d[a] * std::abs(cov[a][a]);
  if (!std::isfinite(v) || v < -1e-10 * std::max(scale, 1e-300)) {
    throw NumericError("delta-method variance is negative or not finite");
  }
  return std::sqrt(std::max(v, 0.0));
}

void check_cov(const std::vector<std::vector<double>>& cov, std::size_t p) {
  if (cov.size() != p) throw ConfigError("covariance matrix does not match the parameter count");
  for (const auto& row : cov) {
    if (row.size() != p) throw ConfigError("covariance matrix is not square");
  }
}

}  // namespace

std::vector<double> penetrance_path(const Model& model, const RiskProfile& profile, std::size_t event,
                                    std::span<const double> ages) {
  return integrate_path(model, profile, event, ages, [&](const std::vector<double>& h) {
    return marginal_event_factor(model.frailty, h, event);
  });
}

double penetrance(const Model& model, const RiskProfile& profile, std::size_t event, double t) {
  if (t < 0.0) throw ConfigError("penetrance age must be >= 0");
  const double ages[] = {t};
  return penetrance_path(model, profile, event, ages)[0];
}

double penetrance_independent(const Model& model, const RiskProfile& profile, std::size_t event, double t) {
  if (t < 0.0) throw ConfigError("penetrance age must be >= 0");
  const double ages[] = {t};
  return integrate_path(model, profile, event, ages, [&](const std::vector<double>& h) {
    return marginal_event_factor_independent(model.frailty, h, event);
  })[0];
}

double marginal_survival(const Model& model, const RiskProfile& profile, double t) {
  return std::exp(log_marginal_survival(model.frailty, cum_hazards(model, profile, t)));
}

PenetranceCurve penetrance_curve(const ModelSpec& spec, std::span<const double> theta,
                                 const std::vector<std::vector<double>>& cov, const RiskProfile& profile,
                                 std::span<const double> ages, const CurveOptions& opts) {
  const std::size_t p = theta.size();
  check_cov(cov, p);
  std::vector<std::size_t> events = opts.events;
  if (events.empty()) {
    for (std::size_t j = 0; j < spec.n_events(); ++j) events.push_back(j);
  }
  const Model model = decode(spec, theta);
  PenetranceCurve curve;
  curve.profile = profile;
  std::vector<double> work(theta.begin(), theta.end());
  for (std::size_t j : events) {
    const auto est = penetrance_path(model, profile, j, ages);
    std::vector<std::vector<double>> grad(ages.size(), std::vector<double>(p, 0.0));
    for (std::size_t k = 0; k < p; ++k) {
      const double h = score_step(theta[k]);
      work[k] = theta[k] + h;
      const double up = work[k];
      const auto plus = penetrance_path(decode(spec, work), profile, j, ages);
      work[k] = theta[k] - h;
      const double down = work[k];
      const auto minus = penetrance_path(decode(spec, work), profile, j, ages);
      work[k] = theta[k];
      for (std::size_t i = 0; i < ages.size(); ++i) grad[i][k] = (plus[i] - minus[i]) / (up - down);
    }
    for (std::size_t i = 0; i < ages.size(); ++i) {
      PenetrancePoint pt;
      pt.age = ages[i];
      pt.event = j;
      pt.estimate = est[i];
      pt.se = se_from(grad[i], cov);
      if (opts.scale == CiScale::plain || est[i] <= 0.0 || est[i] >= 1.0) {
        pt.lo95 = std::clamp(est[i] - kZ95 * pt.se, 0.0, 1.0);
        pt.hi95 = std::clamp(est[i] + kZ95 * pt.se, 0.0, 1.0);
      } else {
        // log(-log(1 - F)) scale
        const double l = -std::log1p(-est[i]);
        const double g = std::log(l);
        const double se_g = pt.se / ((1.0 - est[i]) * l);
        pt.lo95 = -std::expm1(-std::exp(g - kZ95 * se_g));
        pt.hi95 = -std::expm1(-std::exp(g + kZ95 * se_g));
      }
      curve.points.push_back(pt);
    }
  }
  return curve;
}

std::vector<HazardRatioPoint> hazard_ratio_trajectory(const ModelSpec& spec, std::span<const double> theta,
                                                      const std::vector<std::vector<double>>& cov,
                                                      std::size_t event, std::size_t term,
                                                      std::span<const double> years_since) {
  const std::size_t p = theta.size();
  check_cov(cov, p);
  if (event >= spec.n_events()) throw ConfigError("event " + std::to_string(event + 1) + " out of range");
  if (term >= spec.causes[event].tvcs.size()) {
    throw ConfigError("event " + std::to_string(event + 1) + " has no TVC term " + std::to_string(term + 1));
  }
  auto log_hr = [&](std::span<const double> th, double s) {
    const Model m = decode(spec, th);
    return mu(m.causes[event].tvc_effects[term], s, 0.0);
  };
  std::vector<HazardRatioPoint> out;
  std::vector<double> work(theta.begin(), theta.end());
  for (double s : years_since) {
    if (s < 0.0) throw ConfigError("years since exposure must be >= 0");
    std::vector<double> d(p);
    for (std::size_t k = 0; k < p; ++k) {
      const double h = score_step(theta[k]);
      work[k] = theta[k] + h;
      const double up = work[k];
      const double plus = log_hr(work, s);
      work[k] = theta[k] - h;
      const double down = work[k];
      const double minus = log_hr(work, s);
      work[k] = theta[k];
      d[k] = (plus - minus) / (up - down);
    }
    const double m = log_hr(theta, s);
    const double se = se_from(d, cov);
    out.push_back({s, std::exp(m), std::exp(m - kZ95 * se), std::exp(m + kZ95 * se)});
  }
  return out;
}

}  // namespace frailcomp
