#include "frailcomp/hazard.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "frailcomp/error.hpp"
#include "frailcomp/quadrature.hpp"

namespace frailcomp {

std::string to_string(TvcKind k) {
  switch (k) {
    case TvcKind::PE: return "PE";
    case TvcKind::ED: return "ED";
    case TvcKind::CO: return "CO";
  }
  return "?";
}

TvcKind parse_tvc_kind(const std::string& s) {
  std::string u = s;
  std::transform(u.begin(), u.end(), u.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (u == "PE") return TvcKind::PE;
  if (u == "ED") return TvcKind::ED;
  if (u == "CO") return TvcKind::CO;
  throw ConfigError("unknown TVC kind '" + s + "' (expected PE, ED or CO)");
}

double baseline_hazard(const WeibullBaseline& b, double t) {
  if (t < 0.0) throw NumericError("baseline hazard evaluated at negative time");
  const double x = t - b.origin;
  if (x < 0.0) return 0.0;
  if (b.rho == 1.0) return b.lambda;
  return b.rho * std::pow(b.lambda, b.rho) * std::pow(x, b.rho - 1.0);
}

double baseline_cum_hazard(const WeibullBaseline& b, double t) {
  if (t < 0.0) throw NumericError("cumulative hazard evaluated at negative time");
  const double x = t - b.origin;
  if (x <= 0.0) return 0.0;
  return std::pow(b.lambda * x, b.rho);
}

double mu(const TvcEffect& e, double t, std::optional<double> change_age) {
  if (!change_age || t < *change_age) return 0.0;
  switch (e.kind) {
    case TvcKind::PE: return e.beta;
    case TvcKind::ED: return e.beta * std::exp(-e.eta * (t - *change_age));
    case TvcKind::CO: return e.beta * std::exp(-e.eta * (t - *change_age)) + e.eta0;
  }
  return 0.0;
}

namespace {

std::optional<double> change_age_of(const TvcEffect& e, TvcAges ages) {
  if (e.tvc >= ages.size()) {
    throw DataError("TVC column " + std::to_string(e.tvc + 1) + " referenced by the model is missing from the data");
  }
  return ages[e.tvc];
}

bool constant_after_onset(const TvcEffect& e) { return e.kind == TvcKind::PE || e.eta == 0.0; }

double onset_value(const TvcEffect& e) { return e.kind == TvcKind::CO ? e.beta + e.eta0 : e.beta; }

}  // namespace

double cause_hazard(const CauseModel& m, double t, int genotype, TvcAges tvc_ages) {
  double lp = m.beta_gene * genotype;
  for (const auto& e : m.tvc_effects) lp += mu(e, t, change_age_of(e, tvc_ages));
  return baseline_hazard(m.baseline, t) * std::exp(lp);
}

double cause_cum_hazard(const CauseModel& m, double t, int genotype, TvcAges tvc_ages) {
  if (t < 0.0) throw NumericError("cumulative hazard evaluated at negative time");
  const WeibullBaseline& b = m.baseline;
  if (t <= b.origin) return 0.0;

  // Segment boundaries: origin, every change age inside (origin, t), t.
  std::vector<double> bounds{b.origin};
  for (const auto& e : m.tvc_effects) {
    auto tx = change_age_of(e, tvc_ages);
    if (tx && *tx > b.origin && *tx < t) bounds.push_back(*tx);
  }
  std::sort(bounds.begin() + 1, bounds.end());
  bounds.push_back(t);

  double total = 0.0;
  for (std::size_t s = 0; s + 1 < bounds.size(); ++s) {
    const double a = bounds[s];
    const double c = bounds[s + 1];
    if (c <= a) continue;
    double constant = 0.0;
    bool smooth_varying = false;
    for (const auto& e : m.tvc_effects) {
      auto tx = change_age_of(e, tvc_ages);
      if (!tx || *tx > a) continue;
      if (constant_after_onset(e)) constant += onset_value(e);
      else smooth_varying = true;
    }
    const double h_a = baseline_cum_hazard(b, a);
    const double h_c = baseline_cum_hazard(b, c);
    if (!smooth_varying) {
      total += std::exp(constant) * (h_c - h_a);
      continue;
    }
    // Integrate over s = H0(u), so dH0 = h0(u) du and the integrand is the
    // (smooth) hazard ratio at u(s) = origin + s^(1/rho) / lambda.
    auto ratio = [&](double sv) {
      const double u = b.origin + std::pow(sv, 1.0 / b.rho) / b.lambda;
      double lp = 0.0;
      for (const auto& e : m.tvc_effects) lp += mu(e, u, change_age_of(e, tvc_ages));
      return std::exp(lp);
    };
    try {
      total += integrate_adaptive(ratio, h_a, h_c, 1e-10);
    } catch (const NumericError&) {
      std::ostringstream os;
      os << "cumulative hazard quadrature failed on age segment [" << a << ", " << c << "]";
      throw NumericError(os.str());
    }
  }
  return total * std::exp(m.beta_gene * genotype);
}

}  // namespace frailcomp
