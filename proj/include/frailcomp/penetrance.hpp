#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "frailcomp/model.hpp"

namespace frailcomp {

struct RiskProfile {
  int genotype = 0;
  std::vector<std::optional<double>> tvc_ages;
  std::string label;
};

enum class CiScale { plain, cloglog };

// Marginal cause-specific cumulative incidence of event j (0-based) by age t.
double penetrance(const Model& model, const RiskProfile& profile, std::size_t event, double t);

// Same integral, evaluated at every age of an ascending grid in one pass.
std::vector<double> penetrance_path(const Model& model, const RiskProfile& profile, std::size_t event,
                                    std::span<const double> ages);

// k0 == 0 product-form integrand; cross-check of penetrance().
double penetrance_independent(const Model& model, const RiskProfile& profile, std::size_t event, double t);

double marginal_survival(const Model& model, const RiskProfile& profile, double t);

struct PenetrancePoint {
  double age = 0.0;
  std::size_t event = 0;  // 0-based
  double estimate = 0.0;
  double se = 0.0;
  double lo95 = 0.0;
  double hi95 = 0.0;
};

struct PenetranceCurve {
  RiskProfile profile;
  std::vector<PenetrancePoint> points;  // event-major, then age
};

struct CurveOptions {
  CiScale scale = CiScale::plain;
  std::vector<std::size_t> events;  // empty = all
};

PenetranceCurve penetrance_curve(const ModelSpec& spec, std::span<const double> theta,
                                 const std::vector<std::vector<double>>& cov, const RiskProfile& profile,
                                 std::span<const double> ages, const CurveOptions& opts = {});

struct HazardRatioPoint {
  double years_since = 0.0;
  double hr = 1.0;
  double lo95 = 1.0;
  double hi95 = 1.0;
};

// HR(s) = exp(mu(t_x + s)) for TVC term `term` of event `event` (0-based),
// CI by the delta method on mu.
std::vector<HazardRatioPoint> hazard_ratio_trajectory(const ModelSpec& spec, std::span<const double> theta,
                                                      const std::vector<std::vector<double>>& cov,
                                                      std::size_t event, std::size_t term,
                                                      std::span<const double> years_since);

}  // namespace frailcomp
