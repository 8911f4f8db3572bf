#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace frailcomp {

// H0(t) = (lambda * (t - origin))^rho, zero before origin.
struct WeibullBaseline {
  double lambda = 1.0;
  double rho = 1.0;
  double origin = 0.0;
};

enum class TvcKind { PE, ED, CO };

std::string to_string(TvcKind k);
TvcKind parse_tvc_kind(const std::string& s);

struct TvcEffect {
  TvcKind kind = TvcKind::PE;
  std::size_t tvc = 0;  // column index into Individual::tvc_ages
  double beta = 0.0;
  double eta = 0.0;
  double eta0 = 0.0;
};

struct CauseModel {
  WeibullBaseline baseline;
  double beta_gene = 0.0;
  std::vector<TvcEffect> tvc_effects;
};

using TvcAges = std::span<const std::optional<double>>;

double baseline_hazard(const WeibullBaseline& b, double t);
double baseline_cum_hazard(const WeibullBaseline& b, double t);

// Log hazard ratio of one TVC at age t given its change age.
double mu(const TvcEffect& e, double t, std::optional<double> change_age);

// Frailty is not included; callers scale by Z.
double cause_hazard(const CauseModel& m, double t, int genotype, TvcAges tvc_ages);
double cause_cum_hazard(const CauseModel& m, double t, int genotype, TvcAges tvc_ages);

}  // namespace frailcomp
