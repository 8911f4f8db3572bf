#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "frailcomp/model.hpp"
#include "frailcomp/pedigree.hpp"

namespace frailcomp {

enum class PosteriorKind {
  individual,     // (d_fj + k_j + k0) / (H_fij + k_j + k0)
  family_summed,  // (d_fj + w_j) / (sum_i H_fij + w_j)
};

struct ResidualRow {
  std::string fam_id;
  std::string ind_id;
  std::size_t event = 0;  // 1-based
  double residual = 0.0;
  double posterior_frailty = 1.0;
  bool proband = false;
};

struct FamilyResidualRow {
  std::string fam_id;
  std::size_t event = 0;  // 1-based
  double mean_residual = 0.0;
  std::size_t n_members = 0;
};

struct ResidualTable {
  std::vector<ResidualRow> individual;
  std::vector<FamilyResidualRow> family;
  // Mean of individual residuals per event (index 0 = event 1). Probands are
  // selected on their event, so their residuals are not centred; excluding
  // them gives the mean that is expected to vanish.
  std::vector<double> grand_mean(bool include_probands = true) const;
};

double posterior_frailty(double k_j, double k0, int d_fj, double cum_haz);

ResidualTable martingale_residuals(const Model& model, const Dataset& ds,
                                   PosteriorKind kind = PosteriorKind::individual);

void write_residuals_csv(std::ostream& out, const ResidualTable& t);
void write_family_residuals_csv(std::ostream& out, const ResidualTable& t);

}  // namespace frailcomp
