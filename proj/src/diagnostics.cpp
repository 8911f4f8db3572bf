#include "frailcomp/diagnostics.hpp"

#include <ostream>

#include "frailcomp/error.hpp"

namespace frailcomp {

double posterior_frailty(double k_j, double k0, int d_fj, double cum_haz) {
  const double w = k_j + k0;
  return (d_fj + w) / (cum_haz + w);
}

std::vector<double> ResidualTable::grand_mean(bool include_probands) const {
  std::vector<double> sum, count;
  for (const auto& r : individual) {
    if (r.proband && !include_probands) continue;
    if (r.event > sum.size()) {
      sum.resize(r.event, 0.0);
      count.resize(r.event, 0.0);
    }
    sum[r.event - 1] += r.residual;
    count[r.event - 1] += 1.0;
  }
  for (std::size_t j = 0; j < sum.size(); ++j) sum[j] = count[j] > 0 ? sum[j] / count[j] : 0.0;
  return sum;
}

ResidualTable martingale_residuals(const Model& model, const Dataset& ds, PosteriorKind kind) {
  const std::size_t J = model.n_events();
  const FrailtySpec& f = model.frailty;
  ResidualTable t;
  for (const auto& fam : ds.families) {
    const std::size_t n = fam.members.size();
    std::vector<std::vector<double>> h(n, std::vector<double>(J));
    std::vector<double> hsum(J, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& ind = fam.members[i];
      for (std::size_t j = 0; j < J; ++j) {
        h[i][j] = cause_cum_hazard(model.causes[j], ind.time, ind.genotype, TvcAges(ind.tvc_ages));
        hsum[j] += h[i][j];
      }
    }
    for (std::size_t j = 0; j < J; ++j) {
      const int d = fam.event_count(static_cast<int>(j + 1));
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double z = 1.0;
        if (f.in_set[j]) {
          z = kind == PosteriorKind::individual ? posterior_frailty(f.k[j], f.k0, d, h[i][j])
                                                : posterior_frailty(f.k[j], f.k0, d, hsum[j]);
        }
        const auto& ind = fam.members[i];
        ResidualRow r;
        r.fam_id = fam.fam_id;
        r.ind_id = ind.ind_id;
        r.event = j + 1;
        r.posterior_frailty = z;
        r.proband = i == fam.proband;
        r.residual = (ind.status == static_cast<int>(j + 1) ? 1.0 : 0.0) - z * h[i][j];
        total += r.residual;
        t.individual.push_back(std::move(r));
      }
      t.family.push_back({fam.fam_id, j + 1, n > 0 ? total / static_cast<double>(n) : 0.0, n});
    }
  }
  return t;
}

void write_residuals_csv(std::ostream& out, const ResidualTable& t) {
  out << "famID,indID,event,residual,posterior_frailty,proband\n";
  for (const auto& r : t.individual) {
    out << r.fam_id << ',' << r.ind_id << ',' << r.event << ',' << format_number(r.residual) << ','
        << format_number(r.posterior_frailty) << ',' << (r.proband ? 1 : 0) << '\n';
  }
}

void write_family_residuals_csv(std::ostream& out, const ResidualTable& t) {
  out << "famID,event,mean_residual,n_members\n";
  for (const auto& r : t.family) {
    out << r.fam_id << ',' << r.event << ',' << format_number(r.mean_residual) << ',' << r.n_members << '\n';
  }
}

}  // namespace frailcomp
