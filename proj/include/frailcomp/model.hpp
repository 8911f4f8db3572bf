#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "frailcomp/frailty.hpp"
#include "frailcomp/hazard.hpp"

namespace frailcomp {

struct TvcTerm {
  std::size_t tvc = 0;
  TvcKind kind = TvcKind::PE;
  bool operator==(const TvcTerm&) const = default;
};

struct CauseSpec {
  std::vector<TvcTerm> tvcs;
  bool operator==(const CauseSpec&) const = default;
};

// Model structure without values.
struct ModelSpec {
  double age_origin = 15.0;
  std::vector<CauseSpec> causes;       // one per competing event
  std::vector<bool> frailty_events;    // per event
  bool correlated = false;             // estimate k0; otherwise k0 = 0

  std::size_t n_events() const { return causes.size(); }
  std::size_t n_params() const;
  std::size_t n_tvc_columns() const;   // 1 + highest referenced tvc index
  void validate() const;
  bool operator==(const ModelSpec&) const = default;
};

// J events, the given TVC kind on event 1 TVC column 0, frailty on every event.
ModelSpec default_spec(int n_events, TvcKind kind, bool with_tvc = true);

struct Model {
  std::vector<CauseModel> causes;
  FrailtySpec frailty;
  std::size_t n_events() const { return causes.size(); }
};

// Unconstrained parameter vector with names in the fixed layout:
// per event j: log_lambda_j, log_rho_j, beta_gene_j, then per TVC term
// beta_j_<tvc>, log_eta_j_<tvc> (ED, CO), eta0_j_<tvc> (CO); then log_k_j for
// each frailty event, then log_k0 when correlated.
struct ParameterVector {
  std::vector<std::string> names;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double at(const std::string& name) const;
  void set(const std::string& name, double v);
  std::size_t index_of(const std::string& name) const;
};

std::vector<std::string> parameter_names(const ModelSpec& spec);
Model decode(const ModelSpec& spec, std::span<const double> theta);
ParameterVector encode(const ModelSpec& spec, const Model& model);
ParameterVector make_parameters(const ModelSpec& spec, std::vector<double> values);

}  // namespace frailcomp
