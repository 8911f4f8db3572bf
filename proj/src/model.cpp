#include "frailcomp/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "frailcomp/error.hpp"

namespace frailcomp {

namespace {

std::string tvc_suffix(std::size_t event, const TvcTerm& t) {
  return std::to_string(event + 1) + "_tvc" + std::to_string(t.tvc + 1);
}

}  // namespace

std::size_t ModelSpec::n_params() const { return parameter_names(*this).size(); }

std::size_t ModelSpec::n_tvc_columns() const {
  std::size_t n = 0;
  for (const auto& c : causes) {
    for (const auto& t : c.tvcs) n = std::max(n, t.tvc + 1);
  }
  return n;
}

void ModelSpec::validate() const {
  if (causes.empty()) throw ConfigError("model needs at least one event");
  if (frailty_events.size() != causes.size()) {
    throw ConfigError("frailty event flags must have one entry per event");
  }
  if (!std::isfinite(age_origin) || age_origin < 0.0) throw ConfigError("age_origin must be finite and >= 0");
  for (std::size_t j = 0; j < causes.size(); ++j) {
    std::set<std::size_t> seen;
    for (const auto& t : causes[j].tvcs) {
      if (!seen.insert(t.tvc).second) {
        throw ConfigError("event " + std::to_string(j + 1) + " lists TVC " + std::to_string(t.tvc + 1) + " twice");
      }
    }
  }
  const auto n_frail = std::count(frailty_events.begin(), frailty_events.end(), true);
  if (correlated && n_frail < 1) throw ConfigError("correlated frailty needs at least one frailty event");
}

ModelSpec default_spec(int n_events, TvcKind kind, bool with_tvc) {
  if (n_events < 1) throw ConfigError("model needs at least one event");
  ModelSpec s;
  s.causes.resize(static_cast<std::size_t>(n_events));
  if (with_tvc) s.causes[0].tvcs.push_back({0, kind});
  s.frailty_events.assign(static_cast<std::size_t>(n_events), true);
  return s;
}

std::vector<std::string> parameter_names(const ModelSpec& spec) {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < spec.causes.size(); ++j) {
    const std::string e = std::to_string(j + 1);
    names.push_back("log_lambda_" + e);
    names.push_back("log_rho_" + e);
    names.push_back("beta_gene_" + e);
    for (const auto& t : spec.causes[j].tvcs) {
      names.push_back("beta_" + tvc_suffix(j, t));
      if (t.kind != TvcKind::PE) names.push_back("log_eta_" + tvc_suffix(j, t));
      if (t.kind == TvcKind::CO) names.push_back("eta0_" + tvc_suffix(j, t));
    }
  }
  for (std::size_t j = 0; j < spec.frailty_events.size(); ++j) {
    if (spec.frailty_events[j]) names.push_back("log_k_" + std::to_string(j + 1));
  }
  if (spec.correlated) names.push_back("log_k0");
  return names;
}

Model decode(const ModelSpec& spec, std::span<const double> theta) {
  const std::size_t expected = spec.n_params();
  if (theta.size() != expected) {
    throw ConfigError("parameter vector has " + std::to_string(theta.size()) + " entries, model needs " +
                      std::to_string(expected));
  }
  Model m;
  std::size_t i = 0;
  for (std::size_t j = 0; j < spec.causes.size(); ++j) {
    CauseModel c;
    c.baseline.lambda = std::exp(theta[i++]);
    c.baseline.rho = std::exp(theta[i++]);
    c.baseline.origin = spec.age_origin;
    c.beta_gene = theta[i++];
    for (const auto& t : spec.causes[j].tvcs) {
      TvcEffect e;
      e.kind = t.kind;
      e.tvc = t.tvc;
      e.beta = theta[i++];
      if (t.kind != TvcKind::PE) e.eta = std::exp(theta[i++]);
      if (t.kind == TvcKind::CO) e.eta0 = theta[i++];
      c.tvc_effects.push_back(e);
    }
    m.causes.push_back(std::move(c));
  }
  m.frailty.k.assign(spec.n_events(), 1.0);
  m.frailty.in_set = spec.frailty_events;
  for (std::size_t j = 0; j < spec.frailty_events.size(); ++j) {
    if (spec.frailty_events[j]) m.frailty.k[j] = std::exp(theta[i++]);
  }
  m.frailty.k0 = spec.correlated ? std::exp(theta[i++]) : 0.0;
  return m;
}

ParameterVector encode(const ModelSpec& spec, const Model& model) {
  if (model.causes.size() != spec.causes.size()) throw ConfigError("model and spec disagree on event count");
  std::vector<double> v;
  for (std::size_t j = 0; j < spec.causes.size(); ++j) {
    const auto& c = model.causes[j];
    v.push_back(std::log(c.baseline.lambda));
    v.push_back(std::log(c.baseline.rho));
    v.push_back(c.beta_gene);
    if (c.tvc_effects.size() != spec.causes[j].tvcs.size()) throw ConfigError("model and spec disagree on TVC terms");
    for (std::size_t k = 0; k < c.tvc_effects.size(); ++k) {
      const auto& e = c.tvc_effects[k];
      v.push_back(e.beta);
      if (e.kind != TvcKind::PE) v.push_back(std::log(e.eta));
      if (e.kind == TvcKind::CO) v.push_back(e.eta0);
    }
  }
  for (std::size_t j = 0; j < spec.frailty_events.size(); ++j) {
    if (spec.frailty_events[j]) v.push_back(std::log(model.frailty.k[j]));
  }
  if (spec.correlated) v.push_back(std::log(model.frailty.k0));
  return make_parameters(spec, std::move(v));
}

ParameterVector make_parameters(const ModelSpec& spec, std::vector<double> values) {
  ParameterVector p;
  p.names = parameter_names(spec);
  if (values.size() != p.names.size()) {
    throw ConfigError("expected " + std::to_string(p.names.size()) + " parameter values, got " +
                      std::to_string(values.size()));
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) throw ConfigError("parameter " + p.names[i] + " is not finite");
  }
  p.values = std::move(values);
  return p;
}

std::size_t ParameterVector::index_of(const std::string& name) const {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw ConfigError("unknown parameter '" + name + "'");
  return static_cast<std::size_t>(it - names.begin());
}

double ParameterVector::at(const std::string& name) const { return values[index_of(name)]; }

void ParameterVector::set(const std::string& name, double v) { values[index_of(name)] = v; }

}  // namespace frailcomp
