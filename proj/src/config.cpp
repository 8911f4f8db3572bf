#include "frailcomp/config.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <ostream>
#include <set>

#include "frailcomp/error.hpp"

namespace frailcomp {

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <class T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  try {
    return j[key].get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + ": key '" + key + "' has the wrong type");
  }
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

Dependence parse_dependence(const std::string& s) {
  if (s == "low") return Dependence::low;
  if (s == "medium") return Dependence::medium;
  if (s == "high") return Dependence::high;
  throw ConfigError("unknown dependence '" + s + "' (expected low, medium or high)");
}

double finite_number(const json& v, const std::string& what) {
  if (!v.is_number()) throw ConfigError(what + " must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(what + " must be finite");
  return x;
}

}  // namespace

ModelSpec model_spec_from_json(const json& j) {
  const std::string where = "model";
  check_keys(j, {"events", "age_origin", "causes", "frailty", "parameters"}, where);
  const int n_events = get_or<int>(j, "events", j.contains("causes") ? static_cast<int>(j["causes"].size()) : 2, where);
  if (n_events < 1) throw ConfigError("model: events must be >= 1");
  ModelSpec spec;
  spec.age_origin = get_or<double>(j, "age_origin", 15.0, where);
  spec.causes.resize(static_cast<std::size_t>(n_events));
  if (j.contains("causes")) {
    const auto& cs = j["causes"];
    if (!cs.is_array() || cs.size() != static_cast<std::size_t>(n_events)) {
      throw ConfigError("model: causes must be an array with one entry per event");
    }
    for (std::size_t c = 0; c < cs.size(); ++c) {
      const std::string w = "model.causes[" + std::to_string(c) + "]";
      check_keys(cs[c], {"tvcs"}, w);
      if (!cs[c].contains("tvcs")) continue;
      if (!cs[c]["tvcs"].is_array()) throw ConfigError(w + ".tvcs must be an array");
      for (const auto& t : cs[c]["tvcs"]) {
        check_keys(t, {"tvc", "kind"}, w + ".tvcs");
        const int col = get_or<int>(t, "tvc", 0, w);
        if (col < 0) throw ConfigError(w + ": tvc index must be >= 0");
        spec.causes[c].tvcs.push_back({static_cast<std::size_t>(col),
                                       parse_tvc_kind(get_or<std::string>(t, "kind", "PE", w))});
      }
    }
  }
  spec.frailty_events.assign(spec.causes.size(), true);
  if (j.contains("frailty")) {
    const auto& f = j["frailty"];
    check_keys(f, {"events", "correlated"}, "model.frailty");
    if (f.contains("events")) {
      if (!f["events"].is_array()) throw ConfigError("model.frailty.events must be an array of event numbers");
      spec.frailty_events.assign(spec.causes.size(), false);
      for (const auto& e : f["events"]) {
        const int ev = e.is_number_integer() ? e.get<int>() : -1;
        if (ev < 1 || ev > n_events) throw ConfigError("model.frailty.events: event out of range");
        spec.frailty_events[static_cast<std::size_t>(ev - 1)] = true;
      }
    }
    spec.correlated = get_or<bool>(f, "correlated", false, "model.frailty");
  }
  spec.validate();
  return spec;
}

json model_spec_to_json(const ModelSpec& spec) {
  json j;
  j["events"] = spec.n_events();
  j["age_origin"] = spec.age_origin;
  j["causes"] = json::array();
  for (const auto& c : spec.causes) {
    json tv = json::array();
    for (const auto& t : c.tvcs) tv.push_back({{"tvc", t.tvc}, {"kind", to_string(t.kind)}});
    j["causes"].push_back({{"tvcs", tv}});
  }
  json ev = json::array();
  for (std::size_t e = 0; e < spec.frailty_events.size(); ++e) {
    if (spec.frailty_events[e]) ev.push_back(e + 1);
  }
  j["frailty"] = {{"events", ev}, {"correlated", spec.correlated}};
  return j;
}

std::optional<ParameterVector> parameters_from_json(const ModelSpec& spec, const json& j) {
  if (!j.contains("parameters") || j["parameters"].is_null()) return std::nullopt;
  const auto& p = j["parameters"];
  if (!p.is_object()) throw ConfigError("parameters must be an object of name: value");
  const auto names = parameter_names(spec);
  std::vector<double> values;
  for (const auto& n : names) {
    if (!p.contains(n)) throw ConfigError("parameters: missing '" + n + "'");
    values.push_back(finite_number(p[n], "parameters." + n));
  }
  for (const auto& [key, value] : p.items()) {
    if (std::find(names.begin(), names.end(), key) == names.end()) {
      throw ConfigError("parameters: '" + key + "' is not a parameter of this model");
    }
  }
  return make_parameters(spec, std::move(values));
}

json parameters_to_json(const ParameterVector& p) {
  json j = json::object();
  for (std::size_t i = 0; i < p.size(); ++i) j[p.names[i]] = p.values[i];
  return j;
}

SimDesign sim_design_from_json(const json& j) {
  const std::string where = "simulation";
  check_keys(j,
             {"model", "n_families", "seed", "tvc_model", "dependence", "allele_freq", "proband_age_mean",
              "proband_age_sd", "generation_age_sd", "gen2_min", "gen2_max", "gen3_min", "gen3_max",
              "tvc_onset_mean", "tvc_onset_sd", "max_age", "max_attempts"},
             where);
  SimDesign d;
  if (j.contains("model")) {
    d.spec = model_spec_from_json(j["model"]);
    auto p = parameters_from_json(d.spec, j["model"]);
    if (!p) throw ConfigError("simulation.model needs a parameters block");
    d.truth = *p;
  } else {
    const auto kind = parse_tvc_kind(get_or<std::string>(j, "tvc_model", "pe", where));
    const auto dep = parse_dependence(get_or<std::string>(j, "dependence", "medium", where));
    d = reference_design(kind, dep);
  }
  d.n_families = get_or<std::size_t>(j, "n_families", d.n_families, where);
  d.seed = get_or<std::uint64_t>(j, "seed", d.seed, where);
  d.allele_freq = get_or<double>(j, "allele_freq", d.allele_freq, where);
  d.proband_age_mean = get_or<double>(j, "proband_age_mean", d.proband_age_mean, where);
  d.proband_age_sd = get_or<double>(j, "proband_age_sd", d.proband_age_sd, where);
  d.generation_age_sd = get_or<double>(j, "generation_age_sd", d.generation_age_sd, where);
  d.gen2_min = get_or<int>(j, "gen2_min", d.gen2_min, where);
  d.gen2_max = get_or<int>(j, "gen2_max", d.gen2_max, where);
  d.gen3_min = get_or<int>(j, "gen3_min", d.gen3_min, where);
  d.gen3_max = get_or<int>(j, "gen3_max", d.gen3_max, where);
  d.tvc_onset_mean = get_or<double>(j, "tvc_onset_mean", d.tvc_onset_mean, where);
  d.tvc_onset_sd = get_or<double>(j, "tvc_onset_sd", d.tvc_onset_sd, where);
  d.max_age = get_or<double>(j, "max_age", d.max_age, where);
  d.max_attempts = get_or<std::size_t>(j, "max_attempts", d.max_attempts, where);
  if (d.n_families == 0) throw ConfigError("simulation: n_families must be > 0");
  if (!(d.allele_freq > 0.0 && d.allele_freq < 1.0)) throw ConfigError("simulation: allele_freq must be in (0, 1)");
  if (!(d.proband_age_sd >= 0.0 && d.generation_age_sd >= 0.0 && d.tvc_onset_sd >= 0.0)) {
    throw ConfigError("simulation: standard deviations must be >= 0");
  }
  return d;
}

FitOptions fit_options_from_json(const json& j) {
  const std::string where = "fit options";
  if (j.is_null()) return {};
  check_keys(j,
             {"threads", "max_restarts", "max_iter", "grad_tol", "rel_f_tol", "jitter_seed", "compute_cov",
              "frailty_log_bound"},
             where);
  FitOptions o;
  o.threads = get_or<unsigned>(j, "threads", o.threads, where);
  o.max_restarts = get_or<std::size_t>(j, "max_restarts", o.max_restarts, where);
  o.max_iter = get_or<std::size_t>(j, "max_iter", o.max_iter, where);
  o.grad_tol = get_or<double>(j, "grad_tol", o.grad_tol, where);
  o.rel_f_tol = get_or<double>(j, "rel_f_tol", o.rel_f_tol, where);
  o.jitter_seed = get_or<std::uint64_t>(j, "jitter_seed", o.jitter_seed, where);
  o.compute_cov = get_or<bool>(j, "compute_cov", o.compute_cov, where);
  // null removes the box on the frailty shapes
  if (j.contains("frailty_log_bound") && j["frailty_log_bound"].is_null()) {
    o.frailty_log_bound = std::numeric_limits<double>::infinity();
  } else {
    o.frailty_log_bound = get_or<double>(j, "frailty_log_bound", o.frailty_log_bound, where);
    if (!(o.frailty_log_bound > 0.0)) throw ConfigError("fit options: frailty_log_bound must be > 0");
  }
  if (o.threads == 0) o.threads = 1;
  if (!(o.grad_tol > 0.0 && o.rel_f_tol > 0.0)) throw ConfigError("fit options: tolerances must be > 0");
  return o;
}

LoadOptions load_options_from_json(const json& j) {
  const std::string where = "data options";
  if (j.is_null()) return {};
  check_keys(j, {"n_events", "late_event_as_unaffected"}, where);
  LoadOptions o;
  o.n_events = get_or<int>(j, "n_events", o.n_events, where);
  o.late_event_as_unaffected = get_or<bool>(j, "late_event_as_unaffected", o.late_event_as_unaffected, where);
  if (o.n_events < 1) throw ConfigError("data options: n_events must be >= 1");
  return o;
}

json fit_result_to_json(const FitResult& r) {
  json j;
  j["model"] = model_spec_to_json(r.spec);
  const auto se = r.standard_errors();
  j["parameters"] = json::array();
  for (std::size_t i = 0; i < r.theta.size(); ++i) {
    json row{{"name", r.theta.names[i]}, {"estimate", r.theta.values[i]}};
    if (r.cov_ok) {
      const double z = se[i] > 0.0 ? r.theta.values[i] / se[i] : 0.0;
      row["se"] = se[i];
      row["p_value"] = se[i] > 0.0 ? normal_two_sided_p(z) : 1.0;
    } else {
      row["se"] = nullptr;
      row["p_value"] = nullptr;
    }
    j["parameters"].push_back(row);
  }
  j["estimates"] = parameters_to_json(r.theta);
  j["cov"] = r.cov_ok ? json(r.cov) : json(nullptr);
  j["cov_message"] = r.cov_message;
  j["at_bound"] = r.at_bound;
  j["loglik"] = r.loglik;
  j["aic"] = r.aic;
  j["n_families"] = r.n_families;
  j["data_fingerprint"] = hex64(r.data_fingerprint);
  j["convergence"] = {{"converged", r.convergence.converged},
                      {"iterations", r.convergence.iterations},
                      {"restarts", r.convergence.restarts},
                      {"grad_norm", r.convergence.grad_norm},
                      {"message", r.convergence.message}};
  return j;
}

FitResult fit_result_from_json(const json& j) {
  if (!j.is_object() || !j.contains("model") || !j.contains("estimates")) {
    throw ConfigError("fit file needs 'model' and 'estimates'");
  }
  FitResult r;
  r.spec = model_spec_from_json(j["model"]);
  json holder{{"parameters", j["estimates"]}};
  r.theta = *parameters_from_json(r.spec, holder);
  const std::size_t p = r.theta.size();
  if (j.contains("cov") && !j["cov"].is_null()) {
    const auto& c = j["cov"];
    if (!c.is_array() || c.size() != p) throw ConfigError("fit file: cov must be a " + std::to_string(p) + "x" +
                                                          std::to_string(p) + " matrix");
    r.cov.assign(p, std::vector<double>(p));
    for (std::size_t a = 0; a < p; ++a) {
      if (!c[a].is_array() || c[a].size() != p) throw ConfigError("fit file: cov row has the wrong length");
      for (std::size_t b = 0; b < p; ++b) r.cov[a][b] = finite_number(c[a][b], "fit file: cov entry");
    }
    r.cov_ok = true;
  }
  r.cov_message = get_or<std::string>(j, "cov_message", "", "fit file");
  if (j.contains("at_bound")) {
    if (!j["at_bound"].is_array()) throw ConfigError("fit file: at_bound must be an array of names");
    for (const auto& n : j["at_bound"]) {
      if (!n.is_string()) throw ConfigError("fit file: at_bound must be an array of names");
      r.theta.index_of(n.get<std::string>());
      r.at_bound.push_back(n.get<std::string>());
    }
  }
  r.loglik = get_or<double>(j, "loglik", 0.0, "fit file");
  r.aic = get_or<double>(j, "aic", 0.0, "fit file");
  r.n_families = get_or<std::size_t>(j, "n_families", 0, "fit file");
  const std::string fp = get_or<std::string>(j, "data_fingerprint", "0", "fit file");
  try {
    r.data_fingerprint = std::stoull(fp, nullptr, 16);
  } catch (const std::exception&) {
    throw ConfigError("fit file: data_fingerprint is not a hex number");
  }
  if (j.contains("convergence")) {
    const auto& c = j["convergence"];
    r.convergence.converged = get_or<bool>(c, "converged", false, "fit file");
    r.convergence.iterations = get_or<std::size_t>(c, "iterations", 0, "fit file");
    r.convergence.restarts = get_or<std::size_t>(c, "restarts", 0, "fit file");
    r.convergence.grad_norm = get_or<double>(c, "grad_norm", 0.0, "fit file");
    r.convergence.message = get_or<std::string>(c, "message", "", "fit file");
  }
  return r;
}

void write_fit_table_csv(std::ostream& out, const FitResult& r) {
  const auto se = r.standard_errors();
  out << "parameter,estimate,se,p_value\n";
  for (std::size_t i = 0; i < r.theta.size(); ++i) {
    out << r.theta.names[i] << ',' << format_number(r.theta.values[i]) << ',';
    if (r.cov_ok) {
      out << format_number(se[i]) << ','
          << format_number(se[i] > 0.0 ? normal_two_sided_p(r.theta.values[i] / se[i]) : 1.0);
    } else {
      out << "NA,NA";
    }
    out << '\n';
  }
}

RiskProfile risk_profile_from_json(const json& j) {
  check_keys(j, {"genotype", "tvc_ages", "label"}, "profile");
  RiskProfile p;
  p.genotype = get_or<int>(j, "genotype", 1, "profile");
  if (p.genotype != 0 && p.genotype != 1) throw ConfigError("profile: genotype must be 0 or 1");
  if (j.contains("tvc_ages")) {
    if (!j["tvc_ages"].is_array()) throw ConfigError("profile: tvc_ages must be an array");
    for (const auto& v : j["tvc_ages"]) {
      if (v.is_null()) {
        p.tvc_ages.emplace_back();
        continue;
      }
      const double a = finite_number(v, "profile: tvc age");
      if (!(a > 0.0)) throw ConfigError("profile: tvc ages must be > 0");
      p.tvc_ages.emplace_back(a);
    }
  }
  p.label = get_or<std::string>(j, "label", "", "profile");
  return p;
}

std::string provenance_line(const json& config) {
  return std::string("# frailcomp ") + FRAILCOMP_VERSION + " " + hex64(fnv1a(config.dump()));
}

}  // namespace frailcomp
