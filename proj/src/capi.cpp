#include "frailcomp.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include "frailcomp/config.hpp"
#include "frailcomp/error.hpp"

using namespace frailcomp;

struct fc_dataset {
  Dataset ds;
};

struct fc_fit {
  FitResult result;
};

namespace {

thread_local std::string last_error;

class ArgumentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <class Fn>
int guarded(Fn&& fn) {
  try {
    last_error.clear();
    return fn();
  } catch (const ArgumentError& e) {
    last_error = e.what();
    return FC_ERR_ARGUMENT;
  } catch (const ConfigError& e) {
    last_error = e.what();
    return FC_ERR_CONFIG;
  } catch (const DataError& e) {
    last_error = e.what();
    return FC_ERR_DATA;
  } catch (const NumericError& e) {
    last_error = e.what();
    return FC_ERR_NUMERIC;
  } catch (const json::exception& e) {
    last_error = std::string("invalid JSON: ") + e.what();
    return FC_ERR_CONFIG;
  } catch (const std::exception& e) {
    last_error = e.what();
    return FC_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return FC_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (!p) throw ArgumentError(std::string(what) + " must not be NULL");
}

json parse_or_null(const char* text) {
  if (!text || !*text) return nullptr;
  return json::parse(text);
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

ModelSpec model_for(const Dataset& ds, const json& model) {
  if (model.is_null()) return default_spec(ds.n_events, TvcKind::PE, ds.n_tvc() > 0);
  return model_spec_from_json(model);
}

}  // namespace

extern "C" {

const char* fc_version(void) { return FRAILCOMP_VERSION; }

const char* fc_last_error(void) { return last_error.c_str(); }

void fc_string_free(char* s) { std::free(s); }

int fc_provenance(const char* config_json, char** out) {
  return guarded([&] {
    require(out, "out");
    json cfg = parse_or_null(config_json);
    *out = dup(provenance_line(cfg));
    return FC_OK;
  });
}

int fc_dataset_load(const char* path, const char* options_json, fc_dataset** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    const LoadOptions lo = load_options_from_json(parse_or_null(options_json));
    *out = new fc_dataset{load_pedigree(path, lo)};
    return FC_OK;
  });
}

int fc_dataset_write(const fc_dataset* ds, const char* path, const char* header_comment) {
  return guarded([&] {
    require(ds, "dataset");
    require(path, "path");
    write_pedigree(path, ds->ds, header_comment ? header_comment : "");
    return FC_OK;
  });
}

int fc_dataset_summary_csv(const fc_dataset* ds, char** out) {
  return guarded([&] {
    require(ds, "dataset");
    require(out, "out");
    std::ostringstream os;
    write_summary_csv(os, summarize(ds->ds), ds->ds.tvc_names);
    *out = dup(os.str());
    return FC_OK;
  });
}

size_t fc_dataset_n_families(const fc_dataset* ds) { return ds ? ds->ds.families.size() : 0; }

size_t fc_dataset_n_individuals(const fc_dataset* ds) { return ds ? ds->ds.n_individuals() : 0; }

void fc_dataset_free(fc_dataset* ds) { delete ds; }

int fc_simulate(const char* design_json, fc_dataset** out) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    json cfg = parse_or_null(design_json);
    if (cfg.is_null()) cfg = json::object();
    *out = new fc_dataset{generate(sim_design_from_json(cfg))};
    return FC_OK;
  });
}

int fc_fit_run(const fc_dataset* ds, const char* model_json, const char* options_json, fc_fit** out) {
  return guarded([&] {
    require(ds, "dataset");
    require(out, "out");
    *out = nullptr;
    const json model = parse_or_null(model_json);
    const ModelSpec spec = model_for(ds->ds, model);
    std::optional<ParameterVector> init;
    if (!model.is_null()) init = parameters_from_json(spec, model);
    const FitOptions opts = fit_options_from_json(parse_or_null(options_json));
    *out = new fc_fit{fit(ds->ds, spec, init, opts)};
    if (!(*out)->result.convergence.converged) {
      last_error = "optimizer did not converge: " + (*out)->result.convergence.message;
      return FC_ERR_NONCONVERGENCE;
    }
    return FC_OK;
  });
}

int fc_fit_from_json(const char* text, fc_fit** out) {
  return guarded([&] {
    require(text, "text");
    require(out, "out");
    *out = nullptr;
    *out = new fc_fit{fit_result_from_json(json::parse(text))};
    return FC_OK;
  });
}

int fc_fit_to_json(const fc_fit* f, char** out) {
  return guarded([&] {
    require(f, "fit");
    require(out, "out");
    *out = dup(fit_result_to_json(f->result).dump(2));
    return FC_OK;
  });
}

int fc_fit_table_csv(const fc_fit* f, char** out) {
  return guarded([&] {
    require(f, "fit");
    require(out, "out");
    std::ostringstream os;
    write_fit_table_csv(os, f->result);
    *out = dup(os.str());
    return FC_OK;
  });
}

int fc_fit_converged(const fc_fit* f) { return f && f->result.convergence.converged ? 1 : 0; }

double fc_fit_loglik(const fc_fit* f) { return f ? f->result.loglik : 0.0; }

double fc_fit_aic(const fc_fit* f) { return f ? f->result.aic : 0.0; }

void fc_fit_free(fc_fit* f) { delete f; }

int fc_penetrance_csv(const fc_fit* f, const char* request_json, char** out) {
  return guarded([&] {
    require(f, "fit");
    require(out, "out");
    const json req = parse_or_null(request_json);
    if (!req.is_object() || !req.contains("ages")) throw ConfigError("penetrance request needs 'ages'");
    for (const auto& [key, value] : req.items()) {
      if (key != "ages" && key != "profiles" && key != "events" && key != "ci_scale") {
        throw ConfigError("penetrance request: unknown key '" + key + "'");
      }
    }
    const auto ages = req["ages"].get<std::vector<double>>();
    CurveOptions co;
    const std::string scale = req.value("ci_scale", "plain");
    if (scale == "plain") co.scale = CiScale::plain;
    else if (scale == "cloglog") co.scale = CiScale::cloglog;
    else throw ConfigError("ci_scale must be 'plain' or 'cloglog'");
    if (req.contains("events")) {
      for (int e : req["events"].get<std::vector<int>>()) {
        if (e < 1 || static_cast<std::size_t>(e) > f->result.spec.n_events()) throw ConfigError("event out of range");
        co.events.push_back(static_cast<std::size_t>(e - 1));
      }
    }
    std::vector<RiskProfile> profiles;
    if (req.contains("profiles")) {
      for (const auto& p : req["profiles"]) profiles.push_back(risk_profile_from_json(p));
    } else {
      RiskProfile p;
      p.genotype = 1;
      p.tvc_ages.assign(f->result.spec.n_tvc_columns(), std::nullopt);
      p.label = "G=1,TVC=0";
      profiles.push_back(p);
    }
    if (!f->result.cov_ok) throw NumericError("fit has no usable covariance matrix: " + f->result.cov_message);
    std::ostringstream os;
    os << "age,event,estimate,se,lo95,hi95\n";
    for (auto& p : profiles) {
      if (p.tvc_ages.size() < f->result.spec.n_tvc_columns()) p.tvc_ages.resize(f->result.spec.n_tvc_columns());
      os << "# profile " << (p.label.empty() ? "unnamed" : p.label) << '\n';
      const auto curve = penetrance_curve(f->result.spec, f->result.theta.values, f->result.cov, p, ages, co);
      for (const auto& pt : curve.points) {
        os << format_number(pt.age) << ',' << pt.event + 1 << ',' << format_number(pt.estimate) << ','
           << format_number(pt.se) << ',' << format_number(pt.lo95) << ',' << format_number(pt.hi95) << '\n';
      }
    }
    *out = dup(os.str());
    return FC_OK;
  });
}

int fc_hazard_ratio_csv(const fc_fit* f, const char* request_json, char** out) {
  return guarded([&] {
    require(f, "fit");
    require(out, "out");
    const json req = parse_or_null(request_json);
    if (!req.is_object() || !req.contains("years_since")) throw ConfigError("hazard-ratio request needs 'years_since'");
    const int event = req.value("event", 1);
    const int term = req.value("term", 1);
    if (event < 1 || term < 1) throw ConfigError("event and term are 1-based");
    if (!f->result.cov_ok) throw NumericError("fit has no usable covariance matrix: " + f->result.cov_message);
    const auto years = req["years_since"].get<std::vector<double>>();
    const auto pts = hazard_ratio_trajectory(f->result.spec, f->result.theta.values, f->result.cov,
                                             static_cast<std::size_t>(event - 1), static_cast<std::size_t>(term - 1),
                                             years);
    std::ostringstream os;
    os << "years_since,hr,lo95,hi95\n";
    for (const auto& p : pts) {
      os << format_number(p.years_since) << ',' << format_number(p.hr) << ',' << format_number(p.lo95) << ','
         << format_number(p.hi95) << '\n';
    }
    *out = dup(os.str());
    return FC_OK;
  });
}

int fc_residuals_csv(const fc_fit* f, const fc_dataset* ds, const char* options_json, char** individual_out,
                     char** family_out) {
  return guarded([&] {
    require(f, "fit");
    require(ds, "dataset");
    require(individual_out, "individual_out");
    require(family_out, "family_out");
    const json opts = parse_or_null(options_json);
    PosteriorKind kind = PosteriorKind::individual;
    if (!opts.is_null()) {
      const std::string k = opts.value("posterior", "individual");
      if (k == "family_summed") kind = PosteriorKind::family_summed;
      else if (k != "individual") throw ConfigError("posterior must be 'individual' or 'family_summed'");
    }
    const Model m = decode(f->result.spec, f->result.theta.values);
    const auto table = martingale_residuals(m, ds->ds, kind);
    std::ostringstream a, b;
    write_residuals_csv(a, table);
    write_family_residuals_csv(b, table);
    *individual_out = dup(a.str());
    *family_out = dup(b.str());
    return FC_OK;
  });
}

int fc_select(const fc_dataset* ds, const char* model_json, const char* options_json, char** table_out,
              char** best_out) {
  return guarded([&] {
    require(ds, "dataset");
    require(table_out, "table_out");
    require(best_out, "best_out");
    const ModelSpec spec = model_for(ds->ds, parse_or_null(model_json));
    bool any_tvc = false;
    for (const auto& c : spec.causes) any_tvc = any_tvc || !c.tvcs.empty();
    if (!any_tvc) throw ConfigError("model selection needs at least one TVC term");
    FitOptions opts = fit_options_from_json(parse_or_null(options_json));
    const auto sel = select_tvc_model(ds->ds, spec, opts);
    std::ostringstream os;
    os << "model,n_params,loglik,aic,delta_aic,converged\n";
    for (const auto& r : sel.table) {
      os << r.label << ',' << r.n_params << ',' << format_number(r.loglik) << ',' << format_number(r.aic) << ','
         << format_number(r.delta_aic) << ',' << (r.converged ? "true" : "false") << '\n';
    }
    *table_out = dup(os.str());
    *best_out = dup(to_string(sel.best));
    return FC_OK;
  });
}

int fc_compare_csv(const fc_fit* const* fits, const char* const* labels, size_t n, char** out) {
  return guarded([&] {
    require(fits, "fits");
    require(labels, "labels");
    require(out, "out");
    std::vector<const FitResult*> ptrs;
    std::vector<std::string> names;
    for (size_t i = 0; i < n; ++i) {
      require(fits[i], "fit");
      require(labels[i], "label");
      ptrs.push_back(&fits[i]->result);
      names.emplace_back(labels[i]);
    }
    std::ostringstream os;
    os << "model,n_params,loglik,aic,delta_aic,converged\n";
    for (const auto& r : compare(ptrs, names)) {
      os << r.label << ',' << r.n_params << ',' << format_number(r.loglik) << ',' << format_number(r.aic) << ','
         << format_number(r.delta_aic) << ',' << (r.converged ? "true" : "false") << '\n';
    }
    *out = dup(os.str());
    return FC_OK;
  });
}

int fc_lrt(const fc_fit* full, const fc_fit* null_fit, int df, double* statistic, double* p_value) {
  return guarded([&] {
    require(full, "full");
    require(null_fit, "null_fit");
    require(statistic, "statistic");
    require(p_value, "p_value");
    const auto r = lrt(full->result, null_fit->result, df);
    *statistic = r.statistic;
    *p_value = r.p_value;
    return FC_OK;
  });
}

int fc_replicate(const char* design_json, size_t replicates, const char* options_json, char** out) {
  return guarded([&] {
    require(out, "out");
    json cfg = parse_or_null(design_json);
    if (cfg.is_null()) cfg = json::object();
    const SimDesign design = sim_design_from_json(cfg);
    ReplicateOptions ro;
    const json opts = parse_or_null(options_json);
    if (!opts.is_null()) {
      for (const auto& [key, value] : opts.items()) {
        if (key != "fit" && key != "vary_seed" && key != "penetrance_age" && key != "tvc_age") {
          throw ConfigError("replicate options: unknown key '" + key + "'");
        }
      }
      if (opts.contains("fit")) ro.fit = fit_options_from_json(opts["fit"]);
      ro.vary_seed = opts.value("vary_seed", ro.vary_seed);
      ro.penetrance_age = opts.value("penetrance_age", ro.penetrance_age);
      ro.tvc_age = opts.value("tvc_age", ro.tvc_age);
    }
    const auto s = replicate_study(design, replicates, ro);
    std::ostringstream os;
    os << "# replicates " << s.requested << ", failed " << s.failed << '\n';
    for (const auto& w : s.warnings) os << "# warning: " << w << '\n';
    os << "target,truth,bias,ese,ase,ecp,n\n";
    auto row = [&](const ReplicateRow& r) {
      os << r.name << ',' << format_number(r.truth) << ',' << format_number(r.bias) << ',' << format_number(r.ese)
         << ',' << format_number(r.ase) << ',' << format_number(r.ecp) << ',' << r.n << '\n';
    };
    for (const auto& r : s.parameters) row(r);
    for (const auto& r : s.penetrance) row(r);
    *out = dup(os.str());
    return FC_OK;
  });
}

}  // extern "C"
