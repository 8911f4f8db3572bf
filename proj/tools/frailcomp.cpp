// frailcomp command-line front end. Talks to the library only through the C API.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "frailcomp.h"

using json = nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNonconvergence = 4;

struct Failure {
  int code;
  std::string message;
};

int exit_code_for(int status) {
  switch (status) {
    case FC_OK: return kExitOk;
    case FC_ERR_CONFIG:
    case FC_ERR_ARGUMENT: return kExitConfig;
    case FC_ERR_DATA: return kExitData;
    case FC_ERR_NONCONVERGENCE: return kExitNonconvergence;
    default: return kExitFailure;
  }
}

void check(int status, const std::string& what) {
  if (status != FC_OK) throw Failure{exit_code_for(status), what + ": " + fc_last_error()};
}

struct CString {
  char* p = nullptr;
  ~CString() { fc_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

using DatasetPtr = std::unique_ptr<fc_dataset, decltype(&fc_dataset_free)>;
using FitPtr = std::unique_ptr<fc_fit, decltype(&fc_fit_free)>;

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Failure{kExitConfig, "cannot read config file '" + path + "'"};
  try {
    return json::parse(in, nullptr, true, true);
  } catch (const json::exception& e) {
    throw Failure{kExitConfig, "config file '" + path + "': " + e.what()};
  }
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Failure{kExitConfig, "cannot read '" + path + "'"};
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

json section(const json& cfg, const char* key) {
  if (cfg.is_object() && cfg.contains(key)) return cfg[key];
  return json::object();
}

std::string header_for(const json& effective) {
  CString prov;
  check(fc_provenance(effective.dump().c_str(), &prov.p), "provenance");
  return prov.str() + "\n# config: " + effective.dump();
}

void write_output(const std::string& path, const std::string& header, const std::string& body) {
  if (path.empty() || path == "-") {
    std::cout << header << '\n' << body;
    return;
  }
  std::ofstream out(path);
  if (!out) throw Failure{kExitData, "cannot write '" + path + "'"};
  out << header << '\n' << body;
}

std::vector<double> parse_grid(const std::string& spec) {
  std::vector<double> out;
  try {
    if (spec.find(':') != std::string::npos) {
      double from, to, step;
      char c1, c2;
      std::istringstream is(spec);
      if (!(is >> from >> c1 >> to >> c2 >> step) || c1 != ':' || c2 != ':' || step <= 0.0 || to < from) {
        throw Failure{kExitConfig, "grid must be from:to:step with step > 0"};
      }
      const auto n = static_cast<long>((to - from) / step + 1e-9);
      for (long i = 0; i <= n; ++i) out.push_back(from + step * static_cast<double>(i));
      return out;
    }
    std::istringstream is(spec);
    std::string tok;
    while (std::getline(is, tok, ',')) out.push_back(std::stod(tok));
  } catch (const std::invalid_argument&) {
    throw Failure{kExitConfig, "cannot parse grid '" + spec + "'"};
  }
  if (out.empty()) throw Failure{kExitConfig, "empty grid"};
  return out;
}

DatasetPtr load_data(const std::string& path, const json& data_opts) {
  fc_dataset* raw = nullptr;
  check(fc_dataset_load(path.c_str(), data_opts.dump().c_str(), &raw), "loading " + path);
  return DatasetPtr(raw, fc_dataset_free);
}

FitPtr load_fit(const std::string& path) {
  fc_fit* raw = nullptr;
  check(fc_fit_from_json(read_text(path).c_str(), &raw), "reading fit " + path);
  return FitPtr(raw, fc_fit_free);
}

unsigned default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Competing-risks gamma-frailty models for ascertained family data"};
  app.set_version_flag("--version", std::string(fc_version()));
  app.require_subcommand(1);

  std::string config_path, out_path, data_path, fit_path, table_path, family_out_path;
  unsigned threads = 0;

  // simulate
  auto* sim = app.add_subcommand("simulate", "Generate an ascertained family dataset");
  std::uint64_t seed = 0;
  std::size_t n_families = 0;
  std::string tvc_model, dependence;
  sim->add_option("--config", config_path, "JSON config (uses its \"simulation\" block)");
  sim->add_option("--seed", seed, "RNG seed");
  sim->add_option("--n-families", n_families, "Number of retained families");
  sim->add_option("--tvc-model", tvc_model, "Built-in truth: pe, ed or co")->check(CLI::IsMember({"pe", "ed", "co"}));
  sim->add_option("--dependence", dependence, "Built-in truth: low, medium or high")
      ->check(CLI::IsMember({"low", "medium", "high"}));
  sim->add_option("--out", out_path, "Pedigree CSV")->required();

  // summarize
  auto* summ = app.add_subcommand("summarize", "Event and carrier counts of a pedigree file");
  summ->add_option("--data", data_path, "Pedigree CSV")->required();
  summ->add_option("--config", config_path, "JSON config (uses its \"data\" block)");
  summ->add_option("--out", out_path, "Summary CSV (default stdout)");

  // fit
  auto* fitc = app.add_subcommand("fit", "Maximum-likelihood fit with sandwich covariance");
  fitc->add_option("--data", data_path, "Pedigree CSV")->required();
  fitc->add_option("--config", config_path, "JSON config (\"model\", \"fit\", \"data\" blocks)");
  fitc->add_option("--out", out_path, "Fit JSON")->required();
  fitc->add_option("--table", table_path, "Parameter table CSV");
  fitc->add_option("--threads", threads, "Worker threads (default: available cores)");

  // penetrance
  auto* pen = app.add_subcommand("penetrance", "Cause-specific penetrance curves with 95% CIs");
  std::string ages = "20:80:5", ci_scale = "plain";
  int genotype = 1;
  std::vector<double> tvc_ages;
  std::vector<int> events;
  pen->add_option("--fit", fit_path, "Fit JSON")->required();
  pen->add_option("--config", config_path, "JSON config (uses its \"penetrance\" block)");
  pen->add_option("--ages", ages, "Age grid: from:to:step or a comma list");
  pen->add_option("--genotype", genotype, "Carrier status of the profile")->check(CLI::IsMember({0, 1}));
  pen->add_option("--tvc-age", tvc_ages, "TVC change age per TVC column (omit for never exposed)");
  pen->add_option("--event", events, "Events to report (default all)");
  pen->add_option("--ci-scale", ci_scale, "plain or cloglog")->check(CLI::IsMember({"plain", "cloglog"}));
  pen->add_option("--out", out_path, "Curve CSV (default stdout)");

  // hazard-ratio
  auto* hr = app.add_subcommand("hazard-ratio", "TVC hazard ratio by years since exposure");
  int hr_event = 1, hr_term = 1;
  std::string years = "0:20:1";
  hr->add_option("--fit", fit_path, "Fit JSON")->required();
  hr->add_option("--event", hr_event, "Event number");
  hr->add_option("--term", hr_term, "TVC term number within the event");
  hr->add_option("--years", years, "Years since exposure: from:to:step or a comma list");
  hr->add_option("--out", out_path, "CSV (default stdout)");

  // residuals
  auto* res = app.add_subcommand("residuals", "Martingale residuals and posterior frailties");
  std::string posterior = "individual";
  res->add_option("--fit", fit_path, "Fit JSON")->required();
  res->add_option("--data", data_path, "Pedigree CSV")->required();
  res->add_option("--config", config_path, "JSON config (\"data\" block)");
  res->add_option("--posterior", posterior, "individual or family_summed")
      ->check(CLI::IsMember({"individual", "family_summed"}));
  res->add_option("--out", out_path, "Individual residual CSV")->required();
  res->add_option("--family-out", family_out_path, "Family residual CSV")->required();

  // select
  auto* sel = app.add_subcommand("select", "AIC comparison of PE, ED and CO TVC models");
  sel->add_option("--data", data_path, "Pedigree CSV")->required();
  sel->add_option("--config", config_path, "JSON config (\"model\", \"fit\", \"data\" blocks)");
  sel->add_option("--out", out_path, "AIC table CSV (default stdout)");
  sel->add_option("--threads", threads, "Worker threads (default: available cores)");

  // lrt
  auto* lr = app.add_subcommand("lrt", "Likelihood-ratio test between nested fits");
  std::string full_path, null_path;
  int df = 0;
  lr->add_option("--full", full_path, "Fit JSON of the full model")->required();
  lr->add_option("--null", null_path, "Fit JSON of the nested model")->required();
  lr->add_option("--df", df, "Degrees of freedom")->required();

  // replicate
  auto* rep = app.add_subcommand("replicate", "Simulation study: bias, ESE, ASE, ECP");
  std::size_t replicates = 100;
  rep->add_option("--config", config_path, "JSON config (\"simulation\", \"fit\" blocks)");
  rep->add_option("--replicates", replicates, "Number of replicates");
  rep->add_option("--seed", seed, "Base seed");
  rep->add_option("--tvc-model", tvc_model, "Built-in truth: pe, ed or co")->check(CLI::IsMember({"pe", "ed", "co"}));
  rep->add_option("--dependence", dependence, "Built-in truth: low, medium or high")
      ->check(CLI::IsMember({"low", "medium", "high"}));
  rep->add_option("--out", out_path, "Summary CSV (default stdout)");
  rep->add_option("--threads", threads, "Worker threads (default: available cores)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // help and version exit 0; bad flags count as config errors
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    const json cfg = config_path.empty() ? json::object() : read_json_file(config_path);
    const json data_opts = section(cfg, "data");
    auto fit_opts = [&] {
      json f = section(cfg, "fit");
      f["threads"] = threads > 0 ? threads : f.value("threads", default_threads());
      return f;
    };

    if (*sim || *rep) {
      json s = section(cfg, "simulation");
      if ((*sim && sim->count("--seed")) || (*rep && rep->count("--seed"))) s["seed"] = seed;
      if (*sim && sim->count("--n-families")) s["n_families"] = n_families;
      if (!tvc_model.empty()) s["tvc_model"] = tvc_model;
      if (!dependence.empty()) s["dependence"] = dependence;
      if (*sim) {
        json effective{{"command", "simulate"}, {"simulation", s}};
        fc_dataset* raw = nullptr;
        check(fc_simulate(s.dump().c_str(), &raw), "simulate");
        DatasetPtr ds(raw, fc_dataset_free);
        check(fc_dataset_write(ds.get(), out_path.c_str(), header_for(effective).c_str()), "writing " + out_path);
        std::cerr << "wrote " << fc_dataset_n_families(ds.get()) << " families, "
                  << fc_dataset_n_individuals(ds.get()) << " individuals to " << out_path << '\n';
        return kExitOk;
      }
      json opts{{"fit", fit_opts()}};
      json effective{{"command", "replicate"}, {"simulation", s}, {"replicate", opts}, {"replicates", replicates}};
      CString out;
      check(fc_replicate(s.dump().c_str(), replicates, opts.dump().c_str(), &out.p), "replicate");
      write_output(out_path, header_for(effective), out.str());
      return kExitOk;
    }

    if (*summ) {
      auto ds = load_data(data_path, data_opts);
      CString out;
      check(fc_dataset_summary_csv(ds.get(), &out.p), "summarize");
      json effective{{"command", "summarize"}, {"data", data_opts}, {"data_file", data_path}};
      write_output(out_path, header_for(effective), out.str());
      return kExitOk;
    }

    if (*fitc) {
      auto ds = load_data(data_path, data_opts);
      const json model = section(cfg, "model");
      const json opts = fit_opts();
      json effective{{"command", "fit"}, {"data", data_opts}, {"data_file", data_path}, {"model", model},
                     {"fit", opts}};
      fc_fit* raw = nullptr;
      const int st = fc_fit_run(ds.get(), cfg.contains("model") ? model.dump().c_str() : nullptr,
                                opts.dump().c_str(), &raw);
      FitPtr fr(raw, fc_fit_free);
      if (!fr) check(st, "fit");
      const std::string fit_error = fc_last_error();
      CString js;
      check(fc_fit_to_json(fr.get(), &js.p), "fit report");
      json report = json::parse(js.str());
      CString prov;
      check(fc_provenance(effective.dump().c_str(), &prov.p), "provenance");
      report["provenance"] = prov.str();
      report["config"] = effective;
      std::ofstream(out_path) << report.dump(2) << '\n';
      if (!table_path.empty()) {
        CString table;
        check(fc_fit_table_csv(fr.get(), &table.p), "fit table");
        write_output(table_path, header_for(effective), table.str());
      }
      if (st != FC_OK) {
        std::cerr << "frailcomp: " << fit_error << '\n';
        return exit_code_for(st);
      }
      return kExitOk;
    }

    if (*pen) {
      auto fr = load_fit(fit_path);
      json req = section(cfg, "penetrance");
      if (!req.contains("ages") || pen->count("--ages")) req["ages"] = parse_grid(ages);
      if (!events.empty()) req["events"] = events;
      if (pen->count("--ci-scale") || !req.contains("ci_scale")) req["ci_scale"] = ci_scale;
      if (!req.contains("profiles") || pen->count("--genotype") || pen->count("--tvc-age")) {
        json profile{{"genotype", genotype}, {"tvc_ages", tvc_ages}};
        profile["label"] = "G=" + std::to_string(genotype) + (tvc_ages.empty() ? ",TVC=0" : ",TVC=1");
        req["profiles"] = json::array({profile});
      }
      json effective{{"command", "penetrance"}, {"fit_file", fit_path}, {"penetrance", req}};
      CString out;
      check(fc_penetrance_csv(fr.get(), req.dump().c_str(), &out.p), "penetrance");
      write_output(out_path, header_for(effective), out.str());
      return kExitOk;
    }

    if (*hr) {
      auto fr = load_fit(fit_path);
      json req{{"event", hr_event}, {"term", hr_term}, {"years_since", parse_grid(years)}};
      json effective{{"command", "hazard-ratio"}, {"fit_file", fit_path}, {"request", req}};
      CString out;
      check(fc_hazard_ratio_csv(fr.get(), req.dump().c_str(), &out.p), "hazard ratio");
      write_output(out_path, header_for(effective), out.str());
      return kExitOk;
    }

    if (*res) {
      auto fr = load_fit(fit_path);
      auto ds = load_data(data_path, data_opts);
      json opts{{"posterior", posterior}};
      json effective{{"command", "residuals"}, {"fit_file", fit_path}, {"data_file", data_path},
                     {"data", data_opts}, {"residuals", opts}};
      CString ind, fam;
      check(fc_residuals_csv(fr.get(), ds.get(), opts.dump().c_str(), &ind.p, &fam.p), "residuals");
      const std::string header = header_for(effective);
      write_output(out_path, header, ind.str());
      write_output(family_out_path, header, fam.str());
      return kExitOk;
    }

    if (*sel) {
      auto ds = load_data(data_path, data_opts);
      const json model = section(cfg, "model");
      json opts = fit_opts();
      if (!opts.contains("compute_cov")) opts["compute_cov"] = false;
      json effective{{"command", "select"}, {"data", data_opts}, {"data_file", data_path}, {"model", model},
                     {"fit", opts}};
      CString table, best;
      check(fc_select(ds.get(), cfg.contains("model") ? model.dump().c_str() : nullptr, opts.dump().c_str(),
                      &table.p, &best.p),
            "select");
      write_output(out_path, header_for(effective) + "\n# best: " + best.str(), table.str());
      std::cerr << "best TVC model by AIC: " << best.str() << '\n';
      return kExitOk;
    }

    if (*lr) {
      auto full = load_fit(full_path);
      auto null_fit = load_fit(null_path);
      double stat = 0.0, p = 1.0;
      check(fc_lrt(full.get(), null_fit.get(), df, &stat, &p), "lrt");
      std::cout << "statistic,df,p_value\n" << stat << ',' << df << ',' << p << '\n';
      return kExitOk;
    }
  } catch (const Failure& f) {
    std::cerr << "frailcomp: " << f.message << '\n';
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "frailcomp: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}
