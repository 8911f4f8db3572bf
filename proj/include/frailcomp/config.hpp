#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "frailcomp/diagnostics.hpp"
#include "frailcomp/estimation.hpp"
#include "frailcomp/penetrance.hpp"
#include "frailcomp/simulation.hpp"

namespace frailcomp {

using json = nlohmann::json;

// Model block:
// {"events": 2, "age_origin": 15,
//  "causes": [{"tvcs": [{"tvc": 0, "kind": "PE"}]}, {"tvcs": []}],
//  "frailty": {"events": [1, 2], "correlated": false},
//  "parameters": {"log_lambda_1": -4.83, ...}}          (optional)
ModelSpec model_spec_from_json(const json& j);
json model_spec_to_json(const ModelSpec& spec);

// Reads "parameters" if present (missing names are an error).
std::optional<ParameterVector> parameters_from_json(const ModelSpec& spec, const json& j);
json parameters_to_json(const ParameterVector& p);

// Simulation block: {"model": {...}, "n_families": 500, "seed": 1,
// "tvc_model": "pe", "dependence": "medium", ...}. A tvc_model/dependence
// pair selects the built-in truth; an explicit model with parameters wins.
SimDesign sim_design_from_json(const json& j);

FitOptions fit_options_from_json(const json& j);
LoadOptions load_options_from_json(const json& j);

json fit_result_to_json(const FitResult& r);
FitResult fit_result_from_json(const json& j);
void write_fit_table_csv(std::ostream& out, const FitResult& r);

// {"genotype": 1, "tvc_ages": [35.0, null], "label": "..."}
RiskProfile risk_profile_from_json(const json& j);

// "# frailcomp <version> <16-hex config hash>"
std::string provenance_line(const json& config);

}  // namespace frailcomp
