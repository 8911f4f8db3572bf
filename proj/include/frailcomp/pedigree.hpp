#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace frailcomp {

struct Individual {
  std::string ind_id;
  std::string fam_id;
  double time = 0.0;  // min(T*, C), age in years
  int status = 0;     // 0 censored, 1..J event code
  int genotype = 0;   // carrier indicator
  int gender = 0;     // 0 female, 1 male
  // One slot per TVC column; empty = never exposed.
  std::vector<std::optional<double>> tvc_ages;
  bool is_proband = false;
  std::optional<double> exam_age;
};

enum class ProbandKind { affected, unaffected };

struct Family {
  std::string fam_id;
  std::vector<Individual> members;
  std::size_t proband = 0;
  ProbandKind proband_kind = ProbandKind::affected;

  // Number of members whose first event is `status` (1-based event code).
  int event_count(int status) const;
  std::size_t size() const { return members.size(); }
  const Individual& proband_member() const { return members.at(proband); }
};

struct Dataset {
  std::vector<Family> families;
  std::vector<std::string> tvc_names;  // column names without the ".age" suffix
  int n_events = 2;
  std::size_t males_dropped = 0;

  std::size_t n_tvc() const { return tvc_names.size(); }
  std::size_t n_individuals() const;
};

struct LoadOptions {
  int n_events = 2;
  // A proband whose event falls after the exam age is normally rejected; with
  // this set the proband is kept and ascertained as unaffected.
  bool late_event_as_unaffected = false;
};

// Orders fam_id values numerically when both parse as integers.
bool fam_id_less(const std::string& a, const std::string& b);

Dataset load_pedigree(const std::string& path, const LoadOptions& opts = {});
Dataset read_pedigree(std::istream& in, const LoadOptions& opts = {},
                      const std::string& source = "<stream>");

// Groups rows into families, applies the proband rules and drops males.
Dataset build_dataset(std::vector<Individual> rows, std::vector<std::string> tvc_names,
                      const LoadOptions& opts);

// Canonical CSV: families in fam_id order, members in stored order, shortest
// round-trip number formatting.
void write_pedigree(std::ostream& out, const Dataset& ds);
void write_pedigree(const std::string& path, const Dataset& ds, const std::string& header_comment = {});

struct Summary {
  int n_events = 0;
  std::size_t n_families = 0;
  std::size_t n_individuals = 0;
  std::vector<std::size_t> by_status;           // index 0 = censored
  std::vector<std::size_t> probands_by_status;  // index 0 = censored
  std::vector<std::size_t> carriers_by_status;
  std::vector<std::size_t> noncarriers_by_status;
  std::vector<std::size_t> tvc_uptake;  // per TVC, individuals with a change age
  std::size_t unaffected_probands = 0;
};

Summary summarize(const Dataset& ds);
void write_summary_csv(std::ostream& out, const Summary& s, const std::vector<std::string>& tvc_names);

std::string format_number(double v);

}  // namespace frailcomp
