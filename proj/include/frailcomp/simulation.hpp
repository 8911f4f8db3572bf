#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "frailcomp/estimation.hpp"
#include "frailcomp/model.hpp"
#include "frailcomp/pedigree.hpp"
#include "frailcomp/penetrance.hpp"

namespace frailcomp {

struct SimDesign {
  std::size_t n_families = 500;
  ModelSpec spec;
  ParameterVector truth;
  double allele_freq = 0.0021;
  double proband_age_mean = 45.0;
  double proband_age_sd = 10.0;
  double generation_age_sd = 1.5;
  int gen2_min = 2, gen2_max = 5;
  int gen3_min = 0, gen3_max = 2;
  double tvc_onset_mean = 40.0;
  double tvc_onset_sd = 1.4142135623730951;  // variance 2
  double max_age = 130.0;
  std::uint64_t seed = 1;
  std::size_t max_attempts = 10'000'000;
};

enum class Dependence { low, medium, high };

// Reference truths (PE/ED/CO x low/medium/high dependence) for J = 2 with one
// TVC on event 1.
SimDesign reference_design(TvcKind kind, Dependence dep);

// Per-attempt generator keyed by (seed, attempt index).
std::mt19937_64 family_stream(std::uint64_t seed, std::uint64_t attempt);

// Explicit three-generation pedigree used for genotype conditioning.
struct PedigreeGraph {
  struct Node {
    int father = -1;
    int mother = -1;
  };
  std::vector<Node> nodes;
  int add_founder() { nodes.push_back({}); return static_cast<int>(nodes.size()) - 1; }
  int add_child(int father, int mother) { nodes.push_back({father, mother}); return static_cast<int>(nodes.size()) - 1; }
};

// P(G_i = 1 | G_p = 1) under a dominant model with Hardy-Weinberg founders,
// enumerating allele counts over the ancestors of {p, i}.
double carrier_probability(const PedigreeGraph& g, int proband, int relative, double allele_freq);

struct DrawnEvent {
  double time = 0.0;   // inf when event-free up to max_age
  int status = 0;      // 1..J, 0 when event-free
};

// Inverse-transform draw from S(t | G, tvc, Z) = exp(-sum Z_j H_j(t)) with a
// bracketed secant/bisection solve on [origin, max_age].
DrawnEvent draw_event_time(const Model& model, int genotype, TvcAges tvc_ages, std::span<const double> frailty,
                           double u_time, double u_type, double max_age);

// Frailties for one family: correlated construction, or independent
// Gamma(k_j, 1/k_j) when k0 == 0.
std::vector<double> draw_frailties(const FrailtySpec& f, std::mt19937_64& rng);

Dataset generate(const SimDesign& design);

struct ReplicateRow {
  std::string name;
  double truth = 0.0;
  double bias = 0.0;
  double ese = 0.0;
  double ase = 0.0;
  double ecp = 0.0;
  std::size_t n = 0;
};

struct ReplicateSummary {
  std::size_t requested = 0;
  std::size_t failed = 0;
  std::vector<ReplicateRow> parameters;
  std::vector<ReplicateRow> penetrance;  // percent scale, F_j(age) by TVC and carrier status
  std::vector<std::string> warnings;
  // Raw per-replicate estimates (successful fits only), parameter order.
  std::vector<std::vector<double>> estimates;
  std::vector<std::vector<double>> ses;
};

struct ReplicateOptions {
  bool vary_seed = true;
  double penetrance_age = 70.0;
  double tvc_age = 35.0;
  FitOptions fit;
};

ReplicateSummary replicate_study(const SimDesign& design, std::size_t replicates, const ReplicateOptions& opts = {});

// Bias/ESE/ASE/ECP from raw estimates; ESE is 0 with a warning when B < 2 or
// the estimates are identical.
ReplicateRow summarize_replicates(const std::string& name, double truth, const std::vector<double>& est,
                                  const std::vector<double>& se, std::vector<std::string>* warnings);

}  // namespace frailcomp
