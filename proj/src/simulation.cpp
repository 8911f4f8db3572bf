#include "frailcomp/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "frailcomp/error.hpp"

namespace frailcomp {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double total_cum_hazard(const Model& model, int genotype, TvcAges tvc, std::span<const double> z, double t) {
  double s = 0.0;
  for (std::size_t j = 0; j < model.n_events(); ++j) {
    s += z[j] * cause_cum_hazard(model.causes[j], t, genotype, tvc);
  }
  return s;
}

struct Member {
  int node = -1;
  int generation = 0;
  int gender = 0;  // 1 = male
  bool proband = false;
  int parent_member = -1;  // gen3: index of the gen2 parent
  double age = 0.0;
};

}  // namespace

SimDesign reference_design(TvcKind kind, Dependence dep) {
  SimDesign d;
  d.spec = default_spec(2, kind, true);
  const double log_k1 = dep == Dependence::low ? std::log(7.0) : dep == Dependence::medium ? std::log(3.5) : 0.0;
  std::vector<double> v;
  switch (kind) {
    case TvcKind::PE:
      v = {-4.83, 0.88, 1.95, 0.67, -4.96, 1.12, 1.19, log_k1, 1.06};
      break;
    case TvcKind::ED:
      v = {-4.83, 0.83, 1.86, 1.87, -1.28, -4.96, 1.08, 1.22, log_k1, 1.18};
      break;
    case TvcKind::CO:
      v = {-4.83, 0.83, 2.08, 1.52, -0.18, 0.21, -4.96, 1.07, 1.57, log_k1, 1.26};
      break;
  }
  d.truth = make_parameters(d.spec, std::move(v));
  return d;
}

std::mt19937_64 family_stream(std::uint64_t seed, std::uint64_t attempt) {
  const std::uint64_t key = splitmix64(splitmix64(seed) ^ splitmix64(attempt + 0x632BE59BD9B4E019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32),
                    static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(attempt)};
  return std::mt19937_64(seq);
}

double carrier_probability(const PedigreeGraph& g, int proband, int relative, double allele_freq) {
  const int n = static_cast<int>(g.nodes.size());
  if (proband < 0 || proband >= n || relative < 0 || relative >= n) throw ConfigError("pedigree node out of range");
  if (!(allele_freq > 0.0 && allele_freq < 1.0)) throw ConfigError("allele frequency must be in (0, 1)");
  if (proband == relative) return 1.0;

  std::set<int> keep;
  std::vector<int> stack{proband, relative};
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    if (!keep.insert(v).second) continue;
    const auto& nd = g.nodes[v];
    if ((nd.father < 0) != (nd.mother < 0)) throw ConfigError("pedigree node has exactly one parent");
    if (nd.father >= 0) {
      stack.push_back(nd.father);
      stack.push_back(nd.mother);
    }
  }
  const std::vector<int> nodes(keep.begin(), keep.end());  // parents precede children
  std::vector<int> pos(n, -1);
  for (std::size_t i = 0; i < nodes.size(); ++i) pos[nodes[i]] = static_cast<int>(i);

  const double q = allele_freq;
  const double founder[3] = {(1 - q) * (1 - q), 2 * q * (1 - q), q * q};
  std::vector<int> count(nodes.size(), 0);
  double joint = 0.0, marginal = 0.0;
  // recursive enumeration of allele counts in topological order
  auto rec = [&](auto&& self, std::size_t i, double prob) -> void {
    if (prob == 0.0) return;
    if (i == nodes.size()) {
      if (count[pos[proband]] > 0) {
        marginal += prob;
        if (count[pos[relative]] > 0) joint += prob;
      }
      return;
    }
    const auto& nd = g.nodes[nodes[i]];
    for (int c = 0; c <= 2; ++c) {
      double p;
      if (nd.father < 0) {
        p = founder[c];
      } else {
        const double tf = count[pos[nd.father]] / 2.0;
        const double tm = count[pos[nd.mother]] / 2.0;
        p = c == 0 ? (1 - tf) * (1 - tm) : c == 1 ? tf * (1 - tm) + (1 - tf) * tm : tf * tm;
      }
      count[i] = c;
      self(self, i + 1, prob * p);
    }
    count[i] = 0;
  };
  rec(rec, 0, 1.0);
  return joint / marginal;
}

DrawnEvent draw_event_time(const Model& model, int genotype, TvcAges tvc_ages, std::span<const double> frailty,
                           double u_time, double u_type, double max_age) {
  if (!(u_time > 0.0 && u_time < 1.0)) throw ConfigError("survival draw must be in (0, 1)");
  const double target = -std::log(u_time);
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& c : model.causes) lo = std::min(lo, c.baseline.origin);
  double hi = max_age;
  if (hi <= lo || total_cum_hazard(model, genotype, tvc_ages, frailty, hi) < target) {
    return {std::numeric_limits<double>::infinity(), 0};
  }
  // Illinois regula falsi on g(t) = sum_j Z_j H_j(t) - target, with bisection
  // whenever the secant step stalls.
  double g_lo = -target;
  double g_hi = total_cum_hazard(model, genotype, tvc_ages, frailty, hi) - target;
  double t = hi;
  int side = 0;
  for (int it = 0; it < 200; ++it) {
    double cand = (g_hi - g_lo) != 0.0 ? hi - g_hi * (hi - lo) / (g_hi - g_lo) : 0.5 * (lo + hi);
    if (!(cand > lo && cand < hi) || it % 4 == 3) cand = 0.5 * (lo + hi);
    t = cand;
    const double gt = total_cum_hazard(model, genotype, tvc_ages, frailty, t) - target;
    // |S(t) - w| = w |exp(-g) - 1|
    if (u_time * std::abs(std::expm1(-gt)) < 1e-12 || hi - lo < 1e-12) break;
    if (gt < 0.0) {
      lo = t;
      g_lo = gt;
      if (side == -1) g_hi *= 0.5;
      side = -1;
    } else {
      hi = t;
      g_hi = gt;
      if (side == 1) g_lo *= 0.5;
      side = 1;
    }
    if (it == 199) throw NumericError("event-time root solve did not converge");
  }
  std::vector<double> rate(model.n_events());
  double total = 0.0;
  for (std::size_t j = 0; j < rate.size(); ++j) {
    rate[j] = frailty[j] * cause_hazard(model.causes[j], t, genotype, tvc_ages);
    total += rate[j];
  }
  if (!(total > 0.0)) throw NumericError("all cause-specific hazards vanish at the drawn event time");
  double acc = 0.0;
  int status = static_cast<int>(rate.size());
  for (std::size_t j = 0; j < rate.size(); ++j) {
    acc += rate[j] / total;
    if (u_type < acc) {
      status = static_cast<int>(j + 1);
      break;
    }
  }
  return {t, status};
}

std::vector<double> draw_frailties(const FrailtySpec& f, std::mt19937_64& rng) {
  std::vector<double> z(f.n_events(), 1.0);
  double y0 = 0.0;
  if (f.k0 > 0.0) y0 = std::gamma_distribution<double>(f.k0, 1.0 / f.k0)(rng);
  for (std::size_t j = 0; j < z.size(); ++j) {
    if (!f.in_set[j]) continue;
    const double yj = std::gamma_distribution<double>(f.k[j], 1.0 / f.omega(j))(rng);
    z[j] = f.k0 > 0.0 ? f.omega0() / f.omega(j) * y0 + yj : yj;
  }
  return z;
}

Dataset generate(const SimDesign& design) {
  if (design.n_families == 0) throw ConfigError("n_families must be > 0");
  if (!(design.allele_freq > 0.0 && design.allele_freq < 1.0)) throw ConfigError("allele_freq must be in (0, 1)");
  if (design.gen2_min < 1 || design.gen2_max < design.gen2_min || design.gen3_min < 0 ||
      design.gen3_max < design.gen3_min) {
    throw ConfigError("invalid sibling-count bounds");
  }
  design.spec.validate();
  const Model model = decode(design.spec, design.truth.values);
  model.frailty.validate();
  const std::size_t n_tvc = design.spec.n_tvc_columns();

  std::vector<Individual> rows;
  std::map<int, double> relation_prob;
  std::size_t kept = 0;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto open_unif = [&](std::mt19937_64& rng) {
    double u;
    do u = unif(rng);
    while (u <= 0.0);
    return u;
  };
  for (std::uint64_t attempt = 0; kept < design.n_families; ++attempt) {
    if (attempt >= design.max_attempts) {
      throw NumericError("retained only " + std::to_string(kept) + " families after " +
                         std::to_string(design.max_attempts) + " attempts");
    }
    auto rng = family_stream(design.seed, attempt);

    // structure
    PedigreeGraph g;
    std::vector<Member> mem;
    const int grandfather = g.add_founder();
    const int grandmother = g.add_founder();
    mem.push_back({grandfather, 1, 1});
    mem.push_back({grandmother, 1, 0});
    const int n2 = std::uniform_int_distribution<int>(design.gen2_min, design.gen2_max)(rng);
    const int proband_pos = std::uniform_int_distribution<int>(0, n2 - 1)(rng);
    std::vector<int> gen2;
    for (int i = 0; i < n2; ++i) {
      Member m;
      m.node = g.add_child(grandfather, grandmother);
      m.generation = 2;
      m.proband = i == proband_pos;
      const int coin = std::bernoulli_distribution(0.5)(rng) ? 1 : 0;
      m.gender = m.proband ? 0 : coin;
      gen2.push_back(static_cast<int>(mem.size()));
      mem.push_back(m);
    }
    for (int idx : gen2) {
      const int n3 = std::uniform_int_distribution<int>(design.gen3_min, design.gen3_max)(rng);
      if (n3 == 0) continue;
      const int spouse = g.add_founder();
      for (int c = 0; c < n3; ++c) {
        Member m;
        const bool male_parent = mem[idx].gender == 1;
        m.node = male_parent ? g.add_child(mem[idx].node, spouse) : g.add_child(spouse, mem[idx].node);
        m.generation = 3;
        m.gender = std::bernoulli_distribution(0.5)(rng) ? 1 : 0;
        m.parent_member = idx;
        mem.push_back(m);
      }
    }

    // ages
    const double ap = std::normal_distribution<double>(design.proband_age_mean, design.proband_age_sd)(rng);
    for (auto& m : mem) {
      if (m.proband) {
        m.age = ap;
      } else if (m.generation == 1) {
        m.age = std::normal_distribution<double>(ap + 20.0, design.generation_age_sd)(rng);
      } else if (m.generation == 2) {
        m.age = std::normal_distribution<double>(ap, design.generation_age_sd)(rng);
      }
    }
    for (auto& m : mem) {
      if (m.generation == 3) {
        m.age = std::normal_distribution<double>(mem[m.parent_member].age - 20.0, design.generation_age_sd)(rng);
      }
    }

    // TVC onset, frailties, genotypes, uniforms for event draws
    std::vector<std::vector<std::optional<double>>> onset(mem.size(), std::vector<std::optional<double>>(n_tvc));
    for (std::size_t i = 0; i < mem.size(); ++i) {
      for (std::size_t c = 0; c < n_tvc; ++c) {
        const double ts = std::normal_distribution<double>(design.tvc_onset_mean, design.tvc_onset_sd)(rng);
        if (ts <= mem[i].age && ts > 0.0) onset[i][c] = ts;
      }
    }
    const auto z = draw_frailties(model.frailty, rng);
    const int proband_node = mem[2 + proband_pos].node;
    std::vector<int> geno(mem.size(), 0);
    for (std::size_t i = 0; i < mem.size(); ++i) {
      if (mem[i].proband) {
        geno[i] = 1;
        continue;
      }
      // the probability depends only on the relationship class
      const int cls = mem[i].generation == 3 ? (mem[i].parent_member == static_cast<int>(2 + proband_pos) ? 3 : 4)
                                             : mem[i].generation;
      auto it = relation_prob.find(cls);
      if (it == relation_prob.end()) {
        it = relation_prob.emplace(cls, carrier_probability(g, proband_node, mem[i].node, design.allele_freq)).first;
      }
      const double pc = it->second;
      geno[i] = unif(rng) < pc ? 1 : 0;
    }
    std::vector<double> u_time(mem.size()), u_type(mem.size());
    for (std::size_t i = 0; i < mem.size(); ++i) {
      u_time[i] = open_unif(rng);
      u_type[i] = unif(rng);
    }

    // proband first: reject early unless affected before the exam age
    const std::size_t pi = 2 + static_cast<std::size_t>(proband_pos);
    auto draw = [&](std::size_t i) {
      const double limit = std::min(mem[i].age, design.max_age);
      try {
        return draw_event_time(model, geno[i], onset[i], z, u_time[i], u_type[i], limit);
      } catch (const NumericError& e) {
        throw NumericError("attempt " + std::to_string(attempt) + ", member " + std::to_string(i + 1) + ": " +
                           e.what());
      }
    };
    const DrawnEvent pe = draw(pi);
    if (!(pe.status > 0 && pe.time < ap)) continue;

    ++kept;
    const std::string fam_id = std::to_string(kept);
    for (std::size_t i = 0; i < mem.size(); ++i) {
      if (mem[i].age <= 0.0) continue;  // not yet born
      const DrawnEvent ev = i == pi ? pe : (mem[i].gender == 1 ? DrawnEvent{} : draw(i));
      Individual ind;
      ind.fam_id = fam_id;
      ind.ind_id = fam_id + "-" + std::to_string(i + 1);
      ind.gender = mem[i].gender;
      ind.genotype = geno[i];
      ind.is_proband = mem[i].proband;
      if (ind.is_proband) ind.exam_age = ap;
      if (ev.status > 0) {
        ind.time = ev.time;
        ind.status = ev.status;
      } else {
        ind.time = mem[i].age;
        ind.status = 0;
      }
      ind.tvc_ages.resize(n_tvc);
      for (std::size_t c = 0; c < n_tvc; ++c) {
        if (onset[i][c]) ind.tvc_ages[c] = onset[i][c];
      }
      rows.push_back(std::move(ind));
    }
  }
  std::vector<std::string> names;
  for (std::size_t c = 0; c < n_tvc; ++c) names.push_back(n_tvc == 1 ? "tvc" : "tvc" + std::to_string(c + 1));
  LoadOptions lo;
  lo.n_events = static_cast<int>(design.spec.n_events());
  return build_dataset(std::move(rows), std::move(names), lo);
}

ReplicateRow summarize_replicates(const std::string& name, double truth, const std::vector<double>& est,
                                  const std::vector<double>& se, std::vector<std::string>* warnings) {
  ReplicateRow r;
  r.name = name;
  r.truth = truth;
  r.n = est.size();
  if (est.empty()) {
    if (warnings) warnings->push_back(name + ": no successful replicates");
    return r;
  }
  const double n = static_cast<double>(est.size());
  const double mean = std::accumulate(est.begin(), est.end(), 0.0) / n;
  r.bias = mean - truth;
  double ss = 0.0;
  for (double e : est) ss += (e - mean) * (e - mean);
  r.ese = est.size() >= 2 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  if (r.ese == 0.0 && warnings) warnings->push_back(name + ": empirical SE undefined or zero, reported as 0");
  double covered = 0.0, se_sum = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    se_sum += se[i];
    if (std::abs(est[i] - truth) <= 1.959963984540054 * se[i]) covered += 1.0;
  }
  r.ase = se_sum / n;
  r.ecp = covered / n;
  return r;
}

ReplicateSummary replicate_study(const SimDesign& design, std::size_t replicates, const ReplicateOptions& opts) {
  if (replicates < 2) throw ConfigError("replicate study needs at least 2 replicates");
  ReplicateSummary out;
  out.requested = replicates;
  const auto names = parameter_names(design.spec);
  const std::size_t n_tvc = design.spec.n_tvc_columns();

  struct Target {
    std::string name;
    std::size_t event;
    RiskProfile profile;
  };
  std::vector<Target> targets;
  for (std::size_t j = 0; j < design.spec.n_events(); ++j) {
    for (int gene : {0, 1}) {
      for (int tvc : {0, 1}) {
        if (tvc == 1 && n_tvc == 0) continue;
        RiskProfile p;
        p.genotype = gene;
        p.tvc_ages.assign(n_tvc, tvc ? std::optional<double>(opts.tvc_age) : std::nullopt);
        const std::string age = std::to_string(static_cast<int>(std::lround(opts.penetrance_age)));
        p.label = "F" + std::to_string(j + 1) + "(" + age + ";TVC=" + std::to_string(tvc) +
                  ",G=" + std::to_string(gene) + ")";
        targets.push_back({p.label, j, p});
      }
    }
  }
  const Model truth_model = decode(design.spec, design.truth.values);
  std::vector<double> pen_truth;
  for (const auto& t : targets) {
    pen_truth.push_back(100.0 * penetrance(truth_model, t.profile, t.event, opts.penetrance_age));
  }
  std::vector<std::vector<double>> pen_est(targets.size()), pen_se(targets.size());
  std::map<std::string, std::size_t> bound_counts;

  for (std::size_t b = 0; b < replicates; ++b) {
    SimDesign d = design;
    if (opts.vary_seed) d.seed = splitmix64(design.seed * 1000003ULL + b);
    FitResult fr;
    try {
      const Dataset ds = generate(d);
      fr = fit(ds, d.spec, std::nullopt, opts.fit);
    } catch (const Error& e) {
      ++out.failed;
      out.warnings.push_back("replicate " + std::to_string(b + 1) + ": " + e.what());
      continue;
    }
    if (!fr.convergence.converged || !fr.cov_ok) {
      ++out.failed;
      out.warnings.push_back("replicate " + std::to_string(b + 1) + ": " +
                             (fr.convergence.converged ? fr.cov_message : fr.convergence.message));
      continue;
    }
    for (const auto& name : fr.at_bound) ++bound_counts[name];
    out.estimates.push_back(fr.theta.values);
    out.ses.push_back(fr.standard_errors());
    const double ages[] = {opts.penetrance_age};
    for (std::size_t k = 0; k < targets.size(); ++k) {
      CurveOptions co;
      co.events = {targets[k].event};
      const auto curve = penetrance_curve(d.spec, fr.theta.values, fr.cov, targets[k].profile, ages, co);
      pen_est[k].push_back(100.0 * curve.points[0].estimate);
      pen_se[k].push_back(100.0 * curve.points[0].se);
    }
  }
  for (const auto& [name, count] : bound_counts) {
    out.warnings.push_back(name + " finished on its bound in " + std::to_string(count) + " of " +
                           std::to_string(out.estimates.size()) + " fits (held fixed, se 0)");
  }
  for (std::size_t i = 0; i < names.size(); ++i) {
    std::vector<double> est, se;
    for (std::size_t b = 0; b < out.estimates.size(); ++b) {
      est.push_back(out.estimates[b][i]);
      se.push_back(out.ses[b][i]);
    }
    out.parameters.push_back(summarize_replicates(names[i], design.truth.values[i], est, se, &out.warnings));
  }
  for (std::size_t k = 0; k < targets.size(); ++k) {
    out.penetrance.push_back(summarize_replicates(targets[k].name, pen_truth[k], pen_est[k], pen_se[k], &out.warnings));
  }
  return out;
}

}  // namespace frailcomp
