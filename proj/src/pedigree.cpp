#include "frailcomp/pedigree.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "frailcomp/error.hpp"

namespace frailcomp {

namespace {

const std::vector<std::string> kFixedColumns = {"famID", "indID", "gender", "proband",
                                                "examAge", "time", "status", "mgene"};

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

struct RowContext {
  const std::string& source;
  std::size_t line;
  const std::vector<std::string>& header;

  [[noreturn]] void fail(std::size_t col, const std::string& what) const {
    std::ostringstream os;
    os << source << ": line " << line << ", column " << (col + 1);
    if (col < header.size()) os << " (" << header[col] << ")";
    os << ": " << what;
    throw DataError(os.str());
  }

  double number(const std::string& field, std::size_t col) const {
    double v = 0.0;
    const char* b = field.data();
    const char* e = b + field.size();
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e || !std::isfinite(v)) fail(col, "malformed number '" + field + "'");
    return v;
  }

  int integer(const std::string& field, std::size_t col) const {
    int v = 0;
    const char* b = field.data();
    const char* e = b + field.size();
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e) fail(col, "malformed integer '" + field + "'");
    return v;
  }

  int flag(const std::string& field, std::size_t col) const {
    if (field.empty()) fail(col, "missing value");
    int v = integer(field, col);
    if (v != 0 && v != 1) fail(col, "expected 0 or 1, got '" + field + "'");
    return v;
  }
};

std::optional<long long> as_integer(const std::string& s) {
  if (s.empty()) return std::nullopt;
  long long v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace

int Family::event_count(int status) const {
  return static_cast<int>(std::count_if(members.begin(), members.end(),
                                        [status](const Individual& m) { return m.status == status; }));
}

std::size_t Dataset::n_individuals() const {
  std::size_t n = 0;
  for (const auto& f : families) n += f.members.size();
  return n;
}

bool fam_id_less(const std::string& a, const std::string& b) {
  auto ia = as_integer(a);
  auto ib = as_integer(b);
  if (ia && ib) return *ia != *ib ? *ia < *ib : a < b;
  if (ia.has_value() != ib.has_value()) return ia.has_value();  // numeric ids first
  return a < b;
}

std::string format_number(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, p);
}

Dataset load_pedigree(const std::string& path, const LoadOptions& opts) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open pedigree file '" + path + "'");
  return read_pedigree(in, opts, path);
}

Dataset read_pedigree(std::istream& in, const LoadOptions& opts, const std::string& source) {
  if (opts.n_events < 1) throw ConfigError("number of events must be >= 1");
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    header = split_csv(line);
    for (auto& h : header) h = trim(h);
    break;
  }
  if (header.empty()) throw DataError(source + ": missing header");
  for (std::size_t c = 0; c < kFixedColumns.size(); ++c) {
    if (c >= header.size() || header[c] != kFixedColumns[c]) {
      throw DataError(source + ": header column " + std::to_string(c + 1) + " must be '" + kFixedColumns[c] + "'");
    }
  }
  std::vector<std::string> tvc_names;
  for (std::size_t c = kFixedColumns.size(); c < header.size(); ++c) {
    const auto& h = header[c];
    if (h.size() <= 4 || h.substr(h.size() - 4) != ".age") {
      throw DataError(source + ": TVC column '" + h + "' must end in '.age'");
    }
    tvc_names.push_back(h.substr(0, h.size() - 4));
  }

  std::vector<Individual> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#' || trim(line).empty()) continue;
    auto fields = split_csv(line);
    RowContext ctx{source, line_no, header};
    if (fields.size() != header.size()) {
      ctx.fail(std::min(fields.size(), header.size()),
               "expected " + std::to_string(header.size()) + " fields, found " + std::to_string(fields.size()));
    }
    for (auto& f : fields) {
      f = trim(f);
      if (f == "NA") f.clear();
    }
    Individual ind;
    ind.fam_id = fields[0];
    ind.ind_id = fields[1];
    if (ind.fam_id.empty()) ctx.fail(0, "missing family id");
    if (ind.ind_id.empty()) ctx.fail(1, "missing individual id");
    ind.gender = ctx.flag(fields[2], 2);
    ind.is_proband = ctx.flag(fields[3], 3) == 1;
    if (!fields[4].empty()) {
      if (!ind.is_proband) ctx.fail(4, "examAge given for a non-proband");
      ind.exam_age = ctx.number(fields[4], 4);
      if (*ind.exam_age <= 0.0) ctx.fail(4, "exam age must be > 0");
    } else if (ind.is_proband) {
      ctx.fail(4, "proband requires examAge");
    }
    if (fields[5].empty()) ctx.fail(5, "missing time");
    ind.time = ctx.number(fields[5], 5);
    if (ind.time <= 0.0) ctx.fail(5, "time must be > 0");
    if (fields[6].empty()) ctx.fail(6, "missing status");
    ind.status = ctx.integer(fields[6], 6);
    if (ind.status < 0 || ind.status > opts.n_events) ctx.fail(6, "status out of range");
    if (fields[7].empty()) ctx.fail(7, "missing genotype (genotype must be observed)");
    ind.genotype = ctx.flag(fields[7], 7);
    ind.tvc_ages.resize(tvc_names.size());
    for (std::size_t k = 0; k < tvc_names.size(); ++k) {
      const auto& f = fields[kFixedColumns.size() + k];
      if (f.empty()) continue;
      double a = ctx.number(f, kFixedColumns.size() + k);
      if (a <= 0.0) ctx.fail(kFixedColumns.size() + k, "TVC change age must be > 0");
      ind.tvc_ages[k] = a;
    }
    rows.push_back(std::move(ind));
  }
  return build_dataset(std::move(rows), std::move(tvc_names), opts);
}

Dataset build_dataset(std::vector<Individual> rows, std::vector<std::string> tvc_names, const LoadOptions& opts) {
  Dataset ds;
  ds.n_events = opts.n_events;
  ds.tvc_names = std::move(tvc_names);

  std::map<std::string, std::vector<Individual>, decltype(&fam_id_less)> grouped(&fam_id_less);
  for (auto& r : rows) {
    if (r.tvc_ages.size() != ds.tvc_names.size()) {
      throw DataError("individual " + r.ind_id + " has " + std::to_string(r.tvc_ages.size()) + " TVC slots, expected " +
                      std::to_string(ds.tvc_names.size()));
    }
    if (r.status < 0 || r.status > ds.n_events) {
      throw DataError("family " + r.fam_id + ", individual " + r.ind_id + ": status out of range");
    }
    grouped[r.fam_id].push_back(std::move(r));
  }

  for (auto& [fam_id, members] : grouped) {
    std::set<std::string> seen;
    std::size_t n_probands = 0;
    for (const auto& m : members) {
      if (!seen.insert(m.ind_id).second) {
        throw DataError("family " + fam_id + ": duplicate individual id '" + m.ind_id + "'");
      }
      if (m.is_proband) ++n_probands;
    }
    if (n_probands != 1) {
      throw DataError("family " + fam_id + ": expected exactly one proband, found " + std::to_string(n_probands));
    }
    Family fam;
    fam.fam_id = fam_id;
    for (auto& m : members) {
      if (m.gender == 1) {
        if (m.is_proband) throw DataError("family " + fam_id + ": proband must be female");
        ++ds.males_dropped;
        continue;
      }
      if (m.is_proband) fam.proband = fam.members.size();
      fam.members.push_back(std::move(m));
    }
    const auto& p = fam.members[fam.proband];
    if (!p.exam_age) throw DataError("family " + fam_id + ": proband has no exam age");
    if (p.status != 0) {
      if (p.time <= *p.exam_age) {
        fam.proband_kind = ProbandKind::affected;
      } else if (opts.late_event_as_unaffected) {
        fam.proband_kind = ProbandKind::unaffected;
      } else {
        throw DataError("family " + fam_id + ": affected proband has event time " + format_number(p.time) +
                        " after exam age " + format_number(*p.exam_age));
      }
    } else {
      fam.proband_kind = ProbandKind::unaffected;
    }
    ds.families.push_back(std::move(fam));
  }
  return ds;
}

void write_pedigree(std::ostream& out, const Dataset& ds) {
  out << "famID,indID,gender,proband,examAge,time,status,mgene";
  for (const auto& n : ds.tvc_names) out << ',' << n << ".age";
  out << '\n';
  std::vector<const Family*> order;
  for (const auto& f : ds.families) order.push_back(&f);
  std::stable_sort(order.begin(), order.end(),
                   [](const Family* a, const Family* b) { return fam_id_less(a->fam_id, b->fam_id); });
  for (const Family* f : order) {
    for (const auto& m : f->members) {
      out << f->fam_id << ',' << m.ind_id << ',' << m.gender << ',' << (m.is_proband ? 1 : 0) << ',';
      if (m.exam_age) out << format_number(*m.exam_age);
      out << ',' << format_number(m.time) << ',' << m.status << ',' << m.genotype;
      for (const auto& a : m.tvc_ages) {
        out << ',';
        if (a) out << format_number(*a);
      }
      out << '\n';
    }
  }
}

void write_pedigree(const std::string& path, const Dataset& ds, const std::string& header_comment) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write pedigree file '" + path + "'");
  if (!header_comment.empty()) out << header_comment << '\n';
  write_pedigree(out, ds);
}

Summary summarize(const Dataset& ds) {
  Summary s;
  s.n_events = ds.n_events;
  const auto n = static_cast<std::size_t>(ds.n_events + 1);
  s.by_status.assign(n, 0);
  s.probands_by_status.assign(n, 0);
  s.carriers_by_status.assign(n, 0);
  s.noncarriers_by_status.assign(n, 0);
  s.tvc_uptake.assign(ds.n_tvc(), 0);
  s.n_families = ds.families.size();
  for (const auto& f : ds.families) {
    for (const auto& m : f.members) {
      const auto st = static_cast<std::size_t>(m.status);
      ++s.n_individuals;
      ++s.by_status[st];
      if (m.is_proband) ++s.probands_by_status[st];
      (m.genotype == 1 ? s.carriers_by_status : s.noncarriers_by_status)[st]++;
      for (std::size_t k = 0; k < m.tvc_ages.size(); ++k) {
        if (m.tvc_ages[k]) ++s.tvc_uptake[k];
      }
    }
    if (f.proband_kind == ProbandKind::unaffected) ++s.unaffected_probands;
  }
  return s;
}

void write_summary_csv(std::ostream& out, const Summary& s, const std::vector<std::string>& tvc_names) {
  out << "row";
  for (int j = 1; j <= s.n_events; ++j) out << ",event" << j;
  out << ",censored,total\n";
  auto emit = [&](const char* name, const std::vector<std::size_t>& v) {
    out << name;
    std::size_t total = 0;
    for (std::size_t j = 1; j < v.size(); ++j) {
      out << ',' << v[j];
      total += v[j];
    }
    out << ',' << v[0] << ',' << total + v[0] << '\n';
  };
  emit("all", s.by_status);
  emit("probands", s.probands_by_status);
  emit("carriers", s.carriers_by_status);
  emit("noncarriers", s.noncarriers_by_status);
  for (std::size_t k = 0; k < s.tvc_uptake.size(); ++k) {
    const std::string name = k < tvc_names.size() ? tvc_names[k] : "tvc" + std::to_string(k + 1);
    out << "uptake_" << name;
    for (int j = 1; j <= s.n_events; ++j) out << ',';
    out << ",," << s.tvc_uptake[k] << '\n';
  }
  out << "families";
  for (int j = 1; j <= s.n_events; ++j) out << ',';
  out << ",," << s.n_families << '\n';
}

}  // namespace frailcomp
