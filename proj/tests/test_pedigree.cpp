#include <doctest.h>

#include <sstream>

#include "frailcomp/error.hpp"
#include "frailcomp/pedigree.hpp"

using namespace frailcomp;

namespace {

const char* kHeader = "famID,indID,gender,proband,examAge,time,status,mgene,oc.age\n";

Dataset parse(const std::string& body, LoadOptions opts = {}) {
  std::istringstream in(std::string(kHeader) + body);
  return read_pedigree(in, opts, "test.csv");
}

std::string error_of(const std::string& body, LoadOptions opts = {}) {
  try {
    parse(body, opts);
  } catch (const DataError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("one family of three women, event counts") {
  const auto ds = parse(
      "1,1-1,0,1,50,48,1,1,35\n"
      "1,1-2,0,0,,60,0,0,\n"
      "1,1-3,0,0,,30,0,1,\n");
  REQUIRE(ds.families.size() == 1);
  const auto& f = ds.families[0];
  CHECK(f.size() == 3);
  CHECK(f.event_count(1) == 1);
  CHECK(f.event_count(2) == 0);
  CHECK(f.proband_kind == ProbandKind::affected);
  CHECK(f.proband_member().ind_id == "1-1");
  REQUIRE(f.members[0].tvc_ages.size() == 1);
  CHECK(*f.members[0].tvc_ages[0] == 35.0);
  CHECK_FALSE(f.members[1].tvc_ages[0].has_value());
  CHECK(ds.tvc_names == std::vector<std::string>{"oc"});
}

TEST_CASE("NA reads as an empty cell") {
  const auto ds = parse("1,1-1,0,1,50,48,1,1,NA\n1,1-2,0,0,NA,60,0,0,NA\n");
  CHECK_FALSE(ds.families[0].members[0].tvc_ages[0].has_value());
  CHECK_FALSE(ds.families[0].members[1].exam_age.has_value());
  CHECK(error_of("1,1-1,0,1,50,NA,1,1,\n").find("missing time") != std::string::npos);
}

TEST_CASE("status beyond the number of events is rejected") {
  const auto msg = error_of("1,1-1,0,1,50,48,3,1,\n");
  CHECK(msg.find("status out of range") != std::string::npos);
  CHECK(msg.find("line 2") != std::string::npos);
}

TEST_CASE("affected proband with event after the exam age") {
  const std::string body = "1,1-1,0,1,45,50,1,1,\n1,1-2,0,0,,60,0,0,\n";
  CHECK(error_of(body).find("after exam age") != std::string::npos);
  LoadOptions opts;
  opts.late_event_as_unaffected = true;
  const auto ds = parse(body, opts);
  CHECK(ds.families[0].proband_kind == ProbandKind::unaffected);
}

TEST_CASE("structural validation errors") {
  CHECK(error_of("1,1-1,0,1,50,48,1,1,\n1,1-1,0,0,,60,0,0,\n").find("duplicate") != std::string::npos);
  CHECK(error_of("1,1-1,0,0,,48,1,1,\n").find("exactly one proband") != std::string::npos);
  CHECK(error_of("1,1-1,0,1,50,48,1,1,\n1,1-2,0,1,50,60,0,0,\n").find("exactly one proband") != std::string::npos);
  CHECK(error_of("1,1-1,1,1,50,48,1,1,\n").find("female") != std::string::npos);
  CHECK(error_of("1,1-1,0,1,50,48,1,,\n").find("genotype") != std::string::npos);
  CHECK(error_of("1,1-1,0,1,50,48,1\n").find("expected 9 fields") != std::string::npos);
  CHECK(error_of("1,1-1,0,1,50,-2,1,1,\n").find("time must be > 0") != std::string::npos);
  CHECK(error_of("1,1-1,0,1,50,48,x,1,\n").find("status") != std::string::npos);
  CHECK(error_of("1,1-1,0,1,,48,1,1,\n").find("examAge") != std::string::npos);

  std::istringstream bad_header("famID,indID,sex,proband,examAge,time,status,mgene\n");
  CHECK_THROWS_AS(read_pedigree(bad_header), DataError);
  std::istringstream bad_tvc("famID,indID,gender,proband,examAge,time,status,mgene,oc\n");
  CHECK_THROWS_AS(read_pedigree(bad_tvc), DataError);
  CHECK_THROWS_AS(load_pedigree("/nonexistent/pedigree.csv"), DataError);
}

TEST_CASE("males are dropped") {
  const auto ds = parse(
      "1,1-1,0,1,50,48,1,1,\n"
      "1,1-2,1,0,,60,0,0,\n"
      "1,1-3,0,0,,30,2,1,\n");
  CHECK(ds.males_dropped == 1);
  CHECK(ds.families[0].size() == 2);
  CHECK(ds.families[0].event_count(2) == 1);
}

TEST_CASE("round trip through the canonical writer") {
  const auto ds = parse(
      "10,10-1,0,1,52.25,40.125,2,1,\n"
      "10,10-2,0,0,,61,0,0,33.5\n"
      "2,2-1,0,1,47,47,0,0,41\n"
      "2,2-2,0,0,,0.1,1,1,\n");
  std::ostringstream a;
  write_pedigree(a, ds);
  std::istringstream in(a.str());
  const auto back = read_pedigree(in);
  std::ostringstream b;
  write_pedigree(b, back);
  CHECK(a.str() == b.str());
  // numeric family ids sort as numbers
  CHECK(back.families[0].fam_id == "2");
  CHECK(back.families[1].fam_id == "10");
  CHECK(back.families[0].proband_kind == ProbandKind::unaffected);
}

TEST_CASE("family id ordering") {
  CHECK(fam_id_less("2", "10"));
  CHECK_FALSE(fam_id_less("10", "2"));
  CHECK(fam_id_less("a", "b"));
  CHECK_FALSE(fam_id_less("7", "7"));
}

TEST_CASE("summary tables") {
  const auto empty = summarize(Dataset{});
  CHECK(empty.n_families == 0);
  CHECK(empty.n_individuals == 0);
  for (auto v : empty.by_status) CHECK(v == 0);

  const auto censored = parse(
      "1,1-1,0,1,50,50,0,1,\n"
      "1,1-2,0,0,,60,0,0,\n"
      "1,1-3,0,0,,30,0,1,\n");
  const auto s = summarize(censored);
  CHECK(s.n_families == 1);
  CHECK(s.by_status.at(0) == 3);
  CHECK(s.by_status.at(1) == 0);
  CHECK(s.unaffected_probands == 1);

  const auto mixed = parse(
      "1,1-1,0,1,50,48,1,1,40\n"
      "1,1-2,0,0,,60,2,0,\n"
      "1,1-3,0,0,,30,0,1,25\n");
  const auto m = summarize(mixed);
  CHECK(m.by_status == std::vector<std::size_t>{1, 1, 1});
  CHECK(m.probands_by_status.at(1) == 1);
  CHECK(m.carriers_by_status.at(1) == 1);
  CHECK(m.noncarriers_by_status.at(2) == 1);
  CHECK(m.tvc_uptake.at(0) == 2);
  std::ostringstream csv;
  write_summary_csv(csv, m, mixed.tvc_names);
  CHECK(csv.str().find('\n') != std::string::npos);
}

TEST_CASE("number formatting round-trips") {
  for (double v : {0.1, 1.0 / 3.0, 45.0, 1e-7, 123456.789}) {
    CHECK(std::stod(format_number(v)) == v);
  }
  CHECK(format_number(45.0) == "45");
}
