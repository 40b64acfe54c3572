#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <sstream>

#include "feasproj/case_data.hpp"
#include "feasproj/certify.hpp"
#include "feasproj/report.hpp"

#include <json.hpp>

using namespace feasproj;

namespace {

std::string data_path(const std::string& name) {
  return std::string(FEASPROJ_DATA_DIR) + "/" + name;
}

const char* kTwoBus = R"(
baseMVA = 100;
bus = [
  1 3 0  0  0 0 1 1 0 345 1 1.1 0.9;
  2 1 50 20 0 0 1 1 0 345 1 1.1 0.9;
];
gen = [
  1 0 0 300 -300 1 100 1 250 10 0 0 0 0 0 0 0 0 0 0 0;
];
branch = [
  1 2 0 0.1 0 250 250 250 0 0 1 -360 360;
];
gencost = [
  2 0 0 3 0.1 5 0;
];
)";

}  // namespace

TEST_CASE("bundled case9 parses with expected shape and per-unit fields") {
  CaseData cd = parse_case_file(data_path("case9.m"));
  CHECK(cd.buses.size() == 9);
  CHECK(cd.generators.size() == 3);
  CHECK(cd.branches.size() == 9);
  CHECK(cd.baseMVA == doctest::Approx(100.0).epsilon(1e-12));

  CHECK(cd.buses[4].Pd == doctest::Approx(0.90).epsilon(1e-12));
  CHECK(cd.buses[4].Qd == doctest::Approx(0.30).epsilon(1e-12));
  CHECK(cd.buses[0].type == BusType::Slack);
  CHECK(cd.buses[1].type == BusType::PV);
  CHECK(cd.buses[3].type == BusType::PQ);
  CHECK(cd.buses[0].Vmax == doctest::Approx(1.1).epsilon(1e-12));
  CHECK(cd.buses[0].Vmin == doctest::Approx(0.9).epsilon(1e-12));

  CHECK(cd.generators[1].bus == 2);
  CHECK(cd.generators[1].Pmax == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(cd.generators[1].Pmin == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(cd.generators[1].Qmax == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(cd.generators[1].Pset == doctest::Approx(1.63).epsilon(1e-12));
  CHECK(cd.generators[1].Vset == doctest::Approx(1.0).epsilon(1e-12));

  CHECK(cd.branches[1].from == 4);
  CHECK(cd.branches[1].to == 5);
  CHECK(cd.branches[1].r == doctest::Approx(0.017).epsilon(1e-12));
  CHECK(cd.branches[1].x == doctest::Approx(0.092).epsilon(1e-12));
  CHECK(cd.branches[1].b_charge == doctest::Approx(0.158).epsilon(1e-12));
  CHECK(cd.branches[1].rateA == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(cd.branches[1].tap == doctest::Approx(1.0).epsilon(1e-12));

  // cost scaling keeps the objective in cost units with Pg in p.u.
  CHECK(cd.costs[1].c2 == doctest::Approx(0.085 * 100 * 100).epsilon(1e-12));
  CHECK(cd.costs[1].c1 == doctest::Approx(1.2 * 100).epsilon(1e-12));
  CHECK(cd.costs[1].c0 == doctest::Approx(600.0).epsilon(1e-12));
}

TEST_CASE("bundled case14 parses with expected shape") {
  CaseData cd = parse_case_file(data_path("case14.m"));
  CHECK(cd.buses.size() == 14);
  CHECK(cd.generators.size() == 5);
  CHECK(cd.branches.size() == 20);
  CHECK(cd.buses[8].Bs == doctest::Approx(0.19).epsilon(1e-12));
  CHECK(cd.branches[7].tap == doctest::Approx(0.978).epsilon(1e-12));
  CHECK(cd.costs[0].c2 == doctest::Approx(0.0430292599 * 1e4).epsilon(1e-12));
  CHECK(cd.generators[0].Qmax == doctest::Approx(0.10).epsilon(1e-12));
  CHECK(cd.generators[0].Qmin == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("two-bus case text gives the expected series admittance") {
  std::istringstream in(kTwoBus);
  CaseData cd = parse_case(in, "twobus");
  REQUIRE(cd.branches.size() == 1);
  const Complex y = 1.0 / Complex(cd.branches[0].r, cd.branches[0].x);
  CHECK(y.real() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(y.imag() == doctest::Approx(-10.0).epsilon(1e-12));
}

TEST_CASE("missing gencost table is reported") {
  std::string text(kTwoBus);
  const auto pos = text.find("gencost");
  text.erase(pos - 1);  // cut the gencost block
  std::istringstream in(text);
  CHECK_THROWS_AS(parse_case(in), MissingTable);
  try {
    std::istringstream in2(text);
    parse_case(in2);
  } catch (const MissingTable& e) {
    CHECK(e.table == "gencost");
  }
}

TEST_CASE("piecewise-linear costs are rejected") {
  std::string text(kTwoBus);
  const auto pos = text.find("2 0 0 3 0.1 5 0");
  text.replace(pos, 15, "1 0 0 2 0 0 1 1");
  std::istringstream in(text);
  CHECK_THROWS_AS(parse_case(in), MalformedRow);
}

TEST_CASE("multiple slack buses are rejected") {
  std::string text(kTwoBus);
  const auto pos = text.find("2 1 50");
  text.replace(pos, 6, "2 3 50");
  std::istringstream in(text);
  CHECK_THROWS_AS(parse_case(in), MultipleSlackBuses);
}

TEST_CASE("unknown bus reference is rejected") {
  std::string text(kTwoBus);
  const auto pos = text.find("1 2 0 0.1");
  text.replace(pos, 3, "1 7");
  std::istringstream in(text);
  CHECK_THROWS_AS(parse_case(in), UnknownBusReference);
}

TEST_CASE("P_tighten(70, 70) matches the case9-P70 recipe") {
  CaseData cd = parse_case_file(data_path("case9.m"));
  CaseData p = apply_perturbation(cd, named_perturbation("P70"));
  CHECK(p.generators[0].Pmax == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(p.generators[1].Pmax == doctest::Approx(0.90).epsilon(1e-12));
  CHECK(p.generators[2].Pmax == doctest::Approx(0.81).epsilon(1e-12));
  CHECK(p.generators[0].Pmin == doctest::Approx(0.17).epsilon(1e-12));
  // original untouched
  CHECK(cd.generators[0].Pmax == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("P_tighten(0, 0) is the identity on bounds") {
  CaseData cd = parse_case_file(data_path("case9.m"));
  CaseData p = apply_perturbation(cd, {PerturbationKind::P_tighten, 0, 0});
  for (size_t i = 0; i < cd.generators.size(); ++i) {
    CHECK(p.generators[i].Pmax == cd.generators[i].Pmax);
    CHECK(p.generators[i].Pmin == cd.generators[i].Pmin);
  }
}

TEST_CASE("V_tighten(40) pulls each voltage bound in by 40% of the width") {
  CaseData cd = parse_case_file(data_path("case14.m"));
  CaseData p = apply_perturbation(cd, named_perturbation("V40"));
  // [0.94, 1.06]: width 0.12, each bound moves by 0.048
  CHECK(p.buses[0].Vmax == doctest::Approx(1.012).epsilon(1e-12));
  CHECK(p.buses[0].Vmin == doctest::Approx(0.988).epsilon(1e-12));
}

TEST_CASE("Q_tighten is magnitude-aware on negative floors") {
  CaseData cd = parse_case_file(data_path("case14.m"));
  CaseData p = apply_perturbation(cd, named_perturbation("Q80"));
  // gen 2: Qmax 0.5 -> 0.1, Qmin -0.4 -> -0.08 (both tighter)
  CHECK(p.generators[1].Qmax == doctest::Approx(0.10).epsilon(1e-12));
  CHECK(p.generators[1].Qmin == doctest::Approx(-0.08).epsilon(1e-12));
  CHECK(p.generators[0].Qmin == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("emptied boxes are reported, not clipped") {
  CaseData cd = parse_case_file(data_path("case9.m"));
  CHECK_THROWS_AS(apply_perturbation(cd, {PerturbationKind::P_tighten, 100, 100}),
                  ResultingEmptyBox);
}

TEST_CASE("custom perturbation parsing") {
  Perturbation p = named_perturbation("custom:Q,30,50");
  CHECK(p.kind == PerturbationKind::Q_tighten);
  CHECK(p.shrink_max_pct == 30);
  CHECK(p.grow_min_pct == 50);
}

TEST_CASE("report JSON structure and round-trip") {
  StageReport s1;
  s1.stage = Stage::S1;
  s1.status = "optimal_local";
  s1.slack_norm = 0.0;
  s1.objective = 0.7123456789;
  s1.slack_names = {"sP+[2]", "sV-[5]"};
  s1.slack_values = Vector::Zero(2);
  s1.slack_values[0] = 0.7123456789;
  StageReport s2 = s1;
  s2.stage = Stage::S2;
  s2.objective = 5853.84123;
  StageReport s3 = s1;
  s3.stage = Stage::S3;
  s3.objective = 5438.32987;

  AlphaCertificate cert;
  cert.alpha = 0.01;
  cert.beta = 0.1;
  cert.gamma = 0.1;
  cert.alpha0 = kAlpha0;
  cert.certified = cert.alpha <= cert.alpha0;

  std::ostringstream os;
  write_report("case9-P70", NormKind::l1, {s1, s2, s3}, &cert, os);

  auto j = nlohmann::json::parse(os.str());
  CHECK(j["instance"] == "case9-P70");
  CHECK(j["norm"] == "l1");
  REQUIRE(j["stages"].size() == 3);
  CHECK(j["stages"][0]["stage"] == 1);
  CHECK(j["stages"][1]["stage"] == 2);
  CHECK(j["stages"][2]["stage"] == 3);
  CHECK(j["stages"][0]["slack_norm"].get<double>() == doctest::Approx(0.0));
  CHECK(j["stages"][1]["objective"].get<double>() ==
        doctest::Approx(5853.84123).epsilon(1e-9));
  CHECK(j["stages"][2]["objective"].get<double>() ==
        doctest::Approx(5438.32987).epsilon(1e-9));
  CHECK(j["stages"][0]["nonzero_slacks"][0]["name"] == "sP+[2]");
  CHECK(j["certificate"]["certified"] == true);
  CHECK(j["certificate"]["alpha0"].get<double>() ==
        doctest::Approx(kAlpha0).epsilon(1e-12));
  for (const auto& s : j["stages"]) {
    CHECK(s.contains("status"));
    CHECK(s.contains("point_file"));
    CHECK(s.contains("wall_ms"));
  }
}

TEST_CASE("reportless slack queries and bad sinks are reported") {
  StageReport empty;
  CHECK_THROWS_AS(nonzero_slack_names(empty, 1e-6), PointUnavailable);
  CHECK_THROWS_AS(write_report("x", NormKind::l1, {}, nullptr, std::cout), IoFailure);
}

TEST_CASE("zero-slack stage report serializes a zero slack_norm") {
  StageReport s1;
  s1.stage = Stage::S1;
  s1.status = "optimal_local";
  s1.slack_norm = 0.0;
  std::ostringstream os;
  write_report("case9", NormKind::l1, {s1}, nullptr, os);
  auto j = nlohmann::json::parse(os.str());
  CHECK(j["stages"][0]["slack_norm"].get<double>() == 0.0);
  CHECK(!j.contains("certificate"));
}
