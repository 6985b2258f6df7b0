#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "malab/experiments.hpp"
#include "malab/io.hpp"

using namespace malab;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig tinyConfig() {
  return ExperimentConfig::fromString(
      "potential.family = quadratic\n"
      "grid.cells = 96\n"
      "grid.half = 1.6\n"
      "experiment.t0 = 0.25\n"
      "seed = 7\n");
}

}  // namespace

TEST_CASE("config parsing and validation") {
  auto cfg = ExperimentConfig::fromString(
      "# comment\n"
      "potential.family = quadratic\n"
      "grid.cells = 64\n"
      "constants.p = 4.5\n");
  CHECK(cfg.require("potential.family") == "quadratic");
  CHECK(cfg.getInt("grid.cells", 0) == 64);
  CHECK(cfg.getDouble("constants.p") == doctest::Approx(4.5));
  CHECK(cfg.getDouble("constants.absent", 1.25) == doctest::Approx(1.25));
  cfg.validate();

  // missing required field names the key
  auto bad = ExperimentConfig::fromString("grid.cells = 64\n");
  try {
    bad.validate();
    CHECK(false);
  } catch (const LabError& e) {
    CHECK(e.kind() == "ConfigError");
    CHECK(std::string(e.what()).find("potential.family") != std::string::npos);
  }

  CHECK_THROWS_AS(ExperimentConfig::fromString("nonsense.key = 1\n"), LabError);
  CHECK_THROWS_AS(ExperimentConfig::fromString("grid.cells == 1\n"), LabError);
  auto nan = ExperimentConfig::fromString("grid.cells = twelve\n");
  CHECK_THROWS_AS(nan.getDouble("grid.cells"), LabError);
}

TEST_CASE("solution families are nonnegative exact solutions") {
  auto u = std::make_shared<QuadraticPotential>(QuadraticPotential::round(2));
  Grid g = Grid::centered(2, 1.6, 96);
  SectionSet sec = sectionScan(*u, g, Vec::zero(2), 0.25);
  auto P = ProblemInstance::plain(u, g, sec);
  std::mt19937_64 rng(11);

  for (std::string fam : {"affine", "radial", "bump-sum", "composed"}) {
    SolutionSample s = makeSample(P, fam, rng);
    double vmin = 1e300;
    sec.cells.forEach([&](std::int64_t id) {
      vmin = std::min(vmin, s.v.value(g.center(id)));
    });
    CHECK(vmin >= 0.0);
    // derived f agrees with the operator applied to v at a probe point
    Vec x(0.1, -0.2);
    double op = traceProduct(P.A(x), s.v.hess(x)) + P.b(x).dot(s.v.grad(x)) +
                P.c(x) * s.v.value(x);
    CHECK(s.f(x) == doctest::Approx(op));
  }
  CHECK_THROWS_AS(makeSample(P, "unknown", rng), LabError);
}

TEST_CASE("harmonic-type and constant-solution right sides") {
  auto u = std::make_shared<QuadraticPotential>(QuadraticPotential::round(2));
  Grid g = Grid::centered(2, 1.6, 96);
  SectionSet sec = sectionScan(*u, g, Vec::zero(2), 0.25);
  auto P = ProblemInstance::plain(u, g, sec);

  // v = 2 + x1 with A = I, b = c = 0: f vanishes identically
  SmoothField v = {[](const Vec& x) { return 2.0 + x[0]; },
                   [](const Vec& x) { Vec s(x.n); s[0] = 1; return s; },
                   [](const Vec& x) { return SymMat(x.n); }};
  ScalarField f = deriveRhs(P, v);
  CHECK(f(Vec(0.3, 0.1)) == doctest::Approx(0.0));

  // v constant kappa with a zero-order field: f = c kappa exactly
  P.c = [](const Vec& x) { return 0.7 + x[1]; };
  double kappa = 3.25;
  ScalarField f2 = deriveRhs(P, constantField(2, kappa));
  Vec x(0.2, -0.3);
  CHECK(f2(x) == doctest::Approx(P.c(x) * kappa));
}

TEST_CASE("composed family trace identity") {
  auto u = QuadraticPotential::eccentric(2, 4.0);
  std::vector<Vec> pts = {Vec(0.1, 0.2), Vec(-0.3, 0.05), Vec(0.4, -0.4)};
  CHECK(composedTraceMismatch(u, 1.3, 0.4, pts) < 1e-10);
}

TEST_CASE("critical density run: constant above the threshold") {
  auto u = std::make_shared<QuadraticPotential>(QuadraticPotential::round(2));
  Grid g = Grid::centered(2, 1.6, 96);
  auto P = ProblemInstance::plain(u, g, sectionScan(*u, g, Vec::zero(2), 1.0));
  CriticalDensityParams prm;
  prm.t0 = 0.25;
  prm.M = 4.0;

  auto rep = criticalDensityRun(P, constantField(2, 17.0), P.f, 0, prm);
  CHECK(rep.status == RunStatus::ok);
  CHECK(rep.hypothesis);
  CHECK(rep.conclusion);

  // a deep dip on more than delta of the section gates the run
  SmoothField dip = {[](const Vec& x) { return x.norm2() < 0.15 ? 0.5 : 17.0; },
                     [](const Vec& x) { return Vec::zero(x.n); },
                     [](const Vec& x) { return SymMat(x.n); }};
  auto rep2 = criticalDensityRun(P, dip, P.f, 0, prm);
  CHECK(rep2.status == RunStatus::not_applicable);

  // an oversized zero-order budget also gates
  auto Pc = P;
  Pc.c = [](const Vec&) { return -50.0; };
  auto rep3 = criticalDensityRun(Pc, constantField(2, 17.0), Pc.f, 0, prm);
  CHECK(rep3.status == RunStatus::not_applicable);
}

TEST_CASE("power decay run: constant at the threshold is degenerate but passes") {
  auto u = std::make_shared<QuadraticPotential>(QuadraticPotential::round(2));
  Grid g = Grid::centered(2, 1.6, 96);
  auto P = ProblemInstance::plain(u, g, sectionScan(*u, g, Vec::zero(2), 1.0));
  PowerDecayParams prm;
  prm.t0 = 0.25;
  auto rep = powerDecayRun(P, constantField(2, 1.0), P.f, prm);
  CHECK(rep.status == RunStatus::ok);
  CHECK(rep.monotone);
  for (const auto& r : rep.table)
    if (r.threshold >= 1.0) CHECK(r.fraction == 0.0);
}

TEST_CASE("power decay run on the reciprocal family") {
  auto u = std::make_shared<QuadraticPotential>(QuadraticPotential::round(2));
  Grid g = Grid::centered(2, 1.6, 256);
  SectionSet sec = sectionScan(*u, g, Vec::zero(2), 2.0);
  auto P = ProblemInstance::plain(u, g, sec);
  P.Lambda_t = 2.0;
  auto base = tangentiallyWeightedField(2, 2.0, Vec::zero(2));
  P.A = [base](const Vec& x) { return base(x); };  // cofactor of the round u is I

  SolutionSample s = decaySample(P, 0.02, 0.01, Vec::zero(2));
  // supersolution by construction: f <= 0 everywhere on the section
  double fmax = -1e300;
  sec.cells.forEach([&](std::int64_t id) { fmax = std::max(fmax, s.f(g.center(id))); });
  CHECK(fmax <= 1e-9);

  PowerDecayParams prm;
  prm.t0 = 0.5;
  auto rep = powerDecayRun(P, s.v, s.f, prm);
  CHECK(rep.status == RunStatus::ok);
  CHECK(rep.monotone);
  CHECK(rep.eps_hat > 0);
  CHECK(rep.eps_hat == doctest::Approx(2.0).epsilon(0.2));
}

TEST_CASE("harnack quotient: linear and constant closed forms") {
  auto u = std::make_shared<QuadraticPotential>(QuadraticPotential::round(2));
  Grid g = Grid::centered(2, 1.8, 256);
  double h = 1.0;  // inner section S(0, h/8) = B_{1/2}
  SectionSet sec = sectionScan(*u, g, Vec::zero(2), h);
  auto P = ProblemInstance::plain(u, g, sec);
  HarnackParams prm;
  prm.h0 = 1.0;

  SmoothField v = {[](const Vec& x) { return 2.0 + x[0]; },
                   [](const Vec& x) { Vec s(x.n); s[0] = 1; return s; },
                   [](const Vec& x) { return SymMat(x.n); }};
  auto rep = harnackQuotientRun(P, v, deriveRhs(P, v), 10.0, prm);
  CHECK(rep.status == RunStatus::ok);
  CHECK(rep.sup == doctest::Approx(2.5).epsilon(0.01));
  CHECK(rep.inf == doctest::Approx(1.5).epsilon(0.01));
  CHECK(rep.quotient == doctest::Approx(5.0 / 3.0).epsilon(0.02));
  CHECK(rep.bound_ok);

  // constant solution with a zero-order term: quotient at most one
  P.c = [](const Vec&) { return 0.01; };
  double kappa = 2.0;
  auto rep2 = harnackQuotientRun(P, constantField(2, kappa), deriveRhs(P, constantField(2, kappa)),
                                 10.0, prm);
  CHECK(rep2.status == RunStatus::ok);
  CHECK(rep2.quotient <= 1.0 + 1e-9);

  // height budget gate
  HarnackParams tight = prm;
  tight.h0 = 0.5;
  auto rep3 = harnackQuotientRun(P, v, deriveRhs(P, v), 10.0, tight);
  CHECK(rep3.status == RunStatus::not_applicable);
}

TEST_CASE("chained harnack reduces to the single-section bound at h = h0") {
  auto u = std::make_shared<QuadraticPotential>(QuadraticPotential::round(2));
  Grid g = Grid::centered(2, 1.6, 160);
  HarnackParams prm;
  prm.h0 = 0.25;
  SectionSet sec = sectionScan(*u, g, Vec::zero(2), 2 * prm.h0);
  auto P = ProblemInstance::plain(u, g, sec);
  std::mt19937_64 rng(3);
  SolutionSample s = makeSample(P, "radial", rng);
  double C = 8.0;
  auto rep = chainedHarnackRun(P, s.v, s.f, prm.h0, C, 1.0 / 16.0, 32.0, prm);
  CHECK(rep.N == doctest::Approx(1.0));
  CHECK(rep.chained_bound == doctest::Approx(C));
  CHECK(rep.cover_count >= 1);
  CHECK(rep.bound_ok);
}

TEST_CASE("experiment catalog and deterministic outputs") {
  auto names = experimentNames();
  CHECK(names.size() == 9);
  CHECK(std::count(names.begin(), names.end(), "all") == 1);

  auto cfg = tinyConfig();
  auto dirA = std::filesystem::temp_directory_path() / "malab_hA";
  auto dirB = std::filesystem::temp_directory_path() / "malab_hB";
  std::filesystem::remove_all(dirA);
  std::filesystem::remove_all(dirB);
  auto a = runExperiment("sections", cfg, dirA.string());
  auto b = runExperiment("sections", cfg, dirB.string());
  CHECK(a.exit_code == 0);
  CHECK(b.exit_code == 0);
  CHECK(slurp((dirA / "sections_volume_ratio.csv").string()) ==
        slurp((dirB / "sections_volume_ratio.csv").string()));
  CHECK(!slurp((dirA / "sections_summary.json").string()).empty());

  CHECK_THROWS_AS(runExperiment("bogus", cfg, dirA.string()), LabError);
}

TEST_CASE("csv formatting is locale-independent and stable") {
  Table t{{"a", "b"}, {{1.5, 0.1}, {2.0, 12345678.25}}};
  auto path = (std::filesystem::temp_directory_path() / "malab_fmt.csv").string();
  writeCsv(path, t);
  std::string body = slurp(path);
  CHECK(body == "a,b\n1.5,0.1\n2,12345678.25\n");
}
