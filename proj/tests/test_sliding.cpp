#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>

#include "malab/sliding.hpp"

using namespace malab;

namespace {

SmoothField quadraticBump(double b, double offset) {
  return {[b, offset](const Vec& x) { return offset + 0.5 * b * x.norm2(); },
          [b](const Vec& x) { return x * b; },
          [b](const Vec& x) { return SymMat::identity(x.n).scaled(b); }};
}

SmoothField gaussField(double amp, double sigma, double floor_v) {
  double s2 = sigma * sigma;
  return {[=](const Vec& x) { return floor_v + amp * std::exp(-0.5 * x.norm2() / s2); },
          [=](const Vec& x) {
            double e = amp * std::exp(-0.5 * x.norm2() / s2);
            return x * (-e / s2);
          },
          [=](const Vec& x) {
            double e = amp * std::exp(-0.5 * x.norm2() / s2);
            SymMat h(x.n);
            for (int i = 0; i < x.n; ++i)
              for (int j = i; j < x.n; ++j)
                h.set(i, j, e * (x[i] * x[j] / (s2 * s2) - (i == j ? 1.0 / s2 : 0.0)));
            return h;
          }};
}

// v = floor + amp * exp((R1^2 - |x|^2) / (2 sigma^2)): equals floor + amp at
// radius R1, grows sharply toward the center.
SmoothField centeredSpike(double R1, double sigma, double floor_v, double amp) {
  double s2 = sigma * sigma;
  return {[=](const Vec& x) {
            return floor_v + amp * std::exp((R1 * R1 - x.norm2()) / (2 * s2));
          },
          [=](const Vec& x) {
            double e = amp * std::exp((R1 * R1 - x.norm2()) / (2 * s2));
            return x * (-e / s2);
          },
          [=](const Vec& x) {
            double e = amp * std::exp((R1 * R1 - x.norm2()) / (2 * s2));
            SymMat h(x.n);
            for (int i = 0; i < x.n; ++i)
              for (int j = i; j < x.n; ++j)
                h.set(i, j, e * (x[i] * x[j] / (s2 * s2) - (i == j ? 1.0 / s2 : 0.0)));
            return h;
          }};
}

}  // namespace

TEST_CASE("zero sliding function touches at the vertex") {
  auto u = std::make_shared<QuadraticPotential>(QuadraticPotential::round(2));
  Grid g = Grid::centered(2, 1.5, 128);
  SectionSet dom = sectionScan(*u, g, Vec::zero(2), 0.4);
  SmoothField v = constantField(2, 0.0);
  Vec y = g.center(g.locate(Vec(0.2, -0.1)));
  ContactRecord r = slideParaboloid(*u, v, y, 5.0, dom);
  CHECK((r.contact - y).norm() < g.spacing());
  CHECK(r.jacobian_formula == doctest::Approx(1.0));
  CHECK(r.foc_residual < 1e-9);
  CHECK_FALSE(r.on_boundary);
  CHECK(r.refined_confirmed);
}

TEST_CASE("quadratic sliding function has the closed-form contact map") {
  auto u = std::make_shared<QuadraticPotential>(QuadraticPotential::round(2));
  Grid g = Grid::centered(2, 1.5, 128);
  SectionSet dom = sectionScan(*u, g, Vec::zero(2), 0.4);
  double a = 6.0, b = 2.0;
  SmoothField v = quadraticBump(b, 0.1);
  SlideOptions opts;
  opts.fd_jacobian = true;
  for (Vec y : {Vec(0.2, 0.1), Vec(-0.15, 0.22), Vec(0.05, -0.3)}) {
    ContactRecord r = slideParaboloid(*u, v, y, a, dom, opts);
    Vec want = y * (a / (a + b));
    CHECK((r.contact - want).norm() < 0.6 * g.spacing());
    double jac = std::pow(1.0 + b / a, 2);
    CHECK(r.jacobian_formula == doctest::Approx(jac).epsilon(1e-9));
    CHECK_FALSE(r.fd_degenerate);
    CHECK(r.jacobian_fd == doctest::Approx(jac).epsilon(0.05));
    CHECK(r.foc_residual <= 2.0 * g.spacing());
    // semidefinite touch: D^2 v + a D^2 u >= 0
    SymMat touch = v.hess(r.contact) + u->hess(r.contact).scaled(a);
    CHECK(minEigenvalue(touch) >= -1e-8);
  }
}

TEST_CASE("smooth bump: dual-route Jacobians agree within 5 percent") {
  auto u = std::make_shared<QuadraticPotential>(QuadraticPotential::round(2));
  Grid g = Grid::centered(2, 1.5, 192);
  SectionSet dom = sectionScan(*u, g, Vec::zero(2), 0.4);
  SmoothField v = gaussField(0.5, 0.6, 0.2);
  SlideOptions opts;
  opts.fd_jacobian = true;
  double worst = 0;
  int degenerate = 0;
  for (double t = 0.0; t < 2 * M_PI; t += M_PI / 5) {
    Vec y(0.25 * std::cos(t), 0.25 * std::sin(t));
    ContactRecord r = slideParaboloid(*u, v, y, 8.0, dom, opts);
    if (r.fd_degenerate) {
      ++degenerate;
      continue;
    }
    double gap = std::abs(std::abs(r.jacobian_fd) - r.jacobian_formula) /
                 std::max(1.0, r.jacobian_formula);
    worst = std::max(worst, gap);
  }
  CHECK(degenerate == 0);
  CHECK(worst <= 0.05);
}

TEST_CASE("parallel and serial slides agree exactly") {
  auto u = std::make_shared<QuadraticPotential>(QuadraticPotential::eccentric(2, 4.0));
  Grid g = Grid::centered(2, 2.0, 128);
  SectionSet dom = sectionScan(*u, g, Vec::zero(2), 0.3);
  SmoothField v = gaussField(0.7, 0.5, 0.1);
  SlideOptions par, ser;
  par.parallel = true;
  ser.parallel = false;
  for (Vec y : {Vec(0.1, 0.1), Vec(-0.2, 0.05)}) {
    ContactRecord a = slideParaboloid(*u, v, y, 7.0, dom, par);
    ContactRecord b = slideParaboloid(*u, v, y, 7.0, dom, ser);
    CHECK(a.cell == b.cell);
    CHECK(a.contact[0] == b.contact[0]);
    CHECK(a.contact[1] == b.contact[1]);
  }
}

TEST_CASE("measure estimate run: constant one touches everywhere at the vertex") {
  auto u = std::make_shared<QuadraticPotential>(QuadraticPotential::round(2));
  Grid g = Grid::centered(2, 1.6, 160);
  SectionSet s4 = sectionScan(*u, g, Vec::zero(2), 1.0);
  auto P = ProblemInstance::plain(u, g, s4);
  MeasureEstimateParams prm;
  prm.t0 = 0.25;
  prm.alpha1 = 0.25;
  prm.opening = 10.0;
  auto rep = measureEstimateRun(P, constantField(2, 1.0), prm);
  CHECK(rep.status == RunStatus::ok);
  CHECK(rep.m1_emp == doctest::Approx(1.0));
  CHECK(rep.interior_fraction == doctest::Approx(1.0));
  // every vertex is its own contact: the area integral matches |V| exactly
  CHECK(rep.area_integral == doctest::Approx(rep.vertex_measure).epsilon(1e-9));
  for (const auto& r : rep.records) CHECK((r.contact - r.vertex).norm() < g.spacing());
}

TEST_CASE("measure estimate run: quadratic family area identity within 5 percent") {
  auto u = std::make_shared<QuadraticPotential>(QuadraticPotential::round(2));
  Grid g = Grid::centered(2, 1.6, 192);
  SectionSet s4 = sectionScan(*u, g, Vec::zero(2), 1.0);
  auto P = ProblemInstance::plain(u, g, s4);
  MeasureEstimateParams prm;
  prm.t0 = 0.25;
  prm.alpha1 = 0.0625;
  prm.opening = 12.0;
  SmoothField v = quadraticBump(2.0, 0.05);
  auto rep = measureEstimateRun(P, v, prm);
  CHECK(rep.status == RunStatus::ok);
  CHECK(rep.interior_fraction == doctest::Approx(1.0));
  CHECK(rep.area_integral == doctest::Approx(rep.vertex_measure).epsilon(0.05));
  CHECK(rep.below_fraction > 0.0);
  // first-order condition at every interior contact
  for (const auto& r : rep.records) CHECK(r.foc_residual <= 2.0 * g.spacing());
  // contact value never exceeds the witness objective (v(x) <= P(x0) < M1)
  Vec x0 = Vec::zero(2);  // v attains its minimum 0.05 at the origin
  for (const auto& r : rep.records) {
    double px0 = v.value(x0) + prm.opening * (u->value(x0) - u->value(r.vertex) -
                                              u->grad(r.vertex).dot(x0 - r.vertex));
    CHECK(r.v_at_contact <= px0 + 1e-9);
  }
}

TEST_CASE("measure estimate run: outward-plunging v forces boundary contacts") {
  auto u = std::make_shared<QuadraticPotential>(QuadraticPotential::round(2));
  Grid g = Grid::centered(2, 1.6, 160);
  SectionSet s4 = sectionScan(*u, g, Vec::zero(2), 1.0);
  auto P = ProblemInstance::plain(u, g, s4);
  // decreasing outward faster than a small opening can tilt back up
  SmoothField v = {[](const Vec& x) { return 0.8 - (4.0 / 3.0) * x.norm2(); },
                   [](const Vec& x) { return x * (-8.0 / 3.0); },
                   [](const Vec& x) { return SymMat::identity(x.n).scaled(-8.0 / 3.0); }};
  MeasureEstimateParams prm;
  prm.t0 = 0.25;
  prm.alpha1 = 0.25;

  prm.opening = 1.0;
  auto bad = measureEstimateRun(P, v, prm);
  CHECK(bad.status == RunStatus::containment_failure);
  CHECK(bad.boundary_contacts > 0);
  CHECK(bad.failing_opening == doctest::Approx(1.0));

  prm.opening = 12.0;
  auto good = measureEstimateRun(P, v, prm);
  CHECK(good.status == RunStatus::ok);
  CHECK(good.boundary_contacts == 0);
}

TEST_CASE("measure estimate run gates on the infimum hypothesis") {
  auto u = std::make_shared<QuadraticPotential>(QuadraticPotential::round(2));
  Grid g = Grid::centered(2, 1.6, 128);
  SectionSet s4 = sectionScan(*u, g, Vec::zero(2), 1.0);
  auto P = ProblemInstance::plain(u, g, s4);
  MeasureEstimateParams prm;
  prm.t0 = 0.25;
  auto rep = measureEstimateRun(P, constantField(2, 7.5), prm);
  CHECK(rep.status == RunStatus::not_applicable);
  CHECK(rep.records.empty());
}

TEST_CASE("doubling contact: spiked v pushes contacts into the annulus") {
  auto u = std::make_shared<QuadraticPotential>(QuadraticPotential::round(2));
  Grid g = Grid::centered(2, 1.6, 1024);
  SectionSet s4 = sectionScan(*u, g, Vec::zero(2), 1.0);
  auto P = ProblemInstance::plain(u, g, s4);

  DoublingParams prm;
  prm.t0 = 0.25;
  prm.alpha = 0.12;
  prm.eps = 0.24;
  double R1 = std::sqrt(2 * prm.t0);
  SmoothField v = centeredSpike(R1, 0.2, 0.9, 0.1);
  DoublingSetup setup = prepareDoubling(P, prm);

  // witness: a boundary cell of S_1, where v crosses 1
  SectionSet s1 = sectionScan(*u, g, Vec::zero(2), prm.t0);
  std::int64_t wid = -1;
  s1.boundary.forEach([&](std::int64_t id) { if (wid < 0) wid = id; });
  Vec witness = g.center(wid);
  CHECK(v.value(witness) <= 1.0 + 1e-6);

  // vertex sweep over the cells satisfying the small-gradient entry condition
  std::vector<Vec> vertices;
  double gate = prm.alpha / (16.0 * 2);
  s1.cells.forEach([&](std::int64_t id) {
    if (u->grad(g.center(id)).norm() <= gate) vertices.push_back(g.center(id));
  });
  CHECK(vertices.size() >= 3);

  int in_annulus = 0;
  for (const Vec& y : vertices) {
    auto rec = doublingContact(P, v, y, constantField(2, 0.0), witness, prm, setup);
    CHECK(rec.status == RunStatus::ok);
    CHECK(rec.in_annulus.pass);
    CHECK(rec.value_capped.pass);
    CHECK(rec.dw_lower.pass);
    CHECK(rec.dv_lower.pass);
    if (rec.in_annulus.pass) ++in_annulus;
  }
  CHECK(in_annulus == int(vertices.size()));

  // large-gradient filter keeps every record
  std::vector<DoublingRecord> recs;
  for (const Vec& y : vertices)
    recs.push_back(doublingContact(P, v, y, constantField(2, 0.0), witness, prm, setup));
  auto filt = largeGradientFilter(recs, prm.eps, prm.alpha, 2);
  CHECK(filt.retention == doctest::Approx(1.0));
  // an artificially doubled threshold may drop records; only reported
  auto filt2 = largeGradientFilter(recs, prm.eps / 2, prm.alpha, 2);
  CHECK(filt2.retention <= 1.0);
}

TEST_CASE("doubling contact without a witness reports not-applicable") {
  auto u = std::make_shared<QuadraticPotential>(QuadraticPotential::round(2));
  Grid g = Grid::centered(2, 1.6, 256);
  SectionSet s4 = sectionScan(*u, g, Vec::zero(2), 1.0);
  auto P = ProblemInstance::plain(u, g, s4);
  DoublingParams prm;
  prm.t0 = 0.25;
  prm.alpha = 0.12;
  prm.eps = 0.24;
  DoublingSetup setup = prepareDoubling(P, prm);
  auto rec = doublingContact(P, constantField(2, 50.0), Vec::zero(2),
                             constantField(2, 0.0), std::nullopt, prm, setup);
  CHECK(rec.status == RunStatus::not_applicable);
  CHECK_FALSE(rec.in_annulus.applicable);
}

TEST_CASE("doubling contact: eps far above the cap breaks a diagnostic") {
  auto u = std::make_shared<QuadraticPotential>(QuadraticPotential::round(2));
  Grid g = Grid::centered(2, 1.6, 1024);
  SectionSet s4 = sectionScan(*u, g, Vec::zero(2), 1.0);
  auto P = ProblemInstance::plain(u, g, s4);
  DoublingParams prm;
  prm.t0 = 0.25;
  prm.alpha = 0.12;
  prm.eps = 3.5;
  double cap = doublingEpsCap(prm, 0.5, 1.0, 1.0, 2);
  CHECK(prm.eps > cap);
  double R1 = std::sqrt(2 * prm.t0);
  SmoothField v = centeredSpike(R1, 0.2, 0.9, 0.1);
  DoublingSetup setup = prepareDoubling(P, prm);
  SectionSet s1 = sectionScan(*u, g, Vec::zero(2), prm.t0);
  std::int64_t wid = -1;
  s1.boundary.forEach([&](std::int64_t id) { if (wid < 0) wid = id; });
  Vec y = g.center(g.locate(Vec::zero(2)));
  CHECK(u->grad(y).norm() <= prm.alpha / 32.0);
  auto rec = doublingContact(P, v, y, constantField(2, 0.0), g.center(wid), prm, setup);
  CHECK(rec.status == RunStatus::diagnostic_violation);
  CHECK_FALSE(rec.violated.empty());
}

TEST_CASE("jacobian bound check") {
  auto u = std::make_shared<QuadraticPotential>(QuadraticPotential::round(2));
  Grid g = Grid::centered(2, 1.5, 96);
  SectionSet s = sectionScan(*u, g, Vec::zero(2), 0.4);
  auto P = ProblemInstance::plain(u, g, s);
  // zero data, section form: the bound collapses to det <= C
  auto r = jacobianBoundCheck(1.0, Vec::zero(2), P, 2.0, true);
  CHECK(r.pass);
  CHECK(r.rhs == doctest::Approx(2.0));
  auto r2 = jacobianBoundCheck(3.0, Vec::zero(2), P, 2.0, true);
  CHECK_FALSE(r2.pass);
  // without the constant term, zero data gives an empty budget
  auto r3 = jacobianBoundCheck(0.5, Vec::zero(2), P, 2.0, false);
  CHECK_FALSE(r3.pass);

  P.b = [](const Vec&) { return Vec(3.0, 4.0); };  // |b| = 5
  auto r4 = jacobianBoundCheck(40.0, Vec::zero(2), P, 2.0, false);
  CHECK(r4.rhs == doctest::Approx(50.0));
  CHECK(r4.pass);
}

TEST_CASE("large gradient filter on empty input") {
  auto rep = largeGradientFilter({}, 0.2, 0.1, 2);
  CHECK(rep.kept.empty());
  CHECK(rep.retention == doctest::Approx(1.0));
}

TEST_CASE("generalized paraboloid values and bracket sign") {
  auto u = QuadraticPotential::eccentric(2, 4.0);
  GeneralizedParaboloid p;
  p.opening = 3.0;
  p.vertex = Vec(0.2, -0.1);
  p.potential = &u;
  p.offset = 1.5;
  CHECK(p.value(p.vertex) == doctest::Approx(1.5));
  CHECK(p.bracket(p.vertex) == doctest::Approx(0.0));
  // convexity of u makes the bracket nonnegative everywhere
  for (double t = 0; t < 2 * M_PI; t += 0.5) {
    Vec x = p.vertex + Vec(std::cos(t), std::sin(t)) * 0.7;
    CHECK(p.bracket(x) >= 0.0);
    CHECK(p.value(x) <= p.offset);
  }
  // reduces to the quadratic paraboloid for the round potential
  auto round = QuadraticPotential::round(2);
  GeneralizedParaboloid q{2.0, Vec(0.1, 0.1), &round, 0.0};
  Vec x(0.4, -0.3);
  CHECK(q.value(x) == doctest::Approx(-0.5 * 2.0 * (x - q.vertex).norm2()));
}

TEST_CASE("dual-route Jacobian agreement improves under refinement") {
  auto gap_at = [](int cells) {
    auto u = std::make_shared<QuadraticPotential>(QuadraticPotential::round(2));
    Grid g = Grid::centered(2, 1.5, cells);
    SectionSet dom = sectionScan(*u, g, Vec::zero(2), 0.4);
    SmoothField v = gaussField(0.5, 0.6, 0.2);
    SlideOptions opts;
    opts.fd_jacobian = true;
    double worst = 0;
    for (double t = 0.0; t < 2 * M_PI; t += M_PI / 4) {
      Vec y(0.25 * std::cos(t), 0.25 * std::sin(t));
      ContactRecord r = slideParaboloid(*u, v, y, 8.0, dom, opts);
      if (r.fd_degenerate) continue;
      worst = std::max(worst, std::abs(std::abs(r.jacobian_fd) - r.jacobian_formula) /
                                  std::max(1.0, r.jacobian_formula));
    }
    return worst;
  };
  double coarse = gap_at(96), fine = gap_at(256);
  CHECK(fine <= coarse * 1.05 + 1e-12);
}
