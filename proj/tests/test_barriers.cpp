#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>

#include "malab/barriers.hpp"
#include "malab/fit.hpp"

using namespace malab;

namespace {

// Synthetic bad set: the disk around `center` whose measure is `target`.
BadSet syntheticBadSet(const Grid& g, const SectionSet& inside, const Vec& center,
                       double target, double eps) {
  BadSet bad;
  bad.eps = eps;
  bad.cells = CellSet(g);
  double radius = std::sqrt(target / M_PI);
  inside.cells.forEach([&](std::int64_t id) {
    if ((g.center(id) - center).norm() < radius) bad.cells.set(id);
  });
  bad.measure = double(bad.cells.count()) * g.cellMeasure();
  return bad;
}

}  // namespace

TEST_CASE("bad set thresholds on the quadratic Hessian norm") {
  auto u = QuadraticPotential::round(2);  // ||D^2 u|| = sqrt(2)
  Grid g = Grid::centered(2, 1.6, 128);
  SectionSet s3 = sectionScan(u, g, Vec::zero(2), 0.75);

  BadSet none = badSet(u, 0.5, s3);  // 1/eps = 2 > sqrt(2)
  CHECK(none.cells.count() == 0);
  CHECK(none.measure == 0.0);

  BadSet all = badSet(u, 1.0, s3);  // 1/eps = 1 < sqrt(2)
  CHECK(all.cells.count() == s3.member_count);

  // Chebyshev bound on the cosine-perturbed family over an eps sweep
  CosinePerturbedPotential cp(2, 0.15, 1.5);
  cp.certify(g);
  SectionSet s3p = sectionScan(cp, g, Vec::zero(2), 0.75);
  for (double eps : {0.3, 0.5, 0.7, 0.9}) {
    BadSet b = badSet(cp, eps, s3p);
    CHECK(b.measure <= b.chebyshev_bound + 1e-12);
  }
}

TEST_CASE("mollifier levels and integral bounds") {
  auto u = QuadraticPotential::round(2);
  Grid g = Grid::centered(2, 1.6, 96);
  SectionSet s4 = sectionScan(u, g, Vec::zero(2), 1.0);
  double eps = 0.1;

  BadSet empty;
  empty.eps = eps;
  empty.cells = CellSet(g);
  MollifierField phi0 = mollifier(empty, s4, eps);
  s4.cells.forEach([&](std::int64_t id) {
    CHECK(phi0.values[size_t(id)] == doctest::Approx(eps));
  });

  BadSet full;
  full.eps = eps;
  full.cells = s4.cells;
  MollifierField phi1 = mollifier(full, s4, eps);
  s4.cells.forEach([&](std::int64_t id) {
    CHECK(phi1.values[size_t(id)] == doctest::Approx(1.0));
  });

  BadSet mid = syntheticBadSet(g, s4, Vec(0.2, 0.0), 0.2, eps);
  MollifierField phi = mollifier(mid, s4, eps);
  double ring = 0;
  mid.cells.forEach([&](std::int64_t id) {
    auto c = g.coords(id);
    for (int d = 0; d < 2; ++d)
      for (int off : {-1, 1}) {
        auto cc = c;
        cc[d] += off;
        std::int64_t nid = g.id(cc[0], cc[1], cc[2]);
        if (g.inBounds(cc) && !mid.cells.test(nid) && s4.cells.test(nid))
          ring += g.cellMeasure();  // counted with multiplicity, still an upper bound
      }
  });
  CHECK(phi.integral >= mid.measure);
  CHECK(phi.integral <= mid.measure + ring + eps * s4.measure + 1e-9);
}

TEST_CASE("wide-stencil solver reproduces radial exact solutions") {
  auto u = QuadraticPotential::round(2);
  Grid g = Grid::centered(2, 1.3, 64);
  SectionSet disk = sectionScan(u, g, Vec::zero(2), 0.5);  // unit disk

  for (double c : {1.0, 2.0}) {
    // det D^2 [ c (|x|^2 - 1) / 2 ] = c^2
    BarrierField h = maDirichletSolve(disk, [&](const Vec&) { return c * c; });
    double err = 0;
    disk.cells.forEach([&](std::int64_t id) {
      Vec x = g.center(id);
      err = std::max(err, std::abs(h.cellValue(id) - 0.5 * c * (x.norm2() - 1.0)));
    });
    CHECK(err <= 2.5 * c * g.spacing());
    CHECK(h.supAbs() == doctest::Approx(0.5 * c).epsilon(0.2));
  }
}

TEST_CASE("solver residual trace decreases") {
  auto u = QuadraticPotential::round(2);
  Grid g = Grid::centered(2, 1.3, 64);
  SectionSet disk = sectionScan(u, g, Vec::zero(2), 0.5);
  BarrierField h = maDirichletSolve(disk, [](const Vec&) { return 1.0; });
  const auto& tr = h.trace();
  REQUIRE(tr.size() >= 3);
  // monotone decrease once the sweep settles below its starting residual
  size_t start = 1;
  while (start < tr.size() && tr[start].residual > tr[0].residual) ++start;
  for (size_t i = start + 1; i < tr.size(); ++i)
    CHECK(tr[i].residual <= tr[i - 1].residual * 1.01 + 1e-12);
  CHECK(tr.back().residual <= 1e-6);
}

TEST_CASE("solver rejects bad input") {
  auto u = QuadraticPotential::round(2);
  Grid g = Grid::centered(2, 1.3, 64);
  SectionSet disk = sectionScan(u, g, Vec::zero(2), 0.5);
  CHECK_THROWS_AS(maDirichletSolve(disk, [](const Vec&) { return 0.0; }), LabError);
  MaSolveOptions strict;
  strict.max_iterations = 3;
  CHECK_THROWS_AS(maDirichletSolve(disk, [](const Vec&) { return 1.0; }, strict),
                  LabError);
}

TEST_CASE("barrier smallness scaling: sup|h_eps| follows eps^{1/n}") {
  auto u = std::make_shared<QuadraticPotential>(QuadraticPotential::round(2));
  Grid g = Grid::centered(2, 1.6, 56);
  SectionSet s4 = sectionScan(*u, g, Vec::zero(2), 1.0);
  double Lambda = 1.0;

  std::vector<double> epss = {0.02, 0.04, 0.08, 0.16, 0.2}, sups;
  for (double eps : epss) {
    BadSet bad = syntheticBadSet(g, s4, Vec(0.3, 0.1), 0.5 * eps, eps);
    MollifierField phi = mollifier(bad, s4, eps);
    BarrierField h = maDirichletSolve(
        s4, [&](const Vec& x) { return 4.0 * Lambda * std::max(phi(x), eps); });
    sups.push_back(h.supAbs());
    CHECK(h.supAbs() > 0);
  }
  double slope = logLogFit(epss, sups).slope;
  CHECK(slope >= 0.4);
  CHECK(slope <= 0.6);
}

TEST_CASE("barrier gradient bound on the inner section") {
  auto u = std::make_shared<QuadraticPotential>(QuadraticPotential::round(2));
  Grid g = Grid::centered(2, 1.6, 56);
  SectionSet s4 = sectionScan(*u, g, Vec::zero(2), 1.0);
  SectionSet s3 = sectionScan(*u, g, Vec::zero(2), 0.75);
  SectionSet s2 = sectionScan(*u, g, Vec::zero(2), 0.5);
  double eps = 0.1;
  BadSet bad = syntheticBadSet(g, s4, Vec(0.2, 0.0), 0.3 * eps, eps);
  MollifierField phi = mollifier(bad, s4, eps);
  auto hp = std::make_shared<BarrierField>(
      maDirichletSolve(s4, [&](const Vec& x) { return 4.0 * std::max(phi(x), eps); }));

  // dist(S_3, boundary of S_4)
  double dist = 1e300;
  auto shell3 = shellCells(s3);
  s4.boundary.forEach([&](std::int64_t bid) {
    Vec b = g.center(bid);
    for (std::int64_t sid : shell3) dist = std::min(dist, (g.center(sid) - b).norm());
  });
  double bound = hp->supAbs() / dist;
  double worst = 0;
  s2.cells.forEach([&](std::int64_t id) {
    worst = std::max(worst, hp->grad(g.center(id)).norm());
  });
  CHECK(worst <= bound * 1.05);
}

TEST_CASE("trace inequality in action on the bad set") {
  // u with nontrivial Hessian spread; forced bad set; on it
  // trace((D^2 u)^{-1} D^2 h) >= n (det D^2 h / det D^2 u)^{1/n} >= 2n when
  // det D^2 h = 2^n Lambda there.
  CosinePerturbedPotential cp(2, 0.15, 1.5);
  Grid g = Grid::centered(2, 1.7, 56);
  cp.certify(g);
  auto u = std::make_shared<CosinePerturbedPotential>(cp);
  SectionSet s4 = sectionScan(*u, g, Vec::zero(2), 1.0);
  double eps = 0.1, Lambda = u->pinchHi();
  BadSet bad = syntheticBadSet(g, s4, Vec(0.0, 0.0), 0.3, eps);
  MollifierField phi = mollifier(bad, s4, eps);
  BarrierField h = maDirichletSolve(
      s4, [&](const Vec& x) { return std::pow(2.0, 2) * Lambda * std::max(phi(x), eps); });

  int checked = 0, ok = 0;
  bad.cells.forEach([&](std::int64_t id) {
    auto c = g.coords(id);
    // stay away from the ramp so the discrete Hessian sees the plateau
    bool interior = true;
    for (int d = 0; d < 2; ++d)
      for (int off : {-2, -1, 1, 2}) {
        auto cc = c;
        cc[d] += off;
        if (!g.inBounds(cc) || !bad.cells.test(g.id(cc[0], cc[1], cc[2])))
          interior = false;
      }
    if (!interior) return;
    ++checked;
    Vec x = g.center(id);
    double lhs = traceProduct(u->hess(x).inverse(), h.hess(x));
    if (lhs >= 2.0 * 2 * 0.8) ++ok;
  });
  CHECK(checked > 10);
  CHECK(ok == checked);
}

TEST_CASE("classical power subsolution on the annulus") {
  auto u = QuadraticPotential::round(2);
  Grid g = Grid::centered(2, 1.4, 160);
  SectionSet s2 = sectionScan(u, g, Vec::zero(2), 0.5);     // B_1
  SectionSet sa = sectionScan(u, g, Vec::zero(2), 0.125);   // B_1/2
  SmoothField zero = constantField(2, 0.0);

  // closed form: m (r^2/2)^{-m-2} r^2 (m + 1 - n/2) >= 0 for m >= 1
  for (double m : {1.0, 2.0, 4.0}) {
    auto rep = classicalSubsolutionCheck(u, zero, m, s2, sa);
    CHECK(rep.violation_measure == 0.0);
    CHECK(rep.min_operator_value >= -1e-9);
  }
  auto rep0 = classicalSubsolutionCheck(u, zero, 0.0, s2, sa);
  CHECK(rep0.min_operator_value == doctest::Approx(0.0));

  SmoothField above = constantField(2, 1.0);  // u - 1 < 0 on the annulus
  CHECK_THROWS_AS(classicalSubsolutionCheck(u, above, 2.0, s2, sa), LabError);
}

TEST_CASE("subsolution m-sweep with a solved barrier") {
  CosinePerturbedPotential cp(2, 0.12, 1.5);
  Grid g = Grid::centered(2, 1.7, 56);
  cp.certify(g);
  SectionSet s4 = sectionScan(cp, g, Vec::zero(2), 1.0);
  SectionSet s2 = sectionScan(cp, g, Vec::zero(2), 0.5);
  SectionSet sa = sectionScan(cp, g, Vec::zero(2), 0.06);
  double eps = 0.01;  // keeps sup|h| within the admissible-barrier regime
  BadSet bad = badSet(cp, eps, sectionScan(cp, g, Vec::zero(2), 0.75));
  MollifierField phi = mollifier(bad, s4, eps);
  auto h = std::make_shared<BarrierField>(maDirichletSolve(
      s4, [&](const Vec& x) { return 4.0 * cp.pinchHi() * std::max(phi(x), eps); }));
  double m_ok = -1;
  for (double m : {2.0, 4.0, 8.0, 16.0, 32.0}) {
    auto rep = classicalSubsolutionCheck(cp, barrierView(h), m, s2, sa, 1e-9);
    if (rep.violation_measure == 0.0) {
      m_ok = m;
      break;
    }
  }
  CHECK(m_ok > 0);
}

TEST_CASE("harnack barrier minimal height by scan") {
  auto u = QuadraticPotential::round(2);
  Grid g = Grid::centered(2, 1.6, 160);
  SectionSet s1 = sectionScan(u, g, Vec::zero(2), 1.0);  // {u < 1}
  double beta = 3.0;

  auto zero = [](const Vec&) { return 0.0; };
  CHECK(harnackBarrier(u, beta, s1, zero).t_min == doctest::Approx(0.0));

  auto one = [](const Vec&) { return 1.0; };
  // independent scan oracle
  double want = 0;
  s1.cells.forEach([&](std::int64_t id) {
    want = std::max(want, std::pow(1.0 - u.value(g.center(id)), beta));
  });
  HarnackBarrier hb = harnackBarrier(u, beta, s1, one);
  CHECK(hb.t_min == doctest::Approx(want));
  CHECK(hb.t_min == doctest::Approx(1.0).epsilon(0.01));
  CHECK(hb.r == doctest::Approx(0.5 * (1.0 - u.value(hb.touch_point))));

  // h_t dominates v at the minimal t
  double worst = 0;
  s1.cells.forEach([&](std::int64_t id) {
    Vec x = g.center(id);
    double ht = hb.t_min * std::pow(1.0 - u.value(x), -beta);
    worst = std::max(worst, 1.0 - ht);
  });
  CHECK(worst <= 1e-9);
}

TEST_CASE("beta choice closed form") {
  for (double M : {2.0, 8.0, 32.0}) {
    for (double rho : {0.05, 0.2}) {
      double beta = betaFromDoublingConstant(M, rho);
      CHECK(M * (std::pow(1.0 - rho, -beta) - 1.0) == doctest::Approx(0.5).epsilon(1e-9));
    }
  }
}

TEST_CASE("bad sets shrink as eps decreases") {
  CosinePerturbedPotential cp(2, 0.15, 1.5);
  Grid g = Grid::centered(2, 1.6, 96);
  cp.certify(g);
  SectionSet s3 = sectionScan(cp, g, Vec::zero(2), 0.75);
  BadSet small = badSet(cp, 0.55, s3);
  BadSet large = badSet(cp, 0.75, s3);
  CHECK(small.cells.isSubsetOf(large.cells));
  CHECK(small.measure <= large.measure);
}

TEST_CASE("harnack barrier rejects potentials reaching one inside") {
  auto u = QuadraticPotential::round(2);
  Grid g = Grid::centered(2, 1.8, 96);
  SectionSet s = sectionScan(u, g, Vec::zero(2), 1.2);  // u spans [0, 1.2)
  auto one = [](const Vec&) { return 1.0; };
  CHECK_THROWS_AS(harnackBarrier(u, 2.0, s, one), LabError);
}
