#include "malab/classical.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace malab {

namespace {
constexpr double unitBallVolume(int n) {
  return n == 1 ? 2.0 : (n == 2 ? M_PI : 4.0 * M_PI / 3.0);
}
}  // namespace

BoundCheck gradientEstimateCheck(const Potential& u, const Grid& g,
                                 const CellSet& members, const CellSet& boundary,
                                 const Vec& x, double tau_rel) {
  if (boundary.empty()) throw LabError("EmptyBoundary", "domain has no boundary cells");
  (void)members;
  double max_bdry = -1e300, dist = 1e300;
  boundary.forEach([&](std::int64_t id) {
    Vec y = g.center(id);
    max_bdry = std::max(max_bdry, u.value(y));
    dist = std::min(dist, (y - x).norm());
  });
  BoundCheck r;
  r.lhs = u.grad(x).norm();
  r.rhs = (max_bdry - u.value(x)) / dist;
  r.ratio = r.rhs != 0 ? r.lhs / r.rhs : 0.0;
  r.pass = r.lhs <= r.rhs * (1.0 + tau_rel) + 1e-12;
  return r;
}

BoundCheck aleksandrovCheck(const std::function<double(const Vec&)>& w,
                            const std::function<double(const Vec&)>& det_d2w,
                            const Grid& g, const CellSet& members,
                            const CellSet& boundary, const Vec& x0, double tau_bd) {
  if (boundary.empty()) throw LabError("EmptyBoundary", "domain has no boundary cells");
  double max_abs_bdry = 0;
  std::vector<Vec> bpts;
  boundary.forEach([&](std::int64_t id) {
    Vec y = g.center(id);
    max_abs_bdry = std::max(max_abs_bdry, std::abs(w(y)));
    bpts.push_back(y);
  });
  if (max_abs_bdry > tau_bd)
    throw LabError("NonzeroBoundary", "w does not vanish on the boundary cells");

  double dist = 1e300;
  for (const Vec& y : bpts) dist = std::min(dist, (y - x0).norm());
  double diam = 0;
#pragma omp parallel for schedule(static) reduction(max : diam)
  for (std::int64_t i = 0; i < std::int64_t(bpts.size()); ++i)
    for (size_t j = size_t(i) + 1; j < bpts.size(); ++j)
      diam = std::max(diam, (bpts[size_t(i)] - bpts[j]).norm());

  double integral = 0;
  members.forEach([&](std::int64_t id) { integral += det_d2w(g.center(id)); });
  integral *= g.cellMeasure();

  const int n = g.dim;
  BoundCheck r;
  r.lhs = std::pow(std::abs(w(x0)), n);
  r.rhs = (1.0 / unitBallVolume(n)) * std::pow(diam, n - 1) * dist * integral;
  r.ratio = r.rhs != 0 ? r.lhs / r.rhs : 0.0;
  r.pass = r.lhs <= r.rhs + 1e-12;
  return r;
}

}  // namespace malab
