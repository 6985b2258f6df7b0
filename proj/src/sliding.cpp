#include "malab/sliding.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace malab {

namespace {

struct Best {
  double val = 1e300;
  std::int64_t idx = -1;
};

// Deterministic argmin over a cell list: smallest value, ties toward the
// smaller cell id, independent of the thread count.
Best argminScan(const Grid& g, const std::vector<std::int64_t>& cells,
                const std::function<double(const Vec&)>& f, bool parallel) {
  auto better = [](const Best& a, const Best& b) {
    if (a.val != b.val) return a.val < b.val;
    return a.idx < b.idx;
  };
  if (!parallel) {
    Best best;
    for (std::int64_t id : cells) {
      Best cand{f(g.center(id)), id};
      if (best.idx < 0 || better(cand, best)) best = cand;
    }
    return best;
  }
  int nt = 1;
#ifdef _OPENMP
  nt = omp_get_max_threads();
#endif
  std::vector<Best> partial(static_cast<size_t>(nt));
#pragma omp parallel num_threads(nt)
  {
    int t = 0;
#ifdef _OPENMP
    t = omp_get_thread_num();
#endif
    Best local;
#pragma omp for schedule(static) nowait
    for (std::int64_t i = 0; i < std::int64_t(cells.size()); ++i) {
      std::int64_t id = cells[size_t(i)];
      Best cand{f(g.center(id)), id};
      if (local.idx < 0 || better(cand, local)) local = cand;
    }
    partial[size_t(t)] = local;
  }
  Best best;
  for (const Best& p : partial)
    if (p.idx >= 0 && (best.idx < 0 || better(p, best))) best = p;
  return best;
}

std::vector<std::int64_t> closureCells(const SectionSet& s) {
  CellSet c = s.cells;
  c.unionWith(s.boundary);
  std::vector<std::int64_t> ids;
  ids.reserve(size_t(c.count()));
  c.forEach([&](std::int64_t id) { ids.push_back(id); });
  return ids;
}

// Per-axis parabolic sub-cell refinement of a scan extremum.
Vec refineSubCell(const Grid& g, const Vec& xc,
                  const std::function<double(const Vec&)>& f) {
  Vec x = xc;
  double f0 = f(xc);
  for (int d = 0; d < g.dim; ++d) {
    Vec xp = xc, xm = xc;
    xp[d] += g.dx[d];
    xm[d] -= g.dx[d];
    double fp = f(xp), fm = f(xm);
    double denom = fp + fm - 2 * f0;
    if (denom > 1e-300) {
      double off = 0.5 * (fm - fp) / denom * g.dx[d];
      x[d] += std::clamp(off, -0.5 * g.dx[d], 0.5 * g.dx[d]);
    }
  }
  return x;
}

// Half-step re-scan around the winning cell; true when the refined argmin
// stays within that cell.
bool confirmAtDoubleResolution(const Grid& g, const Vec& xc,
                               const std::function<double(const Vec&)>& f) {
  Vec best = xc;
  double bv = f(xc);
  int range = 2;
  std::array<int, 3> it{0, 0, 0};
  std::array<int, 3> lim{1, 1, 1};
  for (int d = 0; d < g.dim; ++d) lim[d] = 2 * range + 1;
  for (it[2] = 0; it[2] < lim[2]; ++it[2])
    for (it[1] = 0; it[1] < lim[1]; ++it[1])
      for (it[0] = 0; it[0] < lim[0]; ++it[0]) {
        Vec z = xc;
        for (int d = 0; d < g.dim; ++d) z[d] += (it[d] - range) * 0.5 * g.dx[d];
        double v = f(z);
        if (v < bv) {
          bv = v;
          best = z;
        }
      }
  for (int d = 0; d < g.dim; ++d)
    if (std::abs(best[d] - xc[d]) > 0.5 * g.dx[d] + 1e-12) return false;
  return true;
}

}  // namespace

ContactRecord slideParaboloid(const Potential& u, const SmoothField& v, const Vec& y,
                              double a, const SectionSet& domain,
                              const SlideOptions& opts) {
  const Grid& g = domain.grid;
  if (domain.member_count == 0) throw LabError("EmptyDomain", "no cells to slide over");
  if (!(a > 0)) throw LabError("PreconditionViolation", "opening must be positive");

  auto cells = closureCells(domain);
  const double uy = u.value(y);
  const Vec duy = u.grad(y);

  auto slideOnce = [&](const Vec& vertex, double uv, const Vec& duv, bool par) {
    std::function<double(const Vec&)> obj = [&, uv, duv](const Vec& z) {
      double val = v.value(z) + a * (u.value(z) - uv - duv.dot(z - vertex));
      if (!std::isfinite(val)) throw LabError("NonFiniteField", "objective not finite");
      return val;
    };
    Best best = argminScan(g, cells, obj, par);
    Vec xc = g.center(best.idx);
    Vec xr = refineSubCell(g, xc, obj);
    return std::tuple<std::int64_t, Vec, double>(best.idx, xr, best.val);
  };

  auto [cell, x, scan_val] = slideOnce(y, uy, duy, opts.parallel);
  (void)scan_val;

  ContactRecord r;
  r.vertex = y;
  r.contact = x;
  r.cell = cell;
  r.opening = a;
  r.v_at_contact = v.value(x);
  r.dv_at_contact = v.grad(x);
  r.objective_at_contact = v.value(x) + a * (u.value(x) - uy - duy.dot(x - y));
  r.on_boundary = domain.boundary.test(cell);
  {
    std::function<double(const Vec&)> obj = [&](const Vec& z) {
      return v.value(z) + a * (u.value(z) - uy - duy.dot(z - y));
    };
    r.refined_confirmed = confirmAtDoubleResolution(g, g.center(cell), obj);
  }
  r.foc_residual = (duy - u.grad(x) - r.dv_at_contact * (1.0 / a)).norm();
  SymMat touched = u.hess(x) + v.hess(x).scaled(1.0 / a);
  r.jacobian_formula = touched.det() / u.hess(y).det();

  if (opts.fd_jacobian) {
    const int n = g.dim;
    Mat m(n);
    bool degenerate = false;
    for (int d = 0; d < n; ++d) {
      Vec yp = y, ym = y;
      yp[d] += g.dx[d];
      ym[d] -= g.dx[d];
      auto [cp, xp, vp] = slideOnce(yp, u.value(yp), u.grad(yp), opts.parallel);
      auto [cm, xm, vm] = slideOnce(ym, u.value(ym), u.grad(ym), opts.parallel);
      (void)cp;
      (void)cm;
      (void)vp;
      (void)vm;
      Vec col = (xp - xm) * (1.0 / (2 * g.dx[d]));
      if (col.norm() < 1e-12) degenerate = true;
      for (int i = 0; i < n; ++i) m(i, d) = col[i];
    }
    double det = m.det();
    if (degenerate || std::abs(det) < 1e-9) {
      r.jacobian_fd = 0.0;
      r.fd_degenerate = true;
    } else {
      r.jacobian_fd = 1.0 / det;
      r.fd_degenerate = false;
    }
  }
  return r;
}

MeasureEstimateReport measureEstimateRun(const ProblemInstance& P, const SmoothField& v,
                                         const MeasureEstimateParams& params) {
  const Grid& g = P.grid;
  const Vec xc = P.section.center;
  SectionSet s1 = sectionScan(*P.u, g, xc, params.t0);
  SectionSet vs = sectionScan(*P.u, g, xc, params.alpha1 * params.t0);

  MeasureEstimateReport rep;
  rep.vertex_measure = vs.measure;

  double inf_v = 1e300;
  vs.cells.forEach([&](std::int64_t id) { inf_v = std::min(inf_v, v.value(g.center(id))); });
  rep.inf_v_on_vertices = inf_v;
  if (!(inf_v <= 1.0 + 1e-9)) {
    rep.status = RunStatus::not_applicable;
    return rep;
  }

  std::vector<std::int64_t> vertices;
  {
    std::int64_t i = 0;
    std::int64_t stride = std::max<std::int64_t>(1, std::int64_t(params.vertex_stride));
    vs.cells.forEach([&](std::int64_t id) {
      if (i++ % stride == 0) vertices.push_back(id);
    });
  }
  rep.records.resize(vertices.size());

  SlideOptions inner;
  inner.parallel = false;
  inner.fd_jacobian = true;
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < std::int64_t(vertices.size()); ++i) {
    Vec y = g.center(vertices[size_t(i)]);
    rep.records[size_t(i)] = slideParaboloid(*P.u, v, y, params.opening, s1, inner);
  }

  std::int64_t interior = 0;
  std::map<std::int64_t, std::pair<double, int>> per_cell;
  rep.m1_emp = 0;
  for (const auto& r : rep.records) {
    if (r.on_boundary) {
      ++rep.boundary_contacts;
    } else {
      ++interior;
    }
    rep.m1_emp = std::max(rep.m1_emp, r.v_at_contact);
    auto& slot = per_cell[r.cell];
    slot.first += std::abs(r.jacobian_formula);
    slot.second += 1;
  }
  rep.interior_fraction =
      rep.records.empty() ? 0.0 : double(interior) / double(rep.records.size());
  rep.area_integral = 0;
  for (const auto& [cell, acc] : per_cell)
    rep.area_integral += (acc.first / acc.second) * g.cellMeasure();

  std::int64_t below = 0;
  s1.cells.forEach([&](std::int64_t id) {
    if (v.value(g.center(id)) < rep.m1_emp) ++below;
  });
  rep.below_fraction =
      s1.member_count > 0 ? double(below) / double(s1.member_count) : 0.0;

  if (rep.boundary_contacts > 0) {
    rep.status = RunStatus::containment_failure;
    rep.failing_opening = params.opening;
  }
  return rep;
}

DoublingSetup prepareDoubling(const ProblemInstance& P, const DoublingParams& params) {
  const Vec xc = P.section.center;
  DoublingSetup s;
  s.s3 = sectionScan(*P.u, P.grid, xc, 3 * params.t0);
  s.s_alpha = sectionScan(*P.u, P.grid, xc, params.alpha * params.t0);
  return s;
}

double doublingEpsCap(const DoublingParams& params, double delta, double lambda_t,
                      double Lambda_t, int n) {
  double cap1 = std::log2(4.0 / (3.0 * (1.0 + params.alpha)));
  double cap2 = delta * params.alpha * params.alpha /
                (32.0 * (1.0 + Lambda_t / lambda_t) * std::pow(double(n), 4));
  return std::min(cap1, cap2);
}

DoublingRecord doublingContact(const ProblemInstance& P, const SmoothField& v,
                               const Vec& y, const SmoothField& h_barrier,
                               const std::optional<Vec>& witness,
                               const DoublingParams& params, const DoublingSetup& setup,
                               const SlideOptions& opts) {
  const Grid& g = P.grid;
  const int n = g.dim;
  const Vec xc = P.section.center;
  const double eps = params.eps, alpha = params.alpha;

  const SectionSet& s3 = setup.s3;
  const SectionSet& sa = setup.s_alpha;

  DoublingRecord rec;
  bool applicable = witness.has_value();
  if (applicable && v.value(*witness) > 1.0 + 1e-6) applicable = false;
  if (P.u->grad(y).norm() > alpha / (16.0 * n) + 1e-12) applicable = false;

  const double uy = P.u->value(y);
  const Vec duy = P.u->grad(y);
  auto w_of = [eps](double vv) { return std::pow(vv + 1.0, -eps); };
  std::function<double(const Vec&)> neg_q = [&](const Vec& z) {
    double q = w_of(v.value(z)) -
               0.75 * (P.u->value(z) - uy - duy.dot(z - y) - h_barrier.value(z));
    if (!std::isfinite(q)) throw LabError("NonFiniteField", "objective not finite");
    return -q;
  };

  auto cells = closureCells(s3);
  Best best = argminScan(g, cells, neg_q, opts.parallel);
  Vec x = refineSubCell(g, g.center(best.idx), neg_q);

  rec.contact.vertex = y;
  rec.contact.contact = x;
  rec.contact.cell = best.idx;
  rec.contact.opening = 0.75;
  rec.contact.on_boundary = s3.boundary.test(best.idx);
  rec.contact.refined_confirmed = confirmAtDoubleResolution(g, g.center(best.idx), neg_q);
  rec.v_at_contact = v.value(x);
  rec.dv_at_contact = v.grad(x);
  double vp1 = rec.v_at_contact + 1.0;
  Vec dw = rec.dv_at_contact * (-eps * std::pow(vp1, -eps - 1.0));
  rec.dw_norm = dw.norm();
  // first-order condition: Dw = (3/4)(Du(x) - Du(y) - Dh(x))
  rec.contact.foc_residual =
      (dw - (P.u->grad(x) - duy - h_barrier.grad(x)) * 0.75).norm();

  // D^2 w = eps(eps+1)(v+1)^{-eps-2} Dv Dv^t - eps (v+1)^{-eps-1} D^2 v
  SymMat dvdv(n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) dvdv.set(i, j, rec.dv_at_contact[i] * rec.dv_at_contact[j]);
  SymMat d2w = dvdv.scaled(eps * (eps + 1.0) * std::pow(vp1, -eps - 2.0)) -
               v.hess(x).scaled(eps * std::pow(vp1, -eps - 1.0));
  SymMat transported = P.u->hess(x) - h_barrier.hess(x) - d2w.scaled(4.0 / 3.0);
  rec.jacobian_formula = transported.det() / P.u->hess(y).det();
  rec.contact.jacobian_formula = rec.jacobian_formula;

  double tilt = tiltedHeight(*P.u, xc, P.u->grad(xc), x);
  rec.in_annulus.applicable = applicable;
  rec.in_annulus.lhs = tilt;
  rec.in_annulus.rhs = alpha * params.t0;
  rec.in_annulus.pass = s3.cells.test(best.idx) && !sa.cells.test(best.idx);

  rec.value_capped.applicable = applicable;
  rec.value_capped.lhs = std::pow(vp1, eps);
  rec.value_capped.rhs = 1.0 / alpha;
  rec.value_capped.pass = rec.value_capped.lhs <= rec.value_capped.rhs * (1.0 + 1e-9);

  rec.dw_lower.applicable = applicable;
  rec.dw_lower.lhs = rec.dw_norm;
  rec.dw_lower.rhs = alpha / (2.0 * n);
  rec.dw_lower.pass = rec.dw_lower.lhs >= rec.dw_lower.rhs * (1.0 - 1e-9);

  rec.dv_lower.applicable = applicable;
  rec.dv_lower.lhs = rec.dv_at_contact.norm();
  rec.dv_lower.rhs = alpha / (2.0 * n * eps);
  rec.dv_lower.pass = rec.dv_lower.lhs >= rec.dv_lower.rhs * (1.0 - 1e-9);

  if (!applicable) {
    rec.status = RunStatus::not_applicable;
  } else {
    auto fail = [&](const DiagnosticCheck& c, const char* name) {
      if (!c.pass && rec.violated.empty()) rec.violated = name;
    };
    fail(rec.in_annulus, "in-annulus");
    fail(rec.value_capped, "value-cap");
    fail(rec.dw_lower, "dw_lower");
    fail(rec.dv_lower, "dv_lower");
    rec.status = rec.violated.empty() ? RunStatus::ok : RunStatus::diagnostic_violation;
  }
  return rec;
}

BoundCheck jacobianBoundCheck(double jacobian, const Vec& contact,
                              const ProblemInstance& P, double C, bool include_one) {
  const int n = P.grid.dim;
  double bn = std::pow(P.b(contact).norm(), n);
  double cn = std::pow(std::max(-P.c(contact), 0.0), n);
  double fn = std::pow(std::max(P.f(contact), 0.0), n);
  BoundCheck r;
  r.lhs = std::abs(jacobian);
  r.rhs = C * ((include_one ? 1.0 : 0.0) + bn + cn + fn);
  r.ratio = r.rhs > 0 ? r.lhs / r.rhs : 0.0;
  r.pass = r.lhs <= r.rhs + 1e-12;
  return r;
}

GradientFilterReport largeGradientFilter(const std::vector<DoublingRecord>& records,
                                         double eps, double alpha, int n) {
  GradientFilterReport rep;
  rep.threshold = alpha / (2.0 * n * eps);
  for (std::size_t i = 0; i < records.size(); ++i)
    if (records[i].dv_at_contact.norm() >= rep.threshold * (1.0 - 1e-9))
      rep.kept.push_back(i);
  rep.retention = records.empty() ? 1.0 : double(rep.kept.size()) / double(records.size());
  return rep;
}

}  // namespace malab
