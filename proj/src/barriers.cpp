#include "malab/barriers.hpp"

#include <algorithm>
#include <cmath>

namespace malab {

BadSet badSet(const Potential& u, double eps, const SectionSet& s3) {
  const Grid& g = s3.grid;
  BadSet bad;
  bad.eps = eps;
  bad.cells = CellSet(g);
  double integral = 0;
  double threshold = 1.0 / eps;
  s3.cells.forEach([&](std::int64_t id) {
    double norm = u.hess(g.center(id)).hsNorm();
    integral += norm;
    if (norm >= threshold) bad.cells.set(id);
  });
  bad.measure = double(bad.cells.count()) * g.cellMeasure();
  bad.hess_integral = integral * g.cellMeasure();
  bad.chebyshev_bound = eps * bad.hess_integral;
  return bad;
}

MollifierField mollifier(const BadSet& bad, const SectionSet& s4, double eps) {
  const Grid& g = s4.grid;
  if (!bad.cells.isSubsetOf(s4.cells))
    throw LabError("PreconditionViolation", "bad set must sit inside the domain");
  MollifierField phi;
  phi.grid = g;
  phi.values.assign(size_t(g.cellCount()), 0.0);
  s4.cells.forEach([&](std::int64_t id) { phi.values[size_t(id)] = eps; });
  // one-cell dilation ring carries the ramp midpoint
  bad.cells.forEach([&](std::int64_t id) {
    auto c = g.coords(id);
    for (int d = 0; d < g.dim; ++d)
      for (int off : {-1, 1}) {
        auto cc = c;
        cc[d] += off;
        if (!g.inBounds(cc)) continue;
        std::int64_t nid = g.id(cc[0], cc[1], cc[2]);
        if (!bad.cells.test(nid) && s4.cells.test(nid))
          phi.values[size_t(nid)] = 0.5 * (1.0 + eps);
      }
  });
  bad.cells.forEach([&](std::int64_t id) { phi.values[size_t(id)] = 1.0; });
  double acc = 0;
  s4.cells.forEach([&](std::int64_t id) { acc += phi.values[size_t(id)]; });
  phi.integral = acc * g.cellMeasure();
  return phi;
}

// ---------------------------------------------------------------------------
// BarrierField

BarrierField::BarrierField(const Grid& g, CellSet domain, std::vector<double> values,
                           std::vector<ConvergencePoint> trace)
    : grid_(g), domain_(std::move(domain)), values_(std::move(values)),
      trace_(std::move(trace)) {
  domain_.forEach([&](std::int64_t id) {
    sup_abs_ = std::max(sup_abs_, std::abs(values_[size_t(id)]));
  });
}

double BarrierField::value(const Vec& x) const {
  const Grid& g = grid_;
  std::array<int, 3> base{0, 0, 0};
  std::array<double, 3> f{0, 0, 0};
  for (int d = 0; d < g.dim; ++d) {
    double t = (x[d] - g.lo[d]) / g.dx[d] - 0.5;
    int i = std::clamp(int(std::floor(t)), 0, g.cells[d] - 2);
    base[d] = i;
    f[d] = std::clamp(t - i, 0.0, 1.0);
  }
  double acc = 0;
  for (int c = 0; c < (1 << g.dim); ++c) {
    double w = 1.0;
    auto cc = base;
    for (int d = 0; d < g.dim; ++d) {
      if (c & (1 << d)) {
        cc[d] += 1;
        w *= f[d];
      } else {
        w *= 1.0 - f[d];
      }
    }
    acc += w * values_[size_t(g.id(cc[0], cc[1], cc[2]))];
  }
  return acc;
}

Vec BarrierField::grad(const Vec& x) const {
  const Grid& g = grid_;
  auto c = g.locate(x);
  Vec r(g.dim);
  for (int d = 0; d < g.dim; ++d) {
    auto cp = c, cm = c;
    cp[d] = std::min(cp[d] + 1, g.cells[d] - 1);
    cm[d] = std::max(cm[d] - 1, 0);
    double vp = values_[size_t(g.id(cp[0], cp[1], cp[2]))];
    double vm = values_[size_t(g.id(cm[0], cm[1], cm[2]))];
    r[d] = (vp - vm) / ((cp[d] - cm[d]) * g.dx[d]);
  }
  return r;
}

SymMat BarrierField::hess(const Vec& x) const {
  const Grid& g = grid_;
  auto c = g.locate(x);
  SymMat h(g.dim);
  auto at = [&](std::array<int, 3> cc) {
    for (int d = 0; d < g.dim; ++d) cc[d] = std::clamp(cc[d], 0, g.cells[d] - 1);
    return values_[size_t(g.id(cc[0], cc[1], cc[2]))];
  };
  for (int d = 0; d < g.dim; ++d) {
    auto cp = c, cm = c;
    cp[d] += 1;
    cm[d] -= 1;
    h.set(d, d, (at(cp) - 2 * at(c) + at(cm)) / (g.dx[d] * g.dx[d]));
  }
  for (int d = 0; d < g.dim; ++d)
    for (int e = d + 1; e < g.dim; ++e) {
      auto cpp = c, cpm = c, cmp = c, cmm = c;
      cpp[d] += 1;
      cpp[e] += 1;
      cpm[d] += 1;
      cpm[e] -= 1;
      cmp[d] -= 1;
      cmp[e] += 1;
      cmm[d] -= 1;
      cmm[e] -= 1;
      h.set(d, e, (at(cpp) - at(cpm) - at(cmp) + at(cmm)) / (4 * g.dx[d] * g.dx[e]));
    }
  return h;
}

SmoothField barrierView(std::shared_ptr<const BarrierField> h) {
  return {[h](const Vec& x) { return h->value(x); },
          [h](const Vec& x) { return h->grad(x); },
          [h](const Vec& x) { return h->hess(x); }};
}

// ---------------------------------------------------------------------------
// Monotone wide-stencil Monge-Ampere solver (n = 2)

namespace {

struct StencilPair {
  int v[2];
  int w[2];
};

// 8 directions grouped into 4 orthogonal pairs.
constexpr StencilPair kPairs[4] = {
    {{1, 0}, {0, 1}},
    {{1, 1}, {-1, 1}},
    {{2, 1}, {-1, 2}},
    {{1, 2}, {-2, 1}},
};

}  // namespace

namespace {

// Half-resolution copy of the domain for the cascadic initial guess.
SectionSet coarsen(const SectionSet& fine) {
  const Grid& g = fine.grid;
  SectionSet c;
  c.grid = g;
  for (int d = 0; d < g.dim; ++d) {
    c.grid.cells[d] = std::max(4, g.cells[d] / 2);
    c.grid.dx[d] = g.dx[d] * double(g.cells[d]) / double(c.grid.cells[d]);
  }
  c.center = fine.center;
  c.height = fine.height;
  c.cells = CellSet(c.grid);
  for (std::int64_t id = 0; id < c.grid.cellCount(); ++id) {
    Vec x = c.grid.center(id);
    auto fc = g.locate(x);
    if (fine.cells.test(g.id(fc[0], fc[1], fc[2]))) c.cells.set(id);
  }
  c.member_count = c.cells.count();
  c.measure = double(c.member_count) * c.grid.cellMeasure();
  return c;
}

BarrierField maSolveImpl(const SectionSet& domain, const ScalarField& rhs,
                         const MaSolveOptions& opts, const BarrierField* init) {
  const Grid& g = domain.grid;
  std::vector<std::int64_t> cells;
  cells.reserve(size_t(domain.member_count));
  domain.cells.forEach([&](std::int64_t id) { cells.push_back(id); });

  std::vector<double> f(cells.size());
  for (size_t i = 0; i < cells.size(); ++i) {
    f[i] = rhs(g.center(cells[i]));
    if (!(f[i] > 0)) throw LabError("PreconditionViolation", "rhs must be positive");
  }

  std::vector<double> h(size_t(g.cellCount()), 0.0);
  if (init) {
    for (std::int64_t id : cells) h[size_t(id)] = std::min(0.0, init->value(g.center(id)));
  }
  auto at = [&](int i, int j) {
    if (i < 0 || j < 0 || i >= g.cells[0] || j >= g.cells[1]) return 0.0;
    std::int64_t id = g.id(i, j);
    return domain.cells.test(id) ? h[size_t(id)] : 0.0;
  };

  const double dx = g.dx[0];
  auto pairLengths = [&](const StencilPair& p, double& lv, double& lw) {
    lv = (p.v[0] * p.v[0] + p.v[1] * p.v[1]) * dx * dx;
    lw = (p.w[0] * p.w[0] + p.w[1] * p.w[1]) * dx * dx;
  };

  std::vector<ConvergencePoint> trace;
  int iter = 0;
  double residual = 1e300;
  for (; iter < opts.max_iterations; ++iter) {
    // damped Gauss-Seidel sweep, direction alternating between iterations
    bool forward = (iter % 2) == 0;
    for (size_t k = 0; k < cells.size(); ++k) {
      size_t i = forward ? k : cells.size() - 1 - k;
      auto c = g.coords(cells[i]);
      double target = 1e300;
      for (const auto& p : kPairs) {
        double lv, lw;
        pairLengths(p, lv, lw);
        double av = (at(c[0] + p.v[0], c[1] + p.v[1]) + at(c[0] - p.v[0], c[1] - p.v[1])) / lv;
        double aw = (at(c[0] + p.w[0], c[1] + p.w[1]) + at(c[0] - p.w[0], c[1] - p.w[1])) / lw;
        double cv = 2.0 / lv, cw = 2.0 / lw;
        // (av - cv t)(aw - cw t) = f, smaller root keeps both factors >= 0
        double A = cv * cw, B = av * cw + aw * cv, C = av * aw - f[i];
        double disc = B * B - 4 * A * C;
        double root = (B - std::sqrt(std::max(disc, 0.0))) / (2 * A);
        target = std::min(target, root);
      }
      double& cur = h[size_t(cells[i])];
      cur += opts.damping * (target - cur);
    }
    // monotone operator residual, checked every few sweeps
    if (iter % 4 != 3 && iter != opts.max_iterations - 1) continue;
    residual = 0;
    for (size_t i = 0; i < cells.size(); ++i) {
      auto c = g.coords(cells[i]);
      double det_h = 1e300;
      double center = h[size_t(cells[i])];
      for (const auto& p : kPairs) {
        double lv, lw;
        pairLengths(p, lv, lw);
        double dv = (at(c[0] + p.v[0], c[1] + p.v[1]) - 2 * center +
                     at(c[0] - p.v[0], c[1] - p.v[1])) / lv;
        double dw = (at(c[0] + p.w[0], c[1] + p.w[1]) - 2 * center +
                     at(c[0] - p.w[0], c[1] - p.w[1])) / lw;
        det_h = std::min(det_h, std::max(dv, 0.0) * std::max(dw, 0.0));
      }
      residual = std::max(residual, std::abs(det_h - f[i]));
    }
    trace.push_back({iter, residual});
    if (residual <= opts.tol) break;
  }
  if (residual > opts.tol)
    throw LabError("NoConvergence", "residual " + std::to_string(residual) + " after " +
                                        std::to_string(iter) + " iterations");
  return BarrierField(g, domain.cells, std::move(h), std::move(trace));
}

}  // namespace

BarrierField maDirichletSolve(const SectionSet& domain, const ScalarField& rhs,
                              const MaSolveOptions& opts) {
  const Grid& g = domain.grid;
  if (g.dim != 2) throw LabError("PreconditionViolation", "solver scope is n = 2");
  if (std::abs(g.dx[0] - g.dx[1]) > 1e-12 * g.dx[0])
    throw LabError("PreconditionViolation", "solver requires square cells");
  if (domain.member_count == 0) throw LabError("EmptyDomain", "no interior cells");

  // cascade: solve coarsened copies first, refine from their interpolants
  if (g.cells[0] > 72 && g.cells[1] > 72 && domain.member_count > 200 &&
      opts.max_iterations > 100) {
    SectionSet coarse = coarsen(domain);
    BarrierField ch = maDirichletSolve(coarse, rhs, opts);
    return maSolveImpl(domain, rhs, opts, &ch);
  }
  return maSolveImpl(domain, rhs, opts, nullptr);
}

SubsolutionReport classicalSubsolutionCheck(const Potential& u, const SmoothField& h,
                                            double m, const SectionSet& s2,
                                            const SectionSet& s_alpha, double tau) {
  const Grid& g = s2.grid;
  const int n = g.dim;
  SubsolutionReport rep;
  rep.min_operator_value = 1e300;
  rep.min_vtilde = 1e300;
  std::int64_t annulus = 0, violations = 0;
  s2.cells.forEach([&](std::int64_t id) {
    if (s_alpha.cells.test(id)) return;
    ++annulus;
    Vec x = g.center(id);
    double vt = u.value(x) - h.value(x);
    rep.min_vtilde = std::min(rep.min_vtilde, vt);
    if (vt <= 0) throw LabError("DomainViolation", "u - h not positive on the annulus");
    if (m == 0.0) {
      rep.min_operator_value = std::min(rep.min_operator_value, 0.0);
      return;
    }
    SymMat uinv = u.hess(x).inverse();
    Vec dv = u.grad(x) - h.grad(x);
    double quad = uinv.quadForm(dv);
    double trace_h = traceProduct(uinv, h.hess(x));
    double expr = m * std::pow(vt, -m - 2) * ((m + 1) * quad + vt * (trace_h - n));
    rep.min_operator_value = std::min(rep.min_operator_value, expr);
    if (expr < -tau) ++violations;
  });
  rep.annulus_measure = double(annulus) * g.cellMeasure();
  rep.violation_measure = double(violations) * g.cellMeasure();
  return rep;
}

HarnackBarrier harnackBarrier(const Potential& u, double beta, const SectionSet& s1,
                              const ScalarField& v) {
  const Grid& g = s1.grid;
  HarnackBarrier hb;
  hb.beta = beta;
  double best = -1e300;
  std::int64_t best_id = -1;
  s1.cells.forEach([&](std::int64_t id) {
    Vec x = g.center(id);
    double uu = u.value(x);
    if (uu >= 1.0)
      throw LabError("Degenerate", "potential reaches 1 inside the section");
    double t = v(x) * std::pow(1.0 - uu, beta);
    if (t > best) {
      best = t;
      best_id = id;
    }
  });
  hb.t_min = std::max(0.0, best);
  hb.touch_point = g.center(best_id);
  hb.r = 0.5 * (1.0 - u.value(hb.touch_point));
  return hb;
}

}  // namespace malab
