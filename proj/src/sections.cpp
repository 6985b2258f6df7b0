#include "malab/sections.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace malab {

namespace {

// Builds a SectionSet from a byte mask over a subbox of the grid.
SectionSet finalize(const Grid& g, const Vec& x, double h,
                    const std::array<int, 3>& blo, const std::array<int, 3>& bhi,
                    const std::vector<std::uint8_t>& mask) {
  SectionSet s;
  s.grid = g;
  s.center = x;
  s.height = h;
  s.cells = CellSet(g);
  s.boundary = CellSet(g);
  std::array<int, 3> mlo{g.cells[0], g.cells[1], g.cells[2]}, mhi{-1, -1, -1};

  std::array<int, 3> ext{1, 1, 1};
  for (int d = 0; d < g.dim; ++d) ext[d] = bhi[d] - blo[d] + 1;
  auto maskId = [&](int i, int j, int k) {
    return (i - blo[0]) + std::int64_t(ext[0]) * ((j - blo[1]) + std::int64_t(ext[1]) * (k - blo[2]));
  };

  int min_bdist = g.cells[0];
  for (int k = blo[2]; k <= bhi[2]; ++k)
    for (int j = blo[1]; j <= bhi[1]; ++j)
      for (int i = blo[0]; i <= bhi[0]; ++i) {
        if (!mask[size_t(maskId(i, j, k))]) continue;
        s.cells.set(g.id(i, j, k));
        std::array<int, 3> c{i, j, k};
        for (int d = 0; d < g.dim; ++d) {
          mlo[d] = std::min(mlo[d], c[d]);
          mhi[d] = std::max(mhi[d], c[d]);
        }
        min_bdist = std::min(min_bdist, g.boundaryDistance(c));
      }
  s.member_count = s.cells.count();
  s.measure = double(s.member_count) * g.cellMeasure();
  s.box_lo = mlo;
  s.box_hi = mhi;
  s.compactly_contained = s.member_count > 0 && min_bdist >= 2;

  // Boundary cells: outside axis-neighbors of members.
  s.cells.forEach([&](std::int64_t id) {
    auto c = g.coords(id);
    for (int d = 0; d < g.dim; ++d)
      for (int off : {-1, 1}) {
        auto cc = c;
        cc[d] += off;
        if (!g.inBounds(cc)) continue;
        std::int64_t nid = g.id(cc[0], cc[1], cc[2]);
        if (!s.cells.test(nid)) s.boundary.set(nid);
      }
  });
  return s;
}

}  // namespace

SectionSet sectionScanSerial(const Potential& u, const Grid& g, const Vec& x, double h) {
  if (!g.containsPoint(x)) throw LabError("OutOfDomain", "section center outside grid");
  const double ux = u.value(x);
  const Vec du = u.grad(x);
  std::array<int, 3> blo{0, 0, 0}, bhi{0, 0, 0};
  for (int d = 0; d < g.dim; ++d) bhi[d] = g.cells[d] - 1;
  std::array<int, 3> ext{1, 1, 1};
  for (int d = 0; d < g.dim; ++d) ext[d] = g.cells[d];
  std::vector<std::uint8_t> mask(size_t(ext[0]) * ext[1] * ext[2], 0);
  std::int64_t total = std::int64_t(ext[0]) * ext[1] * ext[2];
  for (std::int64_t m = 0; m < total; ++m) {
    int i = int(m % ext[0]);
    int j = int((m / ext[0]) % ext[1]);
    int k = int(m / (std::int64_t(ext[0]) * ext[1]));
    Vec y = g.center({i, j, k});
    mask[size_t(m)] = (u.value(y) - ux - du.dot(y - x)) < h ? 1 : 0;
  }
  return finalize(g, x, h, blo, bhi, mask);
}

SectionSet sectionScan(const Potential& u, const Grid& g, const Vec& x, double h) {
  if (!g.containsPoint(x)) throw LabError("OutOfDomain", "section center outside grid");
  const double ux = u.value(x);
  const Vec du = u.grad(x);

  // Bounding-box prefilter seeded from the local curvature; grown until the
  // two-cell shell inside the box is member-free (or the box hits the grid).
  double lam = std::max(minEigenvalue(u.hess(x)), 1e-8);
  double r = 2.0 * std::sqrt(2.0 * std::max(h, 1e-12) / lam);

  while (true) {
    std::array<int, 3> blo{0, 0, 0}, bhi{0, 0, 0};
    bool clipped[3] = {false, false, false};
    for (int d = 0; d < g.dim; ++d) {
      int ci = int(std::floor((x[d] - g.lo[d]) / g.dx[d]));
      int w = int(std::ceil(r / g.dx[d])) + 2;
      blo[d] = ci - w;
      bhi[d] = ci + w;
      if (blo[d] <= 0) {
        blo[d] = 0;
        clipped[d] = true;
      }
      if (bhi[d] >= g.cells[d] - 1) {
        bhi[d] = g.cells[d] - 1;
        clipped[d] = true;
      }
    }
    std::array<int, 3> ext{1, 1, 1};
    for (int d = 0; d < g.dim; ++d) ext[d] = bhi[d] - blo[d] + 1;
    std::int64_t total = std::int64_t(ext[0]) * ext[1] * ext[2];
    std::vector<std::uint8_t> mask(size_t(total), 0);

#pragma omp parallel for schedule(static)
    for (std::int64_t m = 0; m < total; ++m) {
      int i = blo[0] + int(m % ext[0]);
      int j = blo[1] + int((m / ext[0]) % ext[1]);
      int k = blo[2] + int(m / (std::int64_t(ext[0]) * ext[1]));
      Vec y = g.center({i, j, k});
      mask[size_t(m)] = (u.value(y) - ux - du.dot(y - x)) < h ? 1 : 0;
    }

    // Any member on the growable shell means the box may be too small.
    bool escape = false;
    bool can_grow = false;
    for (int d = 0; d < g.dim && !escape; ++d) {
      if (clipped[d]) continue;
      can_grow = true;
      for (int side = 0; side < 2 && !escape; ++side) {
        for (int layer = 0; layer < 2 && !escape; ++layer) {
          int plane = side == 0 ? blo[d] + layer : bhi[d] - layer;
          // scan the slab {x_d = plane}
          std::array<int, 3> lo2 = blo, hi2 = bhi;
          lo2[d] = hi2[d] = plane;
          for (int k = lo2[2]; k <= hi2[2] && !escape; ++k)
            for (int j = lo2[1]; j <= hi2[1] && !escape; ++j)
              for (int i = lo2[0]; i <= hi2[0] && !escape; ++i) {
                std::int64_t m = (i - blo[0]) +
                                 std::int64_t(ext[0]) *
                                     ((j - blo[1]) + std::int64_t(ext[1]) * (k - blo[2]));
                if (mask[size_t(m)]) escape = true;
              }
        }
      }
    }
    bool whole_grid = true;
    for (int d = 0; d < g.dim; ++d)
      if (blo[d] != 0 || bhi[d] != g.cells[d] - 1) whole_grid = false;
    if (escape && can_grow && !whole_grid) {
      r *= 2.0;
      continue;
    }
    return finalize(g, x, h, blo, bhi, mask);
  }
}

std::vector<std::int64_t> shellCells(const SectionSet& s) {
  const Grid& g = s.grid;
  std::vector<std::int64_t> shell;
  s.cells.forEach([&](std::int64_t id) {
    auto c = g.coords(id);
    for (int d = 0; d < g.dim; ++d)
      for (int off : {-1, 1}) {
        auto cc = c;
        cc[d] += off;
        if (!g.inBounds(cc) || !s.cells.test(g.id(cc[0], cc[1], cc[2]))) {
          shell.push_back(id);
          return;
        }
      }
  });
  return shell;
}

std::vector<VolumeRatioRow> volumeRatioSweep(const Potential& u, const Grid& g,
                                             const Vec& x,
                                             const std::vector<double>& heights) {
  std::vector<VolumeRatioRow> rows;
  for (double h : heights) {
    SectionSet s = sectionScan(u, g, x, h);
    if (!s.compactly_contained)
      throw LabError("NotCompactlyContained", "section leaves the grid interior");
    double max_r = 0;
    for (std::int64_t id : shellCells(s)) max_r = std::max(max_r, (g.center(id) - x).norm());
    rows.push_back({h, s.measure, s.measure / std::pow(h, g.dim / 2.0), max_r});
  }
  return rows;
}

EngulfingEstimate estimateEngulfing(const Potential& u, const Grid& g,
                                    const std::vector<std::pair<Vec, double>>& samples) {
  EngulfingEstimate est;
  for (const auto& [y, h] : samples) {
    SectionSet big = sectionScan(u, g, y, 2 * h);
    if (!big.compactly_contained)
      throw LabError("NotCompactlyContained", "S(y,2h) must be compactly contained");
    SectionSet s = sectionScan(u, g, y, h);
    auto shell = shellCells(s);

    // Probe points: shell cells plus a strided interior sample.
    std::vector<std::int64_t> probes = shell;
    {
      std::int64_t stride = std::max<std::int64_t>(1, s.member_count / 256);
      std::int64_t i = 0;
      s.cells.forEach([&](std::int64_t id) {
        if (i++ % stride == 0) probes.push_back(id);
      });
    }

    double worst = 1.0;
#pragma omp parallel for schedule(dynamic) reduction(max : worst)
    for (std::int64_t pi = 0; pi < std::int64_t(probes.size()); ++pi) {
      Vec px = g.center(probes[size_t(pi)]);
      Vec du = u.grad(px);
      double ux = u.value(px);
      double m = 0;
      for (std::int64_t zid : shell) {
        Vec z = g.center(zid);
        m = std::max(m, u.value(z) - ux - du.dot(z - px));
      }
      worst = std::max(worst, m / h);
    }
    est.per_sample.push_back(worst);
    est.theta0 = std::max(est.theta0, worst);
  }
  return est;
}

SizeExponentFit estimateSizeExponent(const Potential& u, const Grid& g, const Vec& x,
                                     const std::vector<double>& heights) {
  if (heights.size() < 4) throw LabError("FitDegenerate", "need at least 4 heights");
  std::vector<double> hs, rs;
  for (double h : heights) {
    SectionSet s = sectionScan(u, g, x, h);
    if (!s.compactly_contained)
      throw LabError("NotCompactlyContained", "section leaves the grid interior");
    double max_r = 0;
    for (std::int64_t id : shellCells(s)) max_r = std::max(max_r, (g.center(id) - x).norm());
    hs.push_back(h);
    rs.push_back(max_r);
  }
  SizeExponentFit out;
  out.fit = logLogFit(hs, rs);
  out.mu = out.fit.slope;
  out.coeff = std::exp(out.fit.intercept);
  return out;
}

InclusionCheck inclusionCheck(const Potential& u, const Grid& g, const Vec& x0,
                              double t, double r, double s, const Vec& x1, double c0,
                              double p1) {
  if (!(0 < r && r <= s && s <= 1))
    throw LabError("PreconditionViolation", "need 0 < r <= s <= 1");
  SectionSet s2t = sectionScan(u, g, x0, 2 * t);
  if (!s2t.compactly_contained)
    throw LabError("PreconditionViolation", "S(x0,2t) must be compactly contained");
  SectionSet srt = sectionScan(u, g, x0, r * t);
  if (!srt.memberAtPoint(x1))
    throw LabError("PreconditionViolation", "x1 must lie in S(x0, r t)");
  SectionSet target = sectionScan(u, g, x0, s * t);

  InclusionCheck out;
  double eta = c0 * std::pow(s - r, p1) * t;
  SectionSet inner = sectionScan(u, g, x1, eta);
  out.witness = inner.cells.firstNotIn(target.cells);
  out.pass = out.witness < 0;

  // Largest admissible height: first complement cell reached by the tilt at x1.
  double ux1 = u.value(x1);
  Vec du1 = u.grad(x1);
  double eta_max = 1e300;
  target.boundary.forEach([&](std::int64_t id) {
    eta_max = std::min(eta_max, tiltedHeight(u, x1, du1, g.center(id)) );
  });
  (void)ux1;
  out.c0_measured = (s > r) ? eta_max / (std::pow(s - r, p1) * t) : 0.0;
  return out;
}

InclusionCheck exclusionCheck(const Potential& u, const Grid& g, const Vec& x0,
                              double t, double r, double s, const Vec& x1, double c0,
                              double p1) {
  if (!(0 < r && r < s && s < 1))
    throw LabError("PreconditionViolation", "need 0 < r < s < 1");
  SectionSet st = sectionScan(u, g, x0, t);
  SectionSet sst = sectionScan(u, g, x0, s * t);
  if (!st.memberAtPoint(x1) || sst.memberAtPoint(x1))
    throw LabError("PreconditionViolation", "x1 must lie in S(x0,t) \\ S(x0,st)");
  SectionSet srt = sectionScan(u, g, x0, r * t);

  InclusionCheck out;
  double eta = c0 * std::pow(s - r, p1) * t;
  SectionSet inner = sectionScan(u, g, x1, eta);
  out.pass = !inner.cells.intersects(srt.cells);
  if (!out.pass) out.witness = inner.cells.firstNotIn(CellSet(g));

  Vec du1 = u.grad(x1);
  double eta_max = 1e300;
  srt.cells.forEach([&](std::int64_t id) {
    eta_max = std::min(eta_max, tiltedHeight(u, x1, du1, g.center(id)));
  });
  out.c0_measured = eta_max / (std::pow(s - r, p1) * t);
  return out;
}

C1AlphaFit estimateC1Alpha(const Potential& u,
                           const std::vector<std::pair<Vec, Vec>>& pairs) {
  std::vector<double> ds, dg;
  for (const auto& [a, b] : pairs) {
    double d = (a - b).norm();
    double gdiff = (u.grad(a) - u.grad(b)).norm();
    if (d > 0 && gdiff > 0) {
      ds.push_back(d);
      dg.push_back(gdiff);
    }
  }
  if (ds.size() < 4) throw LabError("FitDegenerate", "need at least 4 usable pairs");
  C1AlphaFit out;
  out.fit = logLogFit(ds, dg);
  out.alpha_star = std::min(1.0, out.fit.slope);
  out.coeff = std::exp(out.fit.intercept);
  return out;
}

GeometryConstants estimateGeometryConstants(const Potential& u, const Grid& g,
                                            double t0, int sample_count,
                                            std::uint64_t seed) {
  const int n = g.dim;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  GeometryConstants gc;
  SectionSet base = sectionScan(u, g, Vec::zero(n), t0);

  // Random centers from the quarter-height section, dyadic heights.
  auto randomMember = [&](const SectionSet& s) {
    std::vector<std::int64_t> ids;
    s.cells.forEach([&](std::int64_t id) { ids.push_back(id); });
    std::uniform_int_distribution<std::int64_t> pick(0, std::int64_t(ids.size()) - 1);
    return g.center(ids[size_t(pick(rng))]);
  };
  SectionSet quarter = sectionScan(u, g, Vec::zero(n), t0 / 4);

  std::vector<std::pair<Vec, double>> samples;
  for (int i = 0; i < sample_count; ++i) {
    double h = t0 / (4 << (i % 3));
    samples.push_back({randomMember(quarter), h});
  }
  gc.theta0 = estimateEngulfing(u, g, samples).theta0;
  gc.K = 2.0 * gc.theta0 * gc.theta0;

  std::vector<double> heights;
  for (int i = 0; i < 6; ++i) heights.push_back(t0 / (2 << i));
  gc.mu = estimateSizeExponent(u, g, Vec::zero(n), heights).mu;
  gc.p1 = (n + 1) / gc.mu;

  // Largest inclusion coefficient over a (r, s, x1) sweep.
  gc.c0 = 1e300;
  for (double r : {0.25, 0.5})
    for (double s : {0.5, 0.75, 1.0}) {
      if (r >= s) continue;
      SectionSet srt = sectionScan(u, g, Vec::zero(n), r * t0 / 2);
      for (int rep = 0; rep < 3; ++rep) {
        Vec x1 = randomMember(srt);
        auto chk = inclusionCheck(u, g, Vec::zero(n), t0 / 2, r, s, x1, 1e-9, gc.p1);
        gc.c0 = std::min(gc.c0, chk.c0_measured);
      }
    }

  // Section-in-section dilation: S(x,t) inside S(0, t0) pushed through K.
  gc.K_hat = gc.K;
  for (int rep = 0; rep < std::max(3, sample_count / 2); ++rep) {
    Vec xc = randomMember(quarter);
    double t = t0 / 8;
    SectionSet skt = sectionScan(u, g, xc, gc.K * t);
    Vec du0 = u.grad(Vec::zero(n));
    double ux0 = u.value(Vec::zero(n));
    double need = 0;
    for (std::int64_t id : shellCells(skt)) {
      Vec z = g.center(id);
      need = std::max(need, u.value(z) - ux0 - du0.dot(z - Vec::zero(n)));
    }
    gc.K_hat = std::max(gc.K_hat, need / t0 * 1.05);
  }

  // Gradient Hoelder exponent from random pairs in the half-height section.
  SectionSet half = sectionScan(u, g, Vec::zero(n), t0 / 2);
  std::vector<std::pair<Vec, Vec>> pairs;
  for (int i = 0; i < 200; ++i) pairs.push_back({randomMember(half), randomMember(half)});
  gc.alpha_star = estimateC1Alpha(u, pairs).alpha_star;

  gc.provenance = "sweep t0=" + std::to_string(t0) + " samples=" +
                  std::to_string(sample_count) + " seed=" + std::to_string(seed);
  return gc;
}

}  // namespace malab
