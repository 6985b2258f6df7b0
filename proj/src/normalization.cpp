#include "malab/normalization.hpp"

#include <algorithm>
#include <cmath>

namespace malab {

namespace {

// Gauss-Jordan inverse for k x k with k <= 4 (the lifted Khachiyan system).
bool invertSmall(double a[4][4], int k, double out[4][4]) {
  double w[4][8];
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      w[i][j] = a[i][j];
      w[i][k + j] = i == j ? 1.0 : 0.0;
    }
  for (int col = 0; col < k; ++col) {
    int piv = col;
    for (int r = col + 1; r < k; ++r)
      if (std::abs(w[r][col]) > std::abs(w[piv][col])) piv = r;
    if (std::abs(w[piv][col]) < 1e-300) return false;
    if (piv != col)
      for (int j = 0; j < 2 * k; ++j) std::swap(w[piv][j], w[col][j]);
    double d = w[col][col];
    for (int j = 0; j < 2 * k; ++j) w[col][j] /= d;
    for (int r = 0; r < k; ++r) {
      if (r == col) continue;
      double f = w[r][col];
      for (int j = 0; j < 2 * k; ++j) w[r][j] -= f * w[col][j];
    }
  }
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) out[i][j] = w[i][k + j];
  return true;
}

// Uniformly spread probe directions for support sampling.
std::vector<Vec> probeDirections(int n) {
  std::vector<Vec> dirs;
  if (n == 1) {
    dirs.push_back(Vec::of1(1.0));
    dirs.push_back(Vec::of1(-1.0));
  } else if (n == 2) {
    for (int k = 0; k < 256; ++k) {
      double t = 2 * M_PI * k / 256;
      dirs.push_back(Vec(std::cos(t), std::sin(t)));
    }
  } else {
    // Fibonacci sphere
    const int m = 512;
    const double ga = M_PI * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < m; ++k) {
      double z = 1.0 - 2.0 * (k + 0.5) / m;
      double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      dirs.push_back(Vec(r * std::cos(ga * k), r * std::sin(ga * k), z));
    }
  }
  return dirs;
}

}  // namespace

Ellipsoid khachiyanMvee(const std::vector<Vec>& pts, double tol, int max_iter) {
  const int m = int(pts.size());
  if (m == 0) throw LabError("DegenerateSection", "no points");
  const int n = pts[0].n;
  const int k = n + 1;

  std::vector<double> w(m, 1.0 / m);
  std::vector<double> M(m, 0.0);
  for (int iter = 0; iter < max_iter; ++iter) {
    double X[4][4] = {};
    for (int i = 0; i < m; ++i) {
      double q[4];
      for (int d = 0; d < n; ++d) q[d] = pts[i][d];
      q[n] = 1.0;
      for (int r = 0; r < k; ++r)
        for (int c = 0; c < k; ++c) X[r][c] += w[i] * q[r] * q[c];
    }
    double Xi[4][4];
    if (!invertSmall(X, k, Xi))
      throw LabError("DegenerateSection", "hull has empty interior");

    int jmax = 0, jmin = -1;
    double best_hi = -1e300, best_lo = 1e300;
    for (int i = 0; i < m; ++i) {
      double q[4];
      for (int d = 0; d < n; ++d) q[d] = pts[i][d];
      q[n] = 1.0;
      double s = 0;
      for (int r = 0; r < k; ++r)
        for (int c = 0; c < k; ++c) s += q[r] * Xi[r][c] * q[c];
      M[i] = s;
      if (s > best_hi) {
        best_hi = s;
        jmax = i;
      }
      if (w[i] > 1e-12 && s < best_lo) {
        best_lo = s;
        jmin = i;
      }
    }
    double eps_hi = best_hi / k - 1.0;
    double eps_lo = jmin >= 0 ? 1.0 - best_lo / k : 0.0;
    if (eps_hi <= tol && eps_lo <= tol) break;

    int j = (eps_hi >= eps_lo) ? jmax : jmin;
    double lam = (M[j] - k) / (k * (M[j] - 1.0));
    if (j == jmin) lam = std::max(lam, -w[j] / (1.0 - w[j]));
    for (int i = 0; i < m; ++i) w[i] *= (1.0 - lam);
    w[j] += lam;
  }

  Ellipsoid e;
  e.center = Vec(n);
  for (int i = 0; i < m; ++i) e.center = e.center + pts[i] * w[i];
  SymMat sig(n);
  for (int i = 0; i < m; ++i)
    for (int r = 0; r < n; ++r)
      for (int c = r; c < n; ++c) sig.add(r, c, w[i] * pts[i][r] * pts[i][c]);
  for (int r = 0; r < n; ++r)
    for (int c = r; c < n; ++c) sig.add(r, c, -e.center[r] * e.center[c]);
  if (sig.det() < 1e-30) throw LabError("DegenerateSection", "hull dimension below n");
  e.shape = sig.inverse().scaled(1.0 / n);
  return e;
}

AffineMap johnNormalize(const SectionSet& s, double tol) {
  const Grid& g = s.grid;
  const int n = g.dim;
  if (s.member_count == 0) throw LabError("DegenerateSection", "empty section");

  auto shell = shellCells(s);

  // Support-sampled extreme points seed the ellipsoid; the same supports give
  // the inscribed shrink factor.
  auto dirs = probeDirections(n);
  std::vector<Vec> extremes;
  std::vector<double> support(dirs.size(), -1e300);
  extremes.reserve(dirs.size());
  for (size_t di = 0; di < dirs.size(); ++di) {
    double best = -1e300;
    std::int64_t arg = shell.empty() ? -1 : shell[0];
    for (std::int64_t id : shell) {
      double v = dirs[di].dot(g.center(id));
      if (v > best) {
        best = v;
        arg = id;
      }
    }
    support[di] = best;
    extremes.push_back(g.center(arg));
  }
  std::sort(extremes.begin(), extremes.end(), [](const Vec& a, const Vec& b) {
    for (int d = 0; d < a.n; ++d)
      if (a[d] != b[d]) return a[d] < b[d];
    return false;
  });
  extremes.erase(std::unique(extremes.begin(), extremes.end(),
                             [](const Vec& a, const Vec& b) {
                               for (int d = 0; d < a.n; ++d)
                                 if (a[d] != b[d]) return false;
                               return true;
                             }),
                 extremes.end());

  Ellipsoid mvee = khachiyanMvee(extremes, tol);
  SymMat root = sqrtSpd(mvee.shape);             // MVEE = {|root (x-c)| <= 1}
  SymMat broot = sqrtSpd(mvee.shape.inverse());  // maps the unit ball onto the MVEE

  // largest factor with  c + t * broot * B_1  inside every support halfspace
  double t = 1.0;
  for (size_t di = 0; di < dirs.size(); ++di) {
    double denom = broot.apply(dirs[di]).norm();
    if (denom < 1e-14) continue;
    t = std::min(t, (support[di] - dirs[di].dot(mvee.center)) / denom);
  }
  t = std::max(t, 1.0 / n);  // the John guarantee

  AffineMap map;
  map.A = root.asMat().scaled(1.0 / t);
  map.b = map.A.apply(mvee.center) * -1.0;
  return map;
}

ProblemInstance ProblemInstance::plain(std::shared_ptr<const Potential> u, const Grid& g,
                                       const SectionSet& s, double p) {
  ProblemInstance P;
  P.u = u;
  P.grid = g;
  P.section = s;
  P.lambda_t = P.Lambda_t = 1.0;
  auto up = P.u;
  P.A = [up](const Vec& x) { return cofactorAt(*up, x); };
  const int n = g.dim;
  P.b = [n](const Vec&) { return Vec::zero(n); };
  P.c = [](const Vec&) { return 0.0; };
  P.f = [](const Vec&) { return 0.0; };
  P.p = p;
  return P;
}

double lpNorm(const Grid& g, const CellSet& cells, const ScalarField& f, double p) {
  double acc = 0;
  cells.forEach([&](std::int64_t id) { acc += std::pow(std::abs(f(g.center(id))), p); });
  return std::pow(acc * g.cellMeasure(), 1.0 / p);
}

double lpNormVec(const Grid& g, const CellSet& cells, const VectorField& f, double p) {
  double acc = 0;
  cells.forEach([&](std::int64_t id) { acc += std::pow(f(g.center(id)).norm(), p); });
  return std::pow(acc * g.cellMeasure(), 1.0 / p);
}

RescaledInstance rescaleProblem(const ProblemInstance& P, const AffineMap& T,
                                const Grid& normalized_grid) {
  const int n = P.grid.dim;
  double det_ah = std::abs(T.detA());
  if (det_ah < 1e-300) throw LabError("SingularMap", "rescaling map is singular");
  double scale = std::pow(det_ah, -2.0 / n);
  double factor = std::pow(det_ah, 2.0 / n);

  RescaledInstance R;
  R.map = T;
  auto u_tilde = std::make_shared<AffinePullbackPotential>(P.u, T.A, T.b, scale);

  AffineMap Tinv = T.inverse();
  Vec x0_tilde = Tinv.apply(P.section.center);
  double h_tilde = scale * P.section.height;
  SectionSet s_tilde = sectionScan(*u_tilde, normalized_grid, x0_tilde, h_tilde);

  // One-cell slack on the normalized shape bounds, measured about the origin
  // (the image of the ellipsoid center).
  double cell = normalized_grid.spacing() * std::sqrt(double(n));
  R.contains_b1 = true;
  R.inside_bn = true;
  for (std::int64_t id = 0; id < normalized_grid.cellCount(); ++id) {
    double rr = normalized_grid.center(id).norm();
    bool member = s_tilde.cells.test(id);
    if (member && rr > n + cell) R.inside_bn = false;
    if (!member && rr < 1 - cell) R.contains_b1 = false;
  }

  ProblemInstance Q;
  Q.u = u_tilde;
  Q.grid = normalized_grid;
  Q.section = s_tilde;
  Q.lambda_t = P.lambda_t;
  Q.Lambda_t = P.Lambda_t;
  Q.p = P.p;
  {
    Mat ahi = Tinv.A;
    Mat ahit = ahi.transpose();
    auto A0 = P.A;
    auto b0 = P.b;
    auto c0 = P.c;
    auto f0 = P.f;
    AffineMap Tc = T;
    Q.A = [=](const Vec& x) {
      Mat a = A0(Tc.apply(x)).asMat();
      return SymMat::fromMatSymmetrized(ahi.mul(a).mul(ahit)).scaled(factor);
    };
    Q.b = [=](const Vec& x) { return ahi.apply(b0(Tc.apply(x))) * factor; };
    Q.c = [=](const Vec& x) { return factor * c0(Tc.apply(x)); };
    Q.f = [=](const Vec& x) { return factor * f0(Tc.apply(x)); };
  }

  R.norms.b_Lp = lpNormVec(normalized_grid, s_tilde.cells, Q.b, P.p);
  R.norms.b_Ln = lpNormVec(normalized_grid, s_tilde.cells, Q.b, n);
  R.norms.c_Ln = lpNorm(normalized_grid, s_tilde.cells, Q.c, n);
  R.norms.f_Ln = lpNorm(normalized_grid, s_tilde.cells, Q.f, n);
  R.height = h_tilde;
  R.instance = std::move(Q);
  return R;
}

RescaledInstance normalizeInstance(const ProblemInstance& P, const Grid& normalized_grid) {
  AffineMap N = johnNormalize(P.section);
  return rescaleProblem(P, N.inverse(), normalized_grid);
}

std::vector<DetAhRow> detAhSweep(const Potential& u, const Grid& g, const Vec& x0,
                                 const std::vector<double>& heights) {
  std::vector<DetAhRow> rows;
  for (double h : heights) {
    SectionSet s = sectionScan(u, g, x0, h);
    if (!s.compactly_contained)
      throw LabError("NotCompactlyContained", "section leaves the grid interior");
    AffineMap N = johnNormalize(s);
    DetAhRow row;
    row.height = h;
    row.det_ah = std::abs(1.0 / N.detA());
    row.ratio = row.det_ah / std::pow(h, g.dim / 2.0);
    row.inv_norm = operatorNorm(N.A);  // A_h^{-1} = N
    rows.push_back(row);
  }
  return rows;
}

InvNormCheck inverseNormBoundCheck(const std::vector<DetAhRow>& rows, double alpha_star,
                                   double tau) {
  InvNormCheck out;
  if (rows.empty()) return out;
  double exp_target = -1.0 / (1.0 + alpha_star);
  size_t anchor = 0;
  for (size_t i = 1; i < rows.size(); ++i)
    if (rows[i].height > rows[anchor].height) anchor = i;
  out.coeff = rows[anchor].inv_norm / std::pow(rows[anchor].height, exp_target);
  out.pass = true;
  std::vector<double> hs, ns;
  for (const auto& r : rows) {
    double rhs = out.coeff * std::pow(r.height, exp_target);
    out.lhs.push_back(r.inv_norm);
    out.rhs.push_back(rhs);
    if (r.inv_norm > rhs * (1.0 + tau)) out.pass = false;
    hs.push_back(r.height);
    ns.push_back(r.inv_norm);
  }
  if (rows.size() >= 2) out.exponent = logLogFit(hs, ns).slope;
  return out;
}

double envelopeViolation(const ProblemInstance& P, int stride) {
  double worst = 0;
  std::int64_t i = 0;
  P.section.cells.forEach([&](std::int64_t id) {
    if (i++ % stride) return;
    Vec x = P.grid.center(id);
    SymMat U = cofactorAt(*P.u, x);
    SymMat Uri = sqrtSpd(U).inverse();
    Mat m = Uri.asMat().mul(P.A(x).asMat()).mul(Uri.asMat());
    EigenSym e = eigenSym(SymMat::fromMatSymmetrized(m));
    for (int k = 0; k < P.grid.dim; ++k) {
      worst = std::max(worst, P.lambda_t - e.values[k]);
      worst = std::max(worst, e.values[k] - P.Lambda_t);
    }
  });
  return worst;
}

double cofactorTransformError(const Potential& u, const Potential& u_tilde,
                              const AffineMap& T, const std::vector<Vec>& pts) {
  double det_ah = std::abs(T.detA());
  double factor = std::pow(det_ah, 2.0 / u.dim());
  Mat ahi = T.A.inverse();
  Mat ahit = ahi.transpose();
  double worst = 0;
  for (const Vec& x : pts) {
    SymMat lhs = cofactorAt(u_tilde, x);
    Mat rhs = ahi.mul(cofactorAt(u, T.apply(x)).asMat()).mul(ahit).scaled(factor);
    worst = std::max(worst, (lhs - SymMat::fromMatSymmetrized(rhs)).hsNorm());
  }
  return worst;
}

}  // namespace malab
