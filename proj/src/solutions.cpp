#include "malab/solutions.hpp"

#include <cmath>

namespace malab {

namespace {

SmoothField affineField(int dim, double kappa, const Vec& slope) {
  return {[=](const Vec& x) { return kappa + slope.dot(x); },
          [=](const Vec&) { return slope; },
          [dim](const Vec&) { return SymMat(dim); }};
}

SmoothField gaussBump(int dim, double floor_v, double amp, const Vec& z, double sigma) {
  double s2 = sigma * sigma;
  (void)dim;
  return {[=](const Vec& x) {
            return floor_v + amp * std::exp(-0.5 * (x - z).norm2() / s2);
          },
          [=](const Vec& x) {
            double e = amp * std::exp(-0.5 * (x - z).norm2() / s2);
            return (x - z) * (-e / s2);
          },
          [=](const Vec& x) {
            Vec d = x - z;
            double e = amp * std::exp(-0.5 * d.norm2() / s2);
            SymMat h(x.n);
            for (int i = 0; i < x.n; ++i)
              for (int j = i; j < x.n; ++j)
                h.set(i, j, e * (d[i] * d[j] / (s2 * s2) - (i == j ? 1.0 / s2 : 0.0)));
            return h;
          }};
}

SmoothField sumFields(std::vector<SmoothField> parts) {
  auto p = std::make_shared<std::vector<SmoothField>>(std::move(parts));
  return {[p](const Vec& x) {
            double s = 0;
            for (const auto& f : *p) s += f.value(x);
            return s;
          },
          [p](const Vec& x) {
            Vec s = Vec::zero(x.n);
            for (const auto& f : *p) s = s + f.grad(x);
            return s;
          },
          [p](const Vec& x) {
            SymMat s(x.n);
            for (const auto& f : *p) s = s + f.hess(x);
            return s;
          }};
}

// g(u) with g(s) = a0 + a1 s + a2 s^2, nondecreasing on the section range.
SmoothField composedField(std::shared_ptr<const Potential> u, double a0, double a1,
                          double a2) {
  return {[=](const Vec& x) {
            double s = u->value(x);
            return a0 + a1 * s + a2 * s * s;
          },
          [=](const Vec& x) {
            double s = u->value(x);
            return u->grad(x) * (a1 + 2 * a2 * s);
          },
          [=](const Vec& x) {
            double s = u->value(x);
            Vec du = u->grad(x);
            SymMat h = u->hess(x).scaled(a1 + 2 * a2 * s);
            for (int i = 0; i < x.n; ++i)
              for (int j = i; j < x.n; ++j) h.add(i, j, 2 * a2 * du[i] * du[j]);
            return h;
          }};
}

}  // namespace

ScalarField deriveRhs(const ProblemInstance& P, const SmoothField& v) {
  auto A = P.A;
  auto b = P.b;
  auto c = P.c;
  return [A, b, c, v](const Vec& x) {
    return traceProduct(A(x), v.hess(x)) + b(x).dot(v.grad(x)) + c(x) * v.value(x);
  };
}

SolutionSample makeSample(const ProblemInstance& P, const std::string& family,
                          std::mt19937_64& rng) {
  const int n = P.grid.dim;
  std::uniform_real_distribution<double> unit(0.0, 1.0), sym(-1.0, 1.0);

  // sample geometry: keep everything positive on the section's bounding box
  double radius = 0;
  {
    const Grid& g = P.grid;
    for (int d = 0; d < n; ++d)
      radius = std::max(radius, (P.section.box_hi[d] - P.section.box_lo[d] + 1) *
                                    g.dx[d] * 0.5);
  }

  SolutionSample s;
  s.family = family;
  if (family == "affine") {
    double kappa = 1.0 + 2.0 * unit(rng);
    Vec slope(n);
    for (int d = 0; d < n; ++d) slope[d] = sym(rng);
    double cap = 0.4 * kappa / std::max(radius, 1e-9);
    slope = slope * (cap / std::max(1.0, slope.norm()));
    s.v = affineField(n, kappa + slope.norm() * radius, slope);
  } else if (family == "radial") {
    Vec z(n);
    for (int d = 0; d < n; ++d) z[d] = 0.3 * radius * sym(rng);
    z = z + P.section.center;
    s.v = gaussBump(n, 0.5 + unit(rng), 0.5 + 2 * unit(rng), z, 0.3 + 0.4 * unit(rng));
  } else if (family == "bump-sum") {
    std::vector<SmoothField> parts = {constantField(n, 0.5 + unit(rng))};
    int k = 2 + int(unit(rng) * 2);
    for (int i = 0; i < k; ++i) {
      Vec z(n);
      for (int d = 0; d < n; ++d) z[d] = 0.5 * radius * sym(rng);
      parts.push_back(gaussBump(n, 0.0, 0.3 + unit(rng), z + P.section.center,
                                0.25 + 0.3 * unit(rng)));
    }
    s.v = sumFields(std::move(parts));
  } else if (family == "composed") {
    // g nondecreasing and positive on [0, max u]
    double a0 = 0.5 + unit(rng), a1 = 0.5 + unit(rng), a2 = 0.5 * unit(rng);
    s.v = composedField(P.u, a0, a1, a2);
  } else {
    throw LabError("ConfigError", "unknown solution family: " + family);
  }
  s.f = deriveRhs(P, s.v);
  return s;
}

MatrixField tangentiallyWeightedField(int dim, double Lambda_t, const Vec& z) {
  return [dim, Lambda_t, z](const Vec& x) {
    Vec d = x - z;
    double r2 = d.norm2();
    SymMat a = SymMat::identity(dim);
    if (r2 < 1e-18) return a;
    for (int i = 0; i < dim; ++i)
      for (int j = i; j < dim; ++j) {
        double tan_ij = (i == j ? 1.0 : 0.0) - d[i] * d[j] / r2;
        a.add(i, j, (Lambda_t - 1.0) * tan_ij);
      }
    return a;
  };
}

SolutionSample decaySample(const ProblemInstance& P, double delta0, double sigma,
                           const Vec& z, double radius) {
  const int n = P.grid.dim;
  double s2 = sigma * sigma;
  double R = radius;
  SolutionSample s;
  s.family = "decay";
  s.v = {[=](const Vec& x) {
           Vec d = (x - z) * (1.0 / R);
           return 1.0 / (delta0 + std::sqrt(d.norm2() + s2));
         },
         [=](const Vec& x) {
           Vec d = (x - z) * (1.0 / R);
           double q = std::sqrt(d.norm2() + s2);
           double dv = -1.0 / ((delta0 + q) * (delta0 + q));
           return d * (dv / (q * R));
         },
         [=](const Vec& x) {
           Vec d = (x - z) * (1.0 / R);
           double q = std::sqrt(d.norm2() + s2);
           double p = delta0 + q;
           // v = 1/p(q(w)), w = (x-z)/R; dv/dq = -1/p^2; d2v/dq2 = 2/p^3
           SymMat h(n);
           for (int i = 0; i < n; ++i)
             for (int j = i; j < n; ++j) {
               double qi = d[i] / q, qj = d[j] / q;
               double qij = ((i == j ? 1.0 : 0.0) - qi * qj) / q;
               h.set(i, j, (2.0 / (p * p * p) * qi * qj - qij / (p * p)) / (R * R));
             }
           return h;
         }};
  s.f = deriveRhs(P, s.v);
  return s;
}

double composedTraceMismatch(const Potential& u, double g1, double g2,
                             const std::vector<Vec>& pts) {
  // v = g(u), g'(s) = g1 + 2 g2 s
  double worst = 0;
  for (const Vec& x : pts) {
    double s = u.value(x);
    double gp = g1 + 2 * g2 * s, gpp = 2 * g2;
    Vec du = u.grad(x);
    SymMat uinv = u.hess(x).inverse();
    SymMat hv = u.hess(x).scaled(gp);
    for (int i = 0; i < x.n; ++i)
      for (int j = i; j < x.n; ++j) hv.add(i, j, gpp * du[i] * du[j]);
    double lhs = traceProduct(uinv, hv);
    double rhs = gp * x.n + gpp * uinv.quadForm(du);
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return worst;
}

}  // namespace malab
