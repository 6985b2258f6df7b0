#include "malab/potential.hpp"

#include <algorithm>
#include <cmath>

namespace malab {

// ---------------------------------------------------------------------------
// RadialPotential

RadialPotential::RadialPotential(int dim, double base, double amp, double omega,
                                 double rmax)
    : Potential(dim, base - std::abs(amp), base + std::abs(amp)),
      base_(base),
      amp_(amp),
      omega_(omega),
      rmax_(rmax) {
  if (base - std::abs(amp) <= 0)
    throw LabError("NotPSD", "radial profile must stay positive");
  const int N = 16384;
  hr_ = rmax_ / N;
  phi_tab_.assign(N + 1, 0.0);
  g_tab_.assign(N + 1, 0.0);

  // phi' = rho(r) (r/phi)^{n-1}; start with the exact homogeneous solution
  // phi = rho(0)^{1/n} r on the first few steps to avoid the 0/0 at r = 0.
  auto slope = [&](double r, double p) {
    if (r <= 0 || p <= 0) return std::pow(profile(0.0), 1.0 / dim_);
    return profile(r) * std::pow(r / p, dim_ - 1);
  };
  double c0 = std::pow(profile(0.0), 1.0 / dim_);
  int warm = 8;
  for (int i = 0; i <= warm; ++i) phi_tab_[i] = c0 * (i * hr_);
  for (int i = warm; i < N; ++i) {
    double r = i * hr_, p = phi_tab_[i];
    double k1 = slope(r, p);
    double k2 = slope(r + 0.5 * hr_, p + 0.5 * hr_ * k1);
    double k3 = slope(r + 0.5 * hr_, p + 0.5 * hr_ * k2);
    double k4 = slope(r + hr_, p + hr_ * k3);
    phi_tab_[i + 1] = p + hr_ / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  // g = int_0^r phi by the trapezoid rule on the same table.
  for (int i = 0; i < N; ++i)
    g_tab_[i + 1] = g_tab_[i] + 0.5 * hr_ * (phi_tab_[i] + phi_tab_[i + 1]);
}

double RadialPotential::phi(double r) const {
  r = std::clamp(r, 0.0, rmax_);
  double t = r / hr_;
  int i = std::min(int(t), int(phi_tab_.size()) - 2);
  double f = t - i;
  // Hermite interpolation with the known slope phi' = rho (r/phi)^{n-1}.
  auto slope_at = [&](int k) {
    double rk = k * hr_, pk = phi_tab_[size_t(k)];
    if (rk <= 0 || pk <= 0) return std::pow(profile(0.0), 1.0 / dim_);
    return profile(rk) * std::pow(rk / pk, dim_ - 1);
  };
  double p0 = phi_tab_[i], p1 = phi_tab_[i + 1];
  double m0 = slope_at(i), m1 = slope_at(i + 1);
  double f2 = f * f, f3 = f2 * f;
  return (2 * f3 - 3 * f2 + 1) * p0 + (f3 - 2 * f2 + f) * hr_ * m0 +
         (-2 * f3 + 3 * f2) * p1 + (f3 - f2) * hr_ * m1;
}

double RadialPotential::phiPrime(double r) const {
  r = std::clamp(r, 0.0, rmax_);
  if (r < 4 * hr_) return std::pow(profile(0.0), 1.0 / dim_);
  double p = phi(r);
  return profile(r) * std::pow(r / p, dim_ - 1);
}

double RadialPotential::gval(double r) const {
  r = std::clamp(r, 0.0, rmax_);
  double t = r / hr_;
  int i = std::min(int(t), int(g_tab_.size()) - 2);
  double f = t - i;
  double p0 = g_tab_[i], p1 = g_tab_[i + 1];
  double m0 = phi_tab_[i], m1 = phi_tab_[i + 1];
  double f2 = f * f, f3 = f2 * f;
  return (2 * f3 - 3 * f2 + 1) * p0 + (f3 - 2 * f2 + f) * hr_ * m0 +
         (-2 * f3 + 3 * f2) * p1 + (f3 - f2) * hr_ * m1;
}

double RadialPotential::value(const Vec& x) const { return gval(x.norm()); }

Vec RadialPotential::grad(const Vec& x) const {
  double r = x.norm();
  if (r < 1e-14) return Vec::zero(dim_);
  return x * (phi(r) / r);
}

SymMat RadialPotential::hess(const Vec& x) const {
  double r = x.norm();
  double c0 = std::pow(profile(0.0), 1.0 / dim_);
  if (r < 1e-12) return SymMat::identity(dim_).scaled(c0);
  double radial = phiPrime(r), tangential = phi(r) / r;
  SymMat h(dim_);
  for (int i = 0; i < dim_; ++i)
    for (int j = i; j < dim_; ++j) {
      double proj = x[i] * x[j] / (r * r);
      h.set(i, j, tangential * ((i == j) ? 1.0 : 0.0) + (radial - tangential) * proj);
    }
  return h;
}

// ---------------------------------------------------------------------------
// CosinePerturbedPotential

double CosinePerturbedPotential::value(const Vec& x) const {
  double q = 0.5 * x.norm2(), p = 1.0;
  for (int d = 0; d < dim_; ++d) p *= std::cos(omega_ * x[d]);
  return q + kappa_ * p;
}

Vec CosinePerturbedPotential::grad(const Vec& x) const {
  Vec g = x;
  for (int d = 0; d < dim_; ++d) {
    double t = -omega_ * std::sin(omega_ * x[d]);
    for (int e = 0; e < dim_; ++e)
      if (e != d) t *= std::cos(omega_ * x[e]);
    g[d] += kappa_ * t;
  }
  return g;
}

SymMat CosinePerturbedPotential::hess(const Vec& x) const {
  SymMat h = SymMat::identity(dim_);
  double prod = 1.0;
  for (int d = 0; d < dim_; ++d) prod *= std::cos(omega_ * x[d]);
  for (int d = 0; d < dim_; ++d) h.add(d, d, -kappa_ * omega_ * omega_ * prod);
  for (int d = 0; d < dim_; ++d)
    for (int e = d + 1; e < dim_; ++e) {
      double t = omega_ * omega_ * std::sin(omega_ * x[d]) * std::sin(omega_ * x[e]);
      for (int f = 0; f < dim_; ++f)
        if (f != d && f != e) t *= std::cos(omega_ * x[f]);
      h.add(d, e, kappa_ * t);
    }
  return h;
}

void CosinePerturbedPotential::certify(const Grid& g, double tau_psd) {
  auto [lo, hi] = detRangeOnGrid(*this, g);
  if (minHessEigenOnGrid(*this, g) < -tau_psd)
    throw LabError("NotPSD", "perturbed potential fails the convexity scan");
  pinch_lo_ = lo * 0.99;
  pinch_hi_ = hi * 1.01;
}

// ---------------------------------------------------------------------------
// AffinePullbackPotential

AffinePullbackPotential::AffinePullbackPotential(std::shared_ptr<const Potential> base,
                                                 Mat a, Vec b, double scale)
    : Potential(base->dim(), 0, 0), base_(std::move(base)), a_(a), at_(a.transpose()),
      b_(b), scale_(scale) {
  // det D^2(s u(Ax+b)) = s^n (det A)^2 det D^2 u.
  double factor = std::pow(scale_, dim_) * a_.det() * a_.det();
  pinch_lo_ = base_->pinchLo() * factor;
  pinch_hi_ = base_->pinchHi() * factor;
  if (pinch_lo_ > pinch_hi_) std::swap(pinch_lo_, pinch_hi_);
}

double AffinePullbackPotential::value(const Vec& x) const {
  return scale_ * base_->value(a_.apply(x) + b_);
}

Vec AffinePullbackPotential::grad(const Vec& x) const {
  return at_.apply(base_->grad(a_.apply(x) + b_)) * scale_;
}

SymMat AffinePullbackPotential::hess(const Vec& x) const {
  Mat h = base_->hess(a_.apply(x) + b_).asMat();
  return SymMat::fromMatSymmetrized(at_.mul(h).mul(a_)).scaled(scale_);
}

// ---------------------------------------------------------------------------
// SampledPotential

SampledPotential::SampledPotential(const Grid& g, std::vector<double> values,
                                   double pinch_lo, double pinch_hi)
    : Potential(g.dim, pinch_lo, pinch_hi), grid_(g), values_(std::move(values)) {
  if (std::int64_t(values_.size()) != g.cellCount())
    throw LabError("OutOfDomain", "sample count does not match the grid");
}

SampledPotential SampledPotential::sample(const Potential& src, const Grid& g) {
  std::vector<double> v(size_t(g.cellCount()));
#pragma omp parallel for schedule(static)
  for (std::int64_t id = 0; id < g.cellCount(); ++id)
    v[size_t(id)] = src.value(g.center(id));
  return SampledPotential(g, std::move(v), src.pinchLo(), src.pinchHi());
}

double SampledPotential::value(const Vec& x) const {
  // Multilinear interpolation on the cell-center lattice (clamped at edges).
  const Grid& g = grid_;
  std::array<int, 3> base{0, 0, 0};
  std::array<double, 3> f{0, 0, 0};
  for (int d = 0; d < g.dim; ++d) {
    double t = (x[d] - g.lo[d]) / g.dx[d] - 0.5;
    int i = int(std::floor(t));
    i = std::clamp(i, 0, g.cells[d] - 2);
    base[d] = i;
    f[d] = std::clamp(t - i, 0.0, 1.0);
  }
  double acc = 0;
  int corners = 1 << g.dim;
  for (int c = 0; c < corners; ++c) {
    double w = 1.0;
    std::array<int, 3> cc = base;
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

double SampledPotential::axisDeriv1(const std::array<int, 3>& c, int d,
                                    bool& one_sided) const {
  const Grid& g = grid_;
  double h = g.dx[d];
  auto at = [&](int off) {
    std::array<int, 3> cc = c;
    cc[d] += off;
    return values_[size_t(g.id(cc[0], cc[1], cc[2]))];
  };
  int pos = c[d], m = g.cells[d];
  if (pos >= 2 && pos <= m - 3) return (at(1) - at(-1)) / (2 * h);
  one_sided = true;
  if (pos < 2) return (-3 * at(0) + 4 * at(1) - at(2)) / (2 * h);
  return (3 * at(0) - 4 * at(-1) + at(-2)) / (2 * h);
}

double SampledPotential::axisDeriv2(const std::array<int, 3>& c, int d,
                                    bool& one_sided) const {
  const Grid& g = grid_;
  double h2 = g.dx[d] * g.dx[d];
  auto at = [&](int off) {
    std::array<int, 3> cc = c;
    cc[d] += off;
    return values_[size_t(g.id(cc[0], cc[1], cc[2]))];
  };
  int pos = c[d], m = g.cells[d];
  if (pos >= 2 && pos <= m - 3) return (at(1) - 2 * at(0) + at(-1)) / h2;
  one_sided = true;
  if (pos < 2) return (2 * at(0) - 5 * at(1) + 4 * at(2) - at(3)) / h2;
  return (2 * at(0) - 5 * at(-1) + 4 * at(-2) - at(-3)) / h2;
}

Deriv SampledPotential::derivAtCell(const std::array<int, 3>& c) const {
  const Grid& g = grid_;
  if (!g.inBounds(c)) throw LabError("OutOfDomain", "cell outside grid");
  Deriv r;
  r.value = values_[size_t(g.id(c[0], c[1], c[2]))];
  r.grad = Vec(g.dim);
  r.hess = SymMat(g.dim);
  for (int d = 0; d < g.dim; ++d) {
    r.grad[d] = axisDeriv1(c, d, r.one_sided);
    r.hess.set(d, d, axisDeriv2(c, d, r.one_sided));
  }
  // Cross terms: composed one-dimensional first-derivative stencils.
  for (int d = 0; d < g.dim; ++d)
    for (int e = d + 1; e < g.dim; ++e) {
      auto stencil = [&](int pos, int m) {
        // offsets/weights of the second-order first-derivative stencil
        struct S { int off[3]; double w[3]; };
        if (pos >= 2 && pos <= m - 3) return S{{-1, 1, 0}, {-0.5, 0.5, 0.0}};
        r.one_sided = true;
        if (pos < 2) return S{{0, 1, 2}, {-1.5, 2.0, -0.5}};
        return S{{0, -1, -2}, {1.5, -2.0, 0.5}};
      };
      auto sd = stencil(c[d], g.cells[d]);
      auto se = stencil(c[e], g.cells[e]);
      double acc = 0;
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
          if (sd.w[a] == 0.0 || se.w[b] == 0.0) continue;
          std::array<int, 3> cc = c;
          cc[d] += sd.off[a];
          cc[e] += se.off[b];
          acc += sd.w[a] * se.w[b] * values_[size_t(g.id(cc[0], cc[1], cc[2]))];
        }
      r.hess.set(d, e, acc / (g.dx[d] * g.dx[e]));
    }
  return r;
}

Vec SampledPotential::grad(const Vec& x) const {
  return derivAtCell(grid_.locate(x)).grad;
}

SymMat SampledPotential::hess(const Vec& x) const {
  return derivAtCell(grid_.locate(x)).hess;
}

// ---------------------------------------------------------------------------

Deriv evalDerivatives(const Potential& u, const Grid& g, const std::array<int, 3>& cell) {
  if (!g.inBounds(cell)) throw LabError("OutOfDomain", "cell outside grid");
  if (auto* s = dynamic_cast<const SampledPotential*>(&u)) return s->derivAtCell(cell);
  Deriv r;
  Vec x = g.center(cell);
  r.value = u.value(x);
  r.grad = u.grad(x);
  r.hess = u.hess(x);
  return r;
}

SymMat cofactorAt(const Potential& u, const Vec& x, double det_floor) {
  return cofactorOf(u.hess(x), det_floor);
}

double minHessEigenOnGrid(const Potential& u, const Grid& g) {
  double m = 1e300;
#pragma omp parallel for schedule(static) reduction(min : m)
  for (std::int64_t id = 0; id < g.cellCount(); ++id) {
    auto c = g.coords(id);
    if (g.boundaryDistance(c) < 2) continue;
    m = std::min(m, minEigenvalue(u.hess(g.center(c))));
  }
  return m;
}

std::pair<double, double> detRangeOnGrid(const Potential& u, const Grid& g) {
  double lo = 1e300, hi = -1e300;
#pragma omp parallel for schedule(static) reduction(min : lo) reduction(max : hi)
  for (std::int64_t id = 0; id < g.cellCount(); ++id) {
    auto c = g.coords(id);
    if (g.boundaryDistance(c) < 2) continue;
    double d = u.hess(g.center(c)).det();
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  return {lo, hi};
}

}  // namespace malab
