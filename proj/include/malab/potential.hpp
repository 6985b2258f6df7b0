#pragma once

// Convex potentials: analytic families and grid-sampled fields, with value,
// gradient and Hessian access and certified bounds on det D^2 u.

#include <functional>
#include <memory>
#include <vector>

#include "malab/grid.hpp"
#include "malab/linalg.hpp"

namespace malab {

struct Deriv {
  double value = 0;
  Vec grad;
  SymMat hess;
  bool one_sided = false;  // one-sided stencils were used (sampled potentials only)
};

class Potential {
public:
  virtual ~Potential() = default;

  virtual double value(const Vec& x) const = 0;
  virtual Vec grad(const Vec& x) const = 0;
  virtual SymMat hess(const Vec& x) const = 0;

  virtual bool analytic() const { return true; }
  int dim() const { return dim_; }

  // Certified two-sided bounds on det D^2 u.
  double pinchLo() const { return pinch_lo_; }
  double pinchHi() const { return pinch_hi_; }

  double detHess(const Vec& x) const { return hess(x).det(); }

protected:
  Potential(int dim, double lo, double hi) : dim_(dim), pinch_lo_(lo), pinch_hi_(hi) {}
  int dim_;
  double pinch_lo_, pinch_hi_;
};

// u(x) = (x - x0)^t Q (x - x0) / 2 with Q symmetric positive definite.
class QuadraticPotential : public Potential {
public:
  QuadraticPotential(SymMat q, Vec x0)
      : Potential(q.n, q.det(), q.det()), q_(q), x0_(x0) {}
  // Isotropic |x|^2/2.
  static QuadraticPotential round(int dim) {
    return QuadraticPotential(SymMat::identity(dim), Vec::zero(dim));
  }
  // diag(1/s, s[, 1]) with unit determinant; s >= 1 controls the eccentricity.
  static QuadraticPotential eccentric(int dim, double s) {
    Vec d(dim);
    d[0] = 1.0 / s;
    d[1 % dim] = s;
    if (dim == 3) d[2] = 1.0;
    if (dim == 1) d[0] = 1.0;
    return QuadraticPotential(SymMat::diag(d), Vec::zero(dim));
  }

  double value(const Vec& x) const override {
    Vec y = x - x0_;
    return 0.5 * q_.quadForm(y);
  }
  Vec grad(const Vec& x) const override { return q_.apply(x - x0_); }
  SymMat hess(const Vec&) const override { return q_; }
  const SymMat& matrix() const { return q_; }

private:
  SymMat q_;
  Vec x0_;
};

// Radial potential with prescribed radial determinant profile:
// det D^2 u(x) = rho(|x|) with rho(r) = base + amp*sin(omega*r).
// Built from the first-order profile phi = u'(r): phi' = rho (r/phi)^{n-1}.
class RadialPotential : public Potential {
public:
  RadialPotential(int dim, double base, double amp, double omega, double rmax);

  double value(const Vec& x) const override;
  Vec grad(const Vec& x) const override;
  SymMat hess(const Vec& x) const override;

  double profile(double r) const { return base_ + amp_ * std::sin(omega_ * r); }

private:
  double phi(double r) const;
  double phiPrime(double r) const;
  double gval(double r) const;

  double base_, amp_, omega_, rmax_, hr_;
  std::vector<double> phi_tab_, g_tab_;
};

// |x|^2/2 + kappa * prod_d cos(omega x_d); pinching certified by dense scan.
class CosinePerturbedPotential : public Potential {
public:
  CosinePerturbedPotential(int dim, double kappa, double omega)
      : Potential(dim, 0, 0), kappa_(kappa), omega_(omega) {}

  double value(const Vec& x) const override;
  Vec grad(const Vec& x) const override;
  SymMat hess(const Vec& x) const override;

  // Dense cellwise det evaluation with a 1% safety margin folded in.
  void certify(const Grid& g, double tau_psd = 1e-8);

private:
  double kappa_, omega_;
};

// s * u(A x + b): exact affine pullback of another potential.
class AffinePullbackPotential : public Potential {
public:
  AffinePullbackPotential(std::shared_ptr<const Potential> base, Mat a, Vec b, double scale);

  double value(const Vec& x) const override;
  Vec grad(const Vec& x) const override;
  SymMat hess(const Vec& x) const override;
  bool analytic() const override { return base_->analytic(); }

private:
  std::shared_ptr<const Potential> base_;
  Mat a_, at_;
  Vec b_;
  double scale_;
};

// Values sampled at cell centers. Derivatives by second-order stencils:
// central where the cell is at least two cells from the grid boundary,
// one-sided (flagged) in the two-cell collar. Point values by multilinear
// interpolation.
class SampledPotential : public Potential {
public:
  SampledPotential(const Grid& g, std::vector<double> values, double pinch_lo,
                   double pinch_hi);
  static SampledPotential sample(const Potential& src, const Grid& g);

  double value(const Vec& x) const override;
  Vec grad(const Vec& x) const override;
  SymMat hess(const Vec& x) const override;
  bool analytic() const override { return false; }

  const Grid& grid() const { return grid_; }
  Deriv derivAtCell(const std::array<int, 3>& c) const;
  double cellValue(std::int64_t id) const { return values_[size_t(id)]; }

private:
  double axisDeriv1(const std::array<int, 3>& c, int d, bool& one_sided) const;
  double axisDeriv2(const std::array<int, 3>& c, int d, bool& one_sided) const;

  Grid grid_;
  std::vector<double> values_;
};

// u(x), Du(x), D^2u(x) at a grid cell. Throws OutOfDomain when the cell is
// outside the grid; `one_sided` set when collar stencils were used.
Deriv evalDerivatives(const Potential& u, const Grid& g, const std::array<int, 3>& cell);

// (det D^2 u)(D^2 u)^{-1} at a point; throws SingularHessian below the floor.
SymMat cofactorAt(const Potential& u, const Vec& x, double det_floor = 1e-12);

// Cellwise convexity check: smallest Hessian eigenvalue over interior cells.
double minHessEigenOnGrid(const Potential& u, const Grid& g);

// Cellwise range of det D^2 u over interior cells.
std::pair<double, double> detRangeOnGrid(const Potential& u, const Grid& g);

}  // namespace malab
