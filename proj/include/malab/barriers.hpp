#pragma once

// Barrier construction: bad sets where the Hessian blows up, their mollified
// indicator, a 2-D monotone wide-stencil Monge-Ampere Dirichlet solver for the
// correction term, the classical power subsolution check, and the Harnack
// barrier t (1-u)^{-beta}.

#include <memory>
#include <vector>

#include "malab/fields.hpp"
#include "malab/sections.hpp"

namespace malab {

struct BadSet {
  double eps = 0;
  CellSet cells;   // {||D^2 u|| >= 1/eps} within the reference section
  double measure = 0;
  double hess_integral = 0;    // integral of ||D^2 u|| over the section
  double chebyshev_bound = 0;  // eps * hess_integral
};

BadSet badSet(const Potential& u, double eps, const SectionSet& s3);

// Scalar field over the grid: 1 on the bad cells, eps outside their one-cell
// dilation, the midpoint on the dilation ring, eps elsewhere in the domain.
struct MollifierField {
  Grid grid;
  std::vector<double> values;  // full grid, 0 outside the domain
  double integral = 0;         // over the domain cells
  double operator()(const Vec& x) const {
    auto c = grid.locate(x);
    return values[size_t(grid.id(c[0], c[1], c[2]))];
  }
};

MollifierField mollifier(const BadSet& bad, const SectionSet& s4, double eps);

struct ConvergencePoint {
  int iteration;
  double residual;
};

// Solution of det D^2 h = rhs, h = 0 outside the domain cells, by the damped
// Gauss-Seidel iteration of the 8-direction monotone wide-stencil scheme.
class BarrierField {
public:
  BarrierField(const Grid& g, CellSet domain, std::vector<double> values,
               std::vector<ConvergencePoint> trace);

  double value(const Vec& x) const;  // multilinear, 0 outside the domain
  Vec grad(const Vec& x) const;      // central stencils on the value array
  SymMat hess(const Vec& x) const;

  double supAbs() const { return sup_abs_; }
  const std::vector<ConvergencePoint>& trace() const { return trace_; }
  const CellSet& domain() const { return domain_; }
  const Grid& grid() const { return grid_; }
  double cellValue(std::int64_t id) const { return values_[size_t(id)]; }

private:
  Grid grid_;
  CellSet domain_;
  std::vector<double> values_;
  std::vector<ConvergencePoint> trace_;
  double sup_abs_ = 0;
};

SmoothField barrierView(std::shared_ptr<const BarrierField> h);

struct MaSolveOptions {
  double tol = 1e-6;
  int max_iterations = 10000;
  double damping = 0.5;
};

// 2-D only. Throws NoConvergence when the residual does not reach tol.
BarrierField maDirichletSolve(const SectionSet& domain, const ScalarField& rhs,
                              const MaSolveOptions& opts = {});

struct SubsolutionReport {
  double annulus_measure = 0;
  double violation_measure = 0;  // cells with u^{ij} W_ij < -tau
  double min_operator_value = 0;
  double min_vtilde = 0;
};

// W = (u - h)^{-m} - 2^{-m} on S_2 \ S_alpha; reports where the linearized
// operator of W fails to be nonnegative. Throws DomainViolation when u - h
// is not positive on the annulus.
SubsolutionReport classicalSubsolutionCheck(const Potential& u, const SmoothField& h,
                                            double m, const SectionSet& s2,
                                            const SectionSet& s_alpha,
                                            double tau = 1e-9);

struct HarnackBarrier {
  double beta = 0;
  double t_min = 0;  // smallest t with t (1-u)^{-beta} >= v on the section
  Vec touch_point;
  double r = 0;      // (1 - u(touch)) / 2
};

// Throws Degenerate when u >= 1 somewhere inside the section.
HarnackBarrier harnackBarrier(const Potential& u, double beta, const SectionSet& s1,
                              const ScalarField& v);

// beta with M((1-rho)^{-beta} - 1) = 1/2.
inline double betaFromDoublingConstant(double M, double rho) {
  return std::log(1.0 + 1.0 / (2.0 * M)) / (-std::log(1.0 - rho));
}

}  // namespace malab
