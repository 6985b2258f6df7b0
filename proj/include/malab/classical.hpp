#pragma once

// Two classical a priori checks evaluated numerically on convex cell sets:
// the convex gradient estimate and the Aleksandrov maximum principle.

#include <functional>

#include "malab/grid.hpp"
#include "malab/potential.hpp"

namespace malab {

struct BoundCheck {
  double lhs = 0;
  double rhs = 0;
  double ratio = 0;  // lhs / rhs (0 when rhs == 0)
  bool pass = false;
};

// |Du(x)| <= (max_{boundary} u - u(x)) / dist(x, boundary), with relative
// slack tau_rel on the right-hand side.
BoundCheck gradientEstimateCheck(const Potential& u, const Grid& g,
                                 const CellSet& members, const CellSet& boundary,
                                 const Vec& x, double tau_rel = 0.05);

// |w(x0)|^n <= C(n) diam^{n-1} dist(x0, boundary) * integral of det_d2w, for a
// convex w vanishing on the boundary cells (checked against tau_bd). The
// normalization C(n) = 1/omega_n is conventional, so `ratio` is the primary
// output and `pass` reports lhs <= rhs under it.
BoundCheck aleksandrovCheck(const std::function<double(const Vec&)>& w,
                            const std::function<double(const Vec&)>& det_d2w,
                            const Grid& g, const CellSet& members,
                            const CellSet& boundary, const Vec& x0, double tau_bd);

}  // namespace malab
