#pragma once

// John normalization of sections (Khachiyan ellipsoid, shrink-to-fit) and the
// affine rescaling of a full problem instance with its norm bookkeeping.

#include <memory>
#include <vector>

#include "malab/fields.hpp"
#include "malab/sections.hpp"

namespace malab {

struct AffineMap {
  Mat A;
  Vec b;

  static AffineMap identity(int n) { return {Mat::identity(n), Vec::zero(n)}; }
  int dim() const { return A.n; }
  Vec apply(const Vec& x) const { return A.apply(x) + b; }
  double detA() const { return A.det(); }

  // Inverse map; composition with the original must be the identity to 1e-10.
  AffineMap inverse() const {
    Mat ai = A.inverse();
    AffineMap inv{ai, ai.apply(b) * -1.0};
    Mat comp = ai.mul(A);
    for (int i = 0; i < A.n; ++i)
      for (int j = 0; j < A.n; ++j) {
        double want = i == j ? 1.0 : 0.0;
        if (std::abs(comp(i, j) - want) > 1e-10)
          throw LabError("SingularMap", "inverse does not compose to identity");
      }
    return inv;
  }
};

// {x : (x - center)^t shape (x - center) <= 1}
struct Ellipsoid {
  Vec center;
  SymMat shape;
};

// Minimum-volume enclosing ellipsoid of a point cloud (Khachiyan's algorithm
// with away steps); tol is the relative optimality gap.
Ellipsoid khachiyanMvee(const std::vector<Vec>& pts, double tol = 1e-6,
                        int max_iter = 200000);

// Affine N with B_1 inside N(S) inside B_n, built from the enclosing
// ellipsoid of the member hull shrunk by the measured inscribed factor
// (floored at 1/n, the John guarantee).
AffineMap johnNormalize(const SectionSet& s, double tol = 1e-6);

struct ProblemInstance {
  std::shared_ptr<const Potential> u;
  Grid grid;
  SectionSet section;
  double lambda_t = 1.0, Lambda_t = 1.0;  // envelope multipliers of the cofactor
  MatrixField A;
  VectorField b;
  ScalarField c;
  ScalarField f;
  double p = 4.0;  // drift integrability exponent

  // Instance with A equal to the cofactor matrix and zero lower-order terms.
  static ProblemInstance plain(std::shared_ptr<const Potential> u, const Grid& g,
                               const SectionSet& s, double p = 4.0);
};

struct NormReport {
  double b_Lp = 0, b_Ln = 0, c_Ln = 0, f_Ln = 0;
};

struct RescaledInstance {
  AffineMap map;  // T: normalized coordinates -> original coordinates
  ProblemInstance instance;
  NormReport norms;
  double height = 0;         // height of the normalized section
  bool contains_b1 = false;  // B_1 inside the normalized section (one-cell slack)
  bool inside_bn = false;    // normalized section inside B_n (one-cell slack)
};

// Pulls the instance back through T (fields composed exactly, potentials by
// exact affine pullback) and recomputes the section on the normalized grid.
RescaledInstance rescaleProblem(const ProblemInstance& P, const AffineMap& T,
                                const Grid& normalized_grid);

// Convenience: John-normalize the instance's own section.
RescaledInstance normalizeInstance(const ProblemInstance& P, const Grid& normalized_grid);

struct DetAhRow {
  double height = 0;
  double det_ah = 0;
  double ratio = 0;     // det A_h / h^{n/2}
  double inv_norm = 0;  // ||A_h^{-1}||
};

std::vector<DetAhRow> detAhSweep(const Potential& u, const Grid& g, const Vec& x0,
                                 const std::vector<double>& heights);

struct InvNormCheck {
  std::vector<double> lhs, rhs;
  double coeff = 0;     // calibrated at the largest height
  double exponent = 0;  // fitted log-log slope
  bool pass = false;
};

// ||A_h^{-1}|| <= C h^{-1/(1+alpha_star)} with C calibrated at the largest
// height of the sweep and tested on the rest.
InvNormCheck inverseNormBoundCheck(const std::vector<DetAhRow>& rows,
                                   double alpha_star, double tau = 0.10);

// Midpoint-rule L^p norms over the member cells.
double lpNorm(const Grid& g, const CellSet& cells, const ScalarField& f, double p);
double lpNormVec(const Grid& g, const CellSet& cells, const VectorField& f, double p);

// Largest eigenvalue excursion of U^{-1/2} A U^{-1/2} outside the envelope
// [lambda_t, Lambda_t] over the section cells (0 when the envelope holds).
double envelopeViolation(const ProblemInstance& P, int stride = 1);

// Max mismatch over sample points between the cofactor of the pulled-back
// potential and the pushed-forward cofactor of the original.
double cofactorTransformError(const Potential& u, const Potential& u_tilde,
                              const AffineMap& T, const std::vector<Vec>& pts);

}  // namespace malab
