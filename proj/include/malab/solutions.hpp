#pragma once

// Forward-generated solution samples: pick a smooth nonnegative v, derive the
// right side f = trace(A D^2 v) + b.Dv + c v pointwise, so every sample solves
// its equation exactly and the estimates are isolated from solver error.

#include <random>
#include <string>

#include "malab/normalization.hpp"

namespace malab {

struct SolutionSample {
  std::string family;
  SmoothField v;
  ScalarField f;  // derived
};

ScalarField deriveRhs(const ProblemInstance& P, const SmoothField& v);

// family: affine | radial | bump-sum | composed (g of the potential)
SolutionSample makeSample(const ProblemInstance& P, const std::string& family,
                          std::mt19937_64& rng);

// v = 1 / (delta0 + sqrt(|(x - z)/radius|^2 + sigma^2)), paired with the
// tangentially weighted coefficient field that makes it an exact
// supersolution (f <= 0); `radius` rescales the profile to the section size.
SolutionSample decaySample(const ProblemInstance& P, double delta0, double sigma,
                           const Vec& z, double radius = 1.0);

// A(x) = P_radial + Lambda_t P_tangential about z (times the cofactor scale);
// stays inside the envelope [1, Lambda_t] of U for radially symmetric U.
MatrixField tangentiallyWeightedField(int dim, double Lambda_t, const Vec& z);

// Composed-family cross-check: trace((D^2u)^{-1} D^2 g(u)) against the closed
// form g' n + g'' u^{ij} u_i u_j; returns the worst mismatch over the points.
double composedTraceMismatch(const Potential& u, double g1, double g2,
                             const std::vector<Vec>& pts);

}  // namespace malab
