#pragma once

// Callable field types shared by the problem-instance and contact machinery.

#include <functional>

#include "malab/linalg.hpp"

namespace malab {

using ScalarField = std::function<double(const Vec&)>;
using VectorField = std::function<Vec(const Vec&)>;
using MatrixField = std::function<SymMat(const Vec&)>;

// A scalar field with first and second derivatives.
struct SmoothField {
  ScalarField value;
  VectorField grad;
  MatrixField hess;
};

inline SmoothField constantField(int dim, double c) {
  return {[c](const Vec&) { return c; },
          [dim](const Vec&) { return Vec::zero(dim); },
          [dim](const Vec&) { return SymMat(dim); }};
}

}  // namespace malab
