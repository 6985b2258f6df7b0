#pragma once

#include <cmath>
#include <vector>

#include "malab/linalg.hpp"

namespace malab {

struct LineFit {
  double slope = 0;
  double intercept = 0;
  int count = 0;
};

inline LineFit linearFit(const std::vector<double>& xs, const std::vector<double>& ys) {
  LineFit f;
  f.count = int(xs.size());
  if (f.count < 2) throw LabError("FitDegenerate", "need at least two points");
  double xmin = xs[0], xmax = xs[0];
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < f.count; ++i) {
    xmin = std::min(xmin, xs[i]);
    xmax = std::max(xmax, xs[i]);
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  if (xmax - xmin < 1e-9) throw LabError("FitDegenerate", "points share one abscissa");
  double den = f.count * sxx - sx * sx;
  f.slope = (f.count * sxy - sx * sy) / den;
  f.intercept = (sy - f.slope * sx) / f.count;
  return f;
}

inline LineFit logLogFit(const std::vector<double>& xs, const std::vector<double>& ys) {
  std::vector<double> lx, ly;
  for (size_t i = 0; i < xs.size(); ++i) {
    if (xs[i] > 0 && ys[i] > 0) {
      lx.push_back(std::log(xs[i]));
      ly.push_back(std::log(ys[i]));
    }
  }
  return linearFit(lx, ly);
}

}  // namespace malab
