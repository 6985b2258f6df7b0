#pragma once

// Sections S_u(x,h) = {y : u(y) < u(x) + Du(x).(y-x) + h} as grid cell sets,
// and the empirical structure constants of their geometry.

#include <string>
#include <vector>

#include "malab/fit.hpp"
#include "malab/grid.hpp"
#include "malab/potential.hpp"

namespace malab {

struct SectionSet {
  Grid grid;
  Vec center;
  double height = 0;
  CellSet cells;     // strict sublevel cells
  CellSet boundary;  // outside axis-neighbors of member cells
  std::int64_t member_count = 0;
  double measure = 0;  // member_count * cell measure
  bool compactly_contained = false;
  std::array<int, 3> box_lo{0, 0, 0}, box_hi{-1, -1, -1};  // member bounding box

  bool memberAtPoint(const Vec& x) const {
    if (!grid.containsPoint(x)) return false;
    auto c = grid.locate(x);
    return cells.test(grid.id(c[0], c[1], c[2]));
  }
};

// Tilted height of u at z relative to the tangent plane at x.
inline double tiltedHeight(const Potential& u, const Vec& x, const Vec& du_x,
                           const Vec& z) {
  return u.value(z) - u.value(x) - du_x.dot(z - x);
}

// Dense full-grid scan; reference implementation.
SectionSet sectionScanSerial(const Potential& u, const Grid& g, const Vec& x, double h);

// Parallel scan with a guarded bounding-box prefilter; identical output.
SectionSet sectionScan(const Potential& u, const Grid& g, const Vec& x, double h);

// Shell members: member cells with at least one non-member axis neighbor.
std::vector<std::int64_t> shellCells(const SectionSet& s);

struct VolumeRatioRow {
  double height, measure, ratio, max_radius;
};

// |S_u(x,h)| / h^{n/2} across a height sweep; throws NotCompactlyContained.
std::vector<VolumeRatioRow> volumeRatioSweep(const Potential& u, const Grid& g,
                                             const Vec& x,
                                             const std::vector<double>& heights);

struct EngulfingEstimate {
  double theta0 = 0;                      // max over samples
  std::vector<double> per_sample;        // worst theta per (y,h) sample
};

// Smallest theta with S_u(y,h) inside S_u(x, theta h) for all probed x in the
// section, maximized over samples. Exact per probe: containment in a section
// is a sublevel condition, so the minimal dilation is a direct maximum of
// tilted heights (no bisection needed).
EngulfingEstimate estimateEngulfing(const Potential& u, const Grid& g,
                                    const std::vector<std::pair<Vec, double>>& samples);

struct SizeExponentFit {
  double mu = 0;
  double coeff = 0;  // C in radius <= C h^mu
  LineFit fit;
};

SizeExponentFit estimateSizeExponent(const Potential& u, const Grid& g, const Vec& x,
                                     const std::vector<double>& heights);

struct InclusionCheck {
  bool pass = false;
  double c0_measured = 0;  // largest admissible coefficient for case (i)
  std::int64_t witness = -1;
};

// Case (i): with x1 in S_u(x0, r t), checks S_u(x1, c0 (s-r)^{p1} t) inside
// S_u(x0, s t) and reports the largest c0 for which the inclusion holds.
InclusionCheck inclusionCheck(const Potential& u, const Grid& g, const Vec& x0,
                              double t, double r, double s, const Vec& x1, double c0,
                              double p1);

// Case (ii): with x1 in S_u(x0, t) \ S_u(x0, s t), checks that
// S_u(x1, c0 (s-r)^{p1} t) misses S_u(x0, r t).
InclusionCheck exclusionCheck(const Potential& u, const Grid& g, const Vec& x0,
                              double t, double r, double s, const Vec& x1, double c0,
                              double p1);

struct C1AlphaFit {
  double alpha_star = 0;
  double coeff = 0;
  LineFit fit;
};

// Log-log fit of |Du(x)-Du(y)| against |x-y| over point pairs.
C1AlphaFit estimateC1Alpha(const Potential& u,
                           const std::vector<std::pair<Vec, Vec>>& pairs);

struct GeometryConstants {
  double theta0 = 0;
  double mu = 0;
  double p1 = 0;  // (n+1)/mu
  double c0 = 0;
  double K = 0;      // 2 theta0^2
  double K_hat = 0;  // measured section-in-section dilation constant
  double alpha_star = 1.0;
  std::string provenance;
};

// Sweep-based estimation of all structure constants for one potential.
GeometryConstants estimateGeometryConstants(const Potential& u, const Grid& g,
                                            double t0, int sample_count,
                                            std::uint64_t seed);

}  // namespace malab
