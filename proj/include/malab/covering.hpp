#pragma once

// Section-based Vitali covering (dyadic greedy selection) and the growing
// ink-spots measure-dilation step, both verified cellwise.

#include <functional>
#include <string>
#include <vector>

#include "malab/sections.hpp"

namespace malab {

struct SectionItem {
  Vec center;
  double height;
};

struct SectionCollection {
  const Potential* u = nullptr;
  Grid grid;
  std::vector<SectionItem> items;
  double K = 0;       // dilation constant, 2 theta0^2
  double theta0 = 0;  // engulfing constant backing the precondition
};

struct VitaliSelection {
  std::vector<std::size_t> selected;  // indices into the collection
  std::vector<int> class_of;          // dyadic class per selected item
  bool disjoint = false;              // exact cellwise pairwise disjointness
  bool cover_ok = false;              // union of K-dilates covers every item
  std::int64_t uncovered_witness = -1;
};

// Greedy maximal disjoint subcollection by dyadic height classes; certifies
// that the K-dilates of the selected sections cover the whole collection.
VitaliSelection vitaliSelect(const SectionCollection& c);

struct FiniteCover {
  std::vector<SectionItem> sections;
  bool shrunken_disjoint = false;  // S(x_i, h_i / K) pairwise disjoint
  bool covers = false;
  std::int64_t uncovered_witness = -1;
};

// Finite subcover of the compact cell set D from the assignment x -> h(x),
// with K^{-1}-shrunken disjointness. Throws CoverFailure when a cell of D is
// left uncovered.
FiniteCover vitaliFinite(const Potential& u, const Grid& g, const CellSet& D,
                         const std::function<double(std::int64_t)>& height_of,
                         double K);

struct InkSpotsParams {
  double delta = 0.3;
  double c2 = 0.1;          // calibrated measure-dilation constant
  int center_stride = 2;    // lattice stride for hypothesis (i) sampling
  int dyadic_levels = 6;
  int interior_margin = 3;  // cells eroded off S(0,h) for the density count
};

struct InkSpotsStep {
  bool applicable = true;       // both hypotheses held
  std::string violated;         // which hypothesis failed
  Vec witness_center;           // hypothesis (i) witness section
  double witness_height = 0;
  double e_measure = 0, f_measure = 0;
  double ratio = 0;             // |E| / |F|
  double bound = 0;             // 1 - c2 delta
  bool conclusion = false;      // ratio <= bound
  int sampled_sections = 0;
  // Sampled sections through the rarest cell of the eroded interior; the
  // outermost cells cannot carry contained sections, so the density target
  // applies a margin inward.
  std::int64_t min_coverage = 0;
};

// Verifies the hypotheses on a sampled family of sections (lattice of centers
// times dyadic heights, density recorded) and checks |E| <= (1 - c2 delta)|F|.
InkSpotsStep inkSpotsStep(const Potential& u, const Grid& g, double h,
                          const CellSet& E, const CellSet& F,
                          const InkSpotsParams& params);

}  // namespace malab
