#include "malab/covering.hpp"

#include <algorithm>
#include <cmath>

namespace malab {

VitaliSelection vitaliSelect(const SectionCollection& c) {
  if (c.items.empty()) throw LabError("PreconditionViolation", "empty collection");
  const Grid& g = c.grid;

  // precondition: the 4 theta0 dilate of every item stays in the grid interior
  for (const auto& it : c.items) {
    SectionSet dil = sectionScan(*c.u, g, it.center, 4 * c.theta0 * it.height);
    if (!dil.compactly_contained)
      throw LabError("PreconditionViolation",
                     "a 4*theta0 dilate is not compactly contained");
  }

  std::vector<SectionSet> base;
  base.reserve(c.items.size());
  for (const auto& it : c.items)
    base.push_back(sectionScan(*c.u, g, it.center, it.height));

  double H = 0;
  for (const auto& it : c.items) H = std::max(H, it.height);

  auto dyadicClass = [&](double h) {
    // class i >= 1 holds heights in (H/2^i, H/2^{i-1}]
    int i = 1;
    double lo = H / 2;
    while (h <= lo && i < 60) {
      lo /= 2;
      ++i;
    }
    return i;
  };

  std::vector<int> cls(c.items.size());
  int max_class = 1;
  for (size_t i = 0; i < c.items.size(); ++i) {
    cls[i] = dyadicClass(c.items[i].height);
    max_class = std::max(max_class, cls[i]);
  }

  VitaliSelection sel;
  for (int k = 1; k <= max_class; ++k) {
    for (size_t i = 0; i < c.items.size(); ++i) {
      if (cls[i] != k) continue;
      bool disjoint = true;
      for (std::size_t j : sel.selected)
        if (base[i].cells.intersects(base[j].cells)) {
          disjoint = false;
          break;
        }
      if (disjoint) {
        sel.selected.push_back(i);
        sel.class_of.push_back(k);
      }
    }
  }

  sel.disjoint = true;
  for (size_t a = 0; a < sel.selected.size() && sel.disjoint; ++a)
    for (size_t b = a + 1; b < sel.selected.size(); ++b)
      if (base[sel.selected[a]].cells.intersects(base[sel.selected[b]].cells)) {
        sel.disjoint = false;
        break;
      }

  CellSet all(g), dilated(g);
  for (const auto& s : base) all.unionWith(s.cells);
  for (std::size_t j : sel.selected) {
    SectionSet dil = sectionScan(*c.u, g, c.items[j].center, c.K * c.items[j].height);
    dilated.unionWith(dil.cells);
  }
  sel.uncovered_witness = all.firstNotIn(dilated);
  sel.cover_ok = sel.uncovered_witness < 0;
  return sel;
}

FiniteCover vitaliFinite(const Potential& u, const Grid& g, const CellSet& D,
                         const std::function<double(std::int64_t)>& height_of,
                         double K) {
  if (D.empty()) throw LabError("PreconditionViolation", "empty compact set");

  std::vector<std::int64_t> cells;
  cells.reserve(size_t(D.count()));
  D.forEach([&](std::int64_t id) { cells.push_back(id); });

  double H = 0;
  std::vector<double> hs(cells.size());
  for (size_t i = 0; i < cells.size(); ++i) {
    hs[i] = height_of(cells[i]);
    if (!(hs[i] > 0)) throw LabError("PreconditionViolation", "heights must be positive");
    H = std::max(H, hs[i]);
  }

  auto dyadicClass = [&](double h) {
    int i = 1;
    double lo = H / 2;
    while (h <= lo && i < 60) {
      lo /= 2;
      ++i;
    }
    return i;
  };

  // greedy maximal disjoint collection of the K-shrunken sections
  FiniteCover out;
  std::vector<SectionSet> shrunken;
  int max_class = 1;
  std::vector<int> cls(cells.size());
  for (size_t i = 0; i < cells.size(); ++i) {
    cls[i] = dyadicClass(hs[i]);
    max_class = std::max(max_class, cls[i]);
  }
  auto boxesOverlap = [&](const SectionSet& a, const SectionSet& b) {
    for (int d = 0; d < g.dim; ++d)
      if (a.box_hi[d] < b.box_lo[d] || b.box_hi[d] < a.box_lo[d]) return false;
    return true;
  };
  for (int k = 1; k <= max_class; ++k) {
    for (size_t i = 0; i < cells.size(); ++i) {
      if (cls[i] != k) continue;
      SectionSet s = sectionScan(u, g, g.center(cells[i]), hs[i] / K);
      bool disjoint = true;
      for (const auto& sj : shrunken)
        if (boxesOverlap(s, sj) && s.cells.intersects(sj.cells)) {
          disjoint = false;
          break;
        }
      if (disjoint) {
        shrunken.push_back(std::move(s));
        out.sections.push_back({g.center(cells[i]), hs[i]});
      }
    }
  }

  out.shrunken_disjoint = true;
  for (size_t a = 0; a < shrunken.size() && out.shrunken_disjoint; ++a)
    for (size_t b = a + 1; b < shrunken.size(); ++b)
      if (shrunken[a].cells.intersects(shrunken[b].cells)) {
        out.shrunken_disjoint = false;
        break;
      }

  CellSet cover(g);
  for (const auto& s : out.sections) {
    SectionSet full = sectionScan(u, g, s.center, s.height);
    cover.unionWith(full.cells);
  }
  out.uncovered_witness = D.firstNotIn(cover);
  out.covers = out.uncovered_witness < 0;
  if (!out.covers)
    throw LabError("CoverFailure",
                   "cell " + std::to_string(out.uncovered_witness) + " left uncovered");
  return out;
}

InkSpotsStep inkSpotsStep(const Potential& u, const Grid& g, double h,
                          const CellSet& E, const CellSet& F,
                          const InkSpotsParams& params) {
  SectionSet base = sectionScan(u, g, Vec::zero(g.dim), h);
  InkSpotsStep rep;
  rep.bound = 1.0 - params.c2 * params.delta;

  if (!E.isSubsetOf(F) || !F.isSubsetOf(base.cells))
    throw LabError("PreconditionViolation", "need nested open sets E, F in S(0,h)");

  rep.e_measure = double(E.count()) * g.cellMeasure();
  rep.f_measure = double(F.count()) * g.cellMeasure();

  // hypothesis (ii), checked exactly
  if (rep.e_measure > (1.0 - params.delta) * base.measure) {
    rep.applicable = false;
    rep.violated = "measure-fraction";
    return rep;
  }

  // hypothesis (i) on a lattice of centers and dyadic heights; count how many
  // sampled sections pass through each cell so the density is on record
  std::vector<std::int64_t> centers;
  {
    std::int64_t i = 0;
    base.cells.forEach([&](std::int64_t id) {
      auto c = g.coords(id);
      bool on_lattice = true;
      for (int d = 0; d < g.dim; ++d)
        if (c[d] % params.center_stride) on_lattice = false;
      if (on_lattice) centers.push_back(id);
      ++i;
    });
  }
  std::vector<std::int32_t> coverage(size_t(g.cellCount()), 0);
  for (std::int64_t cid : centers) {
    Vec x = g.center(cid);
    for (int lev = 0; lev < params.dyadic_levels; ++lev) {
      double t = h / (1 << lev);
      SectionSet s = sectionScan(u, g, x, t);
      if (!s.cells.isSubsetOf(base.cells)) continue;
      ++rep.sampled_sections;
      s.cells.forEach([&](std::int64_t id) { ++coverage[size_t(id)]; });
      std::int64_t inter = s.cells.intersectionCount(E);
      if (double(inter) > (1.0 - params.delta) * double(s.member_count)) {
        if (!s.cells.isSubsetOf(F)) {
          rep.applicable = false;
          rep.violated = "density-implies-inclusion";
          rep.witness_center = x;
          rep.witness_height = t;
          return rep;
        }
      }
    }
  }
  CellSet interior = base.cells;
  for (int round = 0; round < params.interior_margin; ++round) {
    CellSet eroded(g);
    interior.forEach([&](std::int64_t id) {
      auto c = g.coords(id);
      bool keep = true;
      for (int d = 0; d < g.dim && keep; ++d)
        for (int off : {-1, 1}) {
          auto cc = c;
          cc[d] += off;
          if (!g.inBounds(cc) || !interior.test(g.id(cc[0], cc[1], cc[2]))) keep = false;
        }
      if (keep) eroded.set(id);
    });
    interior = eroded;
  }
  rep.min_coverage = 1 << 30;
  interior.forEach([&](std::int64_t id) {
    rep.min_coverage = std::min<std::int64_t>(rep.min_coverage, coverage[size_t(id)]);
  });

  rep.ratio = rep.f_measure > 0 ? rep.e_measure / rep.f_measure : 0.0;
  rep.conclusion = rep.e_measure <= rep.bound * rep.f_measure + 1e-12;
  return rep;
}

}  // namespace malab
