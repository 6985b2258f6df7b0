#pragma once

// Uniform cell grids and bitset-backed cell sets.

#include <cstdint>
#include <vector>

#include "malab/linalg.hpp"

namespace malab {

// Axis-aligned uniform grid of cells over a box. Cell (i,j,k) has its center at
// lo + (i+1/2) dx per axis; all point sampling happens at cell centers.
struct Grid {
  int dim = 2;
  std::array<int, 3> cells{1, 1, 1};
  std::array<double, 3> lo{0, 0, 0};
  std::array<double, 3> dx{1, 1, 1};

  Grid() = default;
  // Square box [-half, half]^dim with m cells per axis.
  static Grid centered(int dim, double half, int m) {
    Grid g;
    g.dim = dim;
    for (int d = 0; d < dim; ++d) {
      g.cells[d] = m;
      g.lo[d] = -half;
      g.dx[d] = 2.0 * half / m;
    }
    return g;
  }

  std::int64_t cellCount() const {
    std::int64_t c = 1;
    for (int d = 0; d < dim; ++d) c *= cells[d];
    return c;
  }
  double cellMeasure() const {
    double c = 1;
    for (int d = 0; d < dim; ++d) c *= dx[d];
    return c;
  }
  double spacing() const { return dx[0]; }

  std::int64_t id(int i, int j = 0, int k = 0) const {
    return i + std::int64_t(cells[0]) * (j + std::int64_t(cells[1]) * k);
  }
  std::array<int, 3> coords(std::int64_t id) const {
    std::array<int, 3> c{0, 0, 0};
    c[0] = int(id % cells[0]);
    id /= cells[0];
    c[1] = int(id % cells[1]);
    c[2] = int(id / cells[1]);
    return c;
  }
  Vec center(const std::array<int, 3>& c) const {
    Vec x(dim);
    for (int d = 0; d < dim; ++d) x[d] = lo[d] + (c[d] + 0.5) * dx[d];
    return x;
  }
  Vec center(std::int64_t id) const { return center(coords(id)); }

  bool inBounds(const std::array<int, 3>& c) const {
    for (int d = 0; d < dim; ++d)
      if (c[d] < 0 || c[d] >= cells[d]) return false;
    return true;
  }

  // Cell index of an arbitrary point (clamped to the grid).
  std::array<int, 3> locate(const Vec& x) const {
    std::array<int, 3> c{0, 0, 0};
    for (int d = 0; d < dim; ++d) {
      int i = int(std::floor((x[d] - lo[d]) / dx[d]));
      c[d] = std::min(std::max(i, 0), cells[d] - 1);
    }
    return c;
  }
  bool containsPoint(const Vec& x) const {
    for (int d = 0; d < dim; ++d) {
      double hi = lo[d] + cells[d] * dx[d];
      if (x[d] < lo[d] || x[d] > hi) return false;
    }
    return true;
  }

  // Distance (in cells) from the grid boundary, minimum over axes.
  int boundaryDistance(const std::array<int, 3>& c) const {
    int m = cells[0];
    for (int d = 0; d < dim; ++d)
      m = std::min({m, c[d], cells[d] - 1 - c[d]});
    return m;
  }
};

// Set of grid cells as a packed bitset.
class CellSet {
public:
  CellSet() = default;
  explicit CellSet(const Grid& g)
      : size_(g.cellCount()), words_((size_ + 63) / 64, 0ull) {}

  std::int64_t size() const { return size_; }
  bool test(std::int64_t i) const {
    return (words_[i >> 6] >> (i & 63)) & 1ull;
  }
  void set(std::int64_t i) {
    std::uint64_t& w = words_[i >> 6];
    std::uint64_t bit = 1ull << (i & 63);
    if (!(w & bit)) {
      w |= bit;
      ++count_;
    }
  }
  void setUnchecked(std::int64_t i) { words_[i >> 6] |= 1ull << (i & 63); }
  void recount() {
    count_ = 0;
    for (std::uint64_t w : words_) count_ += __builtin_popcountll(w);
  }
  std::int64_t count() const { return count_; }
  bool empty() const { return count_ == 0; }

  bool intersects(const CellSet& o) const {
    for (size_t i = 0; i < words_.size(); ++i)
      if (words_[i] & o.words_[i]) return true;
    return false;
  }
  bool isSubsetOf(const CellSet& o) const {
    for (size_t i = 0; i < words_.size(); ++i)
      if (words_[i] & ~o.words_[i]) return false;
    return true;
  }
  std::int64_t intersectionCount(const CellSet& o) const {
    std::int64_t c = 0;
    for (size_t i = 0; i < words_.size(); ++i)
      c += __builtin_popcountll(words_[i] & o.words_[i]);
    return c;
  }
  void unionWith(const CellSet& o) {
    for (size_t i = 0; i < words_.size(); ++i) words_[i] |= o.words_[i];
    recount();
  }
  // First cell in `this` not in `o`, or -1.
  std::int64_t firstNotIn(const CellSet& o) const {
    for (size_t i = 0; i < words_.size(); ++i) {
      std::uint64_t d = words_[i] & ~o.words_[i];
      if (d) return std::int64_t(i) * 64 + __builtin_ctzll(d);
    }
    return -1;
  }

  template <class F>
  void forEach(F&& f) const {
    for (size_t i = 0; i < words_.size(); ++i) {
      std::uint64_t w = words_[i];
      while (w) {
        int b = __builtin_ctzll(w);
        f(std::int64_t(i) * 64 + b);
        w &= w - 1;
      }
    }
  }

  bool operator==(const CellSet& o) const { return words_ == o.words_; }

private:
  std::int64_t size_ = 0;
  std::int64_t count_ = 0;
  std::vector<std::uint64_t> words_;
};

}  // namespace malab
