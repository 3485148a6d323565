#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "pluripot/errors.hpp"

namespace pluripot {

inline constexpr std::int64_t kDefaultNodeBudget = 200000;

using Point = std::array<double, 4>; // x1..x_{2n}; unused axes stay 0

// Uniform grid over an axis-aligned box in R^{2n}, n = 1 or 2. Nodes sit at
// integer multiples of the spacing h, so coordinates like 0, 1.0, 2h are hit
// exactly; the stored box is the smallest h-aligned box containing all nodes
// (it may shrink the requested box by less than h per side).
class Lattice {
public:
  Lattice(int n, const Point& lo, const Point& hi, double h,
          std::int64_t node_budget = kDefaultNodeBudget)
      : n_(n), d_(2 * n), h_(h) {
    if (n != 1 && n != 2) throw BadParams("complex dimension must be 1 or 2");
    if (!(h > 0.0) || !std::isfinite(h)) throw InvalidBox("spacing must be positive and finite");
    std::int64_t total = 1;
    for (int a = 0; a < d_; ++a) {
      if (!(lo[a] < hi[a])) throw InvalidBox("degenerate interval on axis " + std::to_string(a));
      // Snap the index range outward by a relative epsilon so that requested
      // endpoints that are exact multiples of h (up to roundoff) are kept.
      const double eps = 1e-9 * (1.0 + std::abs(lo[a]) / h + std::abs(hi[a]) / h);
      i0_[a] = static_cast<std::int64_t>(std::ceil(lo[a] / h - eps));
      const std::int64_t imax = static_cast<std::int64_t>(std::floor(hi[a] / h + eps));
      if (imax < i0_[a]) throw InvalidBox("no node fits on axis " + std::to_string(a));
      count_[a] = imax - i0_[a] + 1;
      if (count_[a] > node_budget || total > node_budget / count_[a] + 1)
        throw NodeBudgetExceeded("axis counts overflow the node budget");
      total *= count_[a];
      if (total > node_budget)
        throw NodeBudgetExceeded(std::to_string(total) + " nodes > budget " +
                                 std::to_string(node_budget));
    }
    total_ = total;
    for (int a = d_; a < 4; ++a) {
      i0_[a] = 0;
      count_[a] = 1;
    }
    // Row-major strides, last axis fastest.
    stride_[d_ - 1] = 1;
    for (int a = d_ - 2; a >= 0; --a) stride_[a] = stride_[a + 1] * count_[a + 1];
    for (int a = d_; a < 4; ++a) stride_[a] = 0;
  }

  int n() const { return n_; }
  int dim() const { return d_; }
  double h() const { return h_; }
  std::int64_t size() const { return total_; }
  std::int64_t axis_count(int a) const { return count_[a]; }
  std::int64_t axis_origin(int a) const { return i0_[a]; }

  double coord(int axis, std::int64_t idx) const {
    return static_cast<double>(i0_[axis] + idx) * h_;
  }
  double box_lo(int a) const { return coord(a, 0); }
  double box_hi(int a) const { return coord(a, count_[a] - 1); }

  std::int64_t flat(const std::array<std::int64_t, 4>& mi) const {
    std::int64_t f = 0;
    for (int a = 0; a < d_; ++a) f += mi[a] * stride_[a];
    return f;
  }
  std::array<std::int64_t, 4> multi(std::int64_t flat_idx) const {
    std::array<std::int64_t, 4> mi{0, 0, 0, 0};
    for (int a = 0; a < d_; ++a) {
      mi[a] = flat_idx / stride_[a];
      flat_idx -= mi[a] * stride_[a];
    }
    return mi;
  }
  bool in_range(const std::array<std::int64_t, 4>& mi) const {
    for (int a = 0; a < d_; ++a)
      if (mi[a] < 0 || mi[a] >= count_[a]) return false;
    return true;
  }

  Point point(std::int64_t flat_idx) const {
    const auto mi = multi(flat_idx);
    Point p{0, 0, 0, 0};
    for (int a = 0; a < d_; ++a) p[a] = coord(a, mi[a]);
    return p;
  }

  // Neighbour in +/- direction along an axis; returns -1 if off the box.
  std::int64_t step(std::int64_t flat_idx, int axis, std::int64_t delta) const {
    auto mi = multi(flat_idx);
    mi[axis] += delta;
    if (mi[axis] < 0 || mi[axis] >= count_[axis]) return -1;
    return flat(mi);
  }

  bool contains(const Point& p, double tol = 0.0) const {
    for (int a = 0; a < d_; ++a)
      if (p[a] < box_lo(a) - tol || p[a] > box_hi(a) + tol) return false;
    return true;
  }

private:
  int n_, d_;
  double h_;
  std::array<std::int64_t, 4> i0_{}, count_{}, stride_{};
  std::int64_t total_ = 0;
};

inline Lattice build_lattice(const Point& lo, const Point& hi, double h, int n,
                             std::int64_t node_budget = kDefaultNodeBudget) {
  return Lattice(n, lo, hi, h, node_budget);
}

// One multilinear interpolation footprint: lattice nodes and convex weights.
struct SparseWeights {
  std::vector<std::int64_t> nodes;
  std::vector<double> weights;
};

// Multilinear interpolation weights at an arbitrary point of the box.
// Exact cases matter downstream: a point that coincides with a node (up to a
// relative snap tolerance) gets the single weight 1, and points on cell faces
// only reference the face's corners, so no weight is ever attached to a node
// that the point does not genuinely depend on.
inline SparseWeights interp_weights(const Lattice& lat, const Point& p) {
  const int d = lat.dim();
  std::array<std::int64_t, 4> base{0, 0, 0, 0};
  std::array<double, 4> frac{0, 0, 0, 0};
  for (int a = 0; a < d; ++a) {
    const double t = p[a] / lat.h() - static_cast<double>(lat.axis_origin(a));
    const double snap = 1e-9 * (1.0 + std::abs(t));
    if (t < -snap || t > static_cast<double>(lat.axis_count(a) - 1) + snap)
      throw OutOfBox("point leaves the lattice box on axis " + std::to_string(a));
    double fl = std::floor(t + snap);
    if (fl > static_cast<double>(lat.axis_count(a) - 1)) fl = static_cast<double>(lat.axis_count(a) - 1);
    double f = t - fl;
    if (f < snap) f = 0.0;
    if (f > 1.0 - snap && fl + 1.0 <= static_cast<double>(lat.axis_count(a) - 1)) {
      fl += 1.0;
      f = 0.0;
    }
    base[a] = static_cast<std::int64_t>(fl);
    frac[a] = f;
    if (f > 0.0 && base[a] + 1 >= lat.axis_count(a))
      throw OutOfBox("point in the outermost half-open cell on axis " + std::to_string(a));
  }
  SparseWeights out;
  // Enumerate corners of the (possibly degenerate) cell; skip zero weights.
  const int corners = 1 << d;
  for (int c = 0; c < corners; ++c) {
    double w = 1.0;
    std::array<std::int64_t, 4> mi = base;
    for (int a = 0; a < d; ++a) {
      if (c & (1 << a)) {
        w *= frac[a];
        mi[a] += 1;
      } else {
        w *= 1.0 - frac[a];
      }
    }
    if (w == 0.0) continue;
    out.nodes.push_back(lat.flat(mi));
    out.weights.push_back(w);
  }
  return out;
}

} // namespace pluripot
