#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "pluripot/cone.hpp"
#include "pluripot/gridfn.hpp"

namespace pluripot {

// Scale-free tolerance under which a grid function counts as a cone member.
// Sits far below the O(h^2) signal of a genuine sub-mean-value failure.
inline double violation_tolerance(const GridFunction& u) {
  return 1e-9 * (1.0 + value_range(u).width());
}

struct ViolationReport {
  double worst = -std::numeric_limits<double>::infinity();
  std::int64_t worst_node = -1;
  std::int32_t worst_pattern = -1;
  std::int64_t row_count = 0;
  std::int64_t rows_above_tol = 0;
  double tol = 0.0;
  // Fixed 32-bucket histogram of all row values between hist_lo and hist_hi.
  double hist_lo = 0.0, hist_hi = 0.0;
  std::vector<std::int64_t> hist_counts;

  bool in_cone() const { return worst <= tol; }
};

// Evaluates every constraint row of the cone on u and reports the worst
// violation (positive means the sub-mean-value inequality fails there).
// Two passes: the first finds the value range for the histogram, the second
// bins. Ties on the worst row resolve to the lowest node index.
inline ViolationReport cone_violation(const GridFunction& u, const DiscretePshCone& cone) {
  require_same_mask(*u.mask, *cone.mask, "cone_violation");
  ViolationReport rep;
  rep.tol = violation_tolerance(u);
  rep.row_count = static_cast<std::int64_t>(cone.rows.size());
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& row : cone.rows) {
    const double v = cone.row_violation(row, u.values);
    if (v > rep.worst) {
      rep.worst = v;
      rep.worst_node = row.center;
      rep.worst_pattern = row.pattern;
    }
    if (v > rep.tol) ++rep.rows_above_tol;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (cone.rows.empty()) {
    rep.worst = 0.0;
    return rep;
  }
  rep.hist_lo = lo;
  rep.hist_hi = hi;
  rep.hist_counts.assign(32, 0);
  const double span = hi - lo;
  for (const auto& row : cone.rows) {
    const double v = cone.row_violation(row, u.values);
    int b = span > 0.0 ? static_cast<int>((v - lo) / span * 32.0) : 0;
    if (b < 0) b = 0;
    if (b > 31) b = 31;
    ++rep.hist_counts[static_cast<std::size_t>(b)];
  }
  return rep;
}

// Pointwise smallest eigenvalue of the complex Hessian, from centered second
// differences. For one complex variable this is the plain 5-point Laplacian
// (the classical subharmonicity test); for two variables the 2x2 Hermitian
// eigenvalue in closed form. Nodes missing a neighbor are set to NaN rather
// than extrapolated; consumers must skip those.
inline GridFunction levi_profile(const GridFunction& u) {
  const DomainMask& mask = *u.mask;
  const Lattice& lat = mask.lat;
  const double h = lat.h();
  GridFunction out;
  out.mask = u.mask;
  out.role = "levi_min";
  out.values.assign(u.values.size(), std::numeric_limits<double>::quiet_NaN());

  auto val = [&](std::int64_t node, int axis, int delta) -> double {
    const std::int64_t t = lat.step(node, axis, delta);
    if (t < 0 || !mask.in_closure(t)) return std::numeric_limits<double>::quiet_NaN();
    return u.values[static_cast<std::size_t>(t)];
  };
  auto val2 = [&](std::int64_t node, int a, int da, int b, int db) -> double {
    const std::int64_t t = lat.step(node, a, da);
    if (t < 0) return std::numeric_limits<double>::quiet_NaN();
    const std::int64_t s = lat.step(t, b, db);
    if (s < 0 || !mask.in_closure(s)) return std::numeric_limits<double>::quiet_NaN();
    return u.values[static_cast<std::size_t>(s)];
  };

  for (const std::int64_t c : mask.interior_nodes) {
    const double uc = u.values[static_cast<std::size_t>(c)];
    auto second = [&](int axis) {
      return (val(c, axis, 1) - 2.0 * uc + val(c, axis, -1)) / (h * h);
    };
    auto cross = [&](int a, int b) {
      return (val2(c, a, 1, b, 1) - val2(c, a, 1, b, -1) - val2(c, a, -1, b, 1) +
              val2(c, a, -1, b, -1)) /
             (4.0 * h * h);
    };
    if (lat.n() == 1) {
      out.values[static_cast<std::size_t>(c)] = second(0) + second(1);
    } else {
      const double a11 = (second(0) + second(1)) / 4.0;
      const double a22 = (second(2) + second(3)) / 4.0;
      const double re12 = (cross(0, 2) + cross(1, 3)) / 4.0;
      const double im12 = (cross(0, 3) - cross(1, 2)) / 4.0;
      const double mid = 0.5 * (a11 + a22);
      const double rad = std::sqrt(0.25 * (a11 - a22) * (a11 - a22) + re12 * re12 + im12 * im12);
      out.values[static_cast<std::size_t>(c)] = mid - rad;
    }
  }
  return out;
}

// Nodewise max over the closed delta-ball: a grid surrogate for upper
// semicontinuous regularization. Dominates the input and is monotone in it.
inline GridFunction usc_regularize(const GridFunction& u, double delta) {
  const DomainMask& mask = *u.mask;
  const Lattice& lat = mask.lat;
  const double h = lat.h();
  if (!(delta >= h)) throw BadParams("regularization radius must be at least one cell");

  const int reach = static_cast<int>(std::floor(delta / h * (1.0 + 1e-12)));
  std::vector<std::array<int, 4>> ball;
  std::array<int, 4> off{0, 0, 0, 0};
  const int d = lat.dim();
  std::function<void(int)> enumerate = [&](int axis) {
    if (axis == d) {
      double r2 = 0.0;
      for (int a = 0; a < d; ++a) r2 += static_cast<double>(off[a]) * off[a] * h * h;
      if (r2 <= delta * delta * (1.0 + 1e-12)) ball.push_back(off);
      return;
    }
    for (int k = -reach; k <= reach; ++k) {
      off[axis] = k;
      enumerate(axis + 1);
    }
    off[axis] = 0;
  };
  enumerate(0);

  GridFunction out;
  out.mask = u.mask;
  out.role = u.role + "*";
  out.values.assign(u.values.size(), std::numeric_limits<double>::quiet_NaN());
  for (const std::int64_t c : mask.closure_nodes) {
    const auto mi = lat.multi(c);
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& o : ball) {
      bool in = true;
      std::array<std::int64_t, 4> t = mi;
      for (int a = 0; a < d; ++a) {
        t[a] += o[a];
        if (t[a] < 0 || t[a] >= lat.axis_count(a)) {
          in = false;
          break;
        }
      }
      if (!in) continue;
      const std::int64_t node = lat.flat(t);
      if (!mask.in_closure(node)) continue;
      best = std::max(best, u.values[static_cast<std::size_t>(node)]);
    }
    out.values[static_cast<std::size_t>(c)] = best;
  }
  return out;
}

struct MonotoneReport {
  bool nonincreasing = true;
  bool nondecreasing = true;
  int first_increase_step = -1; // j such that seq[j+1] > seq[j] somewhere
  std::int64_t first_increase_node = -1;
  std::vector<double> element_worst;
  ViolationReport last;
};

// Checks a finite sequence for nodewise monotonicity and cone membership of
// every element; the final element stands in for the limit.
inline MonotoneReport monotone_limit_check(const std::vector<GridFunction>& seq,
                                           const DiscretePshCone& cone) {
  if (seq.size() < 2) throw BadParams("monotone check needs at least two functions");
  for (const auto& g : seq) require_same_mask(*g.mask, *cone.mask, "monotone_limit_check");
  MonotoneReport rep;
  const DomainMask& mask = *cone.mask;
  for (std::size_t j = 0; j + 1 < seq.size(); ++j) {
    for (const std::int64_t c : mask.closure_nodes) {
      const double a = seq[j].values[static_cast<std::size_t>(c)];
      const double b = seq[j + 1].values[static_cast<std::size_t>(c)];
      if (b > a && rep.nonincreasing) {
        rep.nonincreasing = false;
        rep.first_increase_step = static_cast<int>(j);
        rep.first_increase_node = c;
      }
      if (b < a) rep.nondecreasing = false;
    }
  }
  for (const auto& g : seq) rep.element_worst.push_back(cone_violation(g, cone).worst);
  rep.last = cone_violation(seq.back(), cone);
  return rep;
}

} // namespace pluripot
