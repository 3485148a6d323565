#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "pluripot/gridfn.hpp"
#include "pluripot/mask.hpp"

namespace pluripot {

// One circle stencil family member, shared by every node (translation
// invariant, built in index space so integer-offset members suffer no
// coordinate roundoff at all). `corner_*` is the aggregated multilinear
// footprint of all m samples; weights are nonnegative and their left-to-right
// sum is exactly 1 (the last weight is set to 1 - sum(front), which is exact
// by Sterbenz subtraction since the front sum lies in [1/2, 1]).
struct StencilPattern {
  std::array<double, 4> dir{1, 0, 0, 0}; // complex direction (Re/Im per factor)
  double radius = 0.0;
  int m = 4;
  bool exact = false;                     // every sample is itself a node
  std::vector<std::array<int, 4>> corner_off;
  std::vector<std::int64_t> corner_delta; // flat-index deltas on the owning lattice
  std::vector<double> corner_w;
  std::vector<std::array<double, 4>> sample_off; // real coordinate offsets, antipodal pairs
  std::array<int, 4> reach_lo{0, 0, 0, 0};
  std::array<int, 4> reach_hi{0, 0, 0, 0};
};

// Materialized view of one constraint row for inspection/serialization.
struct DiskStencil {
  std::int64_t center = -1;
  std::array<double, 4> dir{1, 0, 0, 0};
  double radius = 0.0;
  int m = 0;
  std::vector<SparseWeights> samples;
};

// The discrete analogue of the plurisubharmonic cone on a mask: one row per
// (eligible center, valid pattern), each asserting
//   u(center) <= sum_k w_k u(center + delta_k).
// Centers are all interior nodes plus those boundary nodes where the domain's
// interior predicate fails (true boundary points such as slit nodes; collar
// artifacts stay rowless). The "interior view" (rows with interior centers)
// drives envelopes; the full row set is the certification/duality cone.
class DiscretePshCone {
public:
  struct Row {
    std::int64_t center;
    std::int32_t pattern;
    bool interior_center;
  };

  MaskPtr mask;
  std::vector<StencilPattern> patterns;
  std::vector<Row> rows;                  // grouped by center, ascending
  std::vector<std::int64_t> node_row_begin; // CSR over flat node ids, size+1

  std::int64_t rows_at(std::int64_t node) const { return node_row_begin[node + 1] - node_row_begin[node]; }

  // Sweep form: plain weighted average of the corners. fl-monotone in every
  // corner value, which makes Jacobi envelope sweeps exactly monotone.
  double row_average(const Row& r, const std::vector<double>& u) const {
    const StencilPattern& p = patterns[r.pattern];
    double acc = 0.0;
    const std::size_t k = p.corner_delta.size();
    for (std::size_t i = 0; i < k; ++i)
      acc += p.corner_w[i] * u[static_cast<std::size_t>(r.center + p.corner_delta[i])];
    return acc;
  }

  // Certificate form: violation = u(center) - average, evaluated through
  // centered differences so constants give exactly zero.
  double row_violation(const Row& r, const std::vector<double>& u) const {
    const StencilPattern& p = patterns[r.pattern];
    const double uc = u[static_cast<std::size_t>(r.center)];
    double acc = 0.0;
    const std::size_t k = p.corner_delta.size();
    for (std::size_t i = 0; i < k; ++i)
      acc += p.corner_w[i] * (u[static_cast<std::size_t>(r.center + p.corner_delta[i])] - uc);
    return -acc;
  }

  DiskStencil materialize(std::int64_t row_index) const {
    const Row& r = rows[static_cast<std::size_t>(row_index)];
    const StencilPattern& p = patterns[r.pattern];
    DiskStencil s;
    s.center = r.center;
    s.dir = p.dir;
    s.radius = p.radius;
    s.m = p.m;
    const Point c = mask->lat.point(r.center);
    for (const auto& off : p.sample_off) {
      Point q = c;
      for (int a = 0; a < mask->lat.dim(); ++a) q[a] += off[a];
      s.samples.push_back(interp_weights(mask->lat, q));
    }
    return s;
  }
};

namespace detail {

inline void finalize_weights(std::vector<double>& w) {
  double front = 0.0;
  for (std::size_t i = 0; i + 1 < w.size(); ++i) front += w[i];
  // Weight sums live in [1/2, 1], so 1 - front is computed exactly.
  w.back() = 1.0 - front;
}

// Build the aggregated corner footprint of a circle of samples given in index
// units. Fractions within 1e-12 of an integer are snapped so that exact-node
// samples reference a single corner.
inline bool pattern_from_samples(const Lattice& lat,
                                 const std::vector<std::array<double, 4>>& sample_idx_off,
                                 StencilPattern& out) {
  std::map<std::array<int, 4>, double> agg;
  const double inv_m = 1.0 / static_cast<double>(sample_idx_off.size());
  for (const auto& o : sample_idx_off) {
    std::array<int, 4> base{0, 0, 0, 0};
    std::array<double, 4> frac{0, 0, 0, 0};
    for (int a = 0; a < lat.dim(); ++a) {
      double fl = std::floor(o[a]);
      double f = o[a] - fl;
      if (f < 1e-12) f = 0.0;
      if (f > 1.0 - 1e-12) {
        fl += 1.0;
        f = 0.0;
      }
      base[a] = static_cast<int>(fl);
      frac[a] = f;
    }
    const int corners = 1 << lat.dim();
    for (int c = 0; c < corners; ++c) {
      double w = inv_m;
      std::array<int, 4> off = base;
      for (int a = 0; a < lat.dim(); ++a) {
        if (c & (1 << a)) {
          w *= frac[a];
          off[a] += 1;
        } else {
          w *= 1.0 - frac[a];
        }
      }
      if (w == 0.0) continue;
      agg[off] += w;
    }
  }
  if (agg.size() < 2) return false; // degenerate; cannot constrain anything
  bool self = false;
  for (auto& [off, w] : agg) {
    if (off == std::array<int, 4>{0, 0, 0, 0}) self = true;
    out.corner_off.push_back(off);
    out.corner_w.push_back(w);
    for (int a = 0; a < lat.dim(); ++a) {
      out.reach_lo[a] = std::min(out.reach_lo[a], off[a]);
      out.reach_hi[a] = std::max(out.reach_hi[a], off[a]);
    }
  }
  if (self) return false; // radius under one cell; constraint would be tautological
  detail::finalize_weights(out.corner_w);
  return true;
}

} // namespace detail

struct ConeConfig {
  std::optional<std::vector<double>> radii; // interpolated circle radii; default {2h,4h}; empty = none
  int m = 16;                               // samples per interpolated circle
};

inline DiscretePshCone build_cone(const MaskPtr& mask, const ConeConfig& cfg = {}) {
  const Lattice& lat = mask->lat;
  const int n = lat.n();
  const double h = lat.h();
  if (cfg.m < 4) throw BadParams("stencil sample count must be at least 4");
  const int m = cfg.m + (cfg.m % 2); // antipodal pairing needs an even count

  DiscretePshCone cone;
  cone.mask = mask;

  // Flat-index delta of an integer offset on this lattice.
  auto flat_delta = [&lat](const std::array<int, 4>& off) {
    std::array<std::int64_t, 4> zero{0, 0, 0, 0}, shifted{0, 0, 0, 0};
    for (int a = 0; a < lat.dim(); ++a) shifted[a] = off[a];
    return lat.flat(shifted) - lat.flat(zero);
  };

  auto push_exact = [&](std::array<double, 4> dir, double radius,
                        const std::vector<std::array<int, 4>>& offs) {
    StencilPattern p;
    p.dir = dir;
    p.radius = radius;
    p.m = static_cast<int>(offs.size());
    p.exact = true;
    for (const auto& o : offs) {
      p.corner_off.push_back(o);
      p.corner_w.push_back(1.0 / static_cast<double>(offs.size()));
      std::array<double, 4> ro{0, 0, 0, 0};
      for (int a = 0; a < lat.dim(); ++a) {
        ro[a] = o[a] * h;
        p.reach_lo[a] = std::min(p.reach_lo[a], o[a]);
        p.reach_hi[a] = std::max(p.reach_hi[a], o[a]);
      }
      p.sample_off.push_back(ro);
      p.corner_delta.push_back(flat_delta(o));
    }
    cone.patterns.push_back(std::move(p));
  };

  // Lattice-exact backbone: every sample is a node, so these rows are exact on
  // pluriharmonic cubics and remain valid arbitrarily close to the boundary.
  if (n == 1) {
    push_exact({1, 0, 0, 0}, h, {{{1, 0, 0, 0}}, {{0, 1, 0, 0}}, {{-1, 0, 0, 0}}, {{0, -1, 0, 0}}});
    push_exact({1, 0, 0, 0}, h * std::sqrt(2.0),
               {{{1, 1, 0, 0}}, {{-1, 1, 0, 0}}, {{-1, -1, 0, 0}}, {{1, -1, 0, 0}}});
  } else {
    const double s = 1.0 / std::sqrt(2.0);
    push_exact({1, 0, 0, 0}, h, {{{1, 0, 0, 0}}, {{0, 1, 0, 0}}, {{-1, 0, 0, 0}}, {{0, -1, 0, 0}}});
    push_exact({0, 0, 1, 0}, h, {{{0, 0, 1, 0}}, {{0, 0, 0, 1}}, {{0, 0, -1, 0}}, {{0, 0, 0, -1}}});
    push_exact({s, 0, s, 0}, h * std::sqrt(2.0),
               {{{1, 0, 1, 0}}, {{0, 1, 0, 1}}, {{-1, 0, -1, 0}}, {{0, -1, 0, -1}}});
    push_exact({s, 0, -s, 0}, h * std::sqrt(2.0),
               {{{1, 0, -1, 0}}, {{0, 1, 0, -1}}, {{-1, 0, 1, 0}}, {{0, -1, 0, 1}}});
    push_exact({s, 0, 0, s}, h * std::sqrt(2.0),
               {{{1, 0, 0, 1}}, {{0, 1, -1, 0}}, {{-1, 0, 0, -1}}, {{0, -1, 1, 0}}});
    push_exact({s, 0, 0, -s}, h * std::sqrt(2.0),
               {{{1, 0, 0, -1}}, {{0, 1, 1, 0}}, {{-1, 0, 0, 1}}, {{0, -1, -1, 0}}});
  }

  // Interpolated circles at the configured radii (default 2h and 4h).
  std::vector<double> radii = cfg.radii.value_or(std::vector<double>{2.0 * h, 4.0 * h});
  std::vector<std::array<double, 4>> dirs;
  if (n == 1) {
    dirs.push_back({1, 0, 0, 0});
  } else {
    const double s = 1.0 / std::sqrt(2.0);
    dirs = {{1, 0, 0, 0}, {0, 0, 1, 0}, {s, 0, s, 0}, {s, 0, -s, 0}, {s, 0, 0, s}, {s, 0, 0, -s}};
  }
  for (const double r : radii) {
    if (!(r > 0.0)) throw BadParams("stencil radius must be positive");
    for (const auto& dir : dirs) {
      std::vector<std::array<double, 4>> idx_off(static_cast<std::size_t>(m));
      const std::complex<double> d1(dir[0], dir[1]), d2(dir[2], dir[3]);
      for (int k = 0; k < m / 2; ++k) {
        const double th = 2.0 * M_PI * k / m;
        const std::complex<double> rot(std::cos(th), std::sin(th));
        const std::complex<double> o1 = rot * d1 * (r / h), o2 = rot * d2 * (r / h);
        idx_off[k] = {o1.real(), o1.imag(), o2.real(), o2.imag()};
        for (int a = 0; a < 4; ++a) idx_off[k + m / 2][a] = -idx_off[k][a];
      }
      StencilPattern p;
      p.dir = dir;
      p.radius = r;
      p.m = m;
      p.exact = false;
      if (!detail::pattern_from_samples(lat, idx_off, p)) continue;
      p.corner_delta.clear();
      for (const auto& off : p.corner_off) p.corner_delta.push_back(flat_delta(off));
      for (const auto& o : idx_off) {
        std::array<double, 4> ro{0, 0, 0, 0};
        for (int a = 0; a < lat.dim(); ++a) ro[a] = o[a] * h;
        p.sample_off.push_back(ro);
      }
      cone.patterns.push_back(std::move(p));
    }
  }

  // Rows: walk closure nodes in index order, emit each valid pattern.
  for (const std::int64_t c : mask->closure_nodes) {
    const bool interior = mask->is_interior(c);
    const bool eligible = interior || !mask->dom.interior(lat.point(c));
    const std::size_t before = cone.rows.size();
    if (eligible) {
      const auto mi = lat.multi(c);
      for (std::int32_t pi = 0; pi < static_cast<std::int32_t>(cone.patterns.size()); ++pi) {
        const StencilPattern& p = cone.patterns[static_cast<std::size_t>(pi)];
        bool ok = true;
        for (int a = 0; a < lat.dim() && ok; ++a)
          if (mi[a] + p.reach_lo[a] < 0 || mi[a] + p.reach_hi[a] >= lat.axis_count(a)) ok = false;
        for (std::size_t k = 0; k < p.corner_delta.size() && ok; ++k)
          if (!mask->in_closure(c + p.corner_delta[k])) ok = false;
        if (ok) cone.rows.push_back({c, pi, interior});
      }
    }
    if (interior && cone.rows.size() == before)
      throw IsolatedNode("interior node " + std::to_string(c) + " admits no stencil");
  }
  // CSR over flat node ids (rows were emitted in ascending center order).
  cone.node_row_begin.assign(static_cast<std::size_t>(lat.size()) + 1, 0);
  {
    std::size_t r = 0;
    for (std::int64_t nidx = 0; nidx < lat.size(); ++nidx) {
      cone.node_row_begin[static_cast<std::size_t>(nidx)] = static_cast<std::int64_t>(r);
      while (r < cone.rows.size() && cone.rows[r].center == nidx) ++r;
    }
    cone.node_row_begin.back() = static_cast<std::int64_t>(cone.rows.size());
  }
  return cone;
}

} // namespace pluripot
