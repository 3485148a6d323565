#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "pluripot/cone.hpp"
#include "pluripot/gridfn.hpp"
#include "pluripot/pshcore.hpp"

namespace pluripot {

struct SolverOptions {
  double tol = 1e-8;              // relative sup-norm change per sweep
  std::int64_t max_sweeps = 1000000;
  bool gauss_seidel = false;      // faster, order-dependent; Jacobi is the
                                  // reproducibility mode
  int jobs = 1;                   // Jacobi sweeps split across threads; the
                                  // update is buffer-to-buffer, so results are
                                  // identical for any worker count
};

struct EnvelopeResult {
  GridFunction envelope;
  std::int64_t iterations = 0;
  double final_residual = 0.0;
  bool converged = false;
  std::vector<std::int64_t> contact; // nodes where envelope touches the obstacle
};

namespace detail {

// Greatest fixed point of u <- min(obstacle, min over rows of row average),
// computed by monotone value iteration from the obstacle. Nodes without rows
// in the requested view keep their obstacle value. Floating-point averaging is
// monotone in every argument, so the iterates decrease exactly nodewise and
// the loop terminates: either the change drops under the tolerance or the
// sweep reproduces its input bit for bit.
inline EnvelopeResult envelope_core(const GridFunction& obstacle, const DiscretePshCone& cone,
                                    bool all_rows, const SolverOptions& opts) {
  require_same_mask(*obstacle.mask, *cone.mask, "envelope");
  const DomainMask& mask = *cone.mask;

  // Centers updated by the sweep, with their row ranges. Every row of one
  // center shares the interior flag, so filtering is a center-level choice.
  std::vector<std::int64_t> centers;
  for (const std::int64_t c : mask.closure_nodes) {
    const std::int64_t b = cone.node_row_begin[static_cast<std::size_t>(c)];
    const std::int64_t e = cone.node_row_begin[static_cast<std::size_t>(c) + 1];
    if (b == e) continue;
    if (all_rows || cone.rows[static_cast<std::size_t>(b)].interior_center) centers.push_back(c);
  }

  const double tol_abs = opts.tol * (1.0 + value_range(obstacle).width());

  EnvelopeResult res;
  res.envelope.mask = obstacle.mask;
  res.envelope.role = obstacle.role + "_env";
  res.envelope.values = obstacle.values;

  std::vector<double> next = res.envelope.values;
  std::vector<double>& cur = res.envelope.values;

  const int jobs = std::max(1, opts.jobs);
  auto update_range = [&](const std::vector<double>& read, std::vector<double>& write,
                          std::size_t lo, std::size_t hi) {
    double worst = 0.0;
    for (std::size_t k = lo; k < hi; ++k) {
      const std::size_t ci = static_cast<std::size_t>(centers[k]);
      double best = obstacle.values[ci];
      const std::int64_t b = cone.node_row_begin[ci];
      const std::int64_t e = cone.node_row_begin[ci + 1];
      for (std::int64_t r = b; r < e; ++r)
        best = std::min(best, cone.row_average(cone.rows[static_cast<std::size_t>(r)], read));
      const double drop = read[ci] - best;
      if (drop > worst) worst = drop;
      write[ci] = std::min(read[ci], best);
    }
    return worst;
  };

  double residual = std::numeric_limits<double>::infinity();
  std::int64_t sweep = 0;
  while (sweep < opts.max_sweeps) {
    ++sweep;
    std::vector<double>& write = opts.gauss_seidel ? cur : next;
    if (opts.gauss_seidel || jobs == 1 || centers.size() < 4096) {
      residual = update_range(cur, write, 0, centers.size());
    } else {
      std::vector<double> worst(static_cast<std::size_t>(jobs), 0.0);
      std::vector<std::thread> pool;
      const std::size_t chunk = (centers.size() + jobs - 1) / jobs;
      for (int t = 0; t < jobs; ++t) {
        const std::size_t lo = std::min(centers.size(), static_cast<std::size_t>(t) * chunk);
        const std::size_t hi = std::min(centers.size(), lo + chunk);
        pool.emplace_back([&, t, lo, hi] { worst[static_cast<std::size_t>(t)] = update_range(cur, next, lo, hi); });
      }
      for (auto& th : pool) th.join();
      residual = 0.0;
      for (const double w : worst) residual = std::max(residual, w);
    }
    if (!opts.gauss_seidel) std::swap(cur, next);
    if (residual == 0.0 || residual <= tol_abs) {
      res.converged = true;
      break;
    }
  }
  res.iterations = sweep;
  res.final_residual = residual;

  const double ctol = 10.0 * tol_abs;
  for (const std::int64_t c : mask.closure_nodes)
    if (std::abs(res.envelope.values[static_cast<std::size_t>(c)] -
                 obstacle.values[static_cast<std::size_t>(c)]) <= ctol)
      res.contact.push_back(c);
  return res;
}

} // namespace detail

// Largest discretely plurisubharmonic minorant of the obstacle. Boundary nodes
// are pinned to the obstacle (only interior-centered constraint rows drive the
// iteration); certification against the full closure cone is a separate,
// deliberately stricter check.
inline EnvelopeResult psh_envelope(const GridFunction& obstacle, const DiscretePshCone& cone,
                                   const SolverOptions& opts = {}) {
  return detail::envelope_core(obstacle, cone, /*all_rows=*/false, opts);
}

// Same iteration with every row active, including boundary-centered rows at
// true boundary points. This is the exact LP dual of the Jensen problem on the
// shared row set, so duality gaps against it are pure solver noise.
inline EnvelopeResult psh_envelope_closure(const GridFunction& obstacle,
                                           const DiscretePshCone& cone,
                                           const SolverOptions& opts = {}) {
  return detail::envelope_core(obstacle, cone, /*all_rows=*/true, opts);
}

// Discrete Laplace solve: boundary values are taken from f, interior nodes
// relax to the average of their 2d axis neighbors (red-black SOR). Neighbor
// sums are formed pairwise so constant data reaches an exactly zero residual.
inline GridFunction harmonic_extension(const GridFunction& f, std::int64_t max_iter = 200000) {
  const DomainMask& mask = *f.mask;
  const Lattice& lat = mask.lat;
  const int d = lat.dim();

  double blo = std::numeric_limits<double>::infinity();
  double bhi = -std::numeric_limits<double>::infinity();
  for (const std::int64_t b : mask.boundary_nodes) {
    const double v = f.values[static_cast<std::size_t>(b)];
    blo = std::min(blo, v);
    bhi = std::max(bhi, v);
  }
  if (mask.boundary_nodes.empty()) throw BadParams("harmonic extension needs boundary nodes");

  GridFunction H;
  H.mask = f.mask;
  H.role = "H";
  H.values.assign(f.values.size(), std::numeric_limits<double>::quiet_NaN());
  for (const std::int64_t b : mask.boundary_nodes)
    H.values[static_cast<std::size_t>(b)] = f.values[static_cast<std::size_t>(b)];
  const double mid = 0.5 * (blo + bhi);
  for (const std::int64_t c : mask.interior_nodes) H.values[static_cast<std::size_t>(c)] = mid;

  // Color by multi-index parity for the classic two-sweep update.
  std::vector<std::int64_t> red, black;
  for (const std::int64_t c : mask.interior_nodes) {
    const auto mi = lat.multi(c);
    std::int64_t s = 0;
    for (int a = 0; a < d; ++a) s += mi[a];
    (s % 2 == 0 ? red : black).push_back(c);
  }

  std::int64_t nmax = 2;
  for (int a = 0; a < d; ++a) nmax = std::max(nmax, lat.axis_count(a));
  const double omega = 2.0 / (1.0 + std::sin(M_PI / static_cast<double>(nmax)));
  const double inv2d = 1.0 / static_cast<double>(2 * d);

  auto neighbor_avg = [&](std::int64_t c) {
    double s01 = H.values[static_cast<std::size_t>(lat.step(c, 0, 1))] +
                 H.values[static_cast<std::size_t>(lat.step(c, 0, -1))];
    double s23 = H.values[static_cast<std::size_t>(lat.step(c, 1, 1))] +
                 H.values[static_cast<std::size_t>(lat.step(c, 1, -1))];
    double acc = s01 + s23;
    if (d == 4) {
      double s45 = H.values[static_cast<std::size_t>(lat.step(c, 2, 1))] +
                   H.values[static_cast<std::size_t>(lat.step(c, 2, -1))];
      double s67 = H.values[static_cast<std::size_t>(lat.step(c, 3, 1))] +
                   H.values[static_cast<std::size_t>(lat.step(c, 3, -1))];
      acc += s45 + s67;
    }
    return acc * inv2d;
  };

  const double target = 1e-10 * (bhi - blo);
  double residual = std::numeric_limits<double>::infinity();
  for (std::int64_t it = 0; it < max_iter; ++it) {
    for (const auto* group : {&red, &black})
      for (const std::int64_t c : *group) {
        const std::size_t ci = static_cast<std::size_t>(c);
        H.values[ci] += omega * (neighbor_avg(c) - H.values[ci]);
      }
    residual = 0.0;
    for (const std::int64_t c : mask.interior_nodes)
      residual = std::max(residual,
                          std::abs(neighbor_avg(c) - H.values[static_cast<std::size_t>(c)]));
    if (residual <= target) return H;
  }
  throw NonConvergence("harmonic extension stalled at residual " + std::to_string(residual));
}

// Relative extremal function of a node set K: envelope of the obstacle that is
// 0 on the closure and -1 on K. The result is 0 on boundary nodes, exactly -1
// on K, and lies in [-1, 0].
inline GridFunction relative_extremal(const std::vector<std::int64_t>& K, const MaskPtr& mask,
                                      const DiscretePshCone& cone, const SolverOptions& opts = {}) {
  require_same_mask(*mask, *cone.mask, "relative_extremal");
  if (K.empty()) throw BadParams("relative extremal needs a nonempty target set");
  for (const std::int64_t k : K)
    if (!mask->is_interior(k))
      throw BadParams("relative extremal target must consist of interior nodes");
  GridFunction obstacle = constant_grid_function(mask, 0.0, "obstacle");
  for (const std::int64_t k : K) obstacle.values[static_cast<std::size_t>(k)] = -1.0;
  EnvelopeResult r = psh_envelope(obstacle, cone, opts);
  r.envelope.role = "psi";
  return std::move(r.envelope);
}

struct DirichletResult {
  GridFunction harmonic;
  EnvelopeResult envelope;
  double boundary_mismatch = 0.0;
};

// Perron-style solution of the Dirichlet problem in the cone: harmonic
// extension of the boundary data, then the largest cone minorant of it. The
// boundary mismatch records how far the envelope moved off the data.
inline DirichletResult dirichlet_psh_extension(const GridFunction& f, const DiscretePshCone& cone,
                                               const SolverOptions& opts = {}) {
  DirichletResult out;
  out.harmonic = harmonic_extension(f);
  out.envelope = psh_envelope(out.harmonic, cone, opts);
  const DomainMask& mask = *f.mask;
  for (const std::int64_t b : mask.boundary_nodes)
    out.boundary_mismatch =
        std::max(out.boundary_mismatch, std::abs(out.envelope.envelope.values[static_cast<std::size_t>(b)] -
                                                 f.values[static_cast<std::size_t>(b)]));
  return out;
}

} // namespace pluripot
