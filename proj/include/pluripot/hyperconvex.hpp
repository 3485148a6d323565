#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <deque>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "pluripot/envelope.hpp"
#include "pluripot/jensen.hpp"

namespace pluripot {

// Negative exhaustion vanishing on the boundary: the relative extremal
// function of the deep interior (nodes at least two cells from the boundary,
// or the single deepest node when the grid is too coarse to have any).
inline GridFunction build_exhaustion(const MaskPtr& mask, const DiscretePshCone& cone,
                                     const SolverOptions& opts = {}) {
  if (mask->interior_nodes.empty()) throw BadParams("exhaustion needs interior nodes");
  const Lattice& lat = mask->lat;
  constexpr std::int64_t kUnreached = -1;
  std::vector<std::int64_t> dist(static_cast<std::size_t>(lat.size()), kUnreached);
  std::deque<std::int64_t> queue;
  for (const std::int64_t b : mask->boundary_nodes) {
    dist[static_cast<std::size_t>(b)] = 0;
    queue.push_back(b);
  }
  while (!queue.empty()) {
    const std::int64_t c = queue.front();
    queue.pop_front();
    for (int a = 0; a < lat.dim(); ++a)
      for (const int d : {-1, 1}) {
        const std::int64_t t = lat.step(c, a, d);
        if (t < 0 || !mask->in_closure(t) || dist[static_cast<std::size_t>(t)] != kUnreached)
          continue;
        dist[static_cast<std::size_t>(t)] = dist[static_cast<std::size_t>(c)] + 1;
        queue.push_back(t);
      }
  }
  std::vector<std::int64_t> K;
  std::int64_t deepest = mask->interior_nodes.front();
  for (const std::int64_t c : mask->interior_nodes) {
    if (dist[static_cast<std::size_t>(c)] >= 2 || dist[static_cast<std::size_t>(c)] == kUnreached)
      K.push_back(c);
    if (dist[static_cast<std::size_t>(c)] > dist[static_cast<std::size_t>(deepest)]) deepest = c;
  }
  if (K.empty()) K.push_back(deepest);
  return relative_extremal(K, mask, cone, opts);
}

struct FatnessReport {
  bool fat = true;
  std::vector<std::int64_t> witnesses; // nodes interior to the closure but not to the domain
};

// A domain is fat when it equals the interior of its closure. Witnesses are
// lattice nodes whose whole axis-neighbour star sits in the closure while the
// node itself fails the interior predicate; on a grid-aligned slit these are
// exactly the slit nodes.
inline FatnessReport fatness_test(const DomainSpec& dom, const Lattice& lat) {
  require_covers(lat, dom);
  const double h = lat.h();
  FatnessReport rep;
  for (std::int64_t c = 0; c < lat.size(); ++c) {
    const Point p = lat.point(c);
    if (!dom.closure(p) || dom.interior(p)) continue;
    bool star_inside = true;
    for (int a = 0; a < lat.dim() && star_inside; ++a)
      for (const int d : {-1, 1}) {
        Point q = p;
        q[a] += d * h;
        if (!dom.closure(q)) {
          star_inside = false;
          break;
        }
      }
    if (star_inside) rep.witnesses.push_back(c);
  }
  rep.fat = rep.witnesses.empty();
  return rep;
}

// Polynomial map of the closed unit disk into C^n, sampled at a deterministic
// set of interior points (origin plus three rings) and boundary circle points.
struct AnalyticDiskProbe {
  std::vector<std::array<double, 4>> coeffs; // c_k, real/imag pairs per factor
  int interior_samples = 25;
  int circle_samples = 32;

  Point eval(std::complex<double> zeta, int n) const {
    std::complex<double> f1(0, 0), f2(0, 0);
    for (std::size_t k = coeffs.size(); k-- > 0;) {
      f1 = f1 * zeta + std::complex<double>(coeffs[k][0], coeffs[k][1]);
      f2 = f2 * zeta + std::complex<double>(coeffs[k][2], coeffs[k][3]);
    }
    Point p{f1.real(), f1.imag(), 0, 0};
    if (n == 2) {
      p[2] = f2.real();
      p[3] = f2.imag();
    }
    return p;
  }

  std::vector<std::complex<double>> interior_points() const {
    std::vector<std::complex<double>> pts{{0.0, 0.0}};
    const int per_ring = std::max(1, (interior_samples - 1) / 3);
    for (const double r : {0.25, 0.5, 0.75})
      for (int j = 0; j < per_ring; ++j) {
        const double th = 2.0 * M_PI * j / per_ring;
        pts.push_back({r * std::cos(th), r * std::sin(th)});
      }
    return pts;
  }

  std::vector<std::complex<double>> circle_points() const {
    std::vector<std::complex<double>> pts;
    for (int j = 0; j < circle_samples; ++j) {
      const double th = 2.0 * M_PI * j / circle_samples;
      pts.push_back({std::cos(th), std::sin(th)});
    }
    return pts;
  }
};

struct ProbeWitness {
  std::size_t probe_index = 0;
  std::complex<double> zeta_boundary; // interior parameter mapping to the boundary
  Point boundary_point{};
  std::complex<double> zeta_inside;
  Point interior_point{};
};

struct ProbeReport {
  bool witness_found = false;
  ProbeWitness witness;
  std::size_t probes_checked = 0;
};

namespace detail {

// Probe samples are allowed to graze the boundary: trigonometric sample
// points land on it only up to roundoff, and boundary contact is exactly what
// the probes are for. The slack is far below any feature of the zoo domains.
inline bool probe_sample_in_closure(const DomainSpec& dom, const Point& p) {
  return dom.closure(p) || dom.rho(p) <= 1e-9;
}

} // namespace detail

// An analytic disk through a boundary point that also visits the interior
// contradicts the boundary-invariance of analytic disks in P-hyperconvex
// domains, so it refutes the property outright.
inline ProbeReport disk_probe(const DomainSpec& dom, const std::vector<AnalyticDiskProbe>& probes) {
  ProbeReport rep;
  for (std::size_t pi = 0; pi < probes.size(); ++pi) {
    const AnalyticDiskProbe& probe = probes[pi];
    const auto inner = probe.interior_points();
    const auto circle = probe.circle_points();

    std::vector<std::pair<std::complex<double>, Point>> all;
    for (const auto& zeta : inner) all.push_back({zeta, probe.eval(zeta, dom.n)});
    for (const auto& zeta : circle) all.push_back({zeta, probe.eval(zeta, dom.n)});
    for (const auto& [zeta, p] : all)
      if (!detail::probe_sample_in_closure(dom, p))
        throw InvalidProbe("probe " + std::to_string(pi) + " leaves the closure");

    std::optional<std::pair<std::complex<double>, Point>> hit_boundary, hit_interior;
    for (std::size_t k = 0; k < inner.size() && !hit_boundary; ++k) {
      const Point p = all[k].second;
      if (!dom.interior(p)) hit_boundary = all[k];
    }
    for (const auto& [zeta, p] : all) {
      if (dom.interior(p)) {
        hit_interior = {zeta, p};
        break;
      }
    }
    if (hit_boundary && hit_interior) {
      rep.witness_found = true;
      rep.witness.probe_index = pi;
      rep.witness.zeta_boundary = hit_boundary->first;
      rep.witness.boundary_point = hit_boundary->second;
      rep.witness.zeta_inside = hit_interior->first;
      rep.witness.interior_point = hit_interior->second;
      rep.probes_checked = pi + 1;
      return rep;
    }
  }
  rep.probes_checked = probes.size();
  return rep;
}

namespace detail {

// Deterministic farthest-point subset of `pool`: start at the lowest index,
// then repeatedly add the node maximizing the distance to the chosen set.
inline std::vector<std::int64_t> farthest_point_sample(const Lattice& lat,
                                                       const std::vector<std::int64_t>& pool,
                                                       std::size_t count) {
  std::vector<std::int64_t> chosen;
  if (pool.empty() || count == 0) return chosen;
  chosen.push_back(pool.front());
  std::vector<double> dist(pool.size(), std::numeric_limits<double>::infinity());
  auto dist2 = [&lat](std::int64_t a, std::int64_t b) {
    const Point pa = lat.point(a), pb = lat.point(b);
    double s = 0.0;
    for (int i = 0; i < lat.dim(); ++i) s += (pa[i] - pb[i]) * (pa[i] - pb[i]);
    return s;
  };
  while (chosen.size() < std::min(count, pool.size())) {
    std::size_t best = 0;
    double best_d = -1.0;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      dist[i] = std::min(dist[i], dist2(pool[i], chosen.back()));
      if (dist[i] > best_d) {
        best_d = dist[i];
        best = i;
      }
    }
    if (best_d <= 0.0) break;
    chosen.push_back(pool[best]);
  }
  return chosen;
}

} // namespace detail

// Built-in probe family: coordinate-axis disks through selected boundary nodes
// (per-axis extremal nodes, the node closest to the origin, and a spread of
// farthest-point samples), each shrunk by halving until every sample stays in
// the closure, plus seeded random degree-2 probes centered at interior nodes.
inline std::vector<AnalyticDiskProbe> probe_family(const MaskPtr& mask, std::uint64_t seed,
                                                   int random_count = 100) {
  const DomainSpec& dom = mask->dom;
  const Lattice& lat = mask->lat;
  std::vector<AnalyticDiskProbe> probes;

  auto probe_valid = [&](const AnalyticDiskProbe& p) {
    for (const auto& zeta : p.interior_points())
      if (!detail::probe_sample_in_closure(dom, p.eval(zeta, dom.n))) return false;
    for (const auto& zeta : p.circle_points())
      if (!detail::probe_sample_in_closure(dom, p.eval(zeta, dom.n))) return false;
    return true;
  };

  // Boundary anchors. The minimum-norm node matters most: domains whose
  // boundary touches a coordinate axis (Hartogs-like) expose their flat disk
  // there.
  std::vector<std::int64_t> anchors;
  if (!mask->boundary_nodes.empty()) {
    for (int a = 0; a < lat.dim(); ++a) {
      std::int64_t lo = mask->boundary_nodes.front(), hi = lo;
      for (const std::int64_t b : mask->boundary_nodes) {
        if (lat.point(b)[a] < lat.point(lo)[a]) lo = b;
        if (lat.point(b)[a] > lat.point(hi)[a]) hi = b;
      }
      anchors.push_back(lo);
      anchors.push_back(hi);
    }
    std::int64_t nearest = mask->boundary_nodes.front();
    double best = std::numeric_limits<double>::infinity();
    for (const std::int64_t b : mask->boundary_nodes) {
      const Point p = lat.point(b);
      double s = 0.0;
      for (int i = 0; i < lat.dim(); ++i) s += p[i] * p[i];
      if (s < best) {
        best = s;
        nearest = b;
      }
    }
    anchors.push_back(nearest);
    for (const std::int64_t b : detail::farthest_point_sample(lat, mask->boundary_nodes, 16))
      anchors.push_back(b);
    std::sort(anchors.begin(), anchors.end());
    anchors.erase(std::unique(anchors.begin(), anchors.end()), anchors.end());
  }

  double extent = 0.0;
  for (int a = 0; a < lat.dim(); ++a) extent = std::max(extent, lat.box_hi(a) - lat.box_lo(a));

  for (const std::int64_t b : anchors) {
    const Point p = lat.point(b);
    for (int factor = 0; factor < dom.n; ++factor) {
      AnalyticDiskProbe probe;
      probe.coeffs.push_back({p[0], p[1], p[2], p[3]});
      std::array<double, 4> c1{0, 0, 0, 0};
      c1[2 * factor] = 1.0;
      probe.coeffs.push_back(c1);
      double r = extent;
      bool ok = false;
      for (int halvings = 0; halvings < 40 && r >= lat.h() / 4.0; ++halvings, r /= 2.0) {
        probe.coeffs[1][2 * factor] = r;
        if (probe_valid(probe)) {
          ok = true;
          break;
        }
      }
      if (ok) probes.push_back(probe);
    }
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, mask->interior_nodes.empty()
                                                         ? 0
                                                         : mask->interior_nodes.size() - 1);
  const double scale = extent / 2.0;
  for (int i = 0; i < random_count && !mask->interior_nodes.empty(); ++i) {
    const Point c0 = lat.point(mask->interior_nodes[pick(rng)]);
    std::array<double, 4> c1{}, c2{};
    for (int k = 0; k < 4; ++k) {
      c1[k] = unif(rng) * scale;
      c2[k] = unif(rng) * scale;
    }
    AnalyticDiskProbe probe;
    probe.coeffs = {{c0[0], c0[1], c0[2], c0[3]}, c1, c2};
    double t = 1.0;
    bool ok = false;
    for (; t >= 1e-3; t /= 2.0) {
      probe.coeffs[1] = {t * c1[0], t * c1[1], t * c1[2], t * c1[3]};
      probe.coeffs[2] = {t * c2[0], t * c2[1], t * c2[2], t * c2[3]};
      if (probe_valid(probe)) {
        ok = true;
        break;
      }
    }
    if (ok) probes.push_back(probe);
  }
  return probes;
}

struct SupportTestOptions {
  int max_samples = 32;
  std::int64_t dense_var_cap = 5000; // LP variables above this use the push-forward route
  double pass_tol = 1e-6;
  SolverOptions env;
};

struct SupportSample {
  std::int64_t node = -1;
  double interior_mass = 0.0;
  double value = 0.0;
  bool optimal = true;
};

struct SupportTestReport {
  double max_interior_mass = 0.0;
  std::int64_t worst_node = -1;
  bool pass = false;
  bool exact = true; // every sampled measure came from an optimal dense solve
  std::vector<SupportSample> samples;
};

// Discrete boundary-support check: at sampled boundary nodes, the minimizing
// Jensen measure of a boundary-vanishing, interior-negative obstacle puts mass
// inside exactly when an interior-supported Jensen measure exists there. Small
// grids get the exact LP; larger ones the closure envelope plus push-forward
// construction, which still yields feasible witnesses but flags the result as
// not certified optimal.
inline SupportTestReport boundary_support_test(const MaskPtr& mask, const DiscretePshCone& cone,
                                               const GridFunction& phi,
                                               const SupportTestOptions& opts = {}) {
  require_same_mask(*mask, *cone.mask, "boundary_support_test");
  require_same_mask(*mask, *phi.mask, "boundary_support_test");
  const double scale = 1.0 + value_range(phi).width();
  for (const std::int64_t b : mask->boundary_nodes)
    if (std::abs(phi.values[static_cast<std::size_t>(b)]) > 1e-9 * scale)
      throw PreconditionFailed("support test needs an obstacle vanishing on the boundary");
  double interior_max = -std::numeric_limits<double>::infinity();
  for (const std::int64_t c : mask->interior_nodes)
    interior_max = std::max(interior_max, phi.values[static_cast<std::size_t>(c)]);
  if (!(interior_max < 0.0))
    throw PreconditionFailed("support test needs a strictly negative interior obstacle");

  const auto samples = detail::farthest_point_sample(
      mask->lat, mask->boundary_nodes, static_cast<std::size_t>(opts.max_samples));

  SupportTestReport rep;
  const std::int64_t vars =
      static_cast<std::int64_t>(mask->closure_nodes.size() + cone.rows.size());
  const bool dense = vars <= opts.dense_var_cap;

  std::optional<EnvelopeResult> env;
  if (!dense) env = psh_envelope_closure(phi, cone, opts.env);

  for (const std::int64_t z : samples) {
    SupportSample row;
    row.node = z;
    if (dense) {
      JensenLpResult lp = jensen_lp_full(z, phi, cone);
      row.interior_mass = support_profile(lp.measure, *mask).interior_mass;
      row.value = lp.value;
    } else {
      rep.exact = false;
      const double ctol = 10.0 * violation_tolerance(phi);
      const double ez = env->envelope.values[static_cast<std::size_t>(z)];
      if (ez >= phi.values[static_cast<std::size_t>(z)] - ctol) {
        row.interior_mass = 0.0; // delta_z already optimal by contact
        row.value = phi.values[static_cast<std::size_t>(z)];
      } else {
        PushforwardResult pf = pushforward_measure(z, phi, cone, env->envelope);
        row.interior_mass = support_profile(pf.measure, *mask).interior_mass;
        row.value = pf.value;
        row.optimal = pf.settled;
      }
    }
    if (row.interior_mass > rep.max_interior_mass) {
      rep.max_interior_mass = row.interior_mass;
      rep.worst_node = z;
    }
    rep.samples.push_back(row);
  }
  rep.pass = rep.max_interior_mass <= opts.pass_tol;
  return rep;
}

struct ClassifyOptions {
  std::uint64_t seed = 1;
  int random_probes = 100;
  double witness_mass = 0.01; // interior mass above this refutes
  SupportTestOptions support;
  SolverOptions env;
};

struct ClassificationVerdict {
  enum class Kind { NotPHyperconvex, EvidencePHyperconvex, Inconclusive };
  struct Reason {
    std::string test;
    std::string outcome; // "pass", "witness", "error"
    std::string detail;
  };
  Kind verdict = Kind::Inconclusive;
  std::vector<Reason> reasons;
  std::vector<std::int64_t> fatness_witnesses;
  std::optional<ProbeWitness> probe_witness;
  double exhaustion_violation = std::numeric_limits<double>::quiet_NaN();
  double support_interior_mass = std::numeric_limits<double>::quiet_NaN();
  std::int64_t support_witness_node = -1;
};

// Aggregate verdict from four one-sided tests. Refutation requires a concrete
// witness (non-fat node, boundary-touching disk, or an interior-supported
// boundary Jensen measure); test failures only ever degrade the verdict to
// Inconclusive, never to a refutation.
inline ClassificationVerdict classify_domain(const DomainSpec& dom, const Lattice& lat,
                                             const ConeConfig& cone_cfg = {},
                                             const ClassifyOptions& opts = {}) {
  ClassificationVerdict v;
  bool witness = false;
  bool all_pass = true;

  auto record = [&v](const std::string& test, const std::string& outcome,
                     const std::string& detail) {
    v.reasons.push_back({test, outcome, detail});
  };

  try {
    const FatnessReport fat = fatness_test(dom, lat);
    if (fat.fat) {
      record("fatness", "pass", "domain equals the interior of its closure on the grid");
    } else {
      witness = true;
      all_pass = false;
      v.fatness_witnesses = fat.witnesses;
      const Point p = lat.point(fat.witnesses.front());
      record("fatness", "witness",
             std::to_string(fat.witnesses.size()) + " non-fat nodes, first at (" +
                 std::to_string(p[0]) + ", " + std::to_string(p[1]) + ")");
    }
  } catch (const Error& e) {
    all_pass = false;
    record("fatness", "error", e.what());
  }

  MaskPtr mask;
  try {
    mask = classify_nodes(lat, dom);
  } catch (const Error& e) {
    all_pass = false;
    record("mask", "error", e.what());
  }

  if (mask) {
    try {
      const auto probes = probe_family(mask, opts.seed, opts.random_probes);
      const ProbeReport pr = disk_probe(dom, probes);
      if (pr.witness_found) {
        witness = true;
        all_pass = false;
        v.probe_witness = pr.witness;
        record("disk_probe", "witness",
               "probe " + std::to_string(pr.witness.probe_index) + " touches the boundary at an interior parameter");
      } else {
        record("disk_probe", "pass",
               std::to_string(pr.probes_checked) + " probes, no boundary-touching disk");
      }
    } catch (const Error& e) {
      all_pass = false;
      record("disk_probe", "error", e.what());
    }

    std::optional<DiscretePshCone> cone;
    std::optional<GridFunction> psi;
    try {
      cone = build_cone(mask, cone_cfg);
      psi = build_exhaustion(mask, *cone, opts.env);
      const ViolationReport vr = cone_violation(*psi, *cone);
      v.exhaustion_violation = vr.worst;
      if (vr.worst <= 10.0 * vr.tol) {
        record("exhaustion", "pass", "closure-cone violation " + std::to_string(vr.worst));
      } else {
        all_pass = false; // construction failed; informative but not a refutation witness
        record("exhaustion", "witness",
               "built exhaustion violates the closure cone by " + std::to_string(vr.worst));
      }
    } catch (const Error& e) {
      all_pass = false;
      record("exhaustion", "error", e.what());
    }

    if (cone && psi) {
      try {
        const SupportTestReport sr = boundary_support_test(mask, *cone, *psi, opts.support);
        v.support_interior_mass = sr.max_interior_mass;
        v.support_witness_node = sr.worst_node;
        if (sr.max_interior_mass > opts.witness_mass) {
          witness = true;
          all_pass = false;
          const Point p = lat.point(sr.worst_node);
          record("boundary_support", "witness",
                 "interior mass " + std::to_string(sr.max_interior_mass) + " at (" +
                     std::to_string(p[0]) + ", " + std::to_string(p[1]) + ")");
        } else if (sr.pass) {
          record("boundary_support", "pass",
                 "max interior mass " + std::to_string(sr.max_interior_mass));
        } else {
          all_pass = false;
          record("boundary_support", "inconclusive",
                 "max interior mass " + std::to_string(sr.max_interior_mass));
        }
      } catch (const Error& e) {
        all_pass = false;
        record("boundary_support", "error", e.what());
      }
    }
  }

  if (witness)
    v.verdict = ClassificationVerdict::Kind::NotPHyperconvex;
  else if (all_pass)
    v.verdict = ClassificationVerdict::Kind::EvidencePHyperconvex;
  else
    v.verdict = ClassificationVerdict::Kind::Inconclusive;
  return v;
}

inline const char* verdict_name(ClassificationVerdict::Kind k) {
  switch (k) {
    case ClassificationVerdict::Kind::NotPHyperconvex: return "NotPHyperconvex";
    case ClassificationVerdict::Kind::EvidencePHyperconvex: return "EvidencePHyperconvex";
    default: return "Inconclusive";
  }
}

} // namespace pluripot
