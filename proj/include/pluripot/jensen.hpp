#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "pluripot/cone.hpp"
#include "pluripot/envelope.hpp"
#include "pluripot/simplex.hpp"

namespace pluripot {

// Sparse probability measure on closure nodes, kept sorted by node index.
struct DiscreteMeasure {
  std::vector<std::int64_t> nodes;
  std::vector<double> weights;

  double mass() const {
    double s = 0.0;
    for (const double w : weights) s += w;
    return s;
  }
};

inline DiscreteMeasure point_mass(std::int64_t node) { return {{node}, {1.0}}; }

// The unit circle push-forward sitting in one stencil row: mass w_k at each
// corner node. Feasible against the cone by construction (multiplier 1 on that
// row and 0 elsewhere).
inline DiscreteMeasure measure_from_row(const DiscretePshCone& cone, std::int64_t row_index) {
  const auto& row = cone.rows[static_cast<std::size_t>(row_index)];
  const StencilPattern& p = cone.patterns[row.pattern];
  std::map<std::int64_t, double> acc;
  for (std::size_t k = 0; k < p.corner_delta.size(); ++k)
    acc[row.center + p.corner_delta[k]] += p.corner_w[k];
  DiscreteMeasure mu;
  for (const auto& [node, w] : acc) {
    mu.nodes.push_back(node);
    mu.weights.push_back(w);
  }
  return mu;
}

struct SupportProfile {
  double interior_mass = 0.0;
  double boundary_mass = 0.0;
};

inline SupportProfile support_profile(const DiscreteMeasure& mu, const DomainMask& mask) {
  SupportProfile s;
  for (std::size_t i = 0; i < mu.nodes.size(); ++i) {
    switch (mask.at(mu.nodes[i])) {
      case NodeClass::Interior: s.interior_mass += mu.weights[i]; break;
      case NodeClass::Boundary: s.boundary_mass += mu.weights[i]; break;
      default: throw MaskMismatch("measure node " + std::to_string(mu.nodes[i]) + " is exterior");
    }
  }
  return s;
}

struct JensenCheck {
  bool ok = false;
  double slack = 0.0; // integral minus point value; negative means failure
};

inline JensenCheck check_jensen_inequality(const GridFunction& u, const DiscreteMeasure& mu,
                                           std::int64_t z) {
  const DomainMask& mask = *u.mask;
  if (!mask.in_closure(z)) throw MaskMismatch("evaluation node outside closure");
  double integral = 0.0;
  for (std::size_t i = 0; i < mu.nodes.size(); ++i) {
    if (!mask.in_closure(mu.nodes[i]))
      throw MaskMismatch("measure node " + std::to_string(mu.nodes[i]) + " outside closure");
    integral += mu.weights[i] * u.values[static_cast<std::size_t>(mu.nodes[i])];
  }
  JensenCheck c;
  c.slack = integral - u.values[static_cast<std::size_t>(z)];
  c.ok = c.slack >= -violation_tolerance(u);
  return c;
}

struct JensenLpResult {
  double value = 0.0;
  DiscreteMeasure measure;
  std::vector<double> lambda;  // one multiplier per cone row
  std::vector<double> mu_raw;  // per closure node, pre-pruning
  std::int64_t pivots = 0;
};

// Extremal Jensen measure at z against the obstacle phi, as an explicit LP:
//   minimize  sum_i mu_i phi_i
//   s.t.      mu + A^T lambda = delta_z,  mu, lambda >= 0,
// where A is the cone's constraint matrix (rows e_center - sum w e_corner).
// Every feasible mu has mass exactly 1 (each row of A sums to zero), so this
// is the discrete Jensen set. delta_z itself is feasible with lambda = 0 and
// supplies the identity starting basis.
//
// `support`, when given, restricts the measure's allowed support: disallowed
// mu columns get a large penalty cost, which the optimum drives to zero mass
// whenever a measure on the allowed support exists. This keeps the identity
// start intact.
inline JensenLpResult jensen_lp_full(std::int64_t z, const GridFunction& phi,
                                     const DiscretePshCone& cone,
                                     const std::vector<std::int64_t>* support = nullptr,
                                     std::int64_t max_pivots = 200000) {
  require_same_mask(*phi.mask, *cone.mask, "jensen_lp");
  const DomainMask& mask = *cone.mask;
  if (!mask.in_closure(z)) throw BadParams("jensen_lp needs a closure node");

  const auto& C = mask.closure_nodes;
  const int N = static_cast<int>(C.size());
  const int R = static_cast<int>(cone.rows.size());
  const int n = N + R;

  std::vector<std::int32_t> ridx(static_cast<std::size_t>(mask.lat.size()), -1);
  for (int i = 0; i < N; ++i) ridx[static_cast<std::size_t>(C[static_cast<std::size_t>(i)])] = i;

  std::vector<double> A(static_cast<std::size_t>(N) * n, 0.0);
  for (int i = 0; i < N; ++i) A[static_cast<std::size_t>(i) * n + i] = 1.0;
  for (int r = 0; r < R; ++r) {
    const auto& row = cone.rows[static_cast<std::size_t>(r)];
    const StencilPattern& p = cone.patterns[row.pattern];
    const int col = N + r;
    A[static_cast<std::size_t>(ridx[static_cast<std::size_t>(row.center)]) * n + col] += 1.0;
    for (std::size_t k = 0; k < p.corner_delta.size(); ++k) {
      const std::int64_t node = row.center + p.corner_delta[k];
      A[static_cast<std::size_t>(ridx[static_cast<std::size_t>(node)]) * n + col] -= p.corner_w[k];
    }
  }

  std::vector<double> b(static_cast<std::size_t>(N), 0.0);
  b[static_cast<std::size_t>(ridx[static_cast<std::size_t>(z)])] = 1.0;

  double phimax = 0.0;
  for (const std::int64_t cnode : C)
    phimax = std::max(phimax, std::abs(phi.values[static_cast<std::size_t>(cnode)]));
  const double penalty = 1e6 * (1.0 + phimax);
  std::vector<bool> allowed;
  if (support) {
    allowed.assign(static_cast<std::size_t>(mask.lat.size()), false);
    for (const std::int64_t s : *support) allowed[static_cast<std::size_t>(s)] = true;
  }
  std::vector<double> cost(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < N; ++i) {
    const std::int64_t node = C[static_cast<std::size_t>(i)];
    const bool ok = !support || allowed[static_cast<std::size_t>(node)];
    cost[static_cast<std::size_t>(i)] = ok ? phi.values[static_cast<std::size_t>(node)] : penalty;
  }

  std::vector<int> basis(static_cast<std::size_t>(N));
  for (int i = 0; i < N; ++i) basis[static_cast<std::size_t>(i)] = i;

  const LpSolution sol = simplex_solve(N, n, A, b, cost, basis, max_pivots);

  JensenLpResult out;
  out.pivots = sol.pivots;
  out.lambda.assign(static_cast<std::size_t>(R), 0.0);
  for (int r = 0; r < R; ++r) out.lambda[static_cast<std::size_t>(r)] = sol.x[static_cast<std::size_t>(N + r)];
  out.mu_raw.assign(static_cast<std::size_t>(N), 0.0);
  for (int i = 0; i < N; ++i) out.mu_raw[static_cast<std::size_t>(i)] = sol.x[static_cast<std::size_t>(i)];

  double mass = 0.0;
  for (int i = 0; i < N; ++i) {
    const double w = out.mu_raw[static_cast<std::size_t>(i)];
    if (w >= 1e-12) {
      out.measure.nodes.push_back(C[static_cast<std::size_t>(i)]);
      out.measure.weights.push_back(w);
      mass += w;
    }
  }
  if (mass > 0.0)
    for (double& w : out.measure.weights) w /= mass;
  out.value = 0.0;
  for (std::size_t i = 0; i < out.measure.nodes.size(); ++i)
    out.value += out.measure.weights[i] * phi.values[static_cast<std::size_t>(out.measure.nodes[i])];
  return out;
}

inline std::pair<double, DiscreteMeasure> jensen_lp(std::int64_t z, const GridFunction& phi,
                                                    const DiscretePshCone& cone,
                                                    const std::vector<std::int64_t>* support = nullptr) {
  JensenLpResult r = jensen_lp_full(z, phi, cone, support);
  return {r.value, std::move(r.measure)};
}

struct DualityCertificate {
  double primal = 0.0; // envelope value at z
  double dual = 0.0;   // LP optimum
  double gap = 0.0;
  DiscreteMeasure measure;
  std::vector<double> lambda;
  double reconstruction_error = 0.0;
  std::int64_t envelope_iterations = 0;
  std::int64_t lp_pivots = 0;
};

// Both sides of the duality at one node: the envelope under every cone row
// (exactly the LP dual on the shared row set) against the measure LP. The gap
// only carries iteration and pivot noise.
inline DualityCertificate edwards_gap(std::int64_t z, const GridFunction& phi,
                                      const DiscretePshCone& cone, const SolverOptions& opts = {}) {
  DualityCertificate cert;
  EnvelopeResult env = psh_envelope_closure(phi, cone, opts);
  cert.primal = env.envelope.values[static_cast<std::size_t>(z)];
  cert.envelope_iterations = env.iterations;

  JensenLpResult lp = jensen_lp_full(z, phi, cone);
  cert.dual = lp.value;
  cert.gap = std::abs(cert.primal - cert.dual);
  cert.measure = std::move(lp.measure);
  cert.lambda = std::move(lp.lambda);
  cert.lp_pivots = lp.pivots;

  // Rebuild delta_z - A^T lambda and compare with the reported measure.
  const DomainMask& mask = *cone.mask;
  std::vector<double> recon(static_cast<std::size_t>(mask.lat.size()), 0.0);
  recon[static_cast<std::size_t>(z)] = 1.0;
  for (std::size_t r = 0; r < cone.rows.size(); ++r) {
    const double l = cert.lambda[r];
    if (l == 0.0) continue;
    const auto& row = cone.rows[r];
    const StencilPattern& p = cone.patterns[row.pattern];
    recon[static_cast<std::size_t>(row.center)] -= l;
    for (std::size_t k = 0; k < p.corner_delta.size(); ++k)
      recon[static_cast<std::size_t>(row.center + p.corner_delta[k])] += l * p.corner_w[k];
  }
  for (std::size_t i = 0; i < cert.measure.nodes.size(); ++i)
    recon[static_cast<std::size_t>(cert.measure.nodes[i])] -= cert.measure.weights[i];
  for (const std::int64_t cnode : mask.closure_nodes)
    cert.reconstruction_error =
        std::max(cert.reconstruction_error, std::abs(recon[static_cast<std::size_t>(cnode)]));
  return cert;
}

struct PushforwardResult {
  DiscreteMeasure measure;
  std::vector<std::pair<std::int64_t, double>> lambda_sparse; // (row index, multiplier)
  double value = 0.0;
  bool settled = false;
  std::int64_t steps = 0;
};

// Measure construction without the LP, for grids too large for a dense
// tableau: starting from delta_z, repeatedly push the mass sitting at a
// non-contact node (envelope strictly under phi) through that node's best
// stencil row, evaluated on a precomputed closure envelope. Every
// redistribution step is a feasible lambda update, so the result is always a
// genuine member of the discrete Jensen set at z; `settled` records whether
// all remaining support reached the contact set, i.e. whether the measure is
// also optimal by complementary slackness.
inline PushforwardResult pushforward_measure(std::int64_t z, const GridFunction& phi,
                                             const DiscretePshCone& cone,
                                             const GridFunction& closure_env,
                                             std::int64_t max_steps = -1) {
  require_same_mask(*phi.mask, *cone.mask, "pushforward_measure");
  require_same_mask(*closure_env.mask, *cone.mask, "pushforward_measure");
  const DomainMask& mask = *cone.mask;
  if (!mask.in_closure(z)) throw BadParams("pushforward needs a closure node");
  if (max_steps < 0) max_steps = 200 * static_cast<std::int64_t>(mask.closure_nodes.size());

  const double ctol = 10.0 * violation_tolerance(phi);
  auto non_contact = [&](std::int64_t node) {
    return closure_env.values[static_cast<std::size_t>(node)] <
           phi.values[static_cast<std::size_t>(node)] - ctol;
  };

  std::map<std::int64_t, double> mu;
  mu[z] = 1.0;
  std::map<std::int64_t, double> lambda;

  PushforwardResult out;
  std::vector<std::int64_t> batch;
  while (out.steps < max_steps) {
    // Sweep fairly: snapshot every node currently holding pushable mass and
    // push each once. Draining one node at a time can spend the whole budget
    // shuffling crumbs in one corner of the support while the bulk waits.
    batch.clear();
    for (const auto& [node, w] : mu) {
      if (w > 1e-14 && non_contact(node) &&
          cone.node_row_begin[static_cast<std::size_t>(node) + 1] >
              cone.node_row_begin[static_cast<std::size_t>(node)])
        batch.push_back(node);
    }
    if (batch.empty()) {
      out.settled = true;
      break;
    }
    for (const std::int64_t pick : batch) {
      if (out.steps >= max_steps) break;
      // Best row at the fixed point: the one whose average realizes the
      // envelope's value there.
      const std::int64_t rb = cone.node_row_begin[static_cast<std::size_t>(pick)];
      const std::int64_t re = cone.node_row_begin[static_cast<std::size_t>(pick) + 1];
      std::int64_t best_row = rb;
      double best_avg =
          cone.row_average(cone.rows[static_cast<std::size_t>(rb)], closure_env.values);
      for (std::int64_t r = rb + 1; r < re; ++r) {
        const double a =
            cone.row_average(cone.rows[static_cast<std::size_t>(r)], closure_env.values);
        if (a < best_avg) {
          best_avg = a;
          best_row = r;
        }
      }
      const double w = mu[pick];
      mu.erase(pick);
      lambda[best_row] += w;
      const auto& row = cone.rows[static_cast<std::size_t>(best_row)];
      const StencilPattern& p = cone.patterns[row.pattern];
      for (std::size_t k = 0; k < p.corner_delta.size(); ++k)
        mu[row.center + p.corner_delta[k]] += w * p.corner_w[k];
      ++out.steps;
    }
  }

  for (const auto& [node, w] : mu) {
    if (w <= 1e-14) continue;
    out.measure.nodes.push_back(node);
    out.measure.weights.push_back(w);
    out.value += w * phi.values[static_cast<std::size_t>(node)];
  }
  for (const auto& [r, l] : lambda) out.lambda_sparse.push_back({r, l});
  return out;
}

} // namespace pluripot
