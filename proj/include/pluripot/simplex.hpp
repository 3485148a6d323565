#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "pluripot/errors.hpp"

namespace pluripot {

// Dense-tableau simplex for min c.x subject to A x = b, x >= 0, started from a
// caller-supplied basis whose columns form the identity (so no phase 1). Meant
// for desk-scale certification runs, not bulk solving: every pivot touches the
// whole tableau.
//
// Pivot rules: Dantzig entering (most negative reduced cost, lowest index on
// ties) with the lexicographic ratio test for the leaving row. The problems
// this solves start from an extremely degenerate vertex (one nonzero basic
// variable), where plain min-ratio tie-breaking can cycle and Bland's rule
// crawls; the lexicographic rule keeps rows of [b | B^{-1}] ordered so no
// basis ever repeats, at Dantzig speed. All choices are deterministic, so
// repeated solves return the same basis.
struct LpSolution {
  double objective = 0.0;
  std::vector<double> x;
  std::vector<int> basis;
  std::int64_t pivots = 0;
};

inline LpSolution simplex_solve(int m, int n, const std::vector<double>& A,
                                const std::vector<double>& b, const std::vector<double>& c,
                                const std::vector<int>& initial_basis,
                                std::int64_t max_pivots = 200000) {
  if (static_cast<std::size_t>(m) * n != A.size() || b.size() != static_cast<std::size_t>(m) ||
      c.size() != static_cast<std::size_t>(n) || initial_basis.size() != static_cast<std::size_t>(m))
    throw BadParams("simplex input dimensions disagree");
  for (int i = 0; i < m; ++i)
    if (b[static_cast<std::size_t>(i)] < 0.0)
      throw BadParams("simplex starting point needs b >= 0");

  const int W = n + 1; // tableau width, rhs in the last column
  std::vector<double> T(static_cast<std::size_t>(m) * W);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j)
      T[static_cast<std::size_t>(i) * W + j] = A[static_cast<std::size_t>(i) * n + j];
    T[static_cast<std::size_t>(i) * W + n] = b[static_cast<std::size_t>(i)];
  }
  std::vector<int> basis = initial_basis;

  // Reduced costs r = c - c_B B^{-1} A; with an identity starting basis this
  // is one elimination pass per row.
  std::vector<double> r(static_cast<std::size_t>(W), 0.0);
  for (int j = 0; j < n; ++j) r[static_cast<std::size_t>(j)] = c[static_cast<std::size_t>(j)];
  for (int i = 0; i < m; ++i) {
    const double cb = c[static_cast<std::size_t>(basis[static_cast<std::size_t>(i)])];
    if (cb == 0.0) continue;
    const double* row = &T[static_cast<std::size_t>(i) * W];
    for (int j = 0; j <= n; ++j) r[static_cast<std::size_t>(j)] -= cb * row[j];
  }

  const double eps = 1e-9;

  // B^{-1} occupies the initial basis columns throughout, so the classical
  // lexicographic comparison only ever needs to read those columns plus the
  // rhs. Ties beyond them are impossible in exact arithmetic (rows of an
  // invertible matrix are never proportional); the basis-index fallback just
  // pins determinism against roundoff.
  const std::vector<int>& lex_cols = initial_basis;
  auto lex_less = [&](int i, int l, double ai, double al) {
    const double* ri = &T[static_cast<std::size_t>(i) * W];
    const double* rl = &T[static_cast<std::size_t>(l) * W];
    if (ri[n] / ai != rl[n] / al) return ri[n] / ai < rl[n] / al;
    for (const int j : lex_cols) {
      const double vi = ri[j] / ai, vl = rl[j] / al;
      if (vi != vl) return vi < vl;
    }
    return basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(l)];
  };

  LpSolution sol;
  while (true) {
    int enter = -1;
    double best = -eps;
    for (int j = 0; j < n; ++j)
      if (r[static_cast<std::size_t>(j)] < best) {
        best = r[static_cast<std::size_t>(j)];
        enter = j;
      }
    if (enter < 0) break; // optimal

    int leave = -1;
    for (int i = 0; i < m; ++i) {
      const double a = T[static_cast<std::size_t>(i) * W + enter];
      if (a <= eps) continue;
      if (leave < 0 || lex_less(i, leave, a, T[static_cast<std::size_t>(leave) * W + enter]))
        leave = i;
    }
    if (leave < 0)
      throw LpUnbounded("improving column " + std::to_string(enter) + " has no positive entry");

    // Pivot: normalize the leaving row, eliminate elsewhere and in the costs.
    {
      double* prow = &T[static_cast<std::size_t>(leave) * W];
      const double piv = prow[enter];
      for (int j = 0; j <= n; ++j) prow[j] /= piv;
      prow[enter] = 1.0;
      for (int i = 0; i < m; ++i) {
        if (i == leave) continue;
        double* row = &T[static_cast<std::size_t>(i) * W];
        const double f = row[enter];
        if (f == 0.0) continue;
        for (int j = 0; j <= n; ++j) row[j] -= f * prow[j];
        row[enter] = 0.0;
      }
      const double f = r[static_cast<std::size_t>(enter)];
      if (f != 0.0) {
        for (int j = 0; j <= n; ++j) r[static_cast<std::size_t>(j)] -= f * prow[j];
        r[static_cast<std::size_t>(enter)] = 0.0;
      }
      basis[static_cast<std::size_t>(leave)] = enter;
    }
    ++sol.pivots;
    if (sol.pivots > max_pivots)
      throw NonConvergence("simplex exceeded " + std::to_string(max_pivots) + " pivots");
  }

  sol.x.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < m; ++i) {
    const double v = T[static_cast<std::size_t>(i) * W + n];
    if (v < -1e-7) throw LpInfeasible("basic variable went negative: " + std::to_string(v));
    sol.x[static_cast<std::size_t>(basis[static_cast<std::size_t>(i)])] = std::max(v, 0.0);
  }
  sol.basis = basis;
  sol.objective = 0.0;
  for (int j = 0; j < n; ++j) sol.objective += c[static_cast<std::size_t>(j)] * sol.x[static_cast<std::size_t>(j)];
  return sol;
}

} // namespace pluripot
