#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "pluripot/cone.hpp"
#include "pluripot/gridfn.hpp"
#include "pluripot/pshcore.hpp"

namespace pluripot {

struct GlueParams {
  double eps = 0.0; // sublevel depth
  double K = 0.0;   // slope of the outer cone piece
  double M = 0.0;   // interior bound subtracted from u
  std::vector<std::int64_t> E;
};

namespace detail {

inline void require_exhaustion_shape(const GridFunction& psi) {
  const DomainMask& mask = *psi.mask;
  const double scale = 1.0 + value_range(psi).width();
  for (const std::int64_t b : mask.boundary_nodes)
    if (std::abs(psi.values[static_cast<std::size_t>(b)]) > 1e-9 * scale)
      throw PreconditionFailed("exhaustion must vanish on boundary nodes");
  for (const std::int64_t c : mask.interior_nodes)
    if (!(psi.values[static_cast<std::size_t>(c)] < 0.0))
      throw PreconditionFailed("exhaustion must be strictly negative at interior nodes");
}

} // namespace detail

// Glue u (known well below the surface) to a cone of the exhaustion:
//   on {psi <= -eps}:  max{K(psi + eps), u - M}
//   elsewhere:         K(psi + eps)
// with eps half the depth of E, M the max of u over the sublevel set and K
// doubled until the outer piece dominates the growth u can have at the seam.
// Because u enters only through its values on {psi <= -eps} (including the
// Lipschitz estimate used for the seam bound), the output is unchanged by
// edits to u outside that set. A wilder-than-estimated u just outside the
// sublevel set can still break the sub-mean inequality at seam rows; the
// violation scan stays the arbiter.
inline std::pair<GridFunction, GlueParams> max_glue(const GridFunction& u, const GridFunction& psi,
                                                    const std::vector<std::int64_t>& E) {
  require_same_mask(*u.mask, *psi.mask, "max_glue");
  detail::require_exhaustion_shape(psi);
  if (E.empty()) throw EmptyE("max_glue needs a nonempty target set");
  const DomainMask& mask = *psi.mask;
  const Lattice& lat = mask.lat;
  for (const std::int64_t e : E)
    if (!mask.is_interior(e)) throw BadParams("glue target must consist of interior nodes");

  GlueParams gp;
  gp.E = E;
  double psi_max_E = -std::numeric_limits<double>::infinity();
  for (const std::int64_t e : E)
    psi_max_E = std::max(psi_max_E, psi.values[static_cast<std::size_t>(e)]);
  gp.eps = -psi_max_E / 2.0;

  std::vector<std::int64_t> sub, out;
  for (const std::int64_t c : mask.closure_nodes)
    (psi.values[static_cast<std::size_t>(c)] <= -gp.eps ? sub : out).push_back(c);
  for (const std::int64_t c : sub)
    if (!std::isfinite(u.values[static_cast<std::size_t>(c)]))
      throw UnboundedU("u is not finite on the sublevel set");

  gp.M = -std::numeric_limits<double>::infinity();
  for (const std::int64_t c : sub) gp.M = std::max(gp.M, u.values[static_cast<std::size_t>(c)]);
  double u_min_E = std::numeric_limits<double>::infinity();
  for (const std::int64_t e : E)
    u_min_E = std::min(u_min_E, u.values[static_cast<std::size_t>(e)]);
  gp.K = (u_min_E - gp.M - 1.0) / (psi_max_E + gp.eps); // both factors negative

  // Discrete Lipschitz constant of u, measured inside the sublevel set only.
  const double h = lat.h();
  double Lu = 0.0;
  for (const std::int64_t c : sub)
    for (int a = 0; a < lat.dim(); ++a) {
      const std::int64_t t = lat.step(c, a, 1);
      if (t < 0 || psi.values[static_cast<std::size_t>(t)] > -gp.eps || !mask.in_closure(t))
        continue;
      Lu = std::max(Lu, std::abs(u.values[static_cast<std::size_t>(t)] -
                                 u.values[static_cast<std::size_t>(c)]) /
                            h);
    }

  // Seam bound: outside the sublevel set psi + eps is strictly positive, so a
  // finite K makes the cone piece outgrow the Lipschitz cone of u.
  auto dist_to_sub = [&](std::int64_t y) {
    const Point py = lat.point(y);
    double best = std::numeric_limits<double>::infinity();
    for (const std::int64_t c : sub) {
      const Point pc = lat.point(c);
      double s = 0.0;
      for (int i = 0; i < lat.dim(); ++i) s += (py[i] - pc[i]) * (py[i] - pc[i]);
      best = std::min(best, s);
    }
    return std::sqrt(best);
  };
  std::vector<double> need(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) need[i] = Lu * dist_to_sub(out[i]);
  for (int doublings = 0; doublings < 200; ++doublings) {
    bool ok = true;
    for (std::size_t i = 0; i < out.size() && ok; ++i) {
      const double lift = gp.K * (psi.values[static_cast<std::size_t>(out[i])] + gp.eps);
      if (lift < need[i]) ok = false;
    }
    if (ok) break;
    gp.K *= 2.0;
  }

  GridFunction glued;
  glued.mask = u.mask;
  glued.role = "glued";
  glued.values.assign(u.values.size(), std::numeric_limits<double>::quiet_NaN());
  for (const std::int64_t c : sub)
    glued.values[static_cast<std::size_t>(c)] =
        std::max(gp.K * (psi.values[static_cast<std::size_t>(c)] + gp.eps),
                 u.values[static_cast<std::size_t>(c)] - gp.M);
  for (const std::int64_t c : out)
    glued.values[static_cast<std::size_t>(c)] =
        gp.K * (psi.values[static_cast<std::size_t>(c)] + gp.eps);

  // Construction invariant: the glue picks the u branch on all of E.
  for (const std::int64_t e : E)
    if (!(gp.K * (psi.values[static_cast<std::size_t>(e)] + gp.eps) <
          u.values[static_cast<std::size_t>(e)] - gp.M))
      throw PreconditionFailed("slope selection failed to separate the branches on E");

  return {std::move(glued), std::move(gp)};
}

// Extend u from the interior by its declared bound: boundary nodes get M.
// Raising stencil sample values never breaks a sub-mean inequality at an
// interior center, so cone membership is preserved whenever u had it.
inline GridFunction bounded_extension(const GridFunction& u, double M, const MaskPtr& mask) {
  require_same_mask(*u.mask, *mask, "bounded_extension");
  for (const std::int64_t c : mask->interior_nodes) {
    const double v = u.values[static_cast<std::size_t>(c)];
    if (!std::isfinite(v)) throw BadParams("interior values must be finite");
    if (v > M)
      throw BoundViolated("interior value " + std::to_string(v) + " exceeds the bound " +
                          std::to_string(M));
  }
  GridFunction out;
  out.mask = u.mask;
  out.role = u.role + "_ext";
  out.values.assign(u.values.size(), std::numeric_limits<double>::quiet_NaN());
  for (const std::int64_t c : mask->interior_nodes)
    out.values[static_cast<std::size_t>(c)] = u.values[static_cast<std::size_t>(c)];
  for (const std::int64_t b : mask->boundary_nodes) out.values[static_cast<std::size_t>(b)] = M;
  return out;
}

struct CutoffOptions {
  double delta = 0.0; // collar depth in psi values; 0 means a quarter of the full depth
  const GridFunction* phi_spp = nullptr; // strictly psh backbone; default |z|^2 - max|z|^2
  int max_doublings = 40;
};

struct CutoffResult {
  GridFunction F;
  double C = 1.0;
  double s = 0.0;      // shift making the backbone nonpositive against the boundary
  double M = 1.0;      // multiplier on psi inside the backbone max
  double delta = 0.0;
  int doublings = 0;
  double boundary_error = 0.0;
  double final_violation = 0.0;
  double theta_f_second_diff = 0.0; // max second difference of the windowed data
};

// Extension of boundary-collar data f to the closure: F = C psi_tilde + theta f,
// where theta is a quintic smoothstep in psi (1 near the boundary, 0 below the
// collar) and psi_tilde = max{phi_spp - s, M psi} is a strictly psh backbone
// vanishing exactly on boundary nodes. M is picked so the strict branch wins
// at every interior node; then each interior-centered row keeps a uniform
// negative margin and doubling C eventually absorbs the second differences of
// theta f. On domains whose closure cone has boundary-centered rows no
// multiple of the backbone can absorb them, and the search reports NoFeasibleC.
inline CutoffResult cutoff_extension(const GridFunction& f, const GridFunction& psi,
                                     const DiscretePshCone& cone, const CutoffOptions& opts = {}) {
  require_same_mask(*f.mask, *psi.mask, "cutoff_extension");
  require_same_mask(*f.mask, *cone.mask, "cutoff_extension");
  detail::require_exhaustion_shape(psi);
  const DomainMask& mask = *psi.mask;
  const Lattice& lat = mask.lat;

  CutoffResult res;
  double depth = 0.0;
  for (const std::int64_t c : mask.interior_nodes)
    depth = std::max(depth, -psi.values[static_cast<std::size_t>(c)]);
  res.delta = opts.delta > 0.0 ? opts.delta : depth / 4.0;
  if (!(res.delta > 0.0)) throw BadParams("collar depth must be positive");

  for (const std::int64_t c : mask.closure_nodes)
    if (psi.values[static_cast<std::size_t>(c)] > -res.delta &&
        !std::isfinite(f.values[static_cast<std::size_t>(c)]))
      throw PreconditionFailed("boundary data must be finite on the collar");

  // Strictly psh backbone, shifted to be <= 0 at every boundary node.
  GridFunction backbone;
  if (opts.phi_spp) {
    require_same_mask(*opts.phi_spp->mask, *psi.mask, "cutoff_extension");
    backbone = *opts.phi_spp;
  } else {
    double top = 0.0;
    for (const std::int64_t c : mask.closure_nodes) {
      const Point p = lat.point(c);
      double n2 = 0.0;
      for (int i = 0; i < lat.dim(); ++i) n2 += p[i] * p[i];
      top = std::max(top, n2);
    }
    backbone = make_grid_function(
        psi.mask,
        [top, &lat](const Point& p) {
          double n2 = 0.0;
          for (int i = 0; i < lat.dim(); ++i) n2 += p[i] * p[i];
          return n2 - top;
        },
        "phi_spp");
  }
  res.s = -std::numeric_limits<double>::infinity();
  for (const std::int64_t b : mask.boundary_nodes)
    res.s = std::max(res.s, backbone.values[static_cast<std::size_t>(b)]);

  double ratio = 1.0;
  for (const std::int64_t c : mask.interior_nodes) {
    const double num = res.s - backbone.values[static_cast<std::size_t>(c)];
    const double den = -psi.values[static_cast<std::size_t>(c)];
    ratio = std::max(ratio, num / den);
  }
  res.M = 2.0 * ratio;

  GridFunction psi_tilde;
  psi_tilde.mask = psi.mask;
  psi_tilde.role = "psi_tilde";
  psi_tilde.values.assign(psi.values.size(), std::numeric_limits<double>::quiet_NaN());
  for (const std::int64_t c : mask.closure_nodes)
    psi_tilde.values[static_cast<std::size_t>(c)] =
        std::max(backbone.values[static_cast<std::size_t>(c)] - res.s,
                 res.M * psi.values[static_cast<std::size_t>(c)]);

  // Quintic smoothstep driven by psi alone: 1 on {psi >= -delta/2}, 0 on
  // {psi <= -delta}. Written as a function of psi it needs no geometry.
  auto theta_of = [&](double psival) {
    double t = (psival + res.delta) / (res.delta / 2.0);
    t = std::clamp(t, 0.0, 1.0);
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
  };
  std::vector<double> theta_f(f.values.size(), std::numeric_limits<double>::quiet_NaN());
  for (const std::int64_t c : mask.closure_nodes) {
    const double th = theta_of(psi.values[static_cast<std::size_t>(c)]);
    theta_f[static_cast<std::size_t>(c)] =
        th == 0.0 ? 0.0 : th * f.values[static_cast<std::size_t>(c)];
  }

  const double h = lat.h();
  for (const std::int64_t c : mask.interior_nodes)
    for (int a = 0; a < lat.dim(); ++a) {
      const std::int64_t lo = lat.step(c, a, -1), hi = lat.step(c, a, 1);
      if (lo < 0 || hi < 0 || !mask.in_closure(lo) || !mask.in_closure(hi)) continue;
      const double dd = std::abs(theta_f[static_cast<std::size_t>(hi)] -
                                 2.0 * theta_f[static_cast<std::size_t>(c)] +
                                 theta_f[static_cast<std::size_t>(lo)]) /
                        (h * h);
      res.theta_f_second_diff = std::max(res.theta_f_second_diff, dd);
    }

  res.F.mask = f.mask;
  res.F.role = "F";
  double best_violation = std::numeric_limits<double>::infinity();
  for (res.doublings = 0; res.doublings <= opts.max_doublings; ++res.doublings) {
    res.F.values.assign(f.values.size(), std::numeric_limits<double>::quiet_NaN());
    for (const std::int64_t c : mask.closure_nodes)
      res.F.values[static_cast<std::size_t>(c)] =
          res.C * psi_tilde.values[static_cast<std::size_t>(c)] +
          theta_f[static_cast<std::size_t>(c)];
    const ViolationReport vr = cone_violation(res.F, cone);
    best_violation = std::min(best_violation, vr.worst);
    if (vr.worst <= vr.tol) {
      res.final_violation = vr.worst;
      for (const std::int64_t b : mask.boundary_nodes)
        res.boundary_error = std::max(res.boundary_error,
                                      std::abs(res.F.values[static_cast<std::size_t>(b)] -
                                               f.values[static_cast<std::size_t>(b)]));
      return res;
    }
    res.C *= 2.0;
  }
  throw NoFeasibleC("no slope multiple certified; best violation " +
                    std::to_string(best_violation));
}

} // namespace pluripot
