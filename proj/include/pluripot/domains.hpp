#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>

#include "pluripot/errors.hpp"
#include "pluripot/lattice.hpp"

namespace pluripot {

inline double sq(double x) { return x * x; }
inline double abs2_z(const Point& p) { return sq(p[0]) + sq(p[1]); }
inline double abs2_w(const Point& p) { return sq(p[2]) + sq(p[3]); }

// Profile of the worm's bump function eta: a hinge quartic
//   eta(x) = c * max(0, |x| - 2*pi)^4,
// zero on [-2pi, 2pi], breaching 1 at |x| = a = 2pi + c^{-1/4} with nonzero
// slope there. All four structural conditions (nonnegative even convex,
// zero-set exactly [-2pi,2pi], >1 beyond a, slope nonzero on the level set
// {eta=1}) hold by construction and are re-checked by sampling in the tests.
struct WormProfile {
  double c;

  double a() const { return 2.0 * M_PI + std::pow(c, -0.25); }
  double eta(double x) const {
    const double s = std::max(0.0, std::abs(x) - 2.0 * M_PI);
    return c * (s * s) * (s * s);
  }
  double eta_prime(double x) const {
    const double s = std::max(0.0, std::abs(x) - 2.0 * M_PI);
    return std::copysign(4.0 * c * s * s * s, x);
  }
};

inline WormProfile make_worm_profile(double c) {
  if (!(c > 0.0) || !std::isfinite(c)) throw BadParams("worm profile needs c > 0");
  return WormProfile{c};
}

// A domain is a pair of predicates (closure membership, interior membership)
// plus a defining function rho (negative inside, zero on the boundary) and a
// bounding box. collar_lipschitz scales the |rho| <= h*L near-boundary test
// during node classification: it is nonzero only for domains with thin
// grid-aligned features (the slit) that axis-neighbour tests cannot see.
struct DomainSpec {
  int n = 1;
  std::string name;
  std::function<bool(const Point&)> closure;
  std::function<bool(const Point&)> interior;
  std::function<double(const Point&)> rho;
  Point bbox_lo{0, 0, 0, 0};
  Point bbox_hi{0, 0, 0, 0};
  double collar_lipschitz = 0.0;
  std::optional<bool> claim_fat;          // known fatness, when documented
  std::optional<bool> claim_not_phc;      // known classification, when documented
};

inline DomainSpec unit_disk() {
  DomainSpec d;
  d.n = 1;
  d.name = "unit_disk";
  d.closure = [](const Point& p) { return abs2_z(p) <= 1.0; };
  d.interior = [](const Point& p) { return abs2_z(p) < 1.0; };
  d.rho = [](const Point& p) { return std::sqrt(abs2_z(p)) - 1.0; };
  d.bbox_lo = {-1, -1, 0, 0};
  d.bbox_hi = {1, 1, 0, 0};
  d.claim_fat = true;
  d.claim_not_phc = false;
  return d;
}

inline DomainSpec disk_at(double cx, double cy, double r) {
  if (!(r > 0)) throw BadParams("disk radius must be positive");
  DomainSpec d;
  d.n = 1;
  d.name = "disk";
  const double r2 = r * r;
  d.closure = [=](const Point& p) { return sq(p[0] - cx) + sq(p[1] - cy) <= r2; };
  d.interior = [=](const Point& p) { return sq(p[0] - cx) + sq(p[1] - cy) < r2; };
  d.rho = [=](const Point& p) { return std::sqrt(sq(p[0] - cx) + sq(p[1] - cy)) - r; };
  d.bbox_lo = {cx - r, cy - r, 0, 0};
  d.bbox_hi = {cx + r, cy + r, 0, 0};
  d.claim_fat = true;
  d.claim_not_phc = false;
  return d;
}

inline DomainSpec annulus(double r1, double r2) {
  if (!(0 < r1 && r1 < r2)) throw BadParams("annulus needs 0 < r1 < r2");
  DomainSpec d;
  d.n = 1;
  d.name = "annulus";
  d.closure = [=](const Point& p) {
    const double s = abs2_z(p);
    return r1 * r1 <= s && s <= r2 * r2;
  };
  d.interior = [=](const Point& p) {
    const double s = abs2_z(p);
    return r1 * r1 < s && s < r2 * r2;
  };
  d.rho = [=](const Point& p) {
    const double r = std::sqrt(abs2_z(p));
    return std::max(r1 - r, r - r2);
  };
  d.bbox_lo = {-r2, -r2, 0, 0};
  d.bbox_hi = {r2, r2, 0, 0};
  d.claim_fat = true;
  return d;
}

// Unit disk minus the closed segment [-1/2, 1/2] on the real axis. The slit
// belongs to the closure (the closure of the open set is the full closed
// disk), which is what makes the domain not fat and feeds the classification
// tests. rho is the negated distance to the full boundary (circle + slit).
inline DomainSpec slit_disk() {
  DomainSpec d;
  d.n = 1;
  d.name = "slit_disk";
  auto dist_slit = [](const Point& p) {
    const double dx = std::max({-0.5 - p[0], 0.0, p[0] - 0.5});
    return std::sqrt(dx * dx + p[1] * p[1]);
  };
  d.closure = [](const Point& p) { return abs2_z(p) <= 1.0; };
  d.interior = [=](const Point& p) { return abs2_z(p) < 1.0 && dist_slit(p) > 0.0; };
  d.rho = [=](const Point& p) {
    return -std::min(1.0 - std::sqrt(abs2_z(p)), dist_slit(p));
  };
  d.bbox_lo = {-1, -1, 0, 0};
  d.bbox_hi = {1, 1, 0, 0};
  d.collar_lipschitz = 1.0;
  d.claim_fat = false;
  d.claim_not_phc = true;
  return d;
}

inline DomainSpec unit_ball2() {
  DomainSpec d;
  d.n = 2;
  d.name = "unit_ball2";
  d.closure = [](const Point& p) { return abs2_z(p) + abs2_w(p) <= 1.0; };
  d.interior = [](const Point& p) { return abs2_z(p) + abs2_w(p) < 1.0; };
  d.rho = [](const Point& p) { return std::sqrt(abs2_z(p) + abs2_w(p)) - 1.0; };
  d.bbox_lo = {-1, -1, -1, -1};
  d.bbox_hi = {1, 1, 1, 1};
  d.claim_fat = true;
  d.claim_not_phc = false;
  return d;
}

inline DomainSpec polydisk() {
  DomainSpec d;
  d.n = 2;
  d.name = "polydisk";
  d.closure = [](const Point& p) { return abs2_z(p) <= 1.0 && abs2_w(p) <= 1.0; };
  d.interior = [](const Point& p) { return abs2_z(p) < 1.0 && abs2_w(p) < 1.0; };
  d.rho = [](const Point& p) {
    return std::max(std::sqrt(abs2_z(p)) - 1.0, std::sqrt(abs2_w(p)) - 1.0);
  };
  d.bbox_lo = {-1, -1, -1, -1};
  d.bbox_hi = {1, 1, 1, 1};
  d.claim_fat = true;
  d.claim_not_phc = false;
  return d;
}

// Open set {|z| < |w| < 1}; its topological closure is {|z| <= |w| <= 1},
// including the distinguished corner z = w = 0 where the domain fails to be
// locally connected in the way the boundary tests probe.
inline DomainSpec hartogs_triangle() {
  DomainSpec d;
  d.n = 2;
  d.name = "hartogs_triangle";
  d.closure = [](const Point& p) {
    const double a = abs2_z(p), b = abs2_w(p);
    return a <= b && b <= 1.0;
  };
  d.interior = [](const Point& p) {
    const double a = abs2_z(p), b = abs2_w(p);
    return a < b && b < 1.0;
  };
  d.rho = [](const Point& p) {
    const double az = std::sqrt(abs2_z(p)), aw = std::sqrt(abs2_w(p));
    return std::max(az - aw, aw - 1.0);
  };
  d.bbox_lo = {-1, -1, -1, -1};
  d.bbox_hi = {1, 1, 1, 1};
  d.claim_fat = true;
  d.claim_not_phc = true;
  return d;
}

// Worm-type domain in C^2:
//   { (z,w) : |z - e^{i log|w|^2}|^2 < 1 - eta(log|w|^2) },
// with a guard band keeping log|w|^2 within [-(a+1), a+1] so the fibre
// condition stays meaningful and w = 0 is excluded. The full bounding box is
// enormous in w (|w| up to e^{(a+1)/2}); window-mode classification exists
// precisely so that local studies near the interesting part are affordable.
inline DomainSpec worm(const WormProfile& prof) {
  DomainSpec d;
  d.n = 2;
  d.name = "worm";
  const double guard = prof.a() + 1.0;
  auto formula = [prof](const Point& p) {
    const double w2 = abs2_w(p);
    const double t = std::log(w2);
    const double gx = std::cos(t), gy = std::sin(t);
    return sq(p[0] - gx) + sq(p[1] - gy) - (1.0 - prof.eta(t));
  };
  d.closure = [=](const Point& p) {
    const double w2 = abs2_w(p);
    if (!(w2 > 0.0)) return false;
    const double t = std::log(w2);
    if (std::abs(t) > guard) return false;
    return formula(p) <= 0.0;
  };
  d.interior = [=](const Point& p) {
    const double w2 = abs2_w(p);
    if (!(w2 > 0.0)) return false;
    const double t = std::log(w2);
    if (std::abs(t) >= guard) return false;
    return formula(p) < 0.0;
  };
  d.rho = [=](const Point& p) {
    const double w2 = abs2_w(p);
    if (!(w2 > 0.0)) return 1.0;
    const double t = std::log(w2);
    if (std::abs(t) > guard) return 1.0;
    return formula(p);
  };
  const double wmax = std::exp(guard / 2.0);
  d.bbox_lo = {-2, -2, -wmax, -wmax};
  d.bbox_hi = {2, 2, wmax, wmax};
  d.claim_fat = true;
  return d;
}

inline DomainSpec intersect_domains(const DomainSpec& a, const DomainSpec& b) {
  if (a.n != b.n) throw DimensionMismatch("intersect needs equal complex dimension");
  DomainSpec d;
  d.n = a.n;
  d.name = a.name + "&" + b.name;
  for (int ax = 0; ax < 2 * d.n; ++ax) {
    d.bbox_lo[ax] = std::max(a.bbox_lo[ax], b.bbox_lo[ax]);
    d.bbox_hi[ax] = std::min(a.bbox_hi[ax], b.bbox_hi[ax]);
    if (!(d.bbox_lo[ax] < d.bbox_hi[ax]))
      throw EmptyIntersection("bounding boxes do not meet on axis " + std::to_string(ax));
  }
  auto ac = a.closure, bc = b.closure, ai = a.interior, bi = b.interior;
  auto ar = a.rho, br = b.rho;
  d.closure = [=](const Point& p) { return ac(p) && bc(p); };
  d.interior = [=](const Point& p) { return ai(p) && bi(p); };
  d.rho = [=](const Point& p) { return std::max(ar(p), br(p)); };
  d.collar_lipschitz = std::max(a.collar_lipschitz, b.collar_lipschitz);
  return d;
}

inline DomainSpec product_domains(const DomainSpec& a, const DomainSpec& b) {
  if (a.n != 1 || b.n != 1) throw DimensionMismatch("product supports two plane factors");
  DomainSpec d;
  d.n = 2;
  d.name = a.name + "x" + b.name;
  d.bbox_lo = {a.bbox_lo[0], a.bbox_lo[1], b.bbox_lo[0], b.bbox_lo[1]};
  d.bbox_hi = {a.bbox_hi[0], a.bbox_hi[1], b.bbox_hi[0], b.bbox_hi[1]};
  auto ac = a.closure, bc = b.closure, ai = a.interior, bi = b.interior;
  auto ar = a.rho, br = b.rho;
  auto lift = [](const Point& p) { return Point{p[2], p[3], 0, 0}; };
  d.closure = [=](const Point& p) { return ac(p) && bc(lift(p)); };
  d.interior = [=](const Point& p) { return ai(p) && bi(lift(p)); };
  d.rho = [=](const Point& p) { return std::max(ar(p), br(lift(p))); };
  d.collar_lipschitz = std::max(a.collar_lipschitz, b.collar_lipschitz);
  return d;
}

} // namespace pluripot
