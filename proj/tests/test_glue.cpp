#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "pluripot/pluripot.hpp"

using namespace pluripot;

namespace {

struct DiskSetup {
  MaskPtr mask;
  DiscretePshCone cone;
  GridFunction psi;
};

DiskSetup disk_setup(double h) {
  Lattice lat(1, {-1 - 2 * h, -1 - 2 * h, 0, 0}, {1 + 2 * h, 1 + 2 * h, 0, 0}, h);
  MaskPtr mask = classify_nodes(lat, unit_disk());
  DiscretePshCone cone = build_cone(mask);
  GridFunction psi = build_exhaustion(mask, cone);
  return {mask, std::move(cone), std::move(psi)};
}

std::vector<std::int64_t> small_disk_nodes(const MaskPtr& mask, double radius) {
  std::vector<std::int64_t> E;
  for (const std::int64_t c : mask->interior_nodes) {
    const Point p = mask->lat.point(c);
    if (p[0] * p[0] + p[1] * p[1] <= radius * radius + 1e-12) E.push_back(c);
  }
  return E;
}

} // namespace

TEST_CASE("max glue meets the construction contract on the disk") {
  DiskSetup s = disk_setup(0.1);
  GridFunction u = make_grid_function(s.mask, [](const Point& p) { return p[0]; });
  const std::vector<std::int64_t> E = small_disk_nodes(s.mask, 0.25);
  REQUIRE_FALSE(E.empty());

  auto [glued, gp] = max_glue(u, s.psi, E);

  // The u branch wins on E, without any tolerance.
  for (const std::int64_t e : E) CHECK(glued.values[e] == u.values[e] - gp.M);

  // psi vanishes on the boundary, so the cone branch is the constant K*eps
  // there.
  for (const std::int64_t b : s.mask->boundary_nodes) CHECK(glued.values[b] == gp.K * gp.eps);
  CHECK(gp.eps > 0.0);
  CHECK(gp.K > 0.0);

  ViolationReport vr = cone_violation(glued, s.cone);
  CHECK(vr.worst <= 10.0 * vr.tol);
}

TEST_CASE("max glue ignores values outside the sublevel set") {
  DiskSetup s = disk_setup(0.1);
  GridFunction u = make_grid_function(s.mask, [](const Point& p) { return p[0] - 0.2 * abs2_z(p); });
  const std::vector<std::int64_t> E = small_disk_nodes(s.mask, 0.25);

  auto [glued, gp] = max_glue(u, s.psi, E);

  GridFunction tampered = u;
  for (const std::int64_t c : s.mask->closure_nodes)
    if (s.psi.values[c] > -gp.eps) tampered.values[c] += 37.0;
  auto [glued2, gp2] = max_glue(tampered, s.psi, E);

  CHECK(gp2.K == gp.K);
  CHECK(gp2.M == gp.M);
  CHECK(gp2.eps == gp.eps);
  for (const std::int64_t c : s.mask->closure_nodes) CHECK(glued2.values[c] == glued.values[c]);
}

TEST_CASE("max glue validates its inputs") {
  DiskSetup s = disk_setup(0.2);
  GridFunction u = make_grid_function(s.mask, [](const Point& p) { return p[0]; });

  CHECK_THROWS_AS(max_glue(u, s.psi, {}), EmptyE);
  CHECK_THROWS_AS(max_glue(u, s.psi, {s.mask->boundary_nodes.front()}), BadParams);

  GridFunction inf_u = u;
  inf_u.values[small_disk_nodes(s.mask, 0.25).front()] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(max_glue(inf_u, s.psi, small_disk_nodes(s.mask, 0.25)), UnboundedU);

  // A function that is not an exhaustion is rejected up front.
  GridFunction flat = constant_grid_function(s.mask, -1.0);
  CHECK_THROWS_AS(max_glue(u, flat, small_disk_nodes(s.mask, 0.25)), PreconditionFailed);
}

TEST_CASE("bounded extension raises the boundary to the declared bound") {
  DiskSetup s = disk_setup(0.1);

  SECTION("harmonic interior data stays in the cone") {
    GridFunction u = make_grid_function(s.mask, [](const Point& p) { return p[0]; });
    GridFunction ext = bounded_extension(u, 1.0, s.mask);
    for (const std::int64_t b : s.mask->boundary_nodes) CHECK(ext.values[b] == 1.0);
    for (const std::int64_t c : s.mask->interior_nodes) CHECK(ext.values[c] == u.values[c]);
    ViolationReport vr = cone_violation(ext, s.cone);
    CHECK(vr.worst <= vr.tol);
  }

  SECTION("zero data with zero bound is the zero function") {
    GridFunction u = constant_grid_function(s.mask, 0.0);
    GridFunction ext = bounded_extension(u, 0.0, s.mask);
    for (const std::int64_t c : s.mask->closure_nodes) CHECK(ext.values[c] == 0.0);
  }

  SECTION("an interior value above the bound is refused") {
    GridFunction u = constant_grid_function(s.mask, 0.0);
    u.values[s.mask->interior_nodes.front()] = 2.0;
    CHECK_THROWS_AS(bounded_extension(u, 1.0, s.mask), BoundViolated);
  }

  SECTION("cone members stay cone members under the jump") {
    GridFunction g =
        make_grid_function(s.mask, [](const Point& p) { return 0.4 * abs2_z(p) + 0.3 * p[1]; });
    double top = -std::numeric_limits<double>::infinity();
    for (const std::int64_t c : s.mask->interior_nodes) top = std::max(top, g.values[c]);
    GridFunction ext = bounded_extension(g, top + 0.1, s.mask);
    ViolationReport vr = cone_violation(ext, s.cone);
    CHECK(vr.worst <= vr.tol);
  }
}

TEST_CASE("cutoff extension reproduces boundary data") {
  DiskSetup s = disk_setup(0.1);

  SECTION("harmonic data") {
    GridFunction f = make_grid_function(s.mask, [](const Point& p) { return p[0]; });
    CutoffResult res = cutoff_extension(f, s.psi, s.cone);
    CHECK(res.boundary_error <= 1e-6);
    CHECK(res.doublings <= 40);
    CHECK(std::isfinite(res.C));
    ViolationReport vr = cone_violation(res.F, s.cone);
    CHECK(vr.worst <= vr.tol);
    // The search cost is tied to the curvature of the windowed data.
    CHECK(res.C <= 10.0 * std::max(1.0, res.theta_f_second_diff));
  }

  SECTION("zero data collapses to the backbone") {
    GridFunction f = constant_grid_function(s.mask, 0.0);
    CutoffResult res = cutoff_extension(f, s.psi, s.cone);
    CHECK(res.boundary_error == 0.0);
    for (const std::int64_t b : s.mask->boundary_nodes) CHECK(res.F.values[b] == 0.0);
    for (const std::int64_t c : s.mask->interior_nodes) CHECK(res.F.values[c] < 0.0);
  }

  SECTION("restrictions of cone members come back unchanged on the boundary") {
    GridFunction g = make_grid_function(
        s.mask, [](const Point& p) { return 0.3 * abs2_z(p) + 0.2 * p[0] - 0.1; });
    REQUIRE(cone_violation(g, s.cone).in_cone());
    CutoffResult res = cutoff_extension(g, s.psi, s.cone);
    for (const std::int64_t b : s.mask->boundary_nodes)
      CHECK(res.F.values[b] == Catch::Approx(g.values[b]).margin(1e-6));
  }

  SECTION("missing collar data is refused") {
    GridFunction f = constant_grid_function(s.mask, 0.0);
    f.values[s.mask->boundary_nodes.front()] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(cutoff_extension(f, s.psi, s.cone), PreconditionFailed);
  }
}

TEST_CASE("no multiple of the backbone absorbs data pinned on a slit") {
  const double h = 0.1;
  Lattice lat(1, {-1.2, -1.2, 0, 0}, {1.2, 1.2, 0, 0}, h);
  MaskPtr mask = classify_nodes(lat, slit_disk());
  DiscretePshCone cone = build_cone(mask);
  GridFunction psi = build_exhaustion(mask, cone);
  GridFunction f = constant_grid_function(mask, 1.0);
  CutoffOptions opts;
  opts.max_doublings = 20;
  CHECK_THROWS_AS(cutoff_extension(f, psi, cone, opts), NoFeasibleC);
}
