#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "oracles.hpp"
#include "pluripot/pluripot.hpp"

using namespace pluripot;

namespace {

MaskPtr disk_mask(double h) {
  Lattice lat(1, {-1 - 2 * h, -1 - 2 * h, 0, 0}, {1 + 2 * h, 1 + 2 * h, 0, 0}, h);
  return classify_nodes(lat, unit_disk());
}

std::int64_t node_at(const Lattice& lat, double x, double y) {
  return lat.flat({static_cast<std::int64_t>(std::llround(x / lat.h())) - lat.axis_origin(0),
                   static_cast<std::int64_t>(std::llround(y / lat.h())) - lat.axis_origin(1), 0,
                   0});
}

} // namespace

TEST_CASE("harmonic extension reproduces affine data exactly") {
  MaskPtr mask = disk_mask(0.1);
  GridFunction f = make_grid_function(mask, [](const Point& p) { return p[0]; });
  GridFunction H = harmonic_extension(f);
  for (const std::int64_t c : mask->closure_nodes)
    CHECK(H[c] == Catch::Approx(f[c]).margin(1e-8));

  GridFunction one = constant_grid_function(mask, 1.0);
  GridFunction Hone = harmonic_extension(one);
  for (const std::int64_t c : mask->closure_nodes) CHECK(Hone[c] == 1.0);
}

TEST_CASE("harmonic extension matches a dense direct solve") {
  MaskPtr mask = disk_mask(0.2);
  GridFunction f = constant_grid_function(mask, 0.0);
  f[mask->boundary_nodes.front()] = 1.0; // single spike of boundary data
  GridFunction H = harmonic_extension(f);
  GridFunction dense = oracle::dense_laplace_solve(f);
  for (const std::int64_t c : mask->closure_nodes)
    CHECK(H[c] == Catch::Approx(dense[c]).margin(1e-8));

  // Discrete maximum principle.
  for (const std::int64_t c : mask->closure_nodes) {
    CHECK(H[c] >= 0.0 - 1e-12);
    CHECK(H[c] <= 1.0 + 1e-12);
  }
}

TEST_CASE("envelope of a cone member is the member itself") {
  MaskPtr mask = disk_mask(0.1);
  DiscretePshCone cone = build_cone(mask);

  EnvelopeResult flat = psh_envelope(constant_grid_function(mask, -2.5), cone);
  CHECK(flat.converged);
  for (const std::int64_t c : mask->closure_nodes) CHECK(flat.envelope[c] == -2.5);
  CHECK(flat.iterations <= 2);
  CHECK(flat.contact.size() == mask->closure_nodes.size());

  GridFunction rez = make_grid_function(mask, [](const Point& p) { return p[0]; });
  EnvelopeResult same = psh_envelope(rez, cone);
  for (const std::int64_t c : mask->closure_nodes)
    CHECK(same.envelope[c] == Catch::Approx(rez[c]).margin(1e-9));
}

TEST_CASE("envelope of -|z|^2 flattens toward the boundary minimum") {
  const double h = 0.05;
  MaskPtr mask = disk_mask(h);
  DiscretePshCone cone = build_cone(mask);
  GridFunction obstacle = make_grid_function(mask, [](const Point& p) { return -abs2_z(p); });
  EnvelopeResult res = psh_envelope(obstacle, cone);
  REQUIRE(res.converged);

  const std::int64_t center = node_at(mask->lat, 0.0, 0.0);
  // The continuum envelope is the constant -1; the discrete boundary ring sits
  // at -|z_b|^2 = -1 + O(h), which caps how deep the interior can sink.
  CHECK(res.envelope[center] == Catch::Approx(-1.0).margin(3.0 * h));
  CHECK(res.envelope[center] >= -1.0 - 1e-9);
  for (const std::int64_t c : mask->closure_nodes) CHECK(res.envelope[c] <= obstacle[c] + 1e-12);
  // Row slack is bounded by how far the sweep was allowed to stop short.
  const double solver_tol = SolverOptions{}.tol * (1.0 + value_range(obstacle).width());
  CHECK(cone_violation(res.envelope, cone).worst <= 2.0 * solver_tol);
}

TEST_CASE("envelope dominates every cone member below the obstacle") {
  MaskPtr mask = disk_mask(0.1);
  DiscretePshCone cone = build_cone(mask);
  GridFunction obstacle = make_grid_function(mask, [](const Point& p) { return -abs2_z(p); });
  EnvelopeResult res = psh_envelope(obstacle, cone);
  REQUIRE(res.converged);

  std::mt19937_64 rng(321);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int t = 0; t < 20; ++t) {
    const double a = std::abs(U(rng)), bx = U(rng), by = U(rng), c0 = U(rng);
    GridFunction v = make_grid_function(mask, [&](const Point& p) {
      return a * abs2_z(p) + bx * p[0] + by * p[1] + c0;
    });
    REQUIRE(cone_violation(v, cone).in_cone());
    double excess = -std::numeric_limits<double>::infinity();
    for (const std::int64_t i : mask->closure_nodes) excess = std::max(excess, v[i] - obstacle[i]);
    for (const std::int64_t i : mask->closure_nodes) v[i] -= excess; // now v <= obstacle
    for (const std::int64_t i : mask->closure_nodes)
      CHECK(v[i] <= res.envelope[i] + 1e-7);
  }
}

TEST_CASE("one extra sweep moves the envelope by at most the stop tolerance") {
  MaskPtr mask = disk_mask(0.1);
  DiscretePshCone cone = build_cone(mask);
  GridFunction obstacle = make_grid_function(mask, [](const Point& p) { return -abs2_z(p); });
  EnvelopeResult once = psh_envelope(obstacle, cone);
  REQUIRE(once.converged);
  SolverOptions single;
  single.max_sweeps = 1;
  EnvelopeResult extra = psh_envelope(once.envelope, cone, single);
  const double solver_tol = SolverOptions{}.tol * (1.0 + value_range(obstacle).width());
  double moved = 0.0;
  for (const std::int64_t c : mask->closure_nodes)
    moved = std::max(moved, std::abs(extra.envelope[c] - once.envelope[c]));
  CHECK(moved <= 2.0 * solver_tol);
}

TEST_CASE("jacobi envelopes are identical for any worker count") {
  MaskPtr mask = disk_mask(0.05);
  DiscretePshCone cone = build_cone(mask);
  GridFunction obstacle = make_grid_function(mask, [](const Point& p) { return -abs2_z(p); });
  SolverOptions one;
  one.jobs = 1;
  SolverOptions four;
  four.jobs = 4;
  EnvelopeResult a = psh_envelope(obstacle, cone, one);
  EnvelopeResult b = psh_envelope(obstacle, cone, four);
  CHECK(a.iterations == b.iterations);
  for (const std::int64_t c : mask->closure_nodes) CHECK(a.envelope[c] == b.envelope[c]);
}

TEST_CASE("gauss-seidel lands on the same fixed point") {
  MaskPtr mask = disk_mask(0.1);
  DiscretePshCone cone = build_cone(mask);
  GridFunction obstacle = make_grid_function(mask, [](const Point& p) { return -abs2_z(p); });
  SolverOptions gs;
  gs.gauss_seidel = true;
  EnvelopeResult a = psh_envelope(obstacle, cone);
  EnvelopeResult b = psh_envelope(obstacle, cone, gs);
  REQUIRE(b.converged);
  CHECK(b.iterations <= a.iterations);
  for (const std::int64_t c : mask->closure_nodes)
    CHECK(a.envelope[c] == Catch::Approx(b.envelope[c]).margin(1e-6));
}

TEST_CASE("starved sweep budget reports non-convergence with the best iterate") {
  MaskPtr mask = disk_mask(0.05);
  DiscretePshCone cone = build_cone(mask);
  GridFunction obstacle = make_grid_function(mask, [](const Point& p) { return -abs2_z(p); });
  SolverOptions tight;
  tight.max_sweeps = 3;
  EnvelopeResult res = psh_envelope(obstacle, cone, tight);
  CHECK_FALSE(res.converged);
  CHECK(res.final_residual > 0.0);
  CHECK(res.iterations == 3);
  for (const std::int64_t c : mask->closure_nodes) CHECK(std::isfinite(res.envelope[c]));
}

TEST_CASE("relative extremal function") {
  const double h = 0.05;
  MaskPtr mask = disk_mask(h);
  DiscretePshCone cone = build_cone(mask);

  SECTION("full target set returns the obstacle itself") {
    EnvelopeResult ignored{};
    (void)ignored;
    GridFunction u = relative_extremal(mask->interior_nodes, mask, cone);
    for (const std::int64_t c : mask->interior_nodes) CHECK(u[c] == -1.0);
    for (const std::int64_t b : mask->boundary_nodes) CHECK(u[b] == 0.0);
  }

  SECTION("small disk target matches the radial harmonic oracle") {
    std::vector<std::int64_t> K;
    for (const std::int64_t c : mask->interior_nodes)
      if (abs2_z(mask->lat.point(c)) <= 0.25 * 0.25 + 1e-12) K.push_back(c);
    REQUIRE_FALSE(K.empty());
    GridFunction u = relative_extremal(K, mask, cone);
    for (const std::int64_t k : K) CHECK(u[k] == -1.0);
    for (const std::int64_t b : mask->boundary_nodes) CHECK(u[b] == 0.0);
    for (const std::int64_t c : mask->closure_nodes) {
      CHECK(u[c] >= -1.0 - 1e-12);
      CHECK(u[c] <= 0.0 + 1e-12);
    }
    const std::int64_t probe = node_at(mask->lat, 0.5, 0.0);
    CHECK(u[probe] == Catch::Approx(oracle::radial_extremal(0.5, 0.25)).margin(0.05));
  }

  SECTION("empty and non-interior targets are rejected") {
    CHECK_THROWS_AS(relative_extremal({}, mask, cone), BadParams);
    CHECK_THROWS_AS(relative_extremal({mask->boundary_nodes.front()}, mask, cone), BadParams);
  }
}

TEST_CASE("dirichlet extension keeps pluriharmonic data") {
  MaskPtr mask = disk_mask(0.1);
  DiscretePshCone cone = build_cone(mask);

  GridFunction rez = make_grid_function(mask, [](const Point& p) { return p[0]; });
  DirichletResult d = dirichlet_psh_extension(rez, cone);
  CHECK(d.boundary_mismatch <= 1e-8);
  for (const std::int64_t c : mask->closure_nodes)
    CHECK(d.envelope.envelope[c] == Catch::Approx(rez[c]).margin(1e-7));

  GridFunction zero = constant_grid_function(mask, 0.0);
  DirichletResult dz = dirichlet_psh_extension(zero, cone);
  for (const std::int64_t c : mask->closure_nodes) CHECK(dz.envelope.envelope[c] == 0.0);
}

TEST_CASE("dirichlet envelope never exceeds its harmonic majorant") {
  const double h = 0.05;
  MaskPtr mask = disk_mask(h);
  DiscretePshCone cone = build_cone(mask);
  // f(e^{i theta}) = -|sin theta| extended radially; only boundary values count.
  GridFunction f = make_grid_function(mask, [](const Point& p) {
    const double r = std::sqrt(abs2_z(p));
    return r == 0.0 ? 0.0 : -std::abs(p[1]) / r;
  });
  DirichletResult d = dirichlet_psh_extension(f, cone);
  REQUIRE(d.envelope.converged);
  for (const std::int64_t c : mask->closure_nodes)
    CHECK(d.envelope.envelope[c] <= d.harmonic[c] + 1e-10);
  CHECK(d.boundary_mismatch <= 0.12); // coarse-grid version of the fine-grid bound
}

TEST_CASE("maximum principle for boundary-pinned obstacles") {
  MaskPtr mask = disk_mask(0.1);
  DiscretePshCone cone = build_cone(mask);
  GridFunction obstacle = make_grid_function(mask, [](const Point& p) {
    return abs2_z(p) >= 1.0 - 1e-12 ? 0.0 : -(1.0 - abs2_z(p));
  });
  // Force 0 exactly on boundary nodes.
  for (const std::int64_t b : mask->boundary_nodes) obstacle[b] = 0.0;
  EnvelopeResult res = psh_envelope(obstacle, cone);
  double interior_max = -std::numeric_limits<double>::infinity();
  for (const std::int64_t c : mask->interior_nodes)
    interior_max = std::max(interior_max, res.envelope[c]);
  CHECK(interior_max <= 0.0 + 1e-12); // max lives on the boundary ring
}
