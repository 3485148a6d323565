#include <catch2/catch_amalgamated.hpp>

#include "pluripot/pluripot.hpp"

using namespace pluripot;

TEST_CASE("lattice node counts match the box arithmetic") {
  // 3x3 grid on [-1,1]^2 at h=1
  Lattice a(1, {-1, -1, 0, 0}, {1, 1, 0, 0}, 1.0);
  CHECK(a.size() == 9);
  CHECK(a.axis_count(0) == 3);

  // 3^4 = 81 nodes on [0,1]^4 at h=0.5
  Lattice b(2, {0, 0, 0, 0}, {1, 1, 1, 1}, 0.5);
  CHECK(b.size() == 81);

  CHECK_THROWS_AS(Lattice(1, {-1, -1, 0, 0}, {1, 1, 0, 0}, 1e-6), NodeBudgetExceeded);
  CHECK_THROWS_AS(Lattice(1, {-1, 2, 0, 0}, {1, 2, 0, 0}, 0.5), InvalidBox);
  CHECK_THROWS_AS(Lattice(3, {-1, -1, 0, 0}, {1, 1, 0, 0}, 0.5), BadParams);
  CHECK_THROWS_AS(Lattice(1, {-1, -1, 0, 0}, {1, 1, 0, 0}, -0.1), InvalidBox);
}

TEST_CASE("node coordinates are exact multiples of h and maps invert") {
  Lattice lat(1, {-1.3, -0.7, 0, 0}, {1.1, 0.9, 0, 0}, 0.25);
  for (std::int64_t i = 0; i < lat.size(); ++i) {
    const Point p = lat.point(i);
    for (int a = 0; a < lat.dim(); ++a) {
      const double q = p[a] / lat.h();
      CHECK(q == std::round(q)); // bit-exact: coords come from integer*h
    }
    CHECK(lat.flat(lat.multi(i)) == i);
  }
  // Requested endpoints that are exact multiples of h are kept.
  Lattice snap(1, {-1, -1, 0, 0}, {1, 1, 0, 0}, 0.1);
  CHECK(snap.box_lo(0) == -1.0);
  CHECK(snap.box_hi(0) == 1.0);
  CHECK(snap.axis_count(0) == 21);
}

TEST_CASE("step walks axis neighbours and stops at the box edge") {
  Lattice lat(1, {0, 0, 0, 0}, {1, 1, 0, 0}, 0.5);
  const std::int64_t c = lat.flat({1, 1, 0, 0});
  CHECK(lat.point(lat.step(c, 0, 1))[0] == Catch::Approx(1.0));
  CHECK(lat.step(lat.flat({2, 1, 0, 0}), 0, 1) == -1);
  CHECK(lat.step(lat.flat({0, 1, 0, 0}), 0, -1) == -1);
}

TEST_CASE("classification on the unit disk") {
  DomainSpec disk = unit_disk();
  Lattice lat(1, {-2, -2, 0, 0}, {2, 2, 0, 0}, 0.5);
  MaskPtr mask = classify_nodes(lat, disk);

  auto at = [&](double x, double y) {
    return mask->at(lat.flat({static_cast<std::int64_t>(std::llround(x / 0.5)) - lat.axis_origin(0),
                              static_cast<std::int64_t>(std::llround(y / 0.5)) - lat.axis_origin(1),
                              0, 0}));
  };
  CHECK(at(0, 0) == NodeClass::Interior);
  CHECK(at(1.0, 0) == NodeClass::Boundary); // axis neighbour (1.5,0) is exterior
  CHECK(at(1.0, 1.0) == NodeClass::Exterior);

  // Partition sanity: the three lists tile the closure/exterior split.
  std::int64_t closure = 0;
  for (std::int64_t i = 0; i < lat.size(); ++i)
    if (mask->in_closure(i)) ++closure;
  CHECK(closure == static_cast<std::int64_t>(mask->closure_nodes.size()));
  CHECK(mask->closure_nodes.size() ==
        mask->interior_nodes.size() + mask->boundary_nodes.size());
}

TEST_CASE("window mode accepts a tight box") {
  // The same three nodes classify identically when the box hugs the disk and
  // coverage is waived.
  DomainSpec disk = unit_disk();
  Lattice lat(1, {-1.25, -1.25, 0, 0}, {1.25, 1.25, 0, 0}, 0.5);
  CHECK_THROWS_AS(classify_nodes(lat, disk), DomainNotCovered);
  MaskPtr mask = classify_nodes(lat, disk, true);
  CHECK(mask->window);
  const std::int64_t center = lat.flat({-lat.axis_origin(0), -lat.axis_origin(1), 0, 0});
  CHECK(mask->at(center) == NodeClass::Interior);
}

TEST_CASE("boundary nodes touch the outside or the analytic boundary") {
  DomainSpec disk = unit_disk();
  Lattice lat(1, {-2, -2, 0, 0}, {2, 2, 0, 0}, 0.25);
  MaskPtr mask = classify_nodes(lat, disk);
  for (const std::int64_t b : mask->boundary_nodes) {
    bool exterior_neighbour = false, closure_neighbour = false;
    for (int a = 0; a < lat.dim(); ++a)
      for (const int s : {-1, 1}) {
        const std::int64_t t = lat.step(b, a, s);
        if (t < 0 || !mask->in_closure(t))
          exterior_neighbour = true;
        else
          closure_neighbour = true;
      }
    const double rho = disk.rho(lat.point(b));
    CHECK((exterior_neighbour || std::abs(rho) <= lat.h() * disk.collar_lipschitz));
    CHECK(closure_neighbour);
  }
  // Interior nodes carry a full axis star inside the closure.
  for (const std::int64_t c : mask->interior_nodes)
    for (int a = 0; a < lat.dim(); ++a)
      for (const int s : {-1, 1}) {
        const std::int64_t t = lat.step(c, a, s);
        REQUIRE(t >= 0);
        CHECK(mask->in_closure(t));
      }
}

TEST_CASE("multilinear interpolation weights") {
  Lattice lat(2, {0, 0, 0, 0}, {1, 1, 1, 1}, 0.5);

  SECTION("a node interpolates to itself") {
    const Point p{0.5, 0.5, 0.5, 0.5};
    SparseWeights w = interp_weights(lat, p);
    REQUIRE(w.nodes.size() == 1);
    CHECK(w.weights[0] == Catch::Approx(1.0));
    CHECK(lat.point(w.nodes[0])[0] == Catch::Approx(0.5));
  }

  SECTION("2D cell center gets four quarters") {
    Lattice flat(1, {0, 0, 0, 0}, {1, 1, 0, 0}, 0.5);
    SparseWeights w = interp_weights(flat, {0.25, 0.25, 0, 0});
    REQUIRE(w.nodes.size() == 4);
    for (const double wi : w.weights) CHECK(wi == Catch::Approx(0.25));
  }

  SECTION("edge midpoint gets two halves") {
    Lattice flat(1, {0, 0, 0, 0}, {1, 1, 0, 0}, 0.5);
    SparseWeights w = interp_weights(flat, {0.25, 0.5, 0, 0});
    REQUIRE(w.nodes.size() == 2);
    for (const double wi : w.weights) CHECK(wi == Catch::Approx(0.5));
  }

  SECTION("outside the box throws") {
    CHECK_THROWS_AS(interp_weights(lat, {1.5, 0, 0, 0}), OutOfBox);
  }

  SECTION("exact on affine functions of the real coordinates") {
    auto f = [](const Point& p) { return 0.3 + 1.7 * p[0] - 0.4 * p[1] + 2.1 * p[2] - 0.9 * p[3]; };
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
      Point p{U(rng), U(rng), U(rng), U(rng)};
      SparseWeights w = interp_weights(lat, p);
      double acc = 0.0, mass = 0.0;
      for (std::size_t k = 0; k < w.nodes.size(); ++k) {
        acc += w.weights[k] * f(lat.point(w.nodes[k]));
        mass += w.weights[k];
        CHECK(w.weights[k] >= 0.0);
      }
      CHECK(std::abs(mass - 1.0) <= 1e-12);
      CHECK(std::abs(acc - f(p)) <= 1e-12);
    }
  }
}
