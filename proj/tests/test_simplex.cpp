#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "oracles.hpp"
#include "pluripot/pluripot.hpp"

using namespace pluripot;

namespace {

// Random standard-form instance with an identity start: A = [I | R], b >= 0.
struct Instance {
  int m, n;
  std::vector<double> A, b, c;
  std::vector<int> basis;
};

Instance random_instance(std::mt19937_64& rng, bool degenerate) {
  std::uniform_int_distribution<int> M(3, 5), extra(2, 6);
  std::uniform_real_distribution<double> U(-1.0, 1.0), Upos(0.0, 1.0);
  Instance ins;
  ins.m = M(rng);
  ins.n = ins.m + extra(rng);
  ins.A.assign(static_cast<std::size_t>(ins.m) * ins.n, 0.0);
  for (int i = 0; i < ins.m; ++i) {
    ins.A[static_cast<std::size_t>(i) * ins.n + i] = 1.0;
    for (int j = ins.m; j < ins.n; ++j)
      ins.A[static_cast<std::size_t>(i) * ins.n + j] = U(rng);
    ins.basis.push_back(i);
  }
  for (int i = 0; i < ins.m; ++i) {
    double v = Upos(rng);
    if (degenerate && i % 2 == 0) v = 0.0; // many zero basics: the stressing start
    ins.b.push_back(v);
  }
  // Nonnegative costs keep the instance bounded for the oracle.
  for (int j = 0; j < ins.n; ++j) ins.c.push_back(Upos(rng));
  return ins;
}

void check_against_oracle(const Instance& ins) {
  LpSolution got = simplex_solve(ins.m, ins.n, ins.A, ins.b, ins.c, ins.basis);
  oracle::BruteLp want = oracle::brute_force_lp(ins.m, ins.n, ins.A, ins.b, ins.c);
  REQUIRE(want.feasible);
  CHECK(got.objective == Catch::Approx(want.objective).margin(1e-8));

  // The returned point must itself be feasible and priced correctly.
  double cx = 0.0;
  for (int j = 0; j < ins.n; ++j) {
    CHECK(got.x[static_cast<std::size_t>(j)] >= -1e-9);
    cx += ins.c[static_cast<std::size_t>(j)] * got.x[static_cast<std::size_t>(j)];
  }
  CHECK(cx == Catch::Approx(got.objective).margin(1e-8));
  for (int i = 0; i < ins.m; ++i) {
    double ax = 0.0;
    for (int j = 0; j < ins.n; ++j)
      ax += ins.A[static_cast<std::size_t>(i) * ins.n + j] * got.x[static_cast<std::size_t>(j)];
    CHECK(ax == Catch::Approx(ins.b[static_cast<std::size_t>(i)]).margin(1e-9));
  }
}

} // namespace

TEST_CASE("simplex agrees with exhaustive vertex enumeration") {
  std::mt19937_64 rng(424242);
  for (int t = 0; t < 40; ++t) check_against_oracle(random_instance(rng, false));
}

TEST_CASE("degenerate right-hand sides do not stall the pivot rule") {
  std::mt19937_64 rng(171717);
  for (int t = 0; t < 40; ++t) check_against_oracle(random_instance(rng, true));
}

TEST_CASE("identical instances pivot identically") {
  std::mt19937_64 rng(9);
  Instance ins = random_instance(rng, true);
  LpSolution a = simplex_solve(ins.m, ins.n, ins.A, ins.b, ins.c, ins.basis);
  LpSolution b = simplex_solve(ins.m, ins.n, ins.A, ins.b, ins.c, ins.basis);
  CHECK(a.pivots == b.pivots);
  CHECK(a.basis == b.basis);
  CHECK(a.objective == b.objective); // bitwise: same arithmetic path
}

TEST_CASE("unbounded rays are reported") {
  // minimize -x2 s.t. x1 - x2 = 1: pushing x2 up never exhausts feasibility.
  const std::vector<double> A{1.0, -1.0};
  const std::vector<double> b{1.0};
  const std::vector<double> c{0.0, -1.0};
  CHECK_THROWS_AS(simplex_solve(1, 2, A, b, c, {0}), LpUnbounded);
}

TEST_CASE("input validation") {
  const std::vector<double> A{1.0, 0.0, 0.0, 1.0};
  const std::vector<double> b{1.0, -0.5};
  const std::vector<double> c{1.0, 1.0};
  CHECK_THROWS_AS(simplex_solve(2, 2, A, b, c, {0, 1}), BadParams); // negative b
  CHECK_THROWS_AS(simplex_solve(2, 3, A, {1.0, 1.0}, c, {0, 1}), BadParams); // shape
}

TEST_CASE("already-optimal start returns after zero pivots") {
  // Identity basis, costs zero on the basis, positive elsewhere.
  const std::vector<double> A{1.0, 0.0, 0.5, 0.0, 1.0, 0.5};
  const std::vector<double> b{1.0, 2.0};
  const std::vector<double> c{0.0, 0.0, 1.0};
  LpSolution s = simplex_solve(2, 3, A, b, c, {0, 1});
  CHECK(s.pivots == 0);
  CHECK(s.objective == 0.0);
}
