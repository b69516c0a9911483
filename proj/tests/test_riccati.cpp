#include <doctest.h>

#include <stdexcept>

#include "mjls/reference_case.hpp"
#include "mjls/riccati.hpp"
#include "support/random_suite.hpp"

using namespace mjls;

namespace {

// Smallest nontrivial delayed problem: everything scalar and equal to one.
// The full solution is short enough to carry by hand.
JumpLinearModel scalar_model() {
  JumpLinearModel mdl;
  mdl.n = mdl.m = mdl.L = 1;
  mdl.d = 1;
  mdl.N = 2;
  mdl.A = {Matrix::Identity(1, 1)};
  mdl.B = {Matrix::Identity(1, 1)};
  mdl.Q = {Matrix::Identity(1, 1)};
  mdl.R = {Matrix::Identity(1, 1)};
  mdl.P_term = {Matrix::Identity(1, 1)};
  mdl.trans = Matrix::Identity(1, 1);
  mdl.pi0 = Vector::Ones(1);
  return mdl;
}

// Degenerate cost (no weight anywhere) makes every decision curvature
// exactly singular, so the sweep must halt at the last decision time.
JumpLinearModel degenerate_model() {
  JumpLinearModel mdl = scalar_model();
  mdl.Q[0].setZero();
  mdl.R[0].setZero();
  mdl.P_term[0].setZero();
  return mdl;
}

}  // namespace

TEST_CASE("scalar delayed problem: full table against hand solution") {
  const RiccatiTables tb = solve_riccati(scalar_model());
  REQUIRE(tb.solvable);

  // t = 0..N-d = 0..1 are real; t = 2 is the terminal window placeholder.
  CHECK(tb.W[0][0](0, 0) == doctest::Approx(2.5).epsilon(1e-14));
  CHECK(tb.W[1][0](0, 0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(tb.T[0][0][0](0, 0) == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(tb.T[0][1][0](0, 0) == doctest::Approx(1.0).epsilon(1e-14));

  CHECK(tb.P[0][0](0, 0) == doctest::Approx(2.5).epsilon(1e-14));
  CHECK(tb.P[1][0](0, 0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(tb.P[2][0](0, 0) == doctest::Approx(1.0).epsilon(1e-14));

  CHECK(tb.P0[0][0](0, 0) == doctest::Approx(0.9).epsilon(1e-14));
  CHECK(tb.P0[1][0](0, 0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(tb.P0[2][0](0, 0) == 0.0);

  SUBCASE("terminal window placeholders") {
    CHECK(tb.in_window(2));
    CHECK_FALSE(tb.in_window(1));
    CHECK(tb.W[2][0].isIdentity(0.0));
    CHECK(tb.T[0][2][0].norm() == 0.0);
  }
  SUBCASE("consistency identities are vacuous for d = 1") {
    CHECK(check_proposition1(scalar_model(), tb) == 0.0);
  }
}

TEST_CASE("benchmark tables reproduce the published reference values") {
  const JumpLinearModel mdl = benchmark_problem().model;
  const RiccatiTables tb = solve_riccati(mdl);
  REQUIRE(tb.solvable);

  // Published rows 0..4 live at t = row + 1 in absolute time.
  SUBCASE("last decision time, exact two-step expectation") {
    // W[5][l] = E[B' P B + R two steps ahead | mode at 5], evaluated by hand:
    // per-mode cost B'B + R is 3 (mode 1) and 7 (mode 2).
    CHECK(tb.W[5][0](0, 0) == doctest::Approx(3.64).epsilon(1e-12));
    CHECK(tb.W[5][1](0, 0) == doctest::Approx(5.08).epsilon(1e-12));
  }
  SUBCASE("spot checks against the published table") {
    const BenchmarkRow& row3 = kBenchmarkTable[3];  // t = 4
    CHECK(tb.W[4][0](0, 0) == doctest::Approx(row3.W[0]).epsilon(1e-4));
    CHECK(tb.W[4][1](0, 0) == doctest::Approx(row3.W[1]).epsilon(1e-4));

    const BenchmarkRow& row4 = kBenchmarkTable[4];  // t = 5
    CHECK(tb.T[0][5][0](0, 0) == doctest::Approx(row4.T0[0][0]).epsilon(2e-4));
    CHECK(tb.T[0][5][0](0, 1) == doctest::Approx(row4.T0[0][1]).epsilon(2e-4));
    CHECK(tb.T[0][5][1](0, 0) == doctest::Approx(row4.T0[1][0]).epsilon(2e-4));
    CHECK(tb.T[0][5][1](0, 1) == doctest::Approx(row4.T0[1][1]).epsilon(2e-4));
    CHECK(tb.T[1][5][0](0, 0) == doctest::Approx(row4.T1[0]).epsilon(1e-3));
    CHECK(tb.T[1][5][1](0, 0) == doctest::Approx(row4.T1[1]).epsilon(1e-3));
  }
  SUBCASE("consistency identities hold to machine precision") {
    CHECK(check_proposition1(mdl, tb) < 1e-12);
  }
  SUBCASE("terminal window spans t = N-d+1 .. N") {
    for (int t = 0; t <= mdl.N; ++t) CHECK(tb.in_window(t) == (t > mdl.N - mdl.d));
    for (int t = mdl.N - mdl.d + 1; t <= mdl.N; ++t) {
      for (int l = 0; l < mdl.L; ++l) {
        CHECK(tb.W[t][l].isIdentity(0.0));
        CHECK(tb.T[0][t][l].norm() == 0.0);
        CHECK(tb.T[1][t][l].norm() == 0.0);
        CHECK(tb.P0[t][l].norm() == 0.0);
      }
    }
  }
  SUBCASE("history-correction tables: zero at t = N, alive below") {
    for (int l = 0; l < mdl.L; ++l) {
      CHECK(tb.delta[0][mdl.N][l].norm() == 0.0);
      CHECK(tb.alpha[0][mdl.N][l].norm() == 0.0);
      CHECK(tb.delta[0][mdl.N - 1][l].norm() > 0.0);
      // For d = 2 the deepest correction order coincides with delta.
      CHECK(tb.alpha[0][mdl.N - 1][l].isApprox(tb.delta[0][mdl.N - 1][l]));
    }
    const int tuple[] = {1};
    CHECK(tb.alpha_entry(1, mdl.N - 1, tuple).isApprox(tb.delta[0][mdl.N - 1][1]));
    CHECK_THROWS_AS(tb.alpha_entry(2, mdl.N - 1, tuple), std::invalid_argument);
  }
  SUBCASE("cached factorizations solve against the stored W") {
    const Matrix rhs = (Matrix(1, 2) << 0.3, -1.2).finished();
    const Matrix sol = tb.w_solve(4, 1, rhs);
    CHECK((tb.W[4][1] * sol - rhs).norm() < 1e-12);
  }
}

TEST_CASE("singular curvature halts the sweep and reports the location") {
  const JumpLinearModel mdl = degenerate_model();
  const RiccatiTables tb = solve_riccati(mdl);
  CHECK_FALSE(tb.solvable);
  CHECK(tb.fail_t == mdl.N - mdl.d);
  CHECK(tb.fail_mode == 0);
  // Entries computed before the halt (window placeholders) are retained.
  CHECK(tb.W[mdl.N][0].isIdentity(0.0));
  CHECK_THROWS_AS(check_proposition1(mdl, tb), NotSolvableError);

  SUBCASE("the error message names time and one-based mode") {
    try {
      check_proposition1(mdl, tb);
      FAIL("expected NotSolvableError");
    } catch (const NotSolvableError& e) {
      const std::string what = e.what();
      CHECK(what.find("t = 1") != std::string::npos);
      CHECK(what.find("mode 1") != std::string::npos);
    }
  }
}

TEST_CASE("stored tables are exactly symmetric on a random instance") {
  const suite::Instance inst = suite::make_instance(3, 2, 2, 2, 0, 0xAB12CD34ull);
  const RiccatiTables tb = solve_riccati(inst.model);
  REQUIRE(tb.solvable);
  for (int t = 0; t <= inst.model.N; ++t) {
    for (int l = 0; l < inst.model.L; ++l) {
      CHECK((tb.W[t][l] - tb.W[t][l].transpose()).norm() == 0.0);
      CHECK((tb.P[t][l] - tb.P[t][l].transpose()).norm() == 0.0);
      CHECK((tb.P0[t][l] - tb.P0[t][l].transpose()).norm() == 0.0);
    }
  }
  CHECK(tb.max_asymmetry < 1e-10);
  CHECK(check_proposition1(inst.model, tb) < 1e-9);
}
