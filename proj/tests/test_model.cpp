#include <doctest.h>

#include "mjls/model.hpp"

using namespace mjls;

namespace {

// Two-mode case used across the tests (same numbers as the bundled
// benchmark): unstable + stable dynamics, scalar input.
JumpLinearModel two_mode_model() {
  JumpLinearModel mdl;
  mdl.n = 2;
  mdl.m = 1;
  mdl.L = 2;
  mdl.d = 2;
  mdl.N = 7;
  mdl.A = {(Matrix(2, 2) << 2.0, 1.1, -1.7, -0.8).finished(),
           (Matrix(2, 2) << 0.8, 0.0, 0.0, 0.6).finished()};
  mdl.B = {(Matrix(2, 1) << 1.0, 1.0).finished(), (Matrix(2, 1) << 2.0, 1.0).finished()};
  mdl.Q = {Matrix::Identity(2, 2), Matrix::Identity(2, 2)};
  mdl.R = {Matrix::Identity(1, 1), 2.0 * Matrix::Identity(1, 1)};
  mdl.P_term = {Matrix::Identity(2, 2), Matrix::Identity(2, 2)};
  mdl.trans = (Matrix(2, 2) << 0.9, 0.1, 0.3, 0.7).finished();
  mdl.pi0 = (Vector(2) << 0.5, 0.5).finished();
  return mdl;
}

InitialData two_mode_init() {
  InitialData init;
  init.x0 = (Vector(2) << 2.0, 2.0).finished();
  init.u_pre = {(Vector(1) << -2.0).finished(), (Vector(1) << -1.0).finished()};
  return init;
}

}  // namespace

TEST_CASE("validate_model accepts a well-formed instance") {
  CHECK(validate_model(two_mode_model()).ok());
  CHECK(validate_initial(two_mode_model(), two_mode_init()).ok());
}

TEST_CASE("validate_model names each broken invariant") {
  SUBCASE("non-stochastic transition row") {
    JumpLinearModel mdl = two_mode_model();
    mdl.trans(0, 0) = 0.5;  // row sums to 0.6
    const ValidationReport rep = validate_model(mdl);
    REQUIRE_FALSE(rep.ok());
    bool found = false;
    for (const auto& v : rep.violations) found = found || v.find("sum to 1") != std::string::npos;
    CHECK(found);
  }
  SUBCASE("negative transition probability") {
    JumpLinearModel mdl = two_mode_model();
    mdl.trans(0, 0) = -0.1;
    mdl.trans(0, 1) = 1.1;
    CHECK_FALSE(validate_model(mdl).ok());
  }
  SUBCASE("pi0 must be a distribution") {
    JumpLinearModel mdl = two_mode_model();
    mdl.pi0 << 0.7, 0.7;
    CHECK_FALSE(validate_model(mdl).ok());
  }
  SUBCASE("R must be strictly positive definite") {
    JumpLinearModel mdl = two_mode_model();
    mdl.R[0].setZero();
    const ValidationReport rep = validate_model(mdl);
    REQUIRE_FALSE(rep.ok());
    CHECK(rep.violations[0].find("R[1]") != std::string::npos);
  }
  SUBCASE("Q may be singular but not indefinite") {
    JumpLinearModel mdl = two_mode_model();
    mdl.Q[1].setZero();
    CHECK(validate_model(mdl).ok());
    mdl.Q[1](0, 0) = -1.0;
    CHECK_FALSE(validate_model(mdl).ok());
  }
  SUBCASE("asymmetric weights are rejected") {
    JumpLinearModel mdl = two_mode_model();
    mdl.Q[0](0, 1) = 0.3;
    CHECK_FALSE(validate_model(mdl).ok());
  }
  SUBCASE("horizon must exceed the delay") {
    JumpLinearModel mdl = two_mode_model();
    mdl.N = mdl.d;
    CHECK_FALSE(validate_model(mdl).ok());
  }
  SUBCASE("dimension mismatches are caught per matrix") {
    JumpLinearModel mdl = two_mode_model();
    mdl.B[1] = Matrix::Zero(2, 2);
    const ValidationReport rep = validate_model(mdl);
    REQUIRE_FALSE(rep.ok());
    CHECK(rep.violations[0].find("B[2]") != std::string::npos);
  }
  SUBCASE("initial data shapes") {
    InitialData init = two_mode_init();
    init.u_pre.pop_back();
    CHECK_FALSE(validate_initial(two_mode_model(), init).ok());
  }
}

TEST_CASE("symmetrized averages only the weights") {
  JumpLinearModel mdl = two_mode_model();
  mdl.Q[0](0, 1) = 0.3;
  const JumpLinearModel sym = mdl.symmetrized();
  CHECK(sym.Q[0](0, 1) == doctest::Approx(0.15).epsilon(1e-15));
  CHECK(sym.Q[0](1, 0) == doctest::Approx(0.15).epsilon(1e-15));
  CHECK(sym.A[0].isApprox(mdl.A[0]));  // dynamics untouched
}

TEST_CASE("enumerate_paths: weights, order, and rank agreement") {
  const JumpLinearModel mdl = two_mode_model();

  // Two-step weights from mode 1, worked by hand from the transition rows.
  const auto from1 = enumerate_paths(mdl, 0, 2);
  REQUIRE(from1.size() == 4);
  const double w1[] = {0.81, 0.09, 0.03, 0.07};
  for (int i = 0; i < 4; ++i) {
    CHECK(from1[i].weight == doctest::Approx(w1[i]).epsilon(1e-15));
    CHECK(mode_tuple_rank(mdl.L, from1[i].modes) == i);
  }
  CHECK(from1[1].modes == std::vector<int>{0, 1});  // earliest time first

  const auto from2 = enumerate_paths(mdl, 1, 2);
  const double w2[] = {0.27, 0.03, 0.21, 0.49};
  double total = 0.0;
  for (int i = 0; i < 4; ++i) {
    CHECK(from2[i].weight == doctest::Approx(w2[i]).epsilon(1e-15));
    total += from2[i].weight;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-15));

  SUBCASE("zero steps yields the empty path") {
    const auto none = enumerate_paths(mdl, 0, 0);
    REQUIRE(none.size() == 1);
    CHECK(none[0].modes.empty());
    CHECK(none[0].weight == 1.0);
  }
  SUBCASE("bad arguments throw") {
    CHECK_THROWS_AS(enumerate_paths(mdl, 2, 1), std::invalid_argument);
    CHECK_THROWS_AS(enumerate_paths(mdl, -1, 1), std::invalid_argument);
    CHECK_THROWS_AS(enumerate_paths(mdl, 0, -1), std::invalid_argument);
  }
}

TEST_CASE("f_product multiplies latest mode leftmost") {
  const JumpLinearModel mdl = two_mode_model();
  const std::vector<int> modes = {0, 1};  // A at mode 1 first, then mode 2
  const Matrix prod = f_product(mdl, modes);
  const Matrix expect = (Matrix(2, 2) << 1.6, 0.88, -1.02, -0.48).finished();  // A_2 * A_1
  CHECK((prod - expect).cwiseAbs().maxCoeff() == doctest::Approx(0.0).epsilon(1e-14));

  CHECK(f_product(mdl, std::vector<int>{}).isApprox(Matrix::Identity(2, 2)));
}

TEST_CASE("mode_tuple_rank is base-L with the earliest mode most significant") {
  const std::vector<int> t1 = {1, 0, 2};
  CHECK(mode_tuple_rank(3, t1) == 11);
  const std::vector<int> t2 = {1, 1};
  CHECK(mode_tuple_rank(2, t2) == 3);
  CHECK(mode_tuple_rank(5, std::vector<int>{}) == 0);
}
