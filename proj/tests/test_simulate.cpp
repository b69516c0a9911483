#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "mjls/controller.hpp"
#include "mjls/reference_case.hpp"
#include "mjls/riccati.hpp"
#include "mjls/simulate.hpp"

using namespace mjls;

namespace {

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

InitialData scalar_init() {
  InitialData init;
  init.x0 = Vector::Ones(1);
  init.u_pre = {Vector::Zero(1)};
  return init;
}

}  // namespace

TEST_CASE("derive_run_seed is deterministic and collision-free across runs") {
  CHECK(derive_run_seed(17, 3) == derive_run_seed(17, 3));
  std::set<std::uint64_t> seen;
  for (std::uint64_t run = 0; run < 64; ++run) seen.insert(derive_run_seed(1234, run));
  CHECK(seen.size() == 64);
  CHECK(derive_run_seed(1, 0) != derive_run_seed(2, 0));
}

TEST_CASE("sample_index follows the inverse CDF") {
  std::mt19937_64 engine(99);
  const Vector probs = (Vector(2) << 0.3, 0.7).finished();
  int low = 0;
  const int draws = 20000;
  for (int i = 0; i < draws; ++i) {
    const int idx = sample_index(engine, probs);
    REQUIRE(idx >= 0);
    REQUIRE(idx < 2);
    low += (idx == 0);
  }
  CHECK(static_cast<double>(low) / draws == doctest::Approx(0.3).epsilon(0.02));
}

TEST_CASE("sample_chain shape, determinism, and initial distribution") {
  const JumpLinearModel mdl = benchmark_problem().model;
  const std::vector<int> chain = sample_chain(mdl, 7);
  REQUIRE(chain.size() == static_cast<std::size_t>(mdl.N + 2));
  for (int l : chain) {
    CHECK(l >= 0);
    CHECK(l < mdl.L);
  }
  CHECK(chain == sample_chain(mdl, 7));

  int first_mode_zero = 0;
  const int chains = 4000;
  for (int i = 0; i < chains; ++i)
    first_mode_zero += (sample_chain(mdl, derive_run_seed(5, i))[0] == 0);
  CHECK(static_cast<double>(first_mode_zero) / chains ==
        doctest::Approx(mdl.pi0(0)).epsilon(0.03));
}

TEST_CASE("rollout on the scalar problem: states, decisions, cost by hand") {
  const JumpLinearModel mdl = scalar_model();
  const GainSchedule sched = gains(solve_riccati(mdl));
  const std::vector<int> modes(mdl.N + 2, 0);
  const Trajectory traj = rollout(mdl, sched, scalar_init(), modes);

  REQUIRE(traj.states.size() == 4);   // x(0..3)
  REQUIRE(traj.decisions.size() == 3);  // u(-1..1) by application step
  CHECK(traj.decisions[0](0) == 0.0);  // u(-1) copied from the initial data
  CHECK(traj.decisions[1](0) == doctest::Approx(-0.6).epsilon(1e-14));
  CHECK(traj.decisions[2](0) == doctest::Approx(-0.2).epsilon(1e-14));
  CHECK(traj.states[1](0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(traj.states[2](0) == doctest::Approx(0.4).epsilon(1e-14));
  CHECK(traj.states[3](0) == doctest::Approx(0.2).epsilon(1e-14));
  // With one mode the closed loop attains the deterministic optimum.
  CHECK(traj.cost == doctest::Approx(2.6).epsilon(1e-14));
}

TEST_CASE("rollout seeds the first d decision slots from u_pre") {
  const ProblemInstance prob = benchmark_problem();
  const GainSchedule sched = gains(solve_riccati(prob.model));
  const std::vector<int> modes(prob.model.N + 2, 0);
  const Trajectory traj = rollout(prob.model, sched, prob.init, modes);
  REQUIRE(traj.decisions.size() == static_cast<std::size_t>(prob.model.N + 1));
  CHECK(traj.decisions[0](0) == -2.0);  // u(-2)
  CHECK(traj.decisions[1](0) == -1.0);  // u(-1)
}

TEST_CASE("exact_expected_cost: hand value, budget guard, path count") {
  const JumpLinearModel mdl = scalar_model();
  const GainSchedule sched = gains(solve_riccati(mdl));
  CHECK(exact_expected_cost(mdl, sched, scalar_init(), 1000) ==
        doctest::Approx(2.6).epsilon(1e-14));

  const ProblemInstance prob = benchmark_problem();
  CHECK(full_path_count(prob.model) == 512);  // 2^(N+2)
  const GainSchedule bench_sched = gains(solve_riccati(prob.model));
  CHECK_THROWS_AS(exact_expected_cost(prob.model, bench_sched, prob.init, 511),
                  PathBudgetError);
  try {
    exact_expected_cost(prob.model, bench_sched, prob.init, 100);
    FAIL("expected PathBudgetError");
  } catch (const PathBudgetError& e) {
    CHECK(e.required == 512);
    CHECK(e.budget == 100);
  }
}

TEST_CASE("closed-loop exact cost equals the table prediction") {
  const ProblemInstance prob = benchmark_problem();
  const RiccatiTables tb = solve_riccati(prob.model);
  const GainSchedule sched = gains(tb);
  const double exact = exact_expected_cost(prob.model, sched, prob.init, 1000);
  CHECK(exact == doctest::Approx(optimal_cost(prob.model, tb, prob.init)).epsilon(1e-12));
}

TEST_CASE("monte_carlo_cost statistics and reproducibility") {
  const ProblemInstance prob = benchmark_problem();
  const GainSchedule sched = gains(solve_riccati(prob.model));

  SUBCASE("a single run has zero standard error") {
    const McSummary one = monte_carlo_cost(prob.model, sched, prob.init, 1, 11);
    CHECK(one.runs == 1);
    CHECK(one.seed == 11);
    CHECK(one.std_error == 0.0);
  }
  SUBCASE("per-run costs are exposed in run order") {
    std::vector<double> costs;
    const McSummary sum = monte_carlo_cost(prob.model, sched, prob.init, 64, 11, 1, &costs);
    REQUIRE(costs.size() == 64);
    double acc = 0.0;
    for (double c : costs) acc += c;
    CHECK(sum.mean == doctest::Approx(acc / 64).epsilon(1e-13));
    // Any run can be reproduced in isolation from its derived seed.
    const std::vector<int> chain = sample_chain(prob.model, derive_run_seed(11, 17));
    CHECK(rollout(prob.model, sched, prob.init, chain).cost == costs[17]);
  }
  SUBCASE("estimate is bitwise independent of the thread count") {
    const McSummary st = monte_carlo_cost(prob.model, sched, prob.init, 500, 42, 1);
    const McSummary mt = monte_carlo_cost(prob.model, sched, prob.init, 500, 42, 4);
    CHECK(st.mean == mt.mean);
    CHECK(st.std_error == mt.std_error);
  }
  SUBCASE("estimate is consistent with the exact expectation") {
    const double exact = exact_expected_cost(prob.model, sched, prob.init, 1000);
    const McSummary mc = monte_carlo_cost(prob.model, sched, prob.init, 2000, 7, 2);
    CHECK(std::abs(mc.mean - exact) < 4.0 * mc.std_error);
  }
}
