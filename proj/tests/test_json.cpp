#include <doctest.h>

#include <json.hpp>

#include <string>
#include <vector>

#include "mjls/controller.hpp"
#include "mjls/json_io.hpp"
#include "mjls/reference_case.hpp"
#include "mjls/riccati.hpp"
#include "mjls/simulate.hpp"

using namespace mjls;
using nlohmann::json;

namespace {

json benchmark_json() { return json::parse(benchmark_problem_json()); }

bool same_matrix_bits(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      if (a(i, j) != b(i, j)) return false;
  return true;
}

}  // namespace

TEST_CASE("problem files round-trip bit-exactly") {
  const ProblemInstance first = problem_from_json(benchmark_json());
  const json dumped = problem_to_json(first.model, first.init);
  const ProblemInstance second = problem_from_json(dumped);

  CHECK(second.model.n == first.model.n);
  CHECK(second.model.d == first.model.d);
  CHECK(second.model.N == first.model.N);
  for (int l = 0; l < first.model.L; ++l) {
    CHECK(same_matrix_bits(second.model.A[l], first.model.A[l]));
    CHECK(same_matrix_bits(second.model.B[l], first.model.B[l]));
    CHECK(same_matrix_bits(second.model.Q[l], first.model.Q[l]));
    CHECK(same_matrix_bits(second.model.R[l], first.model.R[l]));
    CHECK(same_matrix_bits(second.model.P_term[l], first.model.P_term[l]));
  }
  CHECK(same_matrix_bits(second.model.trans, first.model.trans));
  CHECK(same_matrix_bits(second.model.pi0, first.model.pi0));
  CHECK(same_matrix_bits(second.init.x0, first.init.x0));
  for (int i = 0; i < first.model.d; ++i)
    CHECK(same_matrix_bits(second.init.u_pre[i], first.init.u_pre[i]));
  CHECK(problem_to_json(second.model, second.init).dump() == dumped.dump());
}

TEST_CASE("u_pre is oldest first: u_pre[i] = u(i-d)") {
  const ProblemInstance prob = problem_from_json(benchmark_json());
  REQUIRE(prob.init.u_pre.size() == 2);
  CHECK(prob.init.u_pre[0](0) == -2.0);  // u(-2)
  CHECK(prob.init.u_pre[1](0) == -1.0);  // u(-1)
}

TEST_CASE("strict parsing rejects malformed problem files by name") {
  SUBCASE("unknown field") {
    json j = benchmark_json();
    j["Qx"] = 1;
    CHECK_THROWS_WITH_AS(problem_from_json(j), doctest::Contains("Qx"), std::runtime_error);
  }
  SUBCASE("unsupported schema version") {
    json j = benchmark_json();
    j["schema_version"] = 2;
    CHECK_THROWS_AS(problem_from_json(j), std::runtime_error);
  }
  SUBCASE("missing field") {
    json j = benchmark_json();
    j.erase("trans");
    CHECK_THROWS_WITH_AS(problem_from_json(j), doctest::Contains("trans"), std::runtime_error);
  }
  SUBCASE("wrong matrix shape") {
    json j = benchmark_json();
    j["A"][0] = json::array({json::array({1.0, 2.0})});  // 1x2 instead of 2x2
    CHECK_THROWS_WITH_AS(problem_from_json(j), doctest::Contains("A"), std::runtime_error);
  }
  SUBCASE("wrong u_pre count") {
    json j = benchmark_json();
    j["u_pre"] = json::array({json::array({1.0})});  // one entry, d = 2
    CHECK_THROWS_WITH_AS(problem_from_json(j), doctest::Contains("u_pre"), std::runtime_error);
  }
  SUBCASE("non-positive dimensions") {
    json j = benchmark_json();
    j["n"] = 0;
    CHECK_THROWS_AS(problem_from_json(j), std::runtime_error);
  }
}

TEST_CASE("solution tables round-trip bit-exactly, placeholders included") {
  const ProblemInstance prob = problem_from_json(benchmark_json());
  const RiccatiTables tb = solve_riccati(prob.model);
  const json dumped = tables_to_json(tb);
  const RiccatiTables back = tables_from_json(dumped);

  CHECK(back.solvable == tb.solvable);
  CHECK(back.N == tb.N);
  CHECK(back.d == tb.d);
  for (int t = 0; t <= tb.N; ++t) {
    for (int l = 0; l < tb.L; ++l) {
      CHECK(same_matrix_bits(back.W[t][l], tb.W[t][l]));
      CHECK(same_matrix_bits(back.P[t][l], tb.P[t][l]));
      CHECK(same_matrix_bits(back.P0[t][l], tb.P0[t][l]));
      for (std::size_t j = 0; j < tb.T.size(); ++j)
        CHECK(same_matrix_bits(back.T[j][t][l], tb.T[j][t][l]));
      CHECK(same_matrix_bits(back.delta[0][t][l], tb.delta[0][t][l]));
      CHECK(same_matrix_bits(back.alpha[0][t][l], tb.alpha[0][t][l]));
    }
  }
  // Identical serialization again, and a usable factor cache after parse.
  CHECK(tables_to_json(back).dump() == dumped.dump());
  const Matrix rhs = Matrix::Ones(1, 1);
  CHECK(same_matrix_bits(back.w_solve(3, 1, rhs), tb.w_solve(3, 1, rhs)));
}

TEST_CASE("halted tables carry the failure location") {
  JumpLinearModel mdl = problem_from_json(benchmark_json()).model;
  mdl.R = {Matrix::Zero(1, 1), Matrix::Zero(1, 1)};
  mdl.Q = {Matrix::Zero(2, 2), Matrix::Zero(2, 2)};
  mdl.P_term = mdl.Q;
  const RiccatiTables tb = solve_riccati(mdl);
  REQUIRE_FALSE(tb.solvable);
  const json dumped = tables_to_json(tb);
  CHECK(dumped.contains("fail_t"));
  CHECK(dumped["fail_mode"].get<int>() == tb.fail_mode + 1);  // 1-based on disk
  const RiccatiTables back = tables_from_json(dumped);
  CHECK_FALSE(back.solvable);
  CHECK(back.fail_t == tb.fail_t);
  CHECK(back.fail_mode == tb.fail_mode);
}

TEST_CASE("trajectories serialize with 1-based modes") {
  const ProblemInstance prob = problem_from_json(benchmark_json());
  const GainSchedule sched = gains(solve_riccati(prob.model));
  const std::vector<int> chain = sample_chain(prob.model, 3);
  const Trajectory traj = rollout(prob.model, sched, prob.init, chain);
  const json j = trajectory_to_json(traj, 12);
  CHECK(j["run"].get<long long>() == 12);
  REQUIRE(j["modes"].size() == chain.size());
  for (std::size_t k = 0; k < chain.size(); ++k)
    CHECK(j["modes"][k].get<int>() == chain[k] + 1);
  CHECK(j["cost"].get<double>() == traj.cost);
  CHECK(j["decisions"].size() == traj.decisions.size());
}

TEST_CASE("gain, program, and policy serializers expose the right shapes") {
  const ProblemInstance prob = problem_from_json(benchmark_json());
  const RiccatiTables tb = solve_riccati(prob.model);
  const GainSchedule sched = gains(tb);

  const json jg = gains_to_json(sched);
  CHECK(jg["K_x"].size() == sched.K_x.size());

  const QuadraticCost qp = build_qp(prob.model, prob.init, 1000);
  const json jq = qp_to_json(qp);
  CHECK(jq["H"].size() == static_cast<std::size_t>(qp.total_vars()));
  CHECK(jq["c"].get<double>() == qp.c);

  const QpSolution sol = solve_qp(qp);
  const json jp = policy_to_json(sol.policy);
  CHECK(jp["decisions"].size() == sol.policy.decisions.size());
}

TEST_CASE("file loader reports the path on malformed input") {
  CHECK_THROWS_WITH_AS(load_problem_file("/nonexistent/model.json"),
                       doctest::Contains("/nonexistent/model.json"), std::runtime_error);
}
