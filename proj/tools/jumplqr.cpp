// jumplqr: finite-horizon optimal control of jump linear systems with
// input delay.  Subcommands: solve, gains, simulate, cost, oracle,
// verify, reproduce.  JSON on stdout, diagnostics on stderr.
// Exit codes: 0 ok, 1 input error, 2 not solvable, 3 path budget
// exceeded, 4 verification failure.

#include "mjls/json_io.hpp"
#include "mjls/reference_case.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>

namespace {

using nlohmann::json;

struct Options {
  std::string model_path;
  std::uint64_t seed = 0;
  long long runs = 1000;
  long long budget = 1000000;
  std::string format = "json";
  double tol = -1.0;  // < 0: per-check defaults
  bool dump = false;
};

void add_model_arg(CLI::App* sub, Options& opt) {
  sub->add_option("model-file", opt.model_path, "problem file (same as --model)");
  sub->add_option("--model", opt.model_path, "problem file");
}

void add_common(CLI::App* sub, Options& opt) {
  sub->add_option("--seed", opt.seed, "Monte Carlo master seed (default 0)");
  sub->add_option("--runs", opt.runs, "Monte Carlo runs (default 1000)");
  sub->add_option("--budget", opt.budget, "full-chain-path budget (default 1000000)");
  sub->add_option("--format", opt.format, "json or csv (default json)")
      ->check(CLI::IsMember({"json", "csv"}));
  sub->add_option("--tol", opt.tol, "override every verification tolerance");
}

// Loads, validates and symmetrizes; throws std::runtime_error naming the
// problem on any failure (exit code 1).
mjls::ProblemInstance load_checked(const Options& opt) {
  if (opt.model_path.empty()) throw std::runtime_error("no model file given");
  mjls::ProblemInstance pi = mjls::load_problem_file(opt.model_path);
  mjls::ValidationReport rep = mjls::validate_model(pi.model);
  const mjls::ValidationReport rep2 = mjls::validate_initial(pi.model, pi.init);
  rep.violations.insert(rep.violations.end(), rep2.violations.begin(), rep2.violations.end());
  if (!rep.ok()) {
    for (const std::string& v : rep.violations) std::cerr << "invalid model: " << v << "\n";
    throw std::runtime_error("\"" + opt.model_path + "\" failed validation");
  }
  pi.model = pi.model.symmetrized();
  return pi;
}

void emit(const json& j, const Options& opt) {
  if (opt.format == "json") {
    std::cout << j.dump(2) << "\n";
    return;
  }
  // CSV: flat metric,value rows for objects of scalars; callers with
  // richer payloads provide their own CSV writer instead.
  std::cout << "metric,value\n";
  for (const auto& item : j.items())
    if (item.value().is_number() || item.value().is_boolean() || item.value().is_string())
      std::cout << item.key() << "," << item.value().dump() << "\n";
}

int cmd_solve(const Options& opt) {
  const mjls::ProblemInstance pi = load_checked(opt);
  const mjls::RiccatiTables tables = mjls::solve_riccati(pi.model);
  std::cout << mjls::tables_to_json(tables).dump(2) << "\n";
  if (!tables.solvable) {
    std::cerr << "not solvable: W fails positive definiteness at t = " << tables.fail_t
              << ", mode " << tables.fail_mode + 1 << "\n";
    return 2;
  }
  return 0;
}

int cmd_gains(const Options& opt) {
  const mjls::ProblemInstance pi = load_checked(opt);
  const mjls::GainSchedule schedule = mjls::gains(mjls::solve_riccati(pi.model));
  std::cout << mjls::gains_to_json(schedule).dump(2) << "\n";
  return 0;
}

int cmd_simulate(const Options& opt) {
  const mjls::ProblemInstance pi = load_checked(opt);
  if (opt.runs < 1) throw std::runtime_error("--runs must be >= 1");
  const mjls::GainSchedule schedule = mjls::gains(mjls::solve_riccati(pi.model));

  if (opt.dump) {
    // One realized trajectory per line, re-drawable in isolation.
    for (long long run = 0; run < opt.runs; ++run) {
      const std::vector<int> modes = mjls::sample_chain(pi.model, mjls::derive_run_seed(opt.seed, run));
      const mjls::Trajectory traj = mjls::rollout(pi.model, schedule, pi.init, modes);
      if (opt.format == "csv")
        std::printf("%lld,%.17g\n", run, traj.cost);
      else
        std::cout << mjls::trajectory_to_json(traj, run).dump() << "\n";
    }
    return 0;
  }

  const mjls::McSummary summary =
      mjls::monte_carlo_cost(pi.model, schedule, pi.init, opt.runs, opt.seed);
  json j;
  j["schema_version"] = 1;
  j["runs"] = summary.runs;
  j["seed"] = summary.seed;
  j["mean"] = summary.mean;
  j["std_error"] = summary.std_error;
  emit(j, opt);
  return 0;
}

int cmd_cost(const Options& opt) {
  const mjls::ProblemInstance pi = load_checked(opt);
  const mjls::RiccatiTables tables = mjls::solve_riccati(pi.model);
  const mjls::GainSchedule schedule = mjls::gains(tables);
  const double j_tables = mjls::optimal_cost(pi.model, tables, pi.init);
  const double j_loop = mjls::exact_expected_cost(pi.model, schedule, pi.init, opt.budget);
  json j;
  j["schema_version"] = 1;
  j["optimal_cost"] = j_tables;
  j["closed_loop_expected_cost"] = j_loop;
  j["difference"] = j_tables - j_loop;
  emit(j, opt);
  return 0;
}

int cmd_oracle(const Options& opt) {
  const mjls::ProblemInstance pi = load_checked(opt);
  const mjls::QuadraticCost qp = mjls::build_qp(pi.model, pi.init, opt.budget);
  const mjls::QpSolution sol = mjls::solve_qp(qp);
  json j;
  j["schema_version"] = 1;
  j["vars"] = qp.total_vars();
  j["minimum"] = sol.minimum;
  j["residual"] = sol.residual;
  if (opt.dump) {
    j["qp"] = mjls::qp_to_json(qp);
    j["policy"] = mjls::policy_to_json(sol.policy);
    std::cout << j.dump(2) << "\n";
    return 0;
  }
  emit(j, opt);
  return 0;
}

// Largest relative disagreement between the solution-table costate and
// the policy-tree backward recursion, across every valid (t, prefix).
double worst_costate_residual(const mjls::JumpLinearModel& model,
                              const mjls::RiccatiTables& tables, const mjls::PolicyTree& tree,
                              const mjls::InitialData& init) {
  const mjls::CostateTree ct = mjls::costate_tree(model, tree, init);
  double worst = 0.0;
  std::vector<int> prefix;
  for (int t = model.d - 1; t <= model.N; ++t) {
    long long count = 1;
    for (int i = 0; i <= t; ++i) count *= model.L;
    for (long long r = 0; r < count; ++r) {
      prefix.assign(t + 1, 0);
      long long v = r;
      for (int i = t; i >= 0; --i) {
        prefix[i] = static_cast<int>(v % model.L);
        v /= model.L;
      }
      const mjls::Vector lhs = mjls::costate(model, tables, t, prefix, init);
      const mjls::Vector rhs = ct.lambda[t][r];
      worst = std::max(worst, (lhs - rhs).norm() / std::max(1.0, rhs.norm()));
    }
  }
  return worst;
}

int cmd_verify(const Options& opt) {
  const mjls::ProblemInstance pi = load_checked(opt);
  json checks = json::array();
  bool all_pass = true;
  auto add_check = [&](const std::string& name, double value, double def_tol) {
    const double tol = opt.tol >= 0 ? opt.tol : def_tol;
    const bool pass = value <= tol;
    all_pass = all_pass && pass;
    checks.push_back({{"name", name}, {"value", value}, {"tolerance", tol}, {"pass", pass}});
    return pass;
  };

  const mjls::RiccatiTables tables = mjls::solve_riccati(pi.model);
  add_check("solvable", tables.solvable ? 0.0 : 1.0, 0.0);
  if (!tables.solvable) {
    std::cerr << "not solvable: W fails positive definiteness at t = " << tables.fail_t
              << ", mode " << tables.fail_mode + 1 << "\n";
    json out{{"schema_version", 1}, {"checks", checks}, {"pass", false}};
    std::cout << out.dump(2) << "\n";
    return 2;
  }

  add_check("consistency_identities", mjls::check_proposition1(pi.model, tables), 1e-9);

  const mjls::GainSchedule schedule = mjls::gains(tables);
  const mjls::QuadraticCost qp = mjls::build_qp(pi.model, pi.init, opt.budget);
  const mjls::QpSolution sol = mjls::solve_qp(qp);
  add_check("qp_solve_residual", sol.residual, 1e-10 * (1.0 + qp.b.norm()));

  const mjls::PolicyTree loop = mjls::closed_loop_policy_tree(pi.model, schedule, pi.init);
  double dec_diff = 0.0;
  for (size_t tau = 0; tau < loop.decisions.size(); ++tau)
    for (long long r = 0; r < qp.prefix_prob[tau].size(); ++r)
      if (qp.prefix_prob[tau](r) > 0.0)
        dec_diff = std::max(
            dec_diff,
            (loop.decisions[tau].col(r) - sol.policy.decisions[tau].col(r)).norm());
  add_check("closed_loop_vs_qp_decisions", dec_diff, 1e-8);

  const double j_tables = mjls::optimal_cost(pi.model, tables, pi.init);
  add_check("optimal_cost_vs_qp",
            std::abs(j_tables - sol.minimum) / std::max(1.0, std::abs(sol.minimum)), 1e-8);
  const double j_loop = mjls::exact_expected_cost(pi.model, schedule, pi.init, opt.budget);
  add_check("closed_loop_cost_vs_qp",
            std::abs(j_loop - sol.minimum) / std::max(1.0, std::abs(sol.minimum)), 1e-8);

  add_check("stationarity_residual", mjls::stationarity_residual(pi.model, loop, pi.init), 1e-9);
  add_check("costate_identity", worst_costate_residual(pi.model, tables, loop, pi.init), 1e-9);

  json out{{"schema_version", 1}, {"checks", checks}, {"pass", all_pass}};
  if (opt.format == "csv") {
    std::cout << "name,value,tolerance,pass\n";
    for (const auto& c : checks)
      std::cout << c.at("name").get<std::string>() << "," << c.at("value").dump() << ","
                << c.at("tolerance").dump() << "," << (c.at("pass").get<bool>() ? 1 : 0) << "\n";
  } else {
    std::cout << out.dump(2) << "\n";
  }
  return all_pass ? 0 : 4;
}

int cmd_reproduce(const Options& opt) {
  const mjls::ProblemInstance pi = mjls::benchmark_problem();
  const mjls::JumpLinearModel model = pi.model.symmetrized();
  const mjls::RiccatiTables tables = mjls::solve_riccati(model);
  const mjls::GainSchedule schedule = mjls::gains(tables);
  const double match_tol = 1e-3;

  json rows = json::array();
  std::cerr << "published table rows vs solution tables at t = row + 1\n";
  for (int row = 0; row < mjls::kBenchmarkRowCount; ++row) {
    const mjls::BenchmarkRow& ref = mjls::kBenchmarkTable[row];
    json entry;
    entry["row"] = row;
    entry["published"] = {{"W", {ref.W[0], ref.W[1]}},
                          {"T0", {{ref.T0[0][0], ref.T0[0][1]}, {ref.T0[1][0], ref.T0[1][1]}}},
                          {"T1", {ref.T1[0], ref.T1[1]}}};
    const int t = row + 1;
    if (t > model.N - model.d) {
      // The last published row matches no decision time of the stated
      // recursions (it holds a one-step average of the applied input
      // weight); there is nothing to compare against.
      entry["computed"] = nullptr;
      entry["status"] = "AMBIGUOUS";
      entry["note"] =
          "no decision is made at t = row + 1 = " + std::to_string(t) +
          "; the published values match no time slot of the recursions as stated";
      std::cerr << "  row " << row << ": AMBIGUOUS (no matching decision time)\n";
      rows.push_back(std::move(entry));
      continue;
    }
    double worst = 0.0;
    json computed;
    computed["W"] = {tables.W[t][0](0, 0), tables.W[t][1](0, 0)};
    computed["T0"] = {{tables.T[0][t][0](0, 0), tables.T[0][t][0](0, 1)},
                      {tables.T[0][t][1](0, 0), tables.T[0][t][1](0, 1)}};
    computed["T1"] = {tables.T[1][t][0](0, 0), tables.T[1][t][1](0, 0)};
    for (int l = 0; l < 2; ++l) {
      worst = std::max(worst, std::abs(tables.W[t][l](0, 0) - ref.W[l]));
      worst = std::max(worst, std::abs(tables.T[0][t][l](0, 0) - ref.T0[l][0]));
      worst = std::max(worst, std::abs(tables.T[0][t][l](0, 1) - ref.T0[l][1]));
      worst = std::max(worst, std::abs(tables.T[1][t][l](0, 0) - ref.T1[l]));
    }
    entry["computed"] = std::move(computed);
    entry["max_abs_diff"] = worst;
    entry["status"] = worst <= match_tol ? "MATCH" : "MISMATCH";
    std::cerr << "  row " << row << " (t = " << t << "): " << entry["status"].get<std::string>()
              << " (max |diff| = " << worst << ")\n";
    rows.push_back(std::move(entry));
  }

  json gain_rows = json::array();
  std::cerr << "published feedback rows vs gains at t = row + 1, realized mode\n";
  for (int row = 0; row < mjls::kBenchmarkGainRowCount; ++row) {
    const mjls::BenchmarkGainRow& ref = mjls::kBenchmarkGains[row];
    const int t = row + 1;
    const mjls::Matrix& kx = schedule.K_x[t][ref.mode];
    const mjls::Matrix& ku = schedule.K_u[0][t][ref.mode];
    double worst = std::max({std::abs(kx(0, 0) - ref.Kx[0]), std::abs(kx(0, 1) - ref.Kx[1]),
                             std::abs(ku(0, 0) - ref.Ku)});
    json entry;
    entry["row"] = row;
    entry["mode"] = ref.mode + 1;
    entry["published"] = {{"Kx", {ref.Kx[0], ref.Kx[1]}}, {"Ku", ref.Ku}};
    entry["computed"] = {{"Kx", {kx(0, 0), kx(0, 1)}}, {"Ku", ku(0, 0)}};
    entry["max_abs_diff"] = worst;
    entry["status"] = worst <= match_tol ? "MATCH" : "MISMATCH";
    std::cerr << "  feedback row " << row << " (t = " << t << ", mode " << ref.mode + 1
              << "): " << entry["status"].get<std::string>() << " (max |diff| = " << worst
              << ")\n";
    gain_rows.push_back(std::move(entry));
  }

  // Total-cost diagnostics.  The published figure is flagged, never
  // gated: it was printed alongside a single selected realization, so
  // its provenance (exact expectation vs one realization) is ambiguous.
  const double j_tables = mjls::optimal_cost(model, tables, pi.init);
  const mjls::QpSolution sol = mjls::solve_qp(mjls::build_qp(model, pi.init, opt.budget));
  const double j_loop = mjls::exact_expected_cost(model, schedule, pi.init, opt.budget);

  // Horizon-convention probe: the same case one step shorter.
  mjls::JumpLinearModel shorter = model;
  shorter.N = model.N - 1;
  const mjls::RiccatiTables tables_short = mjls::solve_riccati(shorter);
  const double j_short = mjls::optimal_cost(shorter, tables_short, pi.init);

  // Single-realization probe: the closed-loop cost closest to the
  // published figure over every full chain realization.
  double best_cost = 0.0;
  double best_gap = std::numeric_limits<double>::infinity();
  std::vector<int> best_modes;
  for (int l0 = 0; l0 < model.L; ++l0) {
    if (model.pi0(l0) == 0.0) continue;
    for (const mjls::ModePath& p : mjls::enumerate_paths(model, l0, model.N + 1)) {
      std::vector<int> modes(model.N + 2);
      modes[0] = l0;
      std::copy(p.modes.begin(), p.modes.end(), modes.begin() + 1);
      const double cost = mjls::rollout(model, schedule, pi.init, modes).cost;
      const double gap = std::abs(cost - mjls::kBenchmarkPublishedCost);
      if (gap < best_gap) {
        best_gap = gap;
        best_cost = cost;
        best_modes = modes;
      }
    }
  }

  json cost_diag;
  cost_diag["published"] = mjls::kBenchmarkPublishedCost;
  cost_diag["optimal_cost"] = j_tables;
  cost_diag["qp_minimum"] = sol.minimum;
  cost_diag["closed_loop_expected_cost"] = j_loop;
  cost_diag["optimal_cost_vs_qp_minimum"] = std::abs(j_tables - sol.minimum);
  cost_diag["optimal_cost_vs_published"] = std::abs(j_tables - mjls::kBenchmarkPublishedCost);
  cost_diag["one_step_shorter_horizon_optimal_cost"] = j_short;
  json modes1 = json::array();
  for (int l : best_modes) modes1.push_back(l + 1);
  cost_diag["closest_single_realization"] = {{"cost", best_cost}, {"modes", modes1}};
  cost_diag["status"] = "AMBIGUOUS";
  cost_diag["note"] =
      "the published total was printed alongside the first of 50 sampled "
      "trajectories; the exact expectation, the QP minimum and the "
      "closed-loop expectation above agree with each other, and the gap "
      "to the published figure is reported, not gated";

  std::cerr << "  optimal cost " << j_tables << ", QP minimum " << sol.minimum
            << ", published " << mjls::kBenchmarkPublishedCost << " (AMBIGUOUS, see note)\n";

  json out;
  out["schema_version"] = 1;
  out["alignment_note"] =
      "published rows are labeled by their own index k; computed values are "
      "the absolute-time tables at decision time t = k + 1.  The published "
      "row 5 and the published total cost are flagged AMBIGUOUS: neither "
      "matches any slot of the recursions as stated, and both are reported "
      "side by side instead of gated.";
  out["realized_modes"] = json::array();
  for (int row = 0; row < mjls::kBenchmarkGainRowCount; ++row)
    out["realized_modes"].push_back(mjls::kBenchmarkGains[row].mode + 1);
  out["table_rows"] = std::move(rows);
  out["feedback_rows"] = std::move(gain_rows);
  out["total_cost"] = std::move(cost_diag);

  if (opt.format == "csv") {
    std::cout << "entry,computed,published,status\n";
    for (const auto& r : out["table_rows"]) {
      const std::string base = "table_row_" + std::to_string(r.at("row").get<int>());
      std::cout << base << "," << (r.at("computed").is_null() ? "" : r.at("computed").dump())
                << "," << r.at("published").dump() << "," << r.at("status").get<std::string>()
                << "\n";
    }
    for (const auto& r : out["feedback_rows"])
      std::cout << "feedback_row_" + std::to_string(r.at("row").get<int>()) << ","
                << r.at("computed").dump() << "," << r.at("published").dump() << ","
                << r.at("status").get<std::string>() << "\n";
    std::cout << "total_cost," << json(j_tables).dump() << ","
              << json(mjls::kBenchmarkPublishedCost).dump() << ",AMBIGUOUS\n";
  } else {
    std::cout << out.dump(2) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finite-horizon optimal control of jump linear systems with input delay"};
  app.require_subcommand(1);

  Options opt;
  CLI::App* solve = app.add_subcommand("solve", "solve the recursions, dump the tables");
  add_model_arg(solve, opt);
  add_common(solve, opt);
  solve->add_flag("--dump", opt.dump, "accepted for symmetry; tables are always dumped");

  CLI::App* gains_cmd = app.add_subcommand("gains", "dump the feedback gain schedule");
  add_model_arg(gains_cmd, opt);
  add_common(gains_cmd, opt);

  CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo closed-loop cost");
  add_model_arg(simulate, opt);
  add_common(simulate, opt);
  simulate->add_flag("--dump", opt.dump, "one realized trajectory per output line");

  CLI::App* cost = app.add_subcommand("cost", "optimal cost and exact closed-loop cost");
  add_model_arg(cost, opt);
  add_common(cost, opt);

  CLI::App* oracle = app.add_subcommand("oracle", "exact quadratic-program cross-check");
  add_model_arg(oracle, opt);
  add_common(oracle, opt);
  oracle->add_flag("--dump", opt.dump, "dump H, b, c and the argmin policy");

  CLI::App* verify = app.add_subcommand("verify", "run every verification check");
  add_model_arg(verify, opt);
  add_common(verify, opt);

  CLI::App* reproduce =
      app.add_subcommand("reproduce", "compare against the published benchmark values");
  add_common(reproduce, opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 1;
  }

  try {
    if (solve->parsed()) return cmd_solve(opt);
    if (gains_cmd->parsed()) return cmd_gains(opt);
    if (simulate->parsed()) return cmd_simulate(opt);
    if (cost->parsed()) return cmd_cost(opt);
    if (oracle->parsed()) return cmd_oracle(opt);
    if (verify->parsed()) return cmd_verify(opt);
    if (reproduce->parsed()) return cmd_reproduce(opt);
  } catch (const mjls::PathBudgetError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const mjls::NotSolvableError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const mjls::HessianNotPdError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
