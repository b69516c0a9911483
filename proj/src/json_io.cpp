#include "mjls/json_io.hpp"

#include <fstream>
#include <set>

namespace mjls {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) fail(where + " must be a JSON object");
  for (const auto& item : j.items())
    if (!allowed.count(item.key())) fail(where + ": unknown field \"" + item.key() + "\"");
}

void check_schema_version(const json& j, const std::string& where) {
  if (!j.contains("schema_version")) return;
  const json& v = j.at("schema_version");
  if (!v.is_number_integer() || v.get<long long>() != 1)
    fail(where + ": unsupported schema_version (expected 1)");
}

int get_int(const json& j, const std::string& field) {
  if (!j.contains(field)) fail("missing field \"" + field + "\"");
  const json& v = j.at(field);
  if (!v.is_number_integer()) fail("field \"" + field + "\" must be an integer");
  return v.get<int>();
}

double get_double(const json& j, const std::string& field) {
  if (!j.contains(field)) fail("missing field \"" + field + "\"");
  const json& v = j.at(field);
  if (!v.is_number()) fail("field \"" + field + "\" must be a number");
  return v.get<double>();
}

std::vector<Matrix> mode_matrices_from_json(const json& j, int L, Eigen::Index rows,
                                            Eigen::Index cols, const std::string& field) {
  if (!j.contains(field)) fail("missing field \"" + field + "\"");
  const json& arr = j.at(field);
  if (!arr.is_array() || static_cast<int>(arr.size()) != L)
    fail("field \"" + field + "\" must be an array of " + std::to_string(L) + " matrices");
  std::vector<Matrix> out(L);
  for (int l = 0; l < L; ++l)
    out[l] = matrix_from_json(arr[l], rows, cols, field + "[" + std::to_string(l) + "]");
  return out;
}

json mode_matrices_to_json(const std::vector<Matrix>& ms) {
  json arr = json::array();
  for (const Matrix& M : ms) arr.push_back(matrix_to_json(M));
  return arr;
}

// [t][l] table <-> nested arrays.
json table2_to_json(const std::vector<std::vector<Matrix>>& tab) {
  json arr = json::array();
  for (const auto& row : tab) arr.push_back(mode_matrices_to_json(row));
  return arr;
}

std::vector<std::vector<Matrix>> table2_from_json(const json& j, int times, int L,
                                                  Eigen::Index rows, Eigen::Index cols,
                                                  const std::string& field) {
  if (!j.is_array() || static_cast<int>(j.size()) != times)
    fail("field \"" + field + "\" must be an array of " + std::to_string(times) + " time slots");
  std::vector<std::vector<Matrix>> out(times);
  for (int t = 0; t < times; ++t) {
    const json& row = j[t];
    if (!row.is_array() || static_cast<int>(row.size()) != L)
      fail("field \"" + field + "\" slot " + std::to_string(t) + " must hold " +
           std::to_string(L) + " matrices");
    out[t].resize(L);
    for (int l = 0; l < L; ++l)
      out[t][l] = matrix_from_json(
          row[l], rows, cols,
          field + "[" + std::to_string(t) + "][" + std::to_string(l) + "]");
  }
  return out;
}

// Decode a tuple rank back into 1-based digits, earliest first.
std::vector<int> rank_digits_1based(int L, int len, long long rank) {
  std::vector<int> digits(len);
  for (int i = len - 1; i >= 0; --i) {
    digits[i] = static_cast<int>(rank % L) + 1;
    rank /= L;
  }
  return digits;
}

}  // namespace

json matrix_to_json(const Matrix& M) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const Vector& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Matrix matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols,
                        const std::string& field) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows)
    fail("field \"" + field + "\" must be a " + std::to_string(rows) + " x " +
         std::to_string(cols) + " matrix (nested rows)");
  Matrix M(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j[r];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      fail("field \"" + field + "\" row " + std::to_string(r) + " must have " +
           std::to_string(cols) + " entries");
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (!row[c].is_number()) fail("field \"" + field + "\" has a non-numeric entry");
      M(r, c) = row[c].get<double>();
    }
  }
  return M;
}

Vector vector_from_json(const json& j, Eigen::Index size, const std::string& field) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != size)
    fail("field \"" + field + "\" must be an array of " + std::to_string(size) + " numbers");
  Vector v(size);
  for (Eigen::Index i = 0; i < size; ++i) {
    if (!j[i].is_number()) fail("field \"" + field + "\" has a non-numeric entry");
    v(i) = j[i].get<double>();
  }
  return v;
}

ProblemInstance problem_from_json(const json& j) {
  check_keys(j,
             {"schema_version", "n", "m", "L", "d", "N", "A", "B", "Q", "R", "P_term", "trans",
              "pi0", "x0", "u_pre"},
             "problem");
  check_schema_version(j, "problem");

  ProblemInstance out;
  JumpLinearModel& mdl = out.model;
  mdl.n = get_int(j, "n");
  mdl.m = get_int(j, "m");
  mdl.L = get_int(j, "L");
  mdl.d = get_int(j, "d");
  mdl.N = get_int(j, "N");
  if (mdl.n <= 0 || mdl.m <= 0 || mdl.L <= 0 || mdl.d <= 0 || mdl.N <= 0)
    fail("dimensions n, m, L, d, N must all be positive");

  mdl.A = mode_matrices_from_json(j, mdl.L, mdl.n, mdl.n, "A");
  mdl.B = mode_matrices_from_json(j, mdl.L, mdl.n, mdl.m, "B");
  mdl.Q = mode_matrices_from_json(j, mdl.L, mdl.n, mdl.n, "Q");
  mdl.R = mode_matrices_from_json(j, mdl.L, mdl.m, mdl.m, "R");
  mdl.P_term = mode_matrices_from_json(j, mdl.L, mdl.n, mdl.n, "P_term");
  if (!j.contains("trans")) fail("missing field \"trans\"");
  mdl.trans = matrix_from_json(j.at("trans"), mdl.L, mdl.L, "trans");
  if (!j.contains("pi0")) fail("missing field \"pi0\"");
  mdl.pi0 = vector_from_json(j.at("pi0"), mdl.L, "pi0");

  if (!j.contains("x0")) fail("missing field \"x0\"");
  out.init.x0 = vector_from_json(j.at("x0"), mdl.n, "x0");
  if (!j.contains("u_pre")) fail("missing field \"u_pre\"");
  const json& upre = j.at("u_pre");
  if (!upre.is_array() || static_cast<int>(upre.size()) != mdl.d)
    fail("field \"u_pre\" must list the d = " + std::to_string(mdl.d) +
         " in-flight inputs u(-d)..u(-1), oldest first");
  out.init.u_pre.resize(mdl.d);
  for (int i = 0; i < mdl.d; ++i)
    out.init.u_pre[i] =
        vector_from_json(upre[i], mdl.m, "u_pre[" + std::to_string(i) + "]");
  return out;
}

json problem_to_json(const JumpLinearModel& model, const InitialData& init) {
  json j;
  j["schema_version"] = 1;
  j["n"] = model.n;
  j["m"] = model.m;
  j["L"] = model.L;
  j["d"] = model.d;
  j["N"] = model.N;
  j["A"] = mode_matrices_to_json(model.A);
  j["B"] = mode_matrices_to_json(model.B);
  j["Q"] = mode_matrices_to_json(model.Q);
  j["R"] = mode_matrices_to_json(model.R);
  j["P_term"] = mode_matrices_to_json(model.P_term);
  j["trans"] = matrix_to_json(model.trans);
  j["pi0"] = vector_to_json(model.pi0);
  j["x0"] = vector_to_json(init.x0);
  json upre = json::array();
  for (const Vector& u : init.u_pre) upre.push_back(vector_to_json(u));
  j["u_pre"] = std::move(upre);
  return j;
}

ProblemInstance load_problem_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open \"" + path + "\"");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail("\"" + path + "\" is not valid JSON: " + e.what());
  }
  try {
    return problem_from_json(j);
  } catch (const std::exception& e) {
    fail("\"" + path + "\": " + e.what());
  }
}

json tables_to_json(const RiccatiTables& tb) {
  json j;
  j["schema_version"] = 1;
  j["n"] = tb.n;
  j["m"] = tb.m;
  j["L"] = tb.L;
  j["d"] = tb.d;
  j["N"] = tb.N;
  j["solvable"] = tb.solvable;
  if (!tb.solvable) {
    j["fail_t"] = tb.fail_t;
    j["fail_mode"] = tb.fail_mode + 1;
  }
  j["max_asymmetry"] = tb.max_asymmetry;
  j["W"] = table2_to_json(tb.W);
  json t_arr = json::array();
  for (const auto& tab : tb.T) t_arr.push_back(table2_to_json(tab));
  j["T"] = std::move(t_arr);
  j["P"] = table2_to_json(tb.P);
  j["P0"] = table2_to_json(tb.P0);
  json d_arr = json::array();
  for (const auto& tab : tb.delta) d_arr.push_back(table2_to_json(tab));
  j["delta"] = std::move(d_arr);

  json a_arr = json::array();
  for (int g = 1; g <= tb.d - 1; ++g) {
    const auto& per_time = tb.alpha[g - 1];
    json times = json::array();
    for (int t = 0; t < static_cast<int>(per_time.size()); ++t) {
      json entries = json::array();
      for (long long r = 0; r < static_cast<long long>(per_time[t].size()); ++r) {
        json entry;
        entry["modes"] = rank_digits_1based(tb.L, tb.d - g, r);
        entry["value"] = matrix_to_json(per_time[t][r]);
        entries.push_back(std::move(entry));
      }
      times.push_back(std::move(entries));
    }
    a_arr.push_back(std::move(times));
  }
  j["alpha"] = std::move(a_arr);
  return j;
}

RiccatiTables tables_from_json(const json& j) {
  check_keys(j,
             {"schema_version", "n", "m", "L", "d", "N", "solvable", "fail_t", "fail_mode",
              "max_asymmetry", "W", "T", "P", "P0", "delta", "alpha"},
             "tables");
  check_schema_version(j, "tables");

  RiccatiTables tb;
  tb.n = get_int(j, "n");
  tb.m = get_int(j, "m");
  tb.L = get_int(j, "L");
  tb.d = get_int(j, "d");
  tb.N = get_int(j, "N");
  if (tb.n <= 0 || tb.m <= 0 || tb.L <= 0 || tb.d <= 0 || tb.N <= 0)
    fail("tables dimensions must all be positive");
  if (!j.contains("solvable") || !j.at("solvable").is_boolean())
    fail("field \"solvable\" must be a boolean");
  tb.solvable = j.at("solvable").get<bool>();
  if (!tb.solvable) {
    tb.fail_t = get_int(j, "fail_t");
    tb.fail_mode = get_int(j, "fail_mode") - 1;
  }
  tb.max_asymmetry = get_double(j, "max_asymmetry");

  const int slots = tb.N + 1;
  if (!j.contains("W")) fail("missing field \"W\"");
  tb.W = table2_from_json(j.at("W"), slots, tb.L, tb.m, tb.m, "W");

  if (!j.contains("T")) fail("missing field \"T\"");
  const json& t_arr = j.at("T");
  if (!t_arr.is_array() || static_cast<int>(t_arr.size()) != tb.d)
    fail("field \"T\" must hold d = " + std::to_string(tb.d) + " coupling tables");
  tb.T.resize(tb.d);
  for (int jj = 0; jj < tb.d; ++jj)
    tb.T[jj] = table2_from_json(t_arr[jj], slots, tb.L, tb.m, jj == 0 ? tb.n : tb.m,
                                "T[" + std::to_string(jj) + "]");

  if (!j.contains("P")) fail("missing field \"P\"");
  tb.P = table2_from_json(j.at("P"), slots, tb.L, tb.n, tb.n, "P");
  if (!j.contains("P0")) fail("missing field \"P0\"");
  tb.P0 = table2_from_json(j.at("P0"), slots, tb.L, tb.n, tb.n, "P0");

  if (!j.contains("delta")) fail("missing field \"delta\"");
  const json& d_arr = j.at("delta");
  if (!d_arr.is_array() || static_cast<int>(d_arr.size()) != tb.d - 1)
    fail("field \"delta\" must hold d - 1 tables");
  tb.delta.resize(tb.d - 1);
  for (int jj = 0; jj < tb.d - 1; ++jj)
    tb.delta[jj] = table2_from_json(d_arr[jj], slots, tb.L, tb.m, tb.n,
                                    "delta[" + std::to_string(jj) + "]");

  if (!j.contains("alpha")) fail("missing field \"alpha\"");
  const json& a_arr = j.at("alpha");
  if (!a_arr.is_array() || static_cast<int>(a_arr.size()) != tb.d - 1)
    fail("field \"alpha\" must hold d - 1 tables");
  tb.alpha.resize(tb.d - 1);
  for (int g = 1; g <= tb.d - 1; ++g) {
    const json& times = a_arr[g - 1];
    if (!times.is_array() || static_cast<int>(times.size()) != slots)
      fail("field \"alpha\" table " + std::to_string(g - 1) + " must have " +
           std::to_string(slots) + " time slots");
    long long tuples = 1;
    for (int i = 0; i < tb.d - g; ++i) tuples *= tb.L;
    tb.alpha[g - 1].resize(slots);
    for (int t = 0; t < slots; ++t) {
      const json& entries = times[t];
      if (!entries.is_array() || static_cast<long long>(entries.size()) != tuples)
        fail("field \"alpha\" slot " + std::to_string(t) + " must hold " +
             std::to_string(tuples) + " entries");
      tb.alpha[g - 1][t].resize(tuples);
      for (long long r = 0; r < tuples; ++r) {
        const json& entry = entries[r];
        check_keys(entry, {"modes", "value"}, "alpha entry");
        if (!entry.contains("modes") || entry.at("modes") != json(rank_digits_1based(tb.L, tb.d - g, r)))
          fail("alpha entry mode tuple disagrees with its position");
        if (!entry.contains("value")) fail("alpha entry missing \"value\"");
        tb.alpha[g - 1][t][r] =
            matrix_from_json(entry.at("value"), tb.m, tb.n, "alpha value");
      }
    }
  }

  tb.finalize();
  return tb;
}

json gains_to_json(const GainSchedule& schedule) {
  json j;
  j["schema_version"] = 1;
  j["n"] = schedule.n;
  j["m"] = schedule.m;
  j["L"] = schedule.L;
  j["d"] = schedule.d;
  j["N"] = schedule.N;
  j["K_x"] = table2_to_json(schedule.K_x);
  json ku = json::array();
  for (const auto& tab : schedule.K_u) ku.push_back(table2_to_json(tab));
  j["K_u"] = std::move(ku);
  return j;
}

json trajectory_to_json(const Trajectory& traj, long long run) {
  json j;
  j["run"] = run;
  json modes = json::array();
  for (int l : traj.modes) modes.push_back(l + 1);
  j["modes"] = std::move(modes);
  json states = json::array();
  for (const Vector& x : traj.states) states.push_back(vector_to_json(x));
  j["states"] = std::move(states);
  json decisions = json::array();
  for (const Vector& u : traj.decisions) decisions.push_back(vector_to_json(u));
  j["decisions"] = std::move(decisions);
  j["cost"] = traj.cost;
  return j;
}

json qp_to_json(const QuadraticCost& qp) {
  json j;
  j["schema_version"] = 1;
  j["m"] = qp.m;
  j["L"] = qp.L;
  j["d"] = qp.d;
  j["N"] = qp.N;
  j["H"] = matrix_to_json(qp.H);
  j["b"] = vector_to_json(qp.b);
  j["c"] = qp.c;
  json probs = json::array();
  for (const Vector& p : qp.prefix_prob) probs.push_back(vector_to_json(p));
  j["prefix_prob"] = std::move(probs);
  return j;
}

json policy_to_json(const PolicyTree& policy) {
  json j;
  j["schema_version"] = 1;
  j["m"] = policy.m;
  j["L"] = policy.L;
  j["d"] = policy.d;
  j["N"] = policy.N;
  json decs = json::array();
  for (const Matrix& dec : policy.decisions) decs.push_back(matrix_to_json(dec));
  j["decisions"] = std::move(decs);
  return j;
}

}  // namespace mjls
