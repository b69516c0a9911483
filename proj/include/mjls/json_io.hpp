#pragma once

#include "mjls/controller.hpp"
#include "mjls/oracle.hpp"
#include "mjls/riccati.hpp"
#include "mjls/simulate.hpp"

#include <json.hpp>

#include <string>

namespace mjls {

// A problem file bundles the model with the initial data it is solved for.
struct ProblemInstance {
  JumpLinearModel model;
  InitialData init;
};

// Matrices serialize as nested row-major arrays, vectors as flat arrays.
// Doubles round-trip bit-exactly (shortest-representation printing).
nlohmann::json matrix_to_json(const Matrix& M);
nlohmann::json vector_to_json(const Vector& v);
Matrix matrix_from_json(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols,
                        const std::string& field);
Vector vector_from_json(const nlohmann::json& j, Eigen::Index size, const std::string& field);

/**
 * Strict parse of a problem file: every field checked for shape against
 * the declared dimensions, unknown keys rejected by name, and
 * schema_version (optional, default 1) must be 1.  Modes are 1-based on
 * disk and 0-based in memory.  u_pre lists the in-flight inputs oldest
 * first: u_pre[i] = u(i - d).  Content rules (stochastic rows, weight
 * definiteness, ...) are validate_model's job, not the parser's.
 */
ProblemInstance problem_from_json(const nlohmann::json& j);
nlohmann::json problem_to_json(const JumpLinearModel& model, const InitialData& init);
ProblemInstance load_problem_file(const std::string& path);

// Full solution tables, including the terminal-window placeholder
// entries, so a parsed file reproduces the in-memory tables exactly.
// alpha entries carry their (1-based) mode tuple next to each value.
// tables_from_json re-runs finalize() so the factor cache is usable.
nlohmann::json tables_to_json(const RiccatiTables& tables);
RiccatiTables tables_from_json(const nlohmann::json& j);

nlohmann::json gains_to_json(const GainSchedule& schedule);

// One realized run: modes 1-based, decisions listed by application step
// (u(-d)..u(N-d), the first d taken from the initial data).
nlohmann::json trajectory_to_json(const Trajectory& traj, long long run);

nlohmann::json qp_to_json(const QuadraticCost& qp);
nlohmann::json policy_to_json(const PolicyTree& policy);

}  // namespace mjls
