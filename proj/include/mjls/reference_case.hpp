#pragma once

#include "mjls/json_io.hpp"

namespace mjls {

/**
 * The bundled two-mode benchmark case (the same instance that ships as
 * examples/paper_example.json), embedded so the reproduce command needs
 * no external file, together with the reference values published for it.
 *
 * The published solution table indexes its rows by its own row label k.
 * Rows 0..4 coincide (to the printed 1e-4 precision) with this solver's
 * absolute-time tables at decision time t = k + 1; the published gain
 * rows u(k) likewise match the gains at t = k + 1 under the realized
 * mode sequence below.  The last published row (label 5) holds the
 * one-step average of the applied input weight and zero couplings, which
 * matches no decision time of the recursions as stated; reproduction
 * flags it AMBIGUOUS instead of gating on it.  The published total cost
 * (93.7285) is also flagged diagnostic-only: it was printed alongside a
 * "first of 50 Monte Carlo trajectories" selection, so whether it is the
 * exact expectation or a single realization is not determinable from the
 * printed material.
 */
inline const char* benchmark_problem_json() {
  return R"json({
  "schema_version": 1,
  "n": 2, "m": 1, "L": 2, "d": 2, "N": 7,
  "A": [[[2.0, 1.1], [-1.7, -0.8]], [[0.8, 0.0], [0.0, 0.6]]],
  "B": [[[1.0], [1.0]], [[2.0], [1.0]]],
  "Q": [[[1.0, 0.0], [0.0, 1.0]], [[1.0, 0.0], [0.0, 1.0]]],
  "R": [[[1.0]], [[2.0]]],
  "P_term": [[[1.0, 0.0], [0.0, 1.0]], [[1.0, 0.0], [0.0, 1.0]]],
  "trans": [[0.9, 0.1], [0.3, 0.7]],
  "pi0": [0.5, 0.5],
  "x0": [2.0, 2.0],
  "u_pre": [[-2.0], [-1.0]]
})json";
}

inline ProblemInstance benchmark_problem() {
  return problem_from_json(nlohmann::json::parse(benchmark_problem_json()));
}

// One published solution-table row: curvatures, predictor couplings and
// in-flight couplings for both modes, quoted to the printed precision.
struct BenchmarkRow {
  double W[2];      // per mode
  double T0[2][2];  // [mode][state coordinate]
  double T1[2];     // per mode
};

inline constexpr int kBenchmarkRowCount = 6;

// Published rows by their own label 0..5; rows 0..4 map to decision
// times t = 1..5, row 5 is the AMBIGUOUS one (see above).
inline constexpr BenchmarkRow kBenchmarkTable[kBenchmarkRowCount] = {
    {{23.6031, 26.7636}, {{12.2690, 7.5948}, {9.6518, 4.6516}}, {21.8683, 24.7279}},
    {{23.1641, 26.2088}, {{12.0539, 7.4614}, {9.4635, 4.5596}}, {21.4732, 24.2257}},
    {{21.8477, 24.0482}, {{11.6367, 7.1986}, {8.9148, 4.2748}}, {20.5775, 22.5743}},
    {{17.7981, 19.0574}, {{9.6188, 5.9405}, {7.1852, 3.4079}}, {16.8338, 17.9382}},
    {{3.6400, 5.0800}, {{0.3659, 0.2187}, {0.7673, 0.2769}}, {0.9770, 2.2790}},
    {{1.1000, 1.7000}, {{0.0, 0.0}, {0.0, 0.0}}, {0.0, 0.0}},
};

// Published feedback rows u(label) = -Kx * x(label+1) - Ku * u(label-1)
// for labels 0..4 (the printed u(5) is identically zero).  Modes are the
// realized chain values the published closed loop ran under, 0-based.
struct BenchmarkGainRow {
  int mode;
  double Kx[2];
  double Ku;
};

inline constexpr int kBenchmarkGainRowCount = 5;

inline constexpr BenchmarkGainRow kBenchmarkGains[kBenchmarkGainRowCount] = {
    {1, {0.3606, 0.1738}, 0.9239},
    {1, {0.3611, 0.1740}, 0.9243},
    {0, {0.5326, 0.3295}, 0.9419},
    {0, {0.5404, 0.3338}, 0.9458},
    {0, {0.1005, 0.0601}, 0.2684},
};

// Published optimal value; diagnostic only (see the note above).
inline constexpr double kBenchmarkPublishedCost = 93.7285;

}  // namespace mjls
