#pragma once

#include "mjls/controller.hpp"

#include <cstdint>
#include <functional>
#include <random>

namespace mjls {

/**
 * One closed-loop run: the realized chain, the state trajectory, every
 * applied input and the realized cost.  decisions[i] = u(i-d) is the
 * input applied at step i, so the d pre-horizon inputs come first and
 * indices align with application times throughout.
 */
struct Trajectory {
  std::vector<int> modes;         // theta(0..N+1)
  std::vector<Vector> states;     // x(0..N+1)
  std::vector<Vector> decisions;  // u(-d..N-d) by application step
  double cost = 0.0;
};

struct McSummary {
  double mean = 0.0;
  double std_error = 0.0;
  long long runs = 0;
  std::uint64_t seed = 0;
};

// A deterministic policy evaluated on chain prefixes: returns the
// decision at time t given theta(0..t).
using PolicyFn = std::function<Vector(int t, std::span<const int> prefix)>;

// Uniform double in [0, 1) from the top 53 bits of one engine draw -
// the bit-exact construction documented in the README.
inline double next_uniform(std::mt19937_64& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

// Per-run seed for run index `run` under a master seed: a splitmix-style
// avalanche of master + (run+1) * golden-gamma, so runs are decorrelated
// and any run can be re-drawn in isolation.
std::uint64_t derive_run_seed(std::uint64_t master, std::uint64_t run);

// Inverse-CDF draw from `probs` (need not be normalized beyond 1e-12):
// first index whose cumulative sum exceeds the uniform draw.
int sample_index(std::mt19937_64& engine, const Vector& probs);

// theta(0..N+1) sampled from pi0 and the transition rows.
std::vector<int> sample_chain(const JumpLinearModel& model, std::uint64_t seed);

// Closed-loop rollout along a given chain realization; the returned cost
// is the single accumulator every expected-cost routine reuses.
Trajectory rollout(const JumpLinearModel& model, const GainSchedule& schedule,
                   const InitialData& init, std::span<const int> modes);
Trajectory rollout(const JumpLinearModel& model, const PolicyFn& policy, const InitialData& init,
                   std::span<const int> modes);

/**
 * Monte Carlo estimate of the expected closed-loop cost: `runs`
 * independent chains with per-run seeds derived from `seed`.  The result
 * is bitwise independent of `threads` - runs land in preassigned slots
 * and the mean/stderr reduction walks them in run order.  Pass
 * `run_costs` to also collect the per-run realized costs.
 */
McSummary monte_carlo_cost(const JumpLinearModel& model, const GainSchedule& schedule,
                           const InitialData& init, long long runs, std::uint64_t seed,
                           int threads = 1, std::vector<double>* run_costs = nullptr);

/**
 * Exact expected cost by exhaustive chain enumeration (L^(N+2) full
 * paths, checked against `path_budget` before any work; throws
 * PathBudgetError).  Shares the rollout cost accumulator so the two can
 * never drift apart.
 */
double exact_expected_cost(const JumpLinearModel& model, const GainSchedule& schedule,
                           const InitialData& init, long long path_budget);
double exact_expected_cost(const JumpLinearModel& model, const PolicyFn& policy,
                           const InitialData& init, long long path_budget);

// L^(N+2) with saturation, for budget checks.
long long full_path_count(const JumpLinearModel& model);

}  // namespace mjls
