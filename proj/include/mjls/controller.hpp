#pragma once

#include "mjls/riccati.hpp"

namespace mjls {

/**
 * Feedback gains of the optimal delayed-input policy, one set per
 * decision time t = 0..N-d and mode:
 *
 *   u(t) = -K_x[t][l] x(t+1|t)  -  sum_{j=1..d-1} K_u[j][t][l] u(t-d+j)
 *
 * with K_x = W^{-1} T[0] (m x n) and K_u[j] = W^{-1} T[j] (m x m,
 * stored at index j-1).  x(t+1|t) is the one-step prediction from the
 * measured state; the controller never needs states beyond that.
 */
struct GainSchedule {
  int n = 0, m = 0, L = 0, d = 0, N = 0;
  std::vector<std::vector<Matrix>> K_x;               // [t][l], t = 0..N-d
  std::vector<std::vector<std::vector<Matrix>>> K_u;  // [j-1][t][l], j = 1..d-1
};

// Extracts the gain schedule from solved tables; throws NotSolvableError
// when the sweep halted on a non-PD curvature.
GainSchedule gains(const RiccatiTables& tables);

/**
 * The decision at time t in mode l from the measured state and the d
 * decisions still in flight: u_hist = { u(t-d), ..., u(t-1) }, with
 * pre-horizon entries drawn from InitialData by the caller.  Internally
 * predicts x(t+1) = A[l] x(t) + B[l] u(t-d), then applies the gains.
 * Valid for t = 0..N-d.
 */
Vector control(const JumpLinearModel& model, const GainSchedule& schedule, int t, int mode,
               const Vector& x_t, std::span<const Vector> u_hist);

/**
 * Costate lambda_t of the optimally controlled system along a realized
 * mode prefix theta(0..t), valid for t = d-1..N - the times at which
 * the decision feeding the identity has itself been chosen optimally:
 *
 *   lambda_t = (P[t]-P0[t])[theta(t)] x(t+1)
 *            - sum_{s=1..d-1} alpha^{d-s}[t][tuple]' W[t-s][theta(t-s)]^{-1}
 *                             E{ alpha^{d-s} x(t+1) | time t-s }
 *
 * where tuple is the realized modes at times t-s+1..t and each
 * conditional expectation runs backward_expectation over s+1 steps.
 * States and in-flight decisions along the prefix are reconstructed by
 * rolling the closed loop forward from init.
 */
Vector costate(const JumpLinearModel& model, const RiccatiTables& tables, int t,
               std::span<const int> prefix, const InitialData& init);

/**
 * Optimal expected cost of the whole horizon: the expectation over the
 * first d modes of the pre-decision running cost plus the cost-to-go
 * quadratic at the first reachable state x(d), minus the corrections
 * for the in-flight pre-horizon inputs:
 *
 *   J* = E[ sum_{k=0..d-1} x(k)'Q x(k) + x(d)'(P-P0)[d-1] x(d)
 *         - x(d)' sum_{s=1..d-1} alpha^{d-s}[d-1][tuple]' W[d-s-1]^{-1}
 *                                E{ alpha^{d-s} x(d) | time d-s-1 } ].
 */
double optimal_cost(const JumpLinearModel& model, const RiccatiTables& tables,
                    const InitialData& init);

}  // namespace mjls
