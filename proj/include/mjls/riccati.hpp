#pragma once

#include "mjls/model.hpp"

#include <Eigen/Cholesky>

#include <functional>
#include <span>

namespace mjls {

// Thrown when a consumer needs solution tables whose recursion halted on
// a decision-curvature matrix that was not positive definite.
struct NotSolvableError : std::runtime_error {
  int t = -1;
  int mode = -1;
  NotSolvableError(int t_, int mode_)
      : std::runtime_error("decision curvature W is not positive definite at t = " +
                           std::to_string(t_) + ", mode " + std::to_string(mode_ + 1)),
        t(t_),
        mode(mode_) {}
};

/**
 * Solution tables of the delay-compensating coupled Riccati recursions.
 *
 * Everything is indexed by absolute time.  Decisions are made at
 * t = 0..N-d; for each such t and each mode the optimal decision is
 *
 *   u(t) = -W[t][l]^{-1} ( T[0][t][l] x(t+1)
 *                        + sum_{j=1..d-1} T[j][t][l] u(t-d+j) )
 *
 * where x(t+1) is the one-step prediction from the measured state.
 *
 *   W[t][l]    m x m  curvature of the expected cost in the decision at
 *                     (t, l); all of them PD  <=>  the problem is solvable
 *   T[0][t][l] m x n  coupling of the decision to the predicted state
 *   T[j][t][l] m x m  coupling to the j-th in-flight earlier decision
 *   P[t][l]    n x n  cost-to-go weight, conditioned one step back:
 *                     E[cost from t+1 | mode(t) = l] = x(t+1)'P[t][l]x(t+1) + ...
 *   P0[t][l]   n x n  the part of P recovered by the decision at t,
 *                     P0 = T[0]' W^{-1} T[0]
 *   delta[j][t][l]     m x n costate propagation terms, j = 1..d-1
 *                      (stored at index j-1)
 *   alpha[g][t][tuple] m x n costate correction terms, g = 1..d-1
 *                      (stored at index g-1), keyed by the realized modes
 *                      at times t-(d-g)+1 .. t, rank-encoded base L with
 *                      the earliest mode most significant
 *
 * The last d slots t = N-d+1..N are a uniform-recursion convenience:
 * W holds identity placeholders there and T/P0 exact zeros, so every
 * backward formula can read them without special cases - a placeholder W
 * only ever multiplies a zero T and contributes exactly nothing.
 * delta/alpha are seeded to zero at t = N alone and obey their
 * recursions below; costate evaluation needs delta[1][N-1] etc. nonzero.
 *
 * On a positive-definiteness failure the sweep halts: `solvable` turns
 * false, (fail_t, fail_mode) names the first offending W, and every
 * entry computed before the halt is retained for diagnosis.
 */
struct RiccatiTables {
  int n = 0, m = 0, L = 0, d = 0, N = 0;

  std::vector<std::vector<Matrix>> W;               // [t][l], t = 0..N
  std::vector<std::vector<std::vector<Matrix>>> T;  // [j][t][l], j = 0..d-1
  std::vector<std::vector<Matrix>> P;               // [t][l]
  std::vector<std::vector<Matrix>> P0;              // [t][l]
  std::vector<std::vector<std::vector<Matrix>>> delta;  // [j-1][t][l], j = 1..d-1
  std::vector<std::vector<std::vector<Matrix>>> alpha;  // [g-1][t][tuple rank], g = 1..d-1

  bool solvable = true;
  int fail_t = -1;
  int fail_mode = -1;
  double max_asymmetry = 0.0;  // worst |X - X'| over W/P/P0 before symmetrization

  // Cached factorizations of W[t][l] for t <= N-d (identity factors in
  // the placeholder window); rebuilt by finalize() after deserialization.
  std::vector<std::vector<Eigen::LDLT<Matrix>>> W_ldlt;

  bool in_window(int t) const { return t > N - d; }
  const Matrix& alpha_entry(int g, int t, std::span<const int> tuple) const;
  // W[t][l]^{-1} * rhs through the cached factorization.
  Matrix w_solve(int t, int l, const Matrix& rhs) const;
  void finalize();  // refresh W_ldlt from W
};

/**
 * Expectation of a matrix-valued path functional over `span`-step mode
 * paths out of start_mode: sum over paths of weight * f(path).  All f
 * outputs must share one shape; span must be >= 1.
 */
Matrix lambda_expectation(const JumpLinearModel& model, int start_mode, int span,
                          const std::function<Matrix(const ModePath&)>& f);

/**
 * E{ g(modes) x(k) | everything known at time k - msteps }, the
 * closed-form prediction used wherever the optimal policy needs a state
 * it cannot yet measure.  The argument of g is the mode window at times
 * k-msteps+1 .. k; start_mode is the (known) mode at k-msteps, x_base is
 * x(k-msteps), and u_applied[i] is the input applied at step
 * k-msteps+i (i = 0..msteps-1) - by the delay structure those inputs are
 * known at the conditioning time iff msteps <= d, so larger msteps is
 * rejected.  Expands x(k) through the dynamics:
 *
 *   E = sum_paths w * g(path) * ( F(path) x_base
 *         + sum_i F(path after i) B[mode at step i] u_applied[i] ).
 */
Vector backward_expectation(const JumpLinearModel& model, int start_mode, int msteps,
                            const Vector& x_base, std::span<const Vector> u_applied,
                            const std::function<Matrix(std::span<const int>)>& g);

/**
 * Runs the full backward sweep and fills every table.  Seeds: P[N] is
 * the one-step conditioning of P_term; the terminal window holds
 * identity/zero placeholders; delta/alpha start at zero at t = N.  The
 * sweep halts on the first W that fails the positive-definiteness test
 * (pivots of the LDLT factorization above 1e-12 * trace(W)/m) and
 * reports it through the solvable flag.
 */
RiccatiTables solve_riccati(const JumpLinearModel& model);

/**
 * Largest relative residual over the backward consistency identities
 * that tie the costate correction tables alpha to T and to each other:
 *
 *   (i)   one-step expectation of A' alpha^{d-1}[t+1]'  =  T[0][t]'
 *   (ii)  one-step expectation of A' alpha^{d-j}[t+1]'  =  alpha^{d-j+1}[t]'
 *   (iii) one-step expectation of B' alpha^{d-1}[t+1]'  =  T[1][t]'
 *   (iv)  j-step  expectation of B' alpha^{d-j}[t+j]'   =  T[j][t]'
 *
 * evaluated over every time and mode tuple where both sides exist.
 * Residuals are ||lhs - rhs||_F / max(1, ||rhs||_F).  Vacuous for d = 1
 * (returns 0).  Requires solvable tables.
 */
double check_proposition1(const JumpLinearModel& model, const RiccatiTables& tables);

}  // namespace mjls
