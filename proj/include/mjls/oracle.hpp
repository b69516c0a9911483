#pragma once

#include "mjls/simulate.hpp"

namespace mjls {

struct HessianNotPdError : std::runtime_error {
  HessianNotPdError() : std::runtime_error("quadratic program Hessian is not positive definite") {}
};

/**
 * A policy resolved on the chain-prefix tree: one decision per pair
 * (decision time tau, realized prefix theta(0..tau)).  decisions[tau]
 * is m x L^(tau+1) with one column per prefix, ordered by base-L rank
 * (earliest mode most significant) - the exact variable order of the
 * quadratic program below.
 */
struct PolicyTree {
  int m = 0, L = 0, d = 0, N = 0;
  std::vector<Matrix> decisions;

  Vector decision(int tau, std::span<const int> prefix) const;
  long long total_vars() const;
};

// Adapter for the simulate routines; the tree must outlive the functor.
PolicyFn policy_of(const PolicyTree& tree);

/**
 * The expected cost as an explicit quadratic in the stacked decision
 * vector z:  J(z) = z' H z + 2 b' z + c.  One m-block per (decision
 * time, chain prefix), ordered by time, then prefix rank, then input
 * coordinate.  prefix_prob[tau](r) is the probability of prefix rank r;
 * zero-probability prefixes carry identically zero rows and are skipped
 * by every solve.
 */
struct QuadraticCost {
  int m = 0, L = 0, d = 0, N = 0;
  Matrix H;
  Vector b;
  double c = 0.0;
  std::vector<Vector> prefix_prob;  // [tau](rank), tau = 0..N-d

  long long var_offset(int tau) const;
  long long var_index(int tau, std::span<const int> prefix) const;
  long long total_vars() const { return H.rows(); }
};

/**
 * Builds the exact quadratic by one walk of the chain-prefix tree,
 * carrying x(k) as an affine function of the decisions made so far and
 * scattering each stage cost with the weight of its prefix.  Exhaustive
 * over L^(N+2) chain realizations (checked against path_budget first);
 * zero-probability branches are pruned.
 */
QuadraticCost build_qp(const JumpLinearModel& model, const InitialData& init,
                       long long path_budget);

struct QpSolution {
  PolicyTree policy;   // argmin, zero on unreachable prefixes
  double minimum = 0;  // c + b' z*
  double residual = 0; // ||H z* + b|| over the reachable block
};

// Positive definiteness of the reachable block of H, with the same
// relative pivot rule the Riccati sweep applies to W.
bool hessian_is_pd(const QuadraticCost& qp);

// Unconstrained minimizer over the reachable block; throws
// HessianNotPdError when the reachable Hessian block is not PD.
QpSolution solve_qp(const QuadraticCost& qp);

// The closed loop of a gain schedule resolved on the prefix tree, for
// decision-by-decision comparison against the QP argmin.
PolicyTree closed_loop_policy_tree(const JumpLinearModel& model, const GainSchedule& schedule,
                                   const InitialData& init);

/**
 * States and costates of a fixed policy on the whole prefix tree.
 * states[k] is indexed by the rank of theta(0..k-1) (x(0) sits alone at
 * k = 0); lambda[t] by the rank of theta(0..t).  The costate is the
 * defining backward recursion itself:
 *
 *   lambda_N = E[P_term | theta(N)] x(N+1),
 *   lambda_{t-1} = E[ A' lambda_t + Q x(t) | theta(0..t-1) ],
 *
 * with no solution tables involved.
 */
struct CostateTree {
  std::vector<std::vector<Vector>> states;
  std::vector<std::vector<Vector>> lambda;
};
CostateTree costate_tree(const JumpLinearModel& model, const PolicyTree& policy,
                         const InitialData& init);

/**
 * Costate of a fixed policy at one (t, prefix), evaluated the long way:
 * enumerate every chain continuation, roll the loop forward, accumulate
 * the transposed-propagator cost sum backward per path, and average.
 * Independent route to the same object costate_tree computes; t may be
 * anywhere in 0..N.
 */
Vector definitional_costate(const JumpLinearModel& model, const PolicyTree& policy,
                            const InitialData& init, int t, std::span<const int> prefix);

/**
 * Largest stationarity violation of a policy: for every decision
 * (applied at k = d..N) and every reachable prefix theta(0..k-d),
 * || E[ B' lambda_k + R u(k-d) | prefix ] || must vanish at an optimum.
 */
double stationarity_residual(const JumpLinearModel& model, const PolicyTree& policy,
                             const InitialData& init);

/**
 * Single-mode (L = 1) reference: the delay absorbed into the augmented
 * state xi(k) = [x(k); u(k-d); ...; u(k-1)] and solved by the textbook
 * time-varying LQR recursion.  Returns the gain rows u(tau) = -K[tau]
 * xi(tau) for tau = 0..N-d.
 */
std::vector<Matrix> augmented_lqr(const JumpLinearModel& model);

/**
 * Delay-free coupled Riccati recursion (the classical jump-linear
 * regulator, as if d were 0): curvature Upsilon[k][l], gain K[k][l] and
 * cost-to-go P[k][l] for k = N..0 with P[N+1] = P_term.
 */
struct StdRiccati {
  std::vector<std::vector<Matrix>> P;        // [k][l], k = 0..N+1
  std::vector<std::vector<Matrix>> Upsilon;  // [k][l], k = 0..N
  std::vector<std::vector<Matrix>> K;        // [k][l], k = 0..N
  bool solvable = true;
  int fail_k = -1, fail_mode = -1;
};
StdRiccati standard_coupled_riccati(const JumpLinearModel& model);

/**
 * Expected cost when the chain starts surely in first_mode, all initial
 * data is zero, the first decision is pinned to u0 and every later
 * decision is optimal: a pure quadratic in u0 whose matrix is the Schur
 * complement of the free block - independently reproducing the meaning
 * of the curvature table W[0][first_mode].
 */
double fixed_first_decision_cost(const JumpLinearModel& model, int first_mode, const Vector& u0,
                                 long long path_budget);

}  // namespace mjls
