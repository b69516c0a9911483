#pragma once

#include <Eigen/Dense>

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mjls {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/**
 * Discrete-time Markov jump linear system with a fixed input delay.
 *
 * Dynamics:  x(k+1) = A[mode(k)] x(k) + B[mode(k)] u(k - d)
 *
 * Cost:      J = E[  sum_{k=0..N}  x(k)' Q[mode(k)] x(k)
 *                  + sum_{k=d..N}  u(k-d)' R[mode(k)] u(k-d)
 *                  + x(N+1)' P_term[mode(N+1)] x(N+1) ]
 *
 * mode(k) is an L-state Markov chain with row-stochastic transition
 * matrix `trans` and initial distribution `pi0`.  The input applied at
 * step k is the decision made d steps earlier, so decisions happen at
 * times 0..N-d and each one is weighed by R at its application time.
 * Modes are 0-based in memory and 1-based in every serialized form.
 */
struct JumpLinearModel {
  int n = 0;  // state dimension
  int m = 0;  // input dimension
  int L = 0;  // number of modes
  int d = 0;  // input delay, >= 1
  int N = 0;  // horizon; must satisfy N > d

  std::vector<Matrix> A;       // L matrices, n x n
  std::vector<Matrix> B;       // L matrices, n x m
  std::vector<Matrix> Q;       // L matrices, n x n, symmetric PSD
  std::vector<Matrix> R;       // L matrices, m x m, symmetric PD
  std::vector<Matrix> P_term;  // L matrices, n x n, symmetric PSD
  Matrix trans;                // L x L, rows sum to 1
  Vector pi0;                  // length L, sums to 1

  // Copy with Q, R, P_term replaced by (X + X')/2.  Solvers assume
  // exactly symmetric weights; parsing applies this after validation.
  JumpLinearModel symmetrized() const;
};

// Data the horizon starts from: the measured initial state and the d
// decisions already in flight.  u_pre[i] = u(i - d) is applied at step i.
struct InitialData {
  Vector x0;
  std::vector<Vector> u_pre;
};

// One realization of the mode chain over a window, with the probability
// weight it carries inside the enumeration that produced it.
struct ModePath {
  std::vector<int> modes;  // 0-based, earliest time first
  double weight = 1.0;
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

// Thrown when an exhaustive chain enumeration would exceed the
// configured path budget.
struct PathBudgetError : std::runtime_error {
  long long required = 0;
  long long budget = 0;
  PathBudgetError(long long required_, long long budget_)
      : std::runtime_error("path enumeration needs " + std::to_string(required_) +
                           " paths, budget is " + std::to_string(budget_)),
        required(required_),
        budget(budget_) {}
};

/**
 * Structural and numerical sanity of a model.  Collects one message per
 * violation and never aborts: dimensional consistency, d >= 1, N > d,
 * row-stochastic trans and pi0 (tolerance 1e-12), symmetric Q/R/P_term
 * (max |X - X'| < 1e-12), PSD Q/P_term (eigenvalues >= -1e-10 relative
 * to the matrix scale) and strictly PD R.
 */
ValidationReport validate_model(const JumpLinearModel& model);

// Checks that init matches the model's dimensions and delay.
ValidationReport validate_initial(const JumpLinearModel& model, const InitialData& init);

/**
 * All `steps`-step mode paths out of `start_mode`, in lexicographic
 * order, each weighted by its product of transition probabilities.
 * modes[i] is the mode at offset i+1 from the start, so the weights over
 * the whole list sum to 1.  steps = 0 yields one empty path of weight 1.
 */
std::vector<ModePath> enumerate_paths(const JumpLinearModel& model, int start_mode, int steps);

/**
 * Ordered product of state matrices over a mode window, latest mode
 * leftmost:  f_product({l_1, ..., l_j}) = A[l_j] * ... * A[l_1] for
 * modes listed earliest first.  An empty window yields the identity, so
 * the product composes:  f_product(w1 + w2) = f_product(w2) * f_product(w1).
 */
Matrix f_product(const JumpLinearModel& model, std::span<const int> modes);

// Base-L rank of a mode tuple, earliest entry most significant; the
// enumeration order of enumerate_paths coincides with this rank.
long long mode_tuple_rank(int L, std::span<const int> modes);

}  // namespace mjls
