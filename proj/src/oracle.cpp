#include "mjls/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace mjls {
namespace {

constexpr double kPivotRelTol = 1e-12;

long long pow_ll(int base, int exp) {
  long long out = 1;
  for (int i = 0; i < exp; ++i) out *= base;
  return out;
}

bool pivots_are_pd(const Eigen::LDLT<Matrix>& ldlt, const Matrix& M) {
  if (M.rows() == 0) return true;
  if (ldlt.info() != Eigen::Success) return false;
  const double threshold = kPivotRelTol * std::max(M.trace(), 0.0) / M.rows();
  return ldlt.vectorD().minCoeff() > threshold;
}

std::vector<Eigen::Index> reachable_indices(const QuadraticCost& qp) {
  std::vector<Eigen::Index> idx;
  for (int tau = 0; tau < static_cast<int>(qp.prefix_prob.size()); ++tau) {
    const long long base = qp.var_offset(tau);
    for (long long r = 0; r < qp.prefix_prob[tau].size(); ++r)
      if (qp.prefix_prob[tau](r) > 0.0)
        for (int c = 0; c < qp.m; ++c) idx.push_back(base + r * qp.m + c);
  }
  return idx;
}

// Chain prefix probabilities pr[k](rank of theta(0..k)) for k = 0..upto.
std::vector<Vector> prefix_probabilities(const JumpLinearModel& model, int upto) {
  std::vector<Vector> pr(upto + 1);
  pr[0] = model.pi0;
  for (int k = 1; k <= upto; ++k) {
    pr[k] = Vector::Zero(pow_ll(model.L, k + 1));
    for (long long r = 0; r < pr[k - 1].size(); ++r) {
      if (pr[k - 1](r) == 0.0) continue;
      const int from = static_cast<int>(r % model.L);
      for (int l = 0; l < model.L; ++l) pr[k](r * model.L + l) = pr[k - 1](r) * model.trans(from, l);
    }
  }
  return pr;
}

// Forward pass of a fixed policy over the whole prefix tree:
// states[k][rank of theta(0..k-1)].
std::vector<std::vector<Vector>> states_tree(const JumpLinearModel& model,
                                             const PolicyTree& policy, const InitialData& init) {
  const int L = model.L, d = model.d, N = model.N;
  std::vector<std::vector<Vector>> st(N + 2);
  st[0] = {init.x0};
  for (int k = 0; k <= N; ++k) {
    const long long count = pow_ll(L, k + 1);
    st[k + 1].resize(count);
    for (long long r = 0; r < count; ++r) {
      const int l = static_cast<int>(r % L);
      const Vector& x = st[k][r / L];
      // Input applied at step k: decided at k-d on the prefix theta(0..k-d).
      const Vector u = (k < d) ? init.u_pre[k]
                               : Vector(policy.decisions[k - d].col(r / pow_ll(L, d)));
      st[k + 1][r] = model.A[l] * x + model.B[l] * u;
    }
  }
  return st;
}

}  // namespace

Vector PolicyTree::decision(int tau, std::span<const int> prefix) const {
  if (tau < 0 || tau > N - d) throw std::invalid_argument("decision time outside 0..N-d");
  if (static_cast<int>(prefix.size()) != tau + 1)
    throw std::invalid_argument("prefix must hold the modes at times 0..tau");
  return decisions[tau].col(mode_tuple_rank(L, prefix));
}

long long PolicyTree::total_vars() const {
  long long vars = 0;
  for (const Matrix& dec : decisions) vars += dec.size();
  return vars;
}

PolicyFn policy_of(const PolicyTree& tree) {
  return [&tree](int t, std::span<const int> prefix) { return tree.decision(t, prefix); };
}

long long QuadraticCost::var_offset(int tau) const {
  long long off = 0;
  for (int t = 0; t < tau; ++t) off += m * pow_ll(L, t + 1);
  return off;
}

long long QuadraticCost::var_index(int tau, std::span<const int> prefix) const {
  return var_offset(tau) + mode_tuple_rank(L, prefix) * m;
}

QuadraticCost build_qp(const JumpLinearModel& model, const InitialData& init,
                       long long path_budget) {
  const long long required = full_path_count(model);
  if (required > path_budget) throw PathBudgetError(required, path_budget);

  const int n = model.n, m = model.m, L = model.L, d = model.d, N = model.N;
  const int n_dec = N - d + 1;

  QuadraticCost qp;
  qp.m = m;
  qp.L = L;
  qp.d = d;
  qp.N = N;
  qp.prefix_prob.resize(n_dec);
  long long vars = 0;
  for (int tau = 0; tau < n_dec; ++tau) {
    qp.prefix_prob[tau] = Vector::Zero(pow_ll(L, tau + 1));
    vars += m * pow_ll(L, tau + 1);
  }
  if (vars > 16000)
    throw std::invalid_argument("quadratic program would need " + std::to_string(vars) +
                                " variables; refusing to allocate its Hessian");

  qp.H = Matrix::Zero(vars, vars);
  qp.b = Vector::Zero(vars);
  qp.c = 0.0;

  // x(k) carried as an affine function of the decisions made so far:
  // column 0 is the constant, block tau sits at 1 + tau*m.
  const int width = 1 + n_dec * m;
  std::vector<Matrix> xaff(N + 2, Matrix::Zero(n, width));
  std::vector<long long> glob(n_dec, 0);

  auto scatter = [&](int k, double w, const Matrix& M) {
    const int nb = std::clamp(k - d, 0, n_dec);  // decision blocks x(k) can depend on
    const auto X = xaff[k].leftCols(1 + nb * m);
    const Matrix S = X.transpose() * (M * X);
    qp.c += w * S(0, 0);
    for (int a = 0; a < nb; ++a) {
      qp.b.segment(glob[a], m) += w * S.block(1 + a * m, 0, m, 1);
      for (int b2 = 0; b2 < nb; ++b2)
        qp.H.block(glob[a], glob[b2], m, m) += w * S.block(1 + a * m, 1 + b2 * m, m, m);
    }
  };

  std::function<void(int, int, double, long long)> walk = [&](int k, int l, double w,
                                                              long long rank) {
    if (k <= N - d) {
      qp.prefix_prob[k](rank) = w;
      glob[k] = qp.var_offset(k) + rank * m;
    }
    scatter(k, w, (k <= N) ? model.Q[l] : model.P_term[l]);
    if (k >= d && k <= N) {
      const long long off = glob[k - d];
      qp.H.block(off, off, m, m) += w * model.R[l];
    }
    if (k == N + 1) return;

    xaff[k + 1].noalias() = model.A[l] * xaff[k];
    if (k < d)
      xaff[k + 1].col(0) += model.B[l] * init.u_pre[k];
    else
      xaff[k + 1].middleCols(1 + (k - d) * m, m) += model.B[l];

    for (int lp = 0; lp < L; ++lp)
      if (model.trans(l, lp) > 0.0) walk(k + 1, lp, w * model.trans(l, lp), rank * L + lp);
  };

  xaff[0].col(0) = init.x0;
  for (int l0 = 0; l0 < L; ++l0)
    if (model.pi0(l0) > 0.0) walk(0, l0, model.pi0(l0), l0);

  return qp;
}

bool hessian_is_pd(const QuadraticCost& qp) {
  const auto idx = reachable_indices(qp);
  if (idx.empty()) return true;
  const Matrix H_r = qp.H(idx, idx);
  Eigen::LDLT<Matrix> ldlt(H_r);
  return pivots_are_pd(ldlt, H_r);
}

QpSolution solve_qp(const QuadraticCost& qp) {
  QpSolution out;
  out.policy.m = qp.m;
  out.policy.L = qp.L;
  out.policy.d = qp.d;
  out.policy.N = qp.N;
  const int n_dec = static_cast<int>(qp.prefix_prob.size());
  out.policy.decisions.resize(n_dec);
  for (int tau = 0; tau < n_dec; ++tau)
    out.policy.decisions[tau] = Matrix::Zero(qp.m, qp.prefix_prob[tau].size());

  const auto idx = reachable_indices(qp);
  if (idx.empty()) {
    out.minimum = qp.c;
    return out;
  }

  const Matrix H_r = qp.H(idx, idx);
  const Vector b_r = qp.b(idx);
  Eigen::LDLT<Matrix> ldlt(H_r);
  if (!pivots_are_pd(ldlt, H_r)) throw HessianNotPdError();

  const Vector z_r = ldlt.solve(-b_r);
  out.residual = (H_r * z_r + b_r).norm();
  out.minimum = qp.c + b_r.dot(z_r);

  for (size_t i = 0; i < idx.size(); ++i) {
    long long v = idx[i];
    for (int tau = 0; tau < n_dec; ++tau) {
      const long long block = qp.m * qp.prefix_prob[tau].size();
      if (v < block) {
        out.policy.decisions[tau](v % qp.m, v / qp.m) = z_r(i);
        break;
      }
      v -= block;
    }
  }
  return out;
}

PolicyTree closed_loop_policy_tree(const JumpLinearModel& model, const GainSchedule& schedule,
                                   const InitialData& init) {
  const int L = model.L, d = model.d, N = model.N;

  PolicyTree tree;
  tree.m = model.m;
  tree.L = L;
  tree.d = d;
  tree.N = N;
  tree.decisions.resize(N - d + 1);

  std::vector<std::vector<Vector>> st(N + 2);
  st[0] = {init.x0};
  std::vector<Vector> u_hist(d);
  for (int k = 0; k <= N; ++k) {
    const long long count = pow_ll(L, k + 1);
    st[k + 1].resize(count);
    if (k <= N - d) tree.decisions[k] = Matrix(model.m, count);
    for (long long r = 0; r < count; ++r) {
      const int l = static_cast<int>(r % L);
      const Vector& x = st[k][r / L];
      if (k <= N - d) {
        // In-flight decisions u(k-d+j); the rank of theta(0..sigma) is a
        // truncation of r, pre-horizon entries come from init.
        for (int j = 0; j <= d - 1; ++j) {
          const int sigma = k - d + j;
          u_hist[j] = (sigma < 0) ? init.u_pre[sigma + d]
                                  : Vector(tree.decisions[sigma].col(r / pow_ll(L, k - sigma)));
        }
        tree.decisions[k].col(r) = control(model, schedule, k, l, x, u_hist);
      }
      const Vector u_app = (k < d) ? init.u_pre[k]
                                   : Vector(tree.decisions[k - d].col(r / pow_ll(L, d)));
      st[k + 1][r] = model.A[l] * x + model.B[l] * u_app;
    }
  }
  return tree;
}

CostateTree costate_tree(const JumpLinearModel& model, const PolicyTree& policy,
                         const InitialData& init) {
  const int L = model.L, N = model.N;

  CostateTree out;
  out.states = states_tree(model, policy, init);
  out.lambda.resize(N + 1);

  out.lambda[N].resize(pow_ll(L, N + 1));
  for (long long r = 0; r < static_cast<long long>(out.lambda[N].size()); ++r) {
    const int l = static_cast<int>(r % L);
    Matrix p_end = Matrix::Zero(model.n, model.n);
    for (int lp = 0; lp < L; ++lp) p_end += model.trans(l, lp) * model.P_term[lp];
    out.lambda[N][r] = p_end * out.states[N + 1][r];
  }
  for (int t = N - 1; t >= 0; --t) {
    out.lambda[t].resize(pow_ll(L, t + 1));
    for (long long r = 0; r < static_cast<long long>(out.lambda[t].size()); ++r) {
      const int l = static_cast<int>(r % L);
      Vector acc = Vector::Zero(model.n);
      for (int lp = 0; lp < L; ++lp)
        acc += model.trans(l, lp) * (model.A[lp].transpose() * out.lambda[t + 1][r * L + lp] +
                                     model.Q[lp] * out.states[t + 1][r]);
      out.lambda[t][r] = acc;
    }
  }
  return out;
}

Vector definitional_costate(const JumpLinearModel& model, const PolicyTree& policy,
                            const InitialData& init, int t, std::span<const int> prefix) {
  if (t < 0 || t > model.N) throw std::invalid_argument("costate time outside 0..N");
  if (static_cast<int>(prefix.size()) != t + 1)
    throw std::invalid_argument("prefix must hold the modes at times 0..t");

  const PolicyFn policy_fn = policy_of(policy);
  std::vector<int> modes(model.N + 2);
  std::copy(prefix.begin(), prefix.end(), modes.begin());

  Vector acc = Vector::Zero(model.n);
  for (const ModePath& p : enumerate_paths(model, prefix[t], model.N + 1 - t)) {
    if (p.weight == 0.0) continue;
    std::copy(p.modes.begin(), p.modes.end(), modes.begin() + t + 1);
    const Trajectory tr = rollout(model, policy_fn, init, modes);
    // Transposed-propagator cost sum, accumulated backward along the path.
    Vector s = model.P_term[modes[model.N + 1]] * tr.states[model.N + 1];
    for (int i = model.N; i >= t + 1; --i)
      s = model.Q[modes[i]] * tr.states[i] + model.A[modes[i]].transpose() * s;
    acc += p.weight * s;
  }
  return acc;
}

double stationarity_residual(const JumpLinearModel& model, const PolicyTree& policy,
                             const InitialData& init) {
  const int L = model.L, d = model.d, N = model.N;
  const CostateTree ct = costate_tree(model, policy, init);
  const auto pr = prefix_probabilities(model, N - d);

  double worst = 0.0;
  for (int k = d; k <= N; ++k) {
    const int tau = k - d;
    for (long long r0 = 0; r0 < pr[tau].size(); ++r0) {
      if (pr[tau](r0) == 0.0) continue;
      const Vector u = policy.decisions[tau].col(r0);
      Vector acc = Vector::Zero(model.m);
      for (const ModePath& p : enumerate_paths(model, static_cast<int>(r0 % L), d)) {
        if (p.weight == 0.0) continue;
        const int e = p.modes[d - 1];
        const long long rk = r0 * pow_ll(L, d) + mode_tuple_rank(L, p.modes);
        acc += p.weight * (model.B[e].transpose() * ct.lambda[k][rk] + model.R[e] * u);
      }
      worst = std::max(worst, acc.norm());
    }
  }
  return worst;
}

std::vector<Matrix> augmented_lqr(const JumpLinearModel& model) {
  if (model.L != 1)
    throw std::invalid_argument("augmented-state reference needs a single-mode model");
  const int n = model.n, m = model.m, d = model.d, N = model.N;
  const int na = n + d * m;

  Matrix A_aug = Matrix::Zero(na, na);
  A_aug.topLeftCorner(n, n) = model.A[0];
  A_aug.block(0, n, n, m) = model.B[0];
  for (int i = 0; i < d - 1; ++i)
    A_aug.block(n + i * m, n + (i + 1) * m, m, m) = Matrix::Identity(m, m);
  Matrix B_aug = Matrix::Zero(na, m);
  B_aug.bottomRows(m) = Matrix::Identity(m, m);

  auto stage_weight = [&](int k) {
    Matrix Qk = Matrix::Zero(na, na);
    if (k <= N) {
      Qk.topLeftCorner(n, n) = model.Q[0];
      if (k >= d) Qk.block(n, n, m, m) = model.R[0];
    } else {
      Qk.topLeftCorner(n, n) = model.P_term[0];
    }
    return Qk;
  };

  std::vector<Matrix> gains(N - d + 1);
  Matrix S = stage_weight(N + 1);
  for (int k = N; k >= 0; --k) {
    if (k > N - d) {
      S = stage_weight(k) + A_aug.transpose() * S * A_aug;
      continue;
    }
    const Matrix G = B_aug.transpose() * S * B_aug;
    Eigen::LDLT<Matrix> ldlt(G);
    if (!pivots_are_pd(ldlt, G)) throw NotSolvableError(k, 0);
    const Matrix K = ldlt.solve(B_aug.transpose() * S * A_aug);
    S = stage_weight(k) + A_aug.transpose() * S * A_aug - K.transpose() * G * K;
    gains[k] = K;
  }
  return gains;
}

StdRiccati standard_coupled_riccati(const JumpLinearModel& model) {
  const int L = model.L, N = model.N;

  StdRiccati out;
  out.P.assign(N + 2, std::vector<Matrix>(L));
  out.Upsilon.assign(N + 1, std::vector<Matrix>(L));
  out.K.assign(N + 1, std::vector<Matrix>(L));
  for (int l = 0; l < L; ++l) out.P[N + 1][l] = model.P_term[l];

  for (int k = N; k >= 0; --k) {
    for (int l = 0; l < L; ++l) {
      Matrix ep = Matrix::Zero(model.n, model.n);
      for (int lp = 0; lp < L; ++lp) ep += model.trans(l, lp) * out.P[k + 1][lp];
      const Matrix ups = model.B[l].transpose() * ep * model.B[l] + model.R[l];
      const Matrix mix = model.B[l].transpose() * ep * model.A[l];
      out.Upsilon[k][l] = 0.5 * (ups + ups.transpose());
      Eigen::LDLT<Matrix> ldlt(out.Upsilon[k][l]);
      if (!pivots_are_pd(ldlt, out.Upsilon[k][l])) {
        out.solvable = false;
        out.fail_k = k;
        out.fail_mode = l;
        return out;
      }
      out.K[k][l] = ldlt.solve(mix);
      Matrix p = model.A[l].transpose() * ep * model.A[l] + model.Q[l] - mix.transpose() * out.K[k][l];
      out.P[k][l] = 0.5 * (p + p.transpose());
    }
  }
  return out;
}

double fixed_first_decision_cost(const JumpLinearModel& model, int first_mode, const Vector& u0,
                                 long long path_budget) {
  if (first_mode < 0 || first_mode >= model.L) throw std::invalid_argument("mode out of range");
  if (u0.size() != model.m) throw std::invalid_argument("u0 must have length m");

  JumpLinearModel pinned = model;
  pinned.pi0 = Vector::Zero(model.L);
  pinned.pi0(first_mode) = 1.0;
  InitialData zero_init;
  zero_init.x0 = Vector::Zero(model.n);
  zero_init.u_pre.assign(model.d, Vector::Zero(model.m));

  const QuadraticCost qp = build_qp(pinned, zero_init, path_budget);

  const long long pin_base = qp.var_offset(0) + static_cast<long long>(first_mode) * model.m;
  std::vector<Eigen::Index> pin, free_idx;
  for (int c = 0; c < model.m; ++c) pin.push_back(pin_base + c);
  for (Eigen::Index v : reachable_indices(qp))
    if (v < pin_base || v >= pin_base + model.m) free_idx.push_back(v);

  const Matrix H_pp = qp.H(pin, pin);
  double value = u0.dot(H_pp * u0);
  if (!free_idx.empty()) {
    const Matrix H_ff = qp.H(free_idx, free_idx);
    const Matrix H_fp = qp.H(free_idx, pin);
    Eigen::LDLT<Matrix> ldlt(H_ff);
    if (!pivots_are_pd(ldlt, H_ff)) throw HessianNotPdError();
    const Vector y = H_fp * u0;
    value -= y.dot(ldlt.solve(y));
  }
  return value;
}

}  // namespace mjls
