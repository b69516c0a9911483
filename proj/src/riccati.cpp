#include "mjls/riccati.hpp"

#include <algorithm>
#include <cmath>

namespace mjls {
namespace {

constexpr double kPivotRelTol = 1e-12;

// Symmetrizes X in place and returns the relative asymmetry it removed.
double symmetrize(Matrix& X) {
  const double asym = (X - X.transpose()).cwiseAbs().maxCoeff();
  X = (0.5 * (X + X.transpose())).eval();
  return asym / std::max(1.0, X.cwiseAbs().maxCoeff());
}

bool factor_is_pd(const Eigen::LDLT<Matrix>& ldlt, const Matrix& W) {
  if (ldlt.info() != Eigen::Success) return false;
  const double threshold = kPivotRelTol * std::max(W.trace(), 0.0) / W.rows();
  return ldlt.vectorD().minCoeff() > threshold;
}

// Suffix products over a mode window: suf[i] = A[p_last] * ... * A[p_i],
// suf[size] = identity.  suf[i] is the state propagator across the
// window positions i..end, latest mode leftmost.
std::vector<Matrix> suffix_products(const JumpLinearModel& model, std::span<const int> modes) {
  std::vector<Matrix> suf(modes.size() + 1);
  suf[modes.size()] = Matrix::Identity(model.n, model.n);
  for (int i = static_cast<int>(modes.size()) - 1; i >= 0; --i)
    suf[i] = suf[i + 1] * model.A[modes[i]];
  return suf;
}

double relative_residual(const Matrix& lhs, const Matrix& rhs) {
  return (lhs - rhs).norm() / std::max(1.0, rhs.norm());
}

}  // namespace

const Matrix& RiccatiTables::alpha_entry(int g, int t, std::span<const int> tuple) const {
  if (g < 1 || g > d - 1) throw std::invalid_argument("alpha index g out of range");
  if (t < 0 || t > N) throw std::invalid_argument("alpha time out of range");
  if (static_cast<int>(tuple.size()) != d - g)
    throw std::invalid_argument("alpha tuple must hold d-g modes");
  return alpha[g - 1][t][mode_tuple_rank(L, tuple)];
}

Matrix RiccatiTables::w_solve(int t, int l, const Matrix& rhs) const {
  return W_ldlt[t][l].solve(rhs);
}

void RiccatiTables::finalize() {
  W_ldlt.assign(N + 1, std::vector<Eigen::LDLT<Matrix>>(L));
  for (int t = 0; t <= N; ++t)
    for (int l = 0; l < L; ++l)
      if (W[t][l].size() > 0) W_ldlt[t][l].compute(W[t][l]);
}

Matrix lambda_expectation(const JumpLinearModel& model, int start_mode, int span,
                          const std::function<Matrix(const ModePath&)>& f) {
  if (span < 1) throw std::invalid_argument("expectation span must be >= 1");
  Matrix acc;
  for (const ModePath& path : enumerate_paths(model, start_mode, span)) {
    Matrix value = f(path);
    if (acc.size() == 0) {
      acc = Matrix::Zero(value.rows(), value.cols());
    } else if (value.rows() != acc.rows() || value.cols() != acc.cols()) {
      throw std::invalid_argument("path functional returned inconsistent shapes");
    }
    acc += path.weight * value;
  }
  return acc;
}

Vector backward_expectation(const JumpLinearModel& model, int start_mode, int msteps,
                            const Vector& x_base, std::span<const Vector> u_applied,
                            const std::function<Matrix(std::span<const int>)>& g) {
  if (msteps < 1) throw std::invalid_argument("msteps must be >= 1");
  if (msteps > model.d)
    throw std::invalid_argument(
        "msteps exceeds the delay: the expansion would involve inputs not yet "
        "decided at the conditioning time");
  if (x_base.size() != model.n) throw std::invalid_argument("x_base must have length n");
  if (static_cast<int>(u_applied.size()) != msteps)
    throw std::invalid_argument("u_applied must hold msteps inputs");
  for (const Vector& u : u_applied)
    if (u.size() != model.m) throw std::invalid_argument("u_applied entries must have length m");

  Vector acc;
  for (const ModePath& path : enumerate_paths(model, start_mode, msteps)) {
    // Forward expansion of x(k) from the base: the mode driving step
    // base+i is start_mode for i = 0 and path.modes[i-1] after.
    Vector x = x_base;
    for (int i = 0; i < msteps; ++i) {
      const int l = (i == 0) ? start_mode : path.modes[i - 1];
      x = model.A[l] * x + model.B[l] * u_applied[i];
    }
    Matrix G = g(path.modes);
    if (G.cols() != model.n) throw std::invalid_argument("path functional must have n columns");
    if (acc.size() == 0) acc = Vector::Zero(G.rows());
    else if (G.rows() != acc.size())
      throw std::invalid_argument("path functional returned inconsistent shapes");
    acc += path.weight * (G * x);
  }
  return acc;
}

RiccatiTables solve_riccati(const JumpLinearModel& model) {
  const int n = model.n, m = model.m, L = model.L, d = model.d, N = model.N;

  RiccatiTables tb;
  tb.n = n;
  tb.m = m;
  tb.L = L;
  tb.d = d;
  tb.N = N;

  tb.W.assign(N + 1, std::vector<Matrix>(L, Matrix::Zero(m, m)));
  tb.T.assign(d, std::vector<std::vector<Matrix>>(N + 1, std::vector<Matrix>(L)));
  for (int j = 0; j < d; ++j)
    for (int t = 0; t <= N; ++t)
      for (int l = 0; l < L; ++l) tb.T[j][t][l] = Matrix::Zero(m, j == 0 ? n : m);
  tb.P.assign(N + 1, std::vector<Matrix>(L, Matrix::Zero(n, n)));
  tb.P0.assign(N + 1, std::vector<Matrix>(L, Matrix::Zero(n, n)));
  tb.delta.assign(std::max(0, d - 1),
                  std::vector<std::vector<Matrix>>(N + 1, std::vector<Matrix>(L, Matrix::Zero(m, n))));
  tb.alpha.resize(std::max(0, d - 1));
  for (int g = 1; g <= d - 1; ++g) {
    long long tuples = 1;
    for (int i = 0; i < d - g; ++i) tuples *= L;
    tb.alpha[g - 1].assign(N + 1, std::vector<Matrix>(tuples, Matrix::Zero(m, n)));
  }
  tb.W_ldlt.assign(N + 1, std::vector<Eigen::LDLT<Matrix>>(L));

  // Terminal window placeholders: identity curvature, zero couplings.
  // They let every recursion read times up to N uniformly; a placeholder
  // is only ever multiplied by one of the zero T blocks next to it.
  for (int t = N - d + 1; t <= N; ++t)
    for (int l = 0; l < L; ++l) {
      tb.W[t][l] = Matrix::Identity(m, m);
      tb.W_ldlt[t][l].compute(tb.W[t][l]);
    }

  // One-step conditioning of the terminal weight.
  for (int l = 0; l < L; ++l) {
    Matrix acc = Matrix::Zero(n, n);
    for (int lp = 0; lp < L; ++lp) acc += model.trans(l, lp) * model.P_term[lp];
    tb.max_asymmetry = std::max(tb.max_asymmetry, symmetrize(acc));
    tb.P[N][l] = acc;
  }

  // Path enumerations reused across the sweep: paths_from[l][s-1] holds
  // the s-step paths out of mode l.
  std::vector<std::vector<std::vector<ModePath>>> paths_from(L);
  for (int l = 0; l < L; ++l) {
    paths_from[l].resize(d);
    for (int s = 1; s <= d; ++s) paths_from[l][s - 1] = enumerate_paths(model, l, s);
  }

  for (int k = N; k >= 1; --k) {
    const int tw = k - d;  // decision time whose W/T this iteration produces

    if (tw >= 0) {
      // Effective cost-to-go weight at the application time k.
      std::vector<Matrix> bt_peff(L);
      for (int e = 0; e < L; ++e)
        bt_peff[e] = model.B[e].transpose() * (tb.P[k][e] - tb.P0[k][e]);

      // Pre-solved corrections W[k-s][e]^{-1} T[jj][k-s][e].
      std::vector<std::vector<std::vector<Matrix>>> csol(d);
      for (int s = 1; s <= d - 1; ++s) {
        csol[s].assign(L, std::vector<Matrix>(d));
        for (int e = 0; e < L; ++e)
          for (int jj = 0; jj < d; ++jj)
            csol[s][e][jj] = tb.W_ldlt[k - s][e].solve(tb.T[jj][k - s][e]);
      }

      for (int l = 0; l < L; ++l) {
        Matrix w_acc = Matrix::Zero(m, m);
        Matrix t0_acc = Matrix::Zero(m, n);
        std::vector<Matrix> tj_acc(d, Matrix::Zero(m, m));

        // Field of the decision through the delay: d-step expectations
        // of the application-time curvature and couplings.
        for (const ModePath& p : paths_from[l][d - 1]) {
          if (p.weight == 0.0) continue;
          const int e = p.modes[d - 1];
          const auto suf = suffix_products(model, p.modes);
          w_acc.noalias() += p.weight * (bt_peff[e] * model.B[e] + model.R[e]);
          t0_acc.noalias() += p.weight * (bt_peff[e] * suf[0]);
          for (int j = 1; j <= d - 1; ++j)
            tj_acc[j].noalias() += p.weight * (bt_peff[e] * suf[j] * model.B[p.modes[j - 1]]);
        }

        // Minus what the s in-between decisions will themselves recover.
        for (int s = 1; s <= d - 1; ++s) {
          const int ts = k - s;
          for (const ModePath& p : paths_from[l][d - s - 1]) {
            if (p.weight == 0.0) continue;
            const int e = p.modes[d - s - 1];
            const Matrix ts_t = tb.T[s][ts][e].transpose();
            const auto suf = suffix_products(model, p.modes);
            w_acc.noalias() -= p.weight * (ts_t * csol[s][e][s]);
            t0_acc.noalias() -= p.weight * (ts_t * csol[s][e][0] * suf[0]);
            for (int j = 1; j <= d - 1; ++j) {
              if (s <= d - j)
                tj_acc[j].noalias() -=
                    p.weight * (ts_t * csol[s][e][0] * suf[j] * model.B[p.modes[j - 1]]);
              else
                tj_acc[j].noalias() -= p.weight * (ts_t * csol[s][e][s - (d - j)]);
            }
          }
        }

        tb.max_asymmetry = std::max(tb.max_asymmetry, symmetrize(w_acc));
        tb.W[tw][l] = w_acc;
        tb.T[0][tw][l] = t0_acc;
        for (int j = 1; j <= d - 1; ++j) tb.T[j][tw][l] = tj_acc[j];

        tb.W_ldlt[tw][l].compute(w_acc);
        if (!factor_is_pd(tb.W_ldlt[tw][l], w_acc)) {
          tb.solvable = false;
          tb.fail_t = tw;
          tb.fail_mode = l;
          return tb;  // halt; everything computed so far stays for diagnosis
        }
      }
    }

    const int tp = k - 1;  // time whose P/P0/delta/alpha this iteration produces

    for (int l = 0; l < L; ++l) {
      Matrix acc = Matrix::Zero(n, n);
      for (int lp = 0; lp < L; ++lp) {
        const Matrix peff = tb.P[k][lp] - tb.P0[k][lp];
        acc.noalias() +=
            model.trans(l, lp) * (model.Q[lp] + model.A[lp].transpose() * peff * model.A[lp]);
      }
      tb.max_asymmetry = std::max(tb.max_asymmetry, symmetrize(acc));
      tb.P[tp][l] = acc;
    }

    if (tp <= N - d) {
      for (int l = 0; l < L; ++l) {
        Matrix p0 = tb.T[0][tp][l].transpose() * tb.W_ldlt[tp][l].solve(tb.T[0][tp][l]);
        tb.max_asymmetry = std::max(tb.max_asymmetry, symmetrize(p0));
        tb.P0[tp][l] = p0;
      }
    }

    if (d >= 2) {
      // Costate propagation terms.  In the terminal window T[0] is an
      // exact zero, so the recovery term vanishes identically there.
      for (int l = 0; l < L; ++l) {
        Matrix drive = Matrix::Zero(n, m);
        for (int lp = 0; lp < L; ++lp) {
          const Matrix peff = tb.P[k][lp] - tb.P0[k][lp];
          drive.noalias() +=
              model.trans(l, lp) * (model.A[lp].transpose() * peff * model.B[lp]);
        }
        const Matrix recover =
            tb.T[0][tp][l].transpose() * tb.W_ldlt[tp][l].solve(tb.T[1][tp][l]);
        tb.delta[0][tp][l] = (drive - recover).transpose();
      }
      for (int j = 2; j <= d - 1; ++j) {
        for (int l = 0; l < L; ++l) {
          Matrix drive = Matrix::Zero(n, m);
          for (int lp = 0; lp < L; ++lp)
            drive.noalias() +=
                model.trans(l, lp) * (model.A[lp].transpose() * tb.delta[j - 2][k][lp].transpose());
          const Matrix recover =
              tb.T[0][tp][l].transpose() * tb.W_ldlt[tp][l].solve(tb.T[j][tp][l]);
          tb.delta[j - 1][tp][l] = (drive - recover).transpose();
        }
      }

      // Costate correction terms, keyed by the realized mode tuple.  The
      // tuple spans times tp-j+1..tp; corrections referencing deeper
      // history than time 0 cannot occur, those slots stay zero unused.
      for (int l = 0; l < L; ++l) tb.alpha[d - 2][tp][l] = tb.delta[d - 2][tp][l];
      std::vector<int> tuple;
      for (int j = 2; j <= d - 1; ++j) {
        if (tp - j + 1 < 0) continue;
        const int g = d - j;
        long long tuples = 1;
        for (int i = 0; i < j; ++i) tuples *= L;
        tuple.assign(j, 0);
        for (long long rank = 0; rank < tuples; ++rank) {
          long long r = rank;
          for (int i = j - 1; i >= 0; --i) {
            tuple[i] = static_cast<int>(r % L);
            r /= L;
          }
          Matrix acc = tb.delta[g - 1][tp][tuple[j - 1]].transpose();
          for (int s = 1; s <= j - 1; ++s) {
            const int l_past = tuple[j - 1 - s];  // mode at time tp - s
            const long long suffix_rank =
                mode_tuple_rank(L, std::span<const int>(tuple).subspan(j - s));
            acc.noalias() -= tb.alpha[d - s - 1][tp][suffix_rank].transpose() *
                             tb.W_ldlt[tp - s][l_past].solve(tb.T[d - j + s][tp - s][l_past]);
          }
          tb.alpha[g - 1][tp][rank] = acc.transpose();
        }
      }
    }
  }

  return tb;
}

double check_proposition1(const JumpLinearModel& model, const RiccatiTables& tb) {
  if (!tb.solvable) throw NotSolvableError(tb.fail_t, tb.fail_mode);
  const int L = model.L, d = model.d, N = model.N;
  if (d == 1) return 0.0;  // no correction tables exist

  double worst = 0.0;
  auto track = [&](const Matrix& lhs, const Matrix& rhs) {
    worst = std::max(worst, relative_residual(lhs, rhs));
  };

  // (i)/(iii): one-step expectations of the deepest correction reproduce
  // the state and first-decision couplings.
  for (int t = 0; t <= N - 1; ++t) {
    for (int l = 0; l < L; ++l) {
      Matrix lhs_a = Matrix::Zero(model.n, model.m);
      Matrix lhs_b = Matrix::Zero(model.m, model.m);
      for (int lp = 0; lp < L; ++lp) {
        const Matrix at = tb.alpha[d - 2][t + 1][lp].transpose();
        lhs_a.noalias() += model.trans(l, lp) * (model.A[lp].transpose() * at);
        lhs_b.noalias() += model.trans(l, lp) * (model.B[lp].transpose() * at);
      }
      track(lhs_a, tb.T[0][t][l].transpose());
      track(lhs_b, tb.T[1][t][l].transpose());
    }
  }

  // (ii): one-step expectation over the newest tuple entry promotes a
  // correction to the next-shallower one.
  std::vector<int> tuple;
  for (int j = 2; j <= d - 1; ++j) {
    const int g = d - j;
    long long tuples = 1;
    for (int i = 0; i < j - 1; ++i) tuples *= L;
    for (int t = std::max(0, j - 2); t <= N - 1; ++t) {
      tuple.assign(j - 1, 0);
      for (long long rank = 0; rank < tuples; ++rank) {
        long long r = rank;
        for (int i = j - 2; i >= 0; --i) {
          tuple[i] = static_cast<int>(r % L);
          r /= L;
        }
        Matrix lhs = Matrix::Zero(model.n, model.m);
        for (int lp = 0; lp < L; ++lp)
          lhs.noalias() += model.trans(tuple[j - 2], lp) *
                           (model.A[lp].transpose() * tb.alpha[g - 1][t + 1][rank * L + lp].transpose());
        track(lhs, tb.alpha[g][t][rank].transpose());
      }
    }
  }

  // (iv): j-step expectations of the depth-j correction reproduce T[j].
  for (int j = 2; j <= d - 1; ++j) {
    const int g = d - j;
    for (int tau = 0; tau <= N - j; ++tau) {
      for (int l = 0; l < L; ++l) {
        Matrix lhs = Matrix::Zero(model.m, model.m);
        for (const ModePath& p : enumerate_paths(model, l, j)) {
          if (p.weight == 0.0) continue;
          lhs.noalias() += p.weight * (model.B[p.modes[j - 1]].transpose() *
                                       tb.alpha[g - 1][tau + j][mode_tuple_rank(L, p.modes)].transpose());
        }
        track(lhs, tb.T[j][tau][l].transpose());
      }
    }
  }

  return worst;
}

}  // namespace mjls
