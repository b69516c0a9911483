#include "mjls/controller.hpp"

#include <cmath>

namespace mjls {
namespace {

// States x(0..t+1) and decisions u(0..t-d) of the closed loop along a
// realized mode prefix theta(0..t).  decisions[i] = u(i-d) covers the
// pre-horizon inputs first, so the applied input at step k is
// decisions[k] throughout.
struct PrefixRollout {
  std::vector<Vector> states;
  std::vector<Vector> decisions;
};

PrefixRollout roll_prefix(const JumpLinearModel& model, const RiccatiTables& tb,
                          std::span<const int> prefix, const InitialData& init) {
  const int d = model.d;
  const int t = static_cast<int>(prefix.size()) - 1;

  PrefixRollout out;
  out.states.reserve(t + 2);
  out.decisions = init.u_pre;
  out.states.push_back(init.x0);

  for (int k = 0; k <= t; ++k) {
    const int l = prefix[k];
    if (k <= model.N - d) {
      // Decision at time k: gains on the one-step prediction plus the
      // in-flight decisions u(k-d+1..k-1); decisions[k] is u(k-d).
      const Vector x_pred = model.A[l] * out.states[k] + model.B[l] * out.decisions[k];
      Vector u = -tb.w_solve(k, l, tb.T[0][k][l]) * x_pred;
      for (int j = 1; j <= d - 1; ++j)
        u -= tb.w_solve(k, l, tb.T[j][k][l]) * out.decisions[k + j];
      out.decisions.push_back(u);
    }
    out.states.push_back(model.A[l] * out.states[k] + model.B[l] * out.decisions[k]);
  }
  return out;
}

// The correction sum both the costate and the cost identity share:
//   sum_{s=1..d-1} alpha^{d-s}[t][tuple]' W[t-s][theta(t-s)]^{-1}
//                  E{ alpha^{d-s} x(t+1) | time t-s }
// evaluated along a realized prefix with the rolled-out states/inputs.
Vector alpha_correction(const JumpLinearModel& model, const RiccatiTables& tb, int t,
                        std::span<const int> prefix, const PrefixRollout& roll) {
  const int d = model.d;
  Vector total = Vector::Zero(model.n);

  for (int s = 1; s <= d - 1; ++s) {
    const int g = d - s;
    const auto tuple = prefix.subspan(t - s + 1, s);
    const Matrix& a_here = tb.alpha_entry(g, t, tuple);
    if (a_here.isZero(0.0)) continue;  // exact zeros near the horizon end

    // E{ alpha^{d-s} x(t+1) | time t-s }: expansion over s+1 steps from
    // the measurable base x(t-s); the functional reads the modes at
    // times t-s+1..t, the last path entry (time t+1) is free.
    const int base = t - s;
    std::vector<Vector> u_applied(s + 1);
    for (int i = 0; i <= s; ++i) u_applied[i] = roll.decisions[base + i];
    const Vector expect = backward_expectation(
        model, prefix[base], s + 1, roll.states[base], u_applied,
        [&](std::span<const int> modes) -> Matrix {
          return tb.alpha_entry(g, t, modes.subspan(0, s));
        });

    total += a_here.transpose() * tb.w_solve(base, prefix[base], Matrix(expect));
  }
  return total;
}

}  // namespace

GainSchedule gains(const RiccatiTables& tb) {
  if (!tb.solvable) throw NotSolvableError(tb.fail_t, tb.fail_mode);

  GainSchedule gs;
  gs.n = tb.n;
  gs.m = tb.m;
  gs.L = tb.L;
  gs.d = tb.d;
  gs.N = tb.N;

  const int decisions = tb.N - tb.d + 1;
  gs.K_x.assign(decisions, std::vector<Matrix>(tb.L));
  gs.K_u.assign(std::max(0, tb.d - 1),
                std::vector<std::vector<Matrix>>(decisions, std::vector<Matrix>(tb.L)));
  for (int t = 0; t < decisions; ++t)
    for (int l = 0; l < tb.L; ++l) {
      gs.K_x[t][l] = tb.w_solve(t, l, tb.T[0][t][l]);
      for (int j = 1; j <= tb.d - 1; ++j) gs.K_u[j - 1][t][l] = tb.w_solve(t, l, tb.T[j][t][l]);
    }
  return gs;
}

Vector control(const JumpLinearModel& model, const GainSchedule& schedule, int t, int mode,
               const Vector& x_t, std::span<const Vector> u_hist) {
  if (t < 0 || t > model.N - model.d)
    throw std::invalid_argument("decision time outside 0..N-d");
  if (mode < 0 || mode >= model.L) throw std::invalid_argument("mode out of range");
  if (static_cast<int>(u_hist.size()) != model.d)
    throw std::invalid_argument("u_hist must hold the d in-flight decisions u(t-d)..u(t-1)");

  const Vector x_pred = model.A[mode] * x_t + model.B[mode] * u_hist[0];
  Vector u = -schedule.K_x[t][mode] * x_pred;
  for (int j = 1; j <= model.d - 1; ++j) u -= schedule.K_u[j - 1][t][mode] * u_hist[j];
  return u;
}

Vector costate(const JumpLinearModel& model, const RiccatiTables& tb, int t,
               std::span<const int> prefix, const InitialData& init) {
  if (!tb.solvable) throw NotSolvableError(tb.fail_t, tb.fail_mode);
  if (t < model.d - 1 || t > model.N)
    throw std::invalid_argument(
        "costate identity holds for t = d-1..N; earlier times precede the first "
        "optimally chosen decision's application");
  if (static_cast<int>(prefix.size()) != t + 1)
    throw std::invalid_argument("prefix must hold the modes at times 0..t");

  const PrefixRollout roll = roll_prefix(model, tb, prefix, init);
  const int l_t = prefix[t];
  const Vector& x_next = roll.states[t + 1];

  Vector lam = (tb.P[t][l_t] - tb.P0[t][l_t]) * x_next;
  lam -= alpha_correction(model, tb, t, prefix, roll);
  return lam;
}

double optimal_cost(const JumpLinearModel& model, const RiccatiTables& tb,
                    const InitialData& init) {
  if (!tb.solvable) throw NotSolvableError(tb.fail_t, tb.fail_mode);
  const int d = model.d;

  double total = 0.0;
  for (int l0 = 0; l0 < model.L; ++l0) {
    if (model.pi0(l0) == 0.0) continue;
    for (const ModePath& p : enumerate_paths(model, l0, d - 1)) {
      const double weight = model.pi0(l0) * p.weight;
      if (weight == 0.0) continue;

      std::vector<int> prefix(d);
      prefix[0] = l0;
      for (int i = 1; i < d; ++i) prefix[i] = p.modes[i - 1];

      // Pre-decision segment: driven entirely by the in-flight inputs.
      PrefixRollout roll;
      roll.decisions = init.u_pre;
      roll.states.push_back(init.x0);
      double run = 0.0;
      for (int k = 0; k < d; ++k) {
        run += roll.states[k].dot(model.Q[prefix[k]] * roll.states[k]);
        roll.states.push_back(model.A[prefix[k]] * roll.states[k] +
                              model.B[prefix[k]] * roll.decisions[k]);
      }

      const Vector& x_d = roll.states[d];
      const int l_last = prefix[d - 1];
      run += x_d.dot((tb.P[d - 1][l_last] - tb.P0[d - 1][l_last]) * x_d);
      run -= x_d.dot(alpha_correction(model, tb, d - 1, prefix, roll));

      total += weight * run;
    }
  }
  return total;
}

}  // namespace mjls
