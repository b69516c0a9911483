#include "mjls/model.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace mjls {
namespace {

constexpr double kStochasticTol = 1e-12;
constexpr double kSymmetryTol = 1e-12;
constexpr double kPsdRelTol = 1e-10;

std::string matrix_name(const char* base, int mode) {
  return std::string(base) + "[" + std::to_string(mode + 1) + "]";
}

void check_weight_matrix(const Matrix& X, const std::string& name, bool strictly_pd,
                         std::vector<std::string>& out) {
  const double asym = (X - X.transpose()).cwiseAbs().maxCoeff();
  if (asym >= kSymmetryTol) {
    out.push_back(name + " is not symmetric (max |X - X'| = " + std::to_string(asym) + ")");
    return;  // eigenvalue test below assumes symmetry
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(X);
  const double min_eig = es.eigenvalues().minCoeff();
  const double scale = std::max(1.0, X.cwiseAbs().maxCoeff());
  if (strictly_pd) {
    if (min_eig <= 0.0)
      out.push_back(name + " is not positive definite (min eigenvalue = " +
                    std::to_string(min_eig) + ")");
  } else if (min_eig < -kPsdRelTol * scale) {
    out.push_back(name + " is not positive semidefinite (min eigenvalue = " +
                  std::to_string(min_eig) + ")");
  }
}

}  // namespace

JumpLinearModel JumpLinearModel::symmetrized() const {
  JumpLinearModel out = *this;
  auto sym = [](std::vector<Matrix>& mats) {
    for (Matrix& X : mats) X = 0.5 * (X + X.transpose()).eval();
  };
  sym(out.Q);
  sym(out.R);
  sym(out.P_term);
  return out;
}

ValidationReport validate_model(const JumpLinearModel& model) {
  ValidationReport report;
  auto& out = report.violations;

  if (model.n < 1) out.push_back("n must be >= 1");
  if (model.m < 1) out.push_back("m must be >= 1");
  if (model.L < 1) out.push_back("L must be >= 1");
  if (model.d < 1) out.push_back("d must be >= 1");
  if (model.N <= model.d) out.push_back("N must exceed the delay d");
  if (!out.empty()) return report;  // dimension checks below would be meaningless

  auto check_family = [&](const std::vector<Matrix>& mats, const char* base, int rows, int cols) {
    if (static_cast<int>(mats.size()) != model.L) {
      out.push_back(std::string(base) + " must hold one matrix per mode");
      return false;
    }
    bool ok = true;
    for (int l = 0; l < model.L; ++l) {
      if (mats[l].rows() != rows || mats[l].cols() != cols) {
        out.push_back(matrix_name(base, l) + " must be " + std::to_string(rows) + "x" +
                      std::to_string(cols));
        ok = false;
      } else if (!mats[l].allFinite()) {
        out.push_back(matrix_name(base, l) + " has non-finite entries");
        ok = false;
      }
    }
    return ok;
  };

  check_family(model.A, "A", model.n, model.n);
  check_family(model.B, "B", model.n, model.m);
  const bool q_ok = check_family(model.Q, "Q", model.n, model.n);
  const bool r_ok = check_family(model.R, "R", model.m, model.m);
  const bool p_ok = check_family(model.P_term, "P_term", model.n, model.n);

  for (int l = 0; l < model.L; ++l) {
    if (q_ok) check_weight_matrix(model.Q[l], matrix_name("Q", l), false, out);
    if (r_ok) check_weight_matrix(model.R[l], matrix_name("R", l), true, out);
    if (p_ok) check_weight_matrix(model.P_term[l], matrix_name("P_term", l), false, out);
  }

  if (model.trans.rows() != model.L || model.trans.cols() != model.L) {
    out.push_back("trans must be LxL");
  } else if (!model.trans.allFinite()) {
    out.push_back("trans has non-finite entries");
  } else {
    for (int l = 0; l < model.L; ++l) {
      if (model.trans.row(l).minCoeff() < 0.0)
        out.push_back("trans row " + std::to_string(l + 1) + " has a negative entry");
      if (std::abs(model.trans.row(l).sum() - 1.0) >= kStochasticTol)
        out.push_back("trans row " + std::to_string(l + 1) + " does not sum to 1");
    }
  }

  if (model.pi0.size() != model.L) {
    out.push_back("pi0 must have length L");
  } else if (!model.pi0.allFinite()) {
    out.push_back("pi0 has non-finite entries");
  } else {
    if (model.pi0.minCoeff() < 0.0) out.push_back("pi0 has a negative entry");
    if (std::abs(model.pi0.sum() - 1.0) >= kStochasticTol) out.push_back("pi0 does not sum to 1");
  }

  return report;
}

ValidationReport validate_initial(const JumpLinearModel& model, const InitialData& init) {
  ValidationReport report;
  auto& out = report.violations;
  if (init.x0.size() != model.n) out.push_back("x0 must have length n");
  if (static_cast<int>(init.u_pre.size()) != model.d) {
    out.push_back("u_pre must hold d inputs u(-d)..u(-1)");
  } else {
    for (int i = 0; i < model.d; ++i)
      if (init.u_pre[i].size() != model.m)
        out.push_back("u_pre[" + std::to_string(i) + "] must have length m");
  }
  for (const auto& v : init.u_pre)
    if (!v.allFinite()) out.push_back("u_pre has non-finite entries");
  if (init.x0.size() == model.n && !init.x0.allFinite()) out.push_back("x0 has non-finite entries");
  return report;
}

std::vector<ModePath> enumerate_paths(const JumpLinearModel& model, int start_mode, int steps) {
  if (start_mode < 0 || start_mode >= model.L) throw std::invalid_argument("start mode out of range");
  if (steps < 0) throw std::invalid_argument("steps must be >= 0");

  std::vector<ModePath> paths;
  if (steps == 0) {
    paths.push_back(ModePath{{}, 1.0});
    return paths;
  }

  long long count = 1;
  for (int s = 0; s < steps; ++s) count *= model.L;
  paths.reserve(static_cast<size_t>(count));

  // Lexicographic odometer over the mode digits, weights maintained as
  // running products down the current prefix.
  std::vector<int> modes(steps, 0);
  std::vector<double> prefix_weight(steps + 1, 1.0);
  auto reweight_from = [&](int pos) {
    for (int i = pos; i < steps; ++i) {
      const int from = (i == 0) ? start_mode : modes[i - 1];
      prefix_weight[i + 1] = prefix_weight[i] * model.trans(from, modes[i]);
    }
  };
  reweight_from(0);
  while (true) {
    paths.push_back(ModePath{modes, prefix_weight[steps]});
    int pos = steps - 1;
    while (pos >= 0 && modes[pos] == model.L - 1) modes[pos--] = 0;
    if (pos < 0) break;
    ++modes[pos];
    reweight_from(pos);
  }
  return paths;
}

Matrix f_product(const JumpLinearModel& model, std::span<const int> modes) {
  Matrix out = Matrix::Identity(model.n, model.n);
  for (int l : modes) out = (model.A[l] * out).eval();  // latest mode multiplies from the left
  return out;
}

long long mode_tuple_rank(int L, std::span<const int> modes) {
  long long rank = 0;
  for (int l : modes) rank = rank * L + l;
  return rank;
}

}  // namespace mjls
