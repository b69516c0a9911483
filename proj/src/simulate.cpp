#include "mjls/simulate.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

namespace mjls {
namespace {

// Decision source shared by the rollout overloads: the closed-loop gains
// or an arbitrary per-prefix policy.
using DecideFn =
    std::function<Vector(int t, const Vector& x_t, std::span<const Vector> u_hist,
                         std::span<const int> prefix)>;

Trajectory rollout_core(const JumpLinearModel& model, const DecideFn& decide,
                        const InitialData& init, std::span<const int> modes) {
  const int d = model.d, N = model.N;
  if (static_cast<int>(modes.size()) != N + 2)
    throw std::invalid_argument("rollout needs the modes at times 0..N+1");

  Trajectory tr;
  tr.modes.assign(modes.begin(), modes.end());
  tr.decisions = init.u_pre;  // decisions[i] = u(i-d)
  tr.states.reserve(N + 2);
  tr.states.push_back(init.x0);

  for (int k = 0; k <= N; ++k) {
    const int l = tr.modes[k];
    if (k <= N - d) {
      tr.decisions.push_back(decide(k, tr.states[k],
                                    std::span<const Vector>(tr.decisions).subspan(k, d),
                                    modes.subspan(0, k + 1)));
    }
    tr.cost += tr.states[k].dot(model.Q[l] * tr.states[k]);
    if (k >= d) tr.cost += tr.decisions[k].dot(model.R[l] * tr.decisions[k]);
    tr.states.push_back(model.A[l] * tr.states[k] + model.B[l] * tr.decisions[k]);
  }
  const int l_end = tr.modes[N + 1];
  tr.cost += tr.states[N + 1].dot(model.P_term[l_end] * tr.states[N + 1]);
  return tr;
}

double expected_cost_core(const JumpLinearModel& model, const DecideFn& decide,
                          const InitialData& init, long long path_budget) {
  const long long required = full_path_count(model);
  if (required > path_budget) throw PathBudgetError(required, path_budget);

  double total = 0.0;
  std::vector<int> modes(model.N + 2);
  for (int l0 = 0; l0 < model.L; ++l0) {
    if (model.pi0(l0) == 0.0) continue;
    modes[0] = l0;
    for (const ModePath& p : enumerate_paths(model, l0, model.N + 1)) {
      const double weight = model.pi0(l0) * p.weight;
      if (weight == 0.0) continue;
      std::copy(p.modes.begin(), p.modes.end(), modes.begin() + 1);
      total += weight * rollout_core(model, decide, init, modes).cost;
    }
  }
  return total;
}

DecideFn from_schedule(const JumpLinearModel& model, const GainSchedule& schedule) {
  return [&model, &schedule](int t, const Vector& x_t, std::span<const Vector> u_hist,
                             std::span<const int> prefix) {
    return control(model, schedule, t, prefix[t], x_t, u_hist);
  };
}

DecideFn from_policy(const PolicyFn& policy) {
  return [&policy](int t, const Vector&, std::span<const Vector>, std::span<const int> prefix) {
    return policy(t, prefix);
  };
}

}  // namespace

std::uint64_t derive_run_seed(std::uint64_t master, std::uint64_t run) {
  std::uint64_t z = master + (run + 1) * 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

int sample_index(std::mt19937_64& engine, const Vector& probs) {
  const double u = next_uniform(engine);
  double cum = 0.0;
  const int count = static_cast<int>(probs.size());
  for (int i = 0; i < count; ++i) {
    cum += probs(i);
    if (u < cum) return i;
  }
  return count - 1;  // guard against cumulative rounding shortfall
}

std::vector<int> sample_chain(const JumpLinearModel& model, std::uint64_t seed) {
  std::mt19937_64 engine(seed);
  std::vector<int> modes(model.N + 2);
  modes[0] = sample_index(engine, model.pi0);
  for (int k = 1; k <= model.N + 1; ++k)
    modes[k] = sample_index(engine, model.trans.row(modes[k - 1]).transpose());
  return modes;
}

Trajectory rollout(const JumpLinearModel& model, const GainSchedule& schedule,
                   const InitialData& init, std::span<const int> modes) {
  return rollout_core(model, from_schedule(model, schedule), init, modes);
}

Trajectory rollout(const JumpLinearModel& model, const PolicyFn& policy, const InitialData& init,
                   std::span<const int> modes) {
  return rollout_core(model, from_policy(policy), init, modes);
}

McSummary monte_carlo_cost(const JumpLinearModel& model, const GainSchedule& schedule,
                           const InitialData& init, long long runs, std::uint64_t seed,
                           int threads, std::vector<double>* run_costs) {
  if (runs < 1) throw std::invalid_argument("runs must be >= 1");

  std::vector<double> costs(static_cast<size_t>(runs));
  auto run_one = [&](long long run) {
    const auto modes = sample_chain(model, derive_run_seed(seed, static_cast<std::uint64_t>(run)));
    costs[static_cast<size_t>(run)] = rollout(model, schedule, init, modes).cost;
  };

  if (threads <= 1) {
    for (long long run = 0; run < runs; ++run) run_one(run);
  } else {
    // Fixed-size chunks claimed atomically; each run writes its own
    // slot, so the outcome cannot depend on the thread count.
    const long long chunk = 256;
    const long long chunks = (runs + chunk - 1) / chunk;
    std::atomic<long long> next{0};
    auto worker = [&] {
      for (long long c = next.fetch_add(1); c < chunks; c = next.fetch_add(1)) {
        const long long lo = c * chunk, hi = std::min(runs, lo + chunk);
        for (long long run = lo; run < hi; ++run) run_one(run);
      }
    };
    std::vector<std::thread> pool;
    const int workers = static_cast<int>(std::min<long long>(threads, chunks));
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  McSummary out;
  out.runs = runs;
  out.seed = seed;
  double sum = 0.0;
  for (double c : costs) sum += c;  // fixed run order, independent of threads
  out.mean = sum / static_cast<double>(runs);
  if (runs > 1) {
    double ss = 0.0;
    for (double c : costs) ss += (c - out.mean) * (c - out.mean);
    out.std_error = std::sqrt(ss / static_cast<double>(runs - 1) / static_cast<double>(runs));
  }
  if (run_costs) *run_costs = std::move(costs);
  return out;
}

double exact_expected_cost(const JumpLinearModel& model, const GainSchedule& schedule,
                           const InitialData& init, long long path_budget) {
  return expected_cost_core(model, from_schedule(model, schedule), init, path_budget);
}

double exact_expected_cost(const JumpLinearModel& model, const PolicyFn& policy,
                           const InitialData& init, long long path_budget) {
  return expected_cost_core(model, from_policy(policy), init, path_budget);
}

long long full_path_count(const JumpLinearModel& model) {
  long long count = 1;
  for (int i = 0; i < model.N + 2; ++i) {
    if (count > std::numeric_limits<long long>::max() / model.L)
      return std::numeric_limits<long long>::max();
    count *= model.L;
  }
  return count;
}

}  // namespace mjls
