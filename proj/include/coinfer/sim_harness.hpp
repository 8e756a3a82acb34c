#ifndef COINFER_SIM_HARNESS_HPP
#define COINFER_SIM_HARNESS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "coinfer/channel.hpp"
#include "coinfer/cost_model.hpp"
#include "coinfer/rng.hpp"
#include "coinfer/splitting_policy.hpp"

namespace coinfer {

struct SimResult {
  std::uint64_t trials = 0;
  double mean_etc = 0.0;
  double std_error = 0.0;
  std::vector<double> stop_histogram;  // frequency of stopping at stage n = 1..M+1
  std::uint64_t seed = 0;
  std::string rng_algorithm = kRngAlgorithm;
};

struct SimOptions {
  unsigned threads = 0;  // 0: hardware concurrency
};

struct OracleResult {
  int grid_points = 0;
  std::vector<double> thresholds;  // smallest stopping atom per stage 1..M (+inf if none)
  double expected_cost = 0.0;
};

namespace detail {

inline constexpr std::uint64_t kTrialBlock = 8192;

/// Partial statistics of one block of trials; merged in block order.
struct BlockStats {
  std::uint64_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;
  std::vector<std::uint64_t> stops;

  void add(double x) {
    ++count;
    const double delta = x - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (x - mean);
  }

  void merge(const BlockStats& o) {
    if (o.count == 0) return;
    const double n = static_cast<double>(count + o.count);
    const double delta = o.mean - mean;
    mean += delta * static_cast<double>(o.count) / n;
    m2 += o.m2 + delta * delta * static_cast<double>(count) * static_cast<double>(o.count) / n;
    count += o.count;
    for (std::size_t i = 0; i < stops.size(); ++i) stops[i] += o.stops[i];
  }
};

/// Draws gamma_1..gamma_{count} for one trial from its own substream.
inline void draw_snrs(std::span<const StageDistribution> stages, std::uint64_t seed, std::uint64_t trial,
                      std::vector<double>& out) {
  auto gen = trial_stream(seed, trial);
  for (std::size_t n = 0; n < out.size(); ++n) out[n] = stages[n].sample(gen);
}

/// Runs `body(trial, snrs, stats)` over all trials in fixed blocks, in
/// parallel, and merges block results in order.
template <class Body>
BlockStats run_blocks(std::uint64_t trials, std::size_t stage_count, std::size_t histogram_bins,
                      std::span<const StageDistribution> stages, std::uint64_t seed, const SimOptions& opts,
                      Body body) {
  const std::uint64_t blocks = (trials + kTrialBlock - 1) / kTrialBlock;
  std::vector<BlockStats> stats(blocks);
  for (auto& s : stats) s.stops.assign(histogram_bins, 0);
  unsigned workers = opts.threads ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, blocks));
  auto run = [&](unsigned worker) {
    std::vector<double> snrs(stage_count);
    for (std::uint64_t b = worker; b < blocks; b += workers) {
      const std::uint64_t end = std::min(trials, (b + 1) * kTrialBlock);
      for (std::uint64_t t = b * kTrialBlock; t < end; ++t) {
        draw_snrs(stages, seed, t, snrs);
        body(snrs, stats[b]);
      }
    }
  };
  if (workers <= 1) {
    run(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run, w);
  }
  BlockStats total;
  total.stops.assign(histogram_bins, 0);
  for (const auto& s : stats) total.merge(s);
  return total;
}

}  // namespace detail

/// Monte Carlo evaluation of a policy over independent per-stage SNR draws.
/// Deterministic for fixed (seed, trials) regardless of thread count.
inline SimResult simulate(const ThresholdPolicy& policy, const CostModel& cost,
                          std::span<const StageDistribution> stages, std::uint64_t trials, std::uint64_t seed,
                          const SimOptions& opts = {}) {
  if (trials < 1) throw std::invalid_argument("simulate: trials must be >= 1");
  detail::check_horizon(policy.horizon, cost, stages);
  const std::size_t stage_count = static_cast<std::size_t>(policy.horizon) + 1;
  const auto total = detail::run_blocks(trials, stage_count, stage_count, stages.first(stage_count), seed, opts,
                                        [&](const std::vector<double>& snrs, detail::BlockStats& s) {
                                          const auto out = apply_rule(policy, snrs, cost);
                                          s.add(out.realized_etc);
                                          ++s.stops[static_cast<std::size_t>(out.stage - 1)];
                                        });
  SimResult r;
  r.trials = trials;
  r.seed = seed;
  r.mean_etc = total.mean;
  r.std_error = trials > 1 ? std::sqrt(total.m2 / static_cast<double>(trials - 1)) / std::sqrt(static_cast<double>(trials)) : 0.0;
  for (auto c : total.stops) r.stop_histogram.push_back(static_cast<double>(c) / static_cast<double>(trials));
  return r;
}

/// Fraction of trials on which the 1-sla and the optimal rule split at the
/// same stage for the same SNR sequence.
inline double coincidence_rate(int m, const CostModel& cost, std::span<const StageDistribution> stages,
                               std::uint64_t trials, std::uint64_t seed, const SimOptions& opts = {},
                               const QuadratureOptions& quad = {}) {
  if (m < 1) throw std::out_of_range("coincidence_rate needs M >= 1");
  if (trials < 1) throw std::invalid_argument("coincidence_rate: trials must be >= 1");
  const auto optimal = backward_induction(m, cost, stages, quad);
  const auto sla = one_sla_thresholds(m, cost, stages, quad);
  const std::size_t stage_count = static_cast<std::size_t>(m) + 1;
  const auto total = detail::run_blocks(trials, stage_count, 1, stages.first(stage_count), seed, opts,
                                        [&](const std::vector<double>& snrs, detail::BlockStats& s) {
                                          ++s.count;
                                          if (stop_stage(optimal, snrs) == stop_stage(sla, snrs)) ++s.stops[0];
                                        });
  return static_cast<double>(total.stops[0]) / static_cast<double>(trials);
}

/// Exact finite-horizon DP over raw atom lists (stage n = atom_lists[n-1]).
/// Atoms need not be sorted or distinct. Shares no threshold logic with
/// backward_induction: only eta_n is taken from the cost model.
inline OracleResult oracle_dp_atoms(int m, const CostModel& cost, std::span<const std::vector<SnrAtom>> atom_lists) {
  if (m < 0 || m > cost.layer_count()) throw std::out_of_range("oracle_dp: M out of range");
  if (atom_lists.size() < static_cast<std::size_t>(m) + 1)
    throw std::invalid_argument("oracle_dp: need atoms for every stage 1..M+1");
  OracleResult out;
  out.thresholds.assign(static_cast<std::size_t>(m), kInfinity);
  for (std::size_t i = 0; i <= static_cast<std::size_t>(m); ++i)
    out.grid_points = std::max(out.grid_points, static_cast<int>(atom_lists[i].size()));

  // continuation = E[V_{n+1}] over stage n+1's atoms
  double continuation = 0.0;
  for (const auto& a : atom_lists[static_cast<std::size_t>(m)]) continuation += a.probability * cost.eta(m + 1, a.snr);
  for (int n = m; n >= 1; --n) {
    double value = 0.0;
    double first_stop = kInfinity;
    for (const auto& a : atom_lists[static_cast<std::size_t>(n - 1)]) {
      const double stop_cost = cost.eta(n, a.snr);
      if (stop_cost <= continuation) {
        value += a.probability * stop_cost;
        first_stop = std::min(first_stop, a.snr);
      } else {
        value += a.probability * continuation;
      }
    }
    out.thresholds[static_cast<std::size_t>(n - 1)] = first_stop;
    continuation = value;
  }
  out.expected_cost = continuation;
  return out;
}

inline OracleResult oracle_dp(int m, const CostModel& cost, std::span<const StageDistribution> discrete_stages) {
  if (discrete_stages.size() < static_cast<std::size_t>(m) + 1)
    throw std::invalid_argument("oracle_dp: need a law for every stage 1..M+1");
  std::vector<std::vector<SnrAtom>> lists;
  for (std::size_t i = 0; i <= static_cast<std::size_t>(std::max(m, 0)); ++i) {
    if (!discrete_stages[i].is_discrete()) throw std::invalid_argument("oracle_dp: stage laws must be discrete");
    lists.push_back(discrete_stages[i].atoms());
  }
  return oracle_dp_atoms(m, cost, lists);
}

}  // namespace coinfer

#endif  // COINFER_SIM_HARNESS_HPP
