#ifndef COINFER_SPLITTING_POLICY_HPP
#define COINFER_SPLITTING_POLICY_HPP

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "coinfer/channel.hpp"
#include "coinfer/cost_model.hpp"

namespace coinfer {

enum class RuleKind { optimal, one_sla, custom };

inline std::string_view to_string(RuleKind k) {
  switch (k) {
    case RuleKind::optimal: return "optimal";
    case RuleKind::one_sla: return "one_sla";
    case RuleKind::custom: return "custom";
  }
  return "unknown";
}

/// Stopping rule for a placement of M layers: stop at the first stage
/// n <= M whose SNR reaches thresholds[n-1], otherwise at stage M+1.
/// A threshold of +inf means the rule never stops at that stage.
struct ThresholdPolicy {
  int horizon = 0;                  // M
  std::vector<double> thresholds;   // stages 1..M
  RuleKind rule = RuleKind::custom;
  std::vector<double> value_table;  // E(V_n), n = 1..M+1; optimal rule only

  /// Threshold of stage n in [1, M].
  double threshold(int n) const { return thresholds.at(static_cast<std::size_t>(n - 1)); }
};

struct SplitOutcome {
  int stage = 1;
  double snr_at_stop = 0.0;
  double realized_etc = 0.0;
};

namespace detail {

inline void check_horizon(int m, const CostModel& cost, std::span<const StageDistribution> stages) {
  if (m < 0 || m > cost.layer_count())
    throw std::out_of_range("placement M must lie in [0, " + std::to_string(cost.layer_count()) + "]");
  if (stages.size() < static_cast<std::size_t>(m) + 1)
    throw std::invalid_argument("need a channel law for every stage 1..M+1");
}

inline const StageDistribution& stage_law(std::span<const StageDistribution> stages, int n) {
  return stages[static_cast<std::size_t>(n - 1)];
}

/// 2^x - 1 without cancellation for small x; +inf once x overflows.
inline double snr_for_rate_exponent(double x) {
  if (x > 1023.0) return kInfinity;
  return std::expm1(x * std::numbers::ln2);
}

inline double inverse_log2_rate(double gamma) { return std::numbers::ln2 / std::log1p(gamma); }

}  // namespace detail

/// E[1/R] under one stage law.
inline double mean_inverse_rate(const StageDistribution& dist, const SystemParams& params,
                                const QuadratureOptions& opts = {}) {
  return dist.expect(detail::inverse_log2_rate, opts) / params.bandwidth_hz;
}

/// Integral of (1/R) f over [t, inf): the stopping part of a threshold t.
inline double upper_inverse_rate(const StageDistribution& dist, double t, const SystemParams& params,
                                 const QuadratureOptions& opts = {}) {
  return dist.partial_expect(detail::inverse_log2_rate, t, kInfinity, opts) / params.bandwidth_hz;
}

/// Integral of (1/R) f over [support_lo, t).
inline double lower_inverse_rate(const StageDistribution& dist, double t, const SystemParams& params,
                                 const QuadratureOptions& opts = {}) {
  if (t <= dist.support_lo()) return 0.0;
  return dist.partial_expect(detail::inverse_log2_rate, dist.support_lo(), t, opts) / params.bandwidth_hz;
}

/// Optimal stopping rule for horizon M+1 by backward induction.
///
/// E(V_{M+1}) = omega_{M+1} + c_{M+1} E[1/R_{M+1}]; for n = M..1 the
/// threshold equalises eta_n with E(V_{n+1}) and
/// E(V_n) = omega_n (1-F) + c_n int_{t}^{inf} f/R + E(V_{n+1}) F.
/// M = 0 yields an empty rule whose table holds E(V_1^{(1)}).
inline ThresholdPolicy backward_induction(int m, const CostModel& cost,
                                          std::span<const StageDistribution> stages,
                                          const QuadratureOptions& opts = {}) {
  detail::check_horizon(m, cost, stages);
  const auto& params = cost.params();
  ThresholdPolicy policy;
  policy.horizon = m;
  policy.rule = RuleKind::optimal;
  policy.thresholds.assign(static_cast<std::size_t>(m), kInfinity);
  policy.value_table.assign(static_cast<std::size_t>(m) + 1, 0.0);

  double next_value = cost.omega(m + 1) +
                      cost.offload_coefficient(m + 1) * mean_inverse_rate(detail::stage_law(stages, m + 1), params, opts);
  policy.value_table[static_cast<std::size_t>(m)] = next_value;
  for (int n = m; n >= 1; --n) {
    const auto& law = detail::stage_law(stages, n);
    const double gap = next_value - cost.omega(n);
    double value = next_value;  // never stopping here leaves the value unchanged
    double t = kInfinity;
    if (gap > 0.0) {
      t = detail::snr_for_rate_exponent(cost.offload_coefficient(n) / (params.bandwidth_hz * gap));
      const double cont = law.prob_below(t);
      value = cost.omega(n) * (1.0 - cont) + cost.offload_coefficient(n) * upper_inverse_rate(law, t, params, opts) +
              next_value * cont;
    }
    policy.thresholds[static_cast<std::size_t>(n - 1)] = t;
    policy.value_table[static_cast<std::size_t>(n - 1)] = value;
    next_value = value;
  }
  return policy;
}

/// One-stage look-ahead thresholds for every stage 1..N. Stage n compares
/// stopping now against continuing exactly one stage, so the threshold does
/// not depend on M.
inline std::vector<double> one_sla_threshold_table(const CostModel& cost, std::span<const StageDistribution> stages,
                                                   const QuadratureOptions& opts = {}) {
  const int n_layers = cost.layer_count();
  if (stages.size() < static_cast<std::size_t>(n_layers) + 1)
    throw std::invalid_argument("need a channel law for every stage 1..N+1");
  const auto& params = cost.params();
  std::vector<double> table(static_cast<std::size_t>(n_layers), kInfinity);
  for (int n = 1; n <= n_layers; ++n) {
    const double next_offload =
        cost.offload_coefficient(n + 1) * mean_inverse_rate(detail::stage_law(stages, n + 1), params, opts);
    const double denom = next_offload + cost.omega_increment(n);
    if (denom > 0.0)
      table[static_cast<std::size_t>(n - 1)] =
          detail::snr_for_rate_exponent(cost.offload_coefficient(n) / (params.bandwidth_hz * denom));
  }
  return table;
}

/// 1-sla rule for horizon M built from a precomputed threshold table.
inline ThresholdPolicy one_sla_policy(int m, const std::vector<double>& table) {
  if (m < 0 || static_cast<std::size_t>(m) > table.size()) throw std::out_of_range("placement M out of range");
  ThresholdPolicy policy;
  policy.horizon = m;
  policy.rule = RuleKind::one_sla;
  policy.thresholds.assign(table.begin(), table.begin() + m);
  return policy;
}

inline ThresholdPolicy one_sla_thresholds(int m, const CostModel& cost, std::span<const StageDistribution> stages,
                                          const QuadratureOptions& opts = {}) {
  detail::check_horizon(m, cost, stages);
  if (m == 0) return one_sla_policy(0, {});
  // Stages beyond M+1 are never consulted; pad so the table can be built for N.
  std::vector<StageDistribution> padded(stages.begin(), stages.end());
  while (padded.size() < static_cast<std::size_t>(cost.layer_count()) + 1) padded.push_back(padded.back());
  auto table = one_sla_threshold_table(cost, padded, opts);
  table.resize(static_cast<std::size_t>(m));
  return one_sla_policy(m, table);
}

/// Rule that always splits at stage 1.
inline ThresholdPolicy stop_immediately_policy(int m) {
  return {.horizon = m, .thresholds = std::vector<double>(static_cast<std::size_t>(m), 0.0), .rule = RuleKind::custom, .value_table = {}};
}

/// Rule that always runs every placed layer and splits at stage M+1.
inline ThresholdPolicy never_stop_early_policy(int m) {
  return {.horizon = m, .thresholds = std::vector<double>(static_cast<std::size_t>(m), kInfinity), .rule = RuleKind::custom, .value_table = {}};
}

/// First stage n <= M with gamma_n >= threshold_n, else M+1.
inline int stop_stage(const ThresholdPolicy& policy, std::span<const double> snr_seq) {
  if (snr_seq.size() < static_cast<std::size_t>(policy.horizon) + 1)
    throw std::invalid_argument("snr sequence shorter than M+1");
  for (int n = 1; n <= policy.horizon; ++n)
    if (snr_seq[static_cast<std::size_t>(n - 1)] >= policy.threshold(n)) return n;
  return policy.horizon + 1;
}

inline SplitOutcome apply_rule(const ThresholdPolicy& policy, std::span<const double> snr_seq, const CostModel& cost) {
  const int stage = stop_stage(policy, snr_seq);
  const double snr = snr_seq[static_cast<std::size_t>(stage - 1)];
  return {.stage = stage, .snr_at_stop = snr, .realized_etc = cost.eta(stage, snr)};
}

/// Pr{S = n} for n = 1..M+1.
inline std::vector<double> stop_probabilities(const ThresholdPolicy& policy, std::span<const StageDistribution> stages) {
  if (stages.size() < static_cast<std::size_t>(policy.horizon) + 1)
    throw std::invalid_argument("need a channel law for every stage 1..M+1");
  std::vector<double> probs;
  probs.reserve(static_cast<std::size_t>(policy.horizon) + 1);
  double reach = 1.0;
  for (int n = 1; n <= policy.horizon; ++n) {
    const double cont = detail::stage_law(stages, n).prob_below(policy.threshold(n));
    probs.push_back(reach * (1.0 - cont));
    reach *= cont;
  }
  probs.push_back(reach);
  return probs;
}

/// Per-stage analytic breakdown of a policy.
struct PolicyEvaluation {
  std::vector<double> stop_probability;  // Pr{S = n}
  std::vector<double> conditional_etc;   // E[eta_S | S = n]; 0 where Pr{S = n} = 0
  double expected_etc = 0.0;
};

inline PolicyEvaluation evaluate_policy(const ThresholdPolicy& policy, const CostModel& cost,
                                        std::span<const StageDistribution> stages,
                                        const QuadratureOptions& opts = {}) {
  detail::check_horizon(policy.horizon, cost, stages);
  const auto& params = cost.params();
  const int m = policy.horizon;
  PolicyEvaluation out;
  out.stop_probability = stop_probabilities(policy, stages);
  out.conditional_etc.assign(static_cast<std::size_t>(m) + 1, 0.0);
  double reach = 1.0;
  double total = 0.0;
  for (int n = 1; n <= m; ++n) {
    const auto& law = detail::stage_law(stages, n);
    const double t = policy.threshold(n);
    const double cont = law.prob_below(t);
    const double stop = 1.0 - cont;
    const double tail = stop > 0.0 ? upper_inverse_rate(law, t, params, opts) : 0.0;
    if (stop > 0.0) out.conditional_etc[static_cast<std::size_t>(n - 1)] = cost.omega(n) + cost.offload_coefficient(n) * tail / stop;
    total += reach * (cost.omega(n) * stop + cost.offload_coefficient(n) * tail);
    reach *= cont;
  }
  const double last = cost.omega(m + 1) +
                      cost.offload_coefficient(m + 1) * mean_inverse_rate(detail::stage_law(stages, m + 1), params, opts);
  out.conditional_etc[static_cast<std::size_t>(m)] = last;
  out.expected_etc = total + reach * last;
  return out;
}

/// Expected cost-to-go from stage n = 1..M+1 under the policy's thresholds.
/// Equals value_table for the optimal rule.
inline std::vector<double> policy_value_table(const ThresholdPolicy& policy, const CostModel& cost,
                                              std::span<const StageDistribution> stages,
                                              const QuadratureOptions& opts = {}) {
  detail::check_horizon(policy.horizon, cost, stages);
  const auto& params = cost.params();
  const int m = policy.horizon;
  std::vector<double> table(static_cast<std::size_t>(m) + 1);
  double next = cost.omega(m + 1) +
                cost.offload_coefficient(m + 1) * mean_inverse_rate(detail::stage_law(stages, m + 1), params, opts);
  table.back() = next;
  for (int n = m; n >= 1; --n) {
    const auto& law = detail::stage_law(stages, n);
    const double t = policy.threshold(n);
    const double cont = law.prob_below(t);
    const double stop = 1.0 - cont;
    const double tail = stop > 0.0 ? upper_inverse_rate(law, t, params, opts) : 0.0;
    next = cost.omega(n) * stop + cost.offload_coefficient(n) * tail + next * cont;
    table[static_cast<std::size_t>(n - 1)] = next;
  }
  return table;
}

/// Expected ETC of a policy: sum_n Pr{S = n} E[eta | S = n].
inline double expected_etc(const ThresholdPolicy& policy, const CostModel& cost,
                           std::span<const StageDistribution> stages, const QuadratureOptions& opts = {}) {
  return evaluate_policy(policy, cost, stages, opts).expected_etc;
}

/// Probability of the sufficient event under which the 1-sla rule stops
/// where the optimal rule does: reaching stage n and the look-ahead calling
/// for a stop at every stage n..M.
inline double one_sla_optimality_probability(int m, const CostModel& cost, std::span<const StageDistribution> stages,
                                             const QuadratureOptions& opts = {}) {
  if (m < 1) throw std::out_of_range("optimality probability needs M >= 1");
  const auto policy = one_sla_thresholds(m, cost, stages, opts);
  std::vector<double> cont(static_cast<std::size_t>(m));
  for (int n = 1; n <= m; ++n) cont[static_cast<std::size_t>(n - 1)] = detail::stage_law(stages, n).prob_below(policy.threshold(n));
  double total = 0.0;
  double reach = 1.0;
  for (int n = 1; n <= m + 1; ++n) {
    double all_stop = 1.0;
    for (int k = n; k <= m; ++k) all_stop *= 1.0 - cont[static_cast<std::size_t>(k - 1)];
    total += reach * all_stop;
    if (n <= m) reach *= cont[static_cast<std::size_t>(n - 1)];
  }
  return total;
}

}  // namespace coinfer

#endif  // COINFER_SPLITTING_POLICY_HPP
