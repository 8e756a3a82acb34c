#ifndef COINFER_PLACEMENT_HPP
#define COINFER_PLACEMENT_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "coinfer/channel.hpp"
#include "coinfer/cost_model.hpp"
#include "coinfer/model_graph.hpp"
#include "coinfer/splitting_policy.hpp"

namespace coinfer {

enum class Strategy { optimal_exhaustive, one_sla_exhaustive, mlp_closed_form, hybrid };

inline std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::optimal_exhaustive: return "optimal_exhaustive";
    case Strategy::one_sla_exhaustive: return "one_sla_exhaustive";
    case Strategy::mlp_closed_form: return "mlp_closed_form";
    case Strategy::hybrid: return "hybrid";
  }
  return "unknown";
}

inline std::optional<Strategy> parse_strategy(std::string_view name) {
  for (auto s : {Strategy::optimal_exhaustive, Strategy::one_sla_exhaustive, Strategy::mlp_closed_form, Strategy::hybrid})
    if (to_string(s) == name) return s;
  return std::nullopt;
}

struct PlacementRow {
  int m = 0;
  double total_cost = 0.0;    // Z(M)
  double expected_etc = 0.0;
  double psi = 0.0;
  std::string error;          // non-empty when evaluation failed numerically

  bool ok() const noexcept { return error.empty(); }
};

/// Intermediate quantities of the equal-width MLP closed form.
struct ClosedFormDiagnostics {
  double delta = 0.0;                  // common 1-sla threshold
  double continue_probability = 0.0;   // F(delta)
  double g_raw = 0.0;                  // bracket before simplification
  double g_simplified = 0.0;           // (beta_t + beta_e P) 8 lambda (1/R(delta) - E[1/R | gamma < delta])
  double download_term = 0.0;          // beta_t 8 mu (X+1) / (K R^d)
  double root = std::numeric_limits<double>::quiet_NaN();
  int branch = 0;                      // 1: M* = N, 2: M* = 0, 3: rounded root
};

struct PlacementReport {
  Strategy strategy = Strategy::optimal_exhaustive;
  int best_m = 0;
  double best_total_cost = 0.0;
  std::vector<PlacementRow> rows;
  ThresholdPolicy policy_at_best;
  std::optional<ClosedFormDiagnostics> closed_form;

  const PlacementRow* row(int m) const {
    for (const auto& r : rows)
      if (r.m == m) return &r;
    return nullptr;
  }
};

/// Relative slack under which two Z values count as tied.
inline constexpr double kTieTolerance = 1e-9;

/// Argmin of Z over successful rows. Ties go to the smaller M, except when K
/// is infinite: psi is then identically zero and Z is nonincreasing in M, so
/// the largest tied M is the argmin in exact arithmetic.
inline int select_best(const std::vector<PlacementRow>& rows, bool infinite_updates) {
  double zmin = kInfinity;
  for (const auto& r : rows)
    if (r.ok()) zmin = std::min(zmin, r.total_cost);
  if (!(zmin < kInfinity))
    throw numerical_failure("no placement could be evaluated", std::numeric_limits<double>::quiet_NaN(), kInfinity);
  const double slack = kTieTolerance * std::max(std::fabs(zmin), std::numeric_limits<double>::min());
  int best = -1;
  for (const auto& r : rows) {
    if (!r.ok() || r.total_cost > zmin + slack) continue;
    if (best < 0 || (infinite_updates ? r.m > best : r.m < best)) best = r.m;
  }
  return best;
}

namespace detail {

inline PlacementRow make_row(const CostModel& cost, int m, double etc) {
  const double psi = cost.placement_cost(m);
  return {.m = m, .total_cost = cost.params().beta_t * psi + etc, .expected_etc = etc, .psi = psi, .error = {}};
}

inline PlacementRow failed_row(const CostModel& cost, int m, const std::string& why) {
  return {.m = m,
          .total_cost = std::numeric_limits<double>::quiet_NaN(),
          .expected_etc = std::numeric_limits<double>::quiet_NaN(),
          .psi = cost.placement_cost(m),
          .error = why};
}

/// Expected ETC of the 1-sla rule for every M = 0..N in one forward pass.
/// Identical arithmetic to evaluate_policy on one_sla_policy(M, table).
inline std::vector<PlacementRow> one_sla_rows(const CostModel& cost, std::span<const StageDistribution> stages,
                                              const QuadratureOptions& opts) {
  const int n_layers = cost.layer_count();
  const auto& params = cost.params();
  std::vector<PlacementRow> rows;
  std::vector<double> table;
  std::string failure;
  try {
    table = one_sla_threshold_table(cost, stages, opts);
  } catch (const numerical_failure& e) {
    failure = e.what();
  }
  double reach = 1.0;
  double total = 0.0;
  for (int m = 0; m <= n_layers; ++m) {
    if (failure.empty()) {
      try {
        const double last = cost.omega(m + 1) +
                            cost.offload_coefficient(m + 1) * mean_inverse_rate(stage_law(stages, m + 1), params, opts);
        rows.push_back(make_row(cost, m, total + reach * last));
        if (m < n_layers) {
          const auto& law = stage_law(stages, m + 1);
          const double t = table[static_cast<std::size_t>(m)];
          const double cont = law.prob_below(t);
          const double stop = 1.0 - cont;
          const double tail = stop > 0.0 ? upper_inverse_rate(law, t, params, opts) : 0.0;
          total += reach * (cost.omega(m + 1) * stop + cost.offload_coefficient(m + 1) * tail);
          reach *= cont;
        }
        continue;
      } catch (const numerical_failure& e) {
        failure = e.what();
      }
    }
    rows.push_back(failed_row(cost, m, failure));
  }
  return rows;
}

}  // namespace detail

/// Enumerates M = 0..N under the requested stopping rule. O(N^2) quadratures
/// for the optimal rule, O(N) for 1-sla.
inline PlacementReport optimize_exhaustive(const CostModel& cost, std::span<const StageDistribution> stages,
                                           RuleKind rule, const QuadratureOptions& opts = {}) {
  const int n_layers = cost.layer_count();
  if (stages.size() < static_cast<std::size_t>(n_layers) + 1)
    throw std::invalid_argument("need a channel law for every stage 1..N+1");
  PlacementReport report;
  const bool infinite_k = cost.params().updates_per_model.is_infinite();
  if (rule == RuleKind::optimal) {
    report.strategy = Strategy::optimal_exhaustive;
    std::vector<ThresholdPolicy> policies(static_cast<std::size_t>(n_layers) + 1);
    for (int m = 0; m <= n_layers; ++m) {
      try {
        policies[static_cast<std::size_t>(m)] = backward_induction(m, cost, stages, opts);
        report.rows.push_back(detail::make_row(cost, m, policies[static_cast<std::size_t>(m)].value_table.front()));
      } catch (const numerical_failure& e) {
        report.rows.push_back(detail::failed_row(cost, m, e.what()));
      }
    }
    report.best_m = select_best(report.rows, infinite_k);
    report.policy_at_best = policies[static_cast<std::size_t>(report.best_m)];
  } else if (rule == RuleKind::one_sla) {
    report.strategy = Strategy::one_sla_exhaustive;
    report.rows = detail::one_sla_rows(cost, stages, opts);
    report.best_m = select_best(report.rows, infinite_k);
    report.policy_at_best = one_sla_policy(report.best_m, one_sla_threshold_table(cost, stages, opts));
  } else {
    throw std::invalid_argument("optimize_exhaustive: rule must be optimal or one_sla");
  }
  report.best_total_cost = report.row(report.best_m)->total_cost;
  return report;
}

/// Theta(M) = E[eta] under 1-sla with M layers minus the same with M-1,
/// in product form: (prod_{j<=M} F_j) [E eta_{M+1} - (omega_M + c_M E[1/R_M | gamma_M < t_M])].
inline double theta_one_sla(int m, const CostModel& cost, std::span<const StageDistribution> stages,
                            const QuadratureOptions& opts = {}) {
  if (m < 1 || m > cost.layer_count()) throw std::out_of_range("theta needs M in [1, N]");
  const auto policy = one_sla_thresholds(m, cost, stages, opts);
  const auto& params = cost.params();
  double reach = 1.0;
  for (int j = 1; j <= m; ++j) reach *= detail::stage_law(stages, j).prob_below(policy.threshold(j));
  if (reach == 0.0) return 0.0;
  const auto& law = detail::stage_law(stages, m);
  const double cont = law.prob_below(policy.threshold(m));
  const double continue_value = cost.omega(m + 1) + cost.offload_coefficient(m + 1) *
                                                        mean_inverse_rate(detail::stage_law(stages, m + 1), params, opts);
  const double below_value =
      cost.omega(m) + cost.offload_coefficient(m) * lower_inverse_rate(law, policy.threshold(m), params, opts) / cont;
  return reach * (continue_value - below_value);
}

/// Closed-form placement for an equal-width MLP under the 1-sla rule with one
/// shared SNR law. Delta(M) = Z(M) - Z(M-1) = X (F^M g + b) is increasing in
/// M, so the optimum is N, 0, or next to the root of F^M g + b = 0.
inline PlacementReport mlp_closed_form(const MlpSpec& mlp, const SystemParams& params, const StageDistribution& dist,
                                       const QuadratureOptions& opts = {}) {
  validate(mlp);
  if (!mlp.equal_width()) throw std::invalid_argument("mlp_closed_form requires equal layer widths");
  const int n_layers = mlp.layer_count();
  const CostModel cost(build_mlp(mlp), params);
  const auto stages = identical_stages(dist, n_layers + 1);
  const double x = mlp.neurons.front();
  const double payload_weight = params.offload_weight() * 8.0 * mlp.bytes_per_activation;
  const double per_cycle = params.beta_t * (1.0 / params.local_freq_hz - 1.0 / params.edge_freq_hz) +
                           params.beta_e * params.kappa * params.local_freq_hz * params.local_freq_hz;
  const double mean_inv = mean_inverse_rate(dist, params, opts);

  ClosedFormDiagnostics diag;
  diag.delta = detail::snr_for_rate_exponent(
      payload_weight / (params.bandwidth_hz * (payload_weight * mean_inv + per_cycle * mlp.cycles_per_macc * x)));
  diag.continue_probability = dist.prob_below(diag.delta);
  diag.download_term = params.beta_t * 8.0 * mlp.bytes_per_parameter * (x + 1.0) *
                       params.updates_per_model.reciprocal() / mlp.downlink_rate_bps;
  const double f = diag.continue_probability;
  const bool infinite_k = params.updates_per_model.is_infinite();

  int best = 0;
  std::vector<int> candidates;
  if (f == 0.0) {
    // The rule always stops at stage 1, so Z(M) - Z(0) = M X b.
    diag.g_raw = diag.g_simplified = 0.0;
    diag.branch = infinite_k ? 1 : 2;
    best = infinite_k ? n_layers : 0;
    candidates = {best};
  } else {
    const double head = lower_inverse_rate(dist, diag.delta, params, opts) / f;
    diag.g_simplified = payload_weight * (1.0 / uplink_rate(diag.delta, params) - head);
    diag.g_raw = mlp.cycles_per_macc * x * per_cycle + payload_weight * (mean_inv - head);
    const double g = diag.g_simplified;
    if (!(g < 0.0))
      throw numerical_failure("mlp_closed_form: g(delta) must be negative", g, std::fabs(g - diag.g_raw));
    const double b = diag.download_term;
    if (std::pow(f, n_layers) * g + b < 0.0) {
      diag.branch = 1;
      best = n_layers;
      candidates = {best};
    } else if (f * g + b > 0.0) {
      diag.branch = 2;
      best = 0;
      candidates = {best};
    } else {
      diag.branch = 3;
      diag.root = std::log(b / -g) / std::log(f);
      const int lo = std::clamp(static_cast<int>(std::floor(diag.root)), 0, n_layers);
      const int hi = std::clamp(static_cast<int>(std::ceil(diag.root)), 0, n_layers);
      // Z(M) - Z(0) = X (g sum_{m=1}^{M} F^m + M b)
      auto relative_z = [&](int m) {
        double geometric = 0.0;
        for (int k = 1; k <= m; ++k) geometric += std::pow(f, k);
        return x * (g * geometric + m * b);
      };
      best = relative_z(hi) < relative_z(lo) ? hi : lo;
      candidates = lo == hi ? std::vector<int>{lo} : std::vector<int>{lo, hi};
    }
  }

  PlacementReport report;
  report.strategy = Strategy::mlp_closed_form;
  report.best_m = best;
  const auto table = one_sla_threshold_table(cost, stages, opts);
  for (int m : candidates) {
    const double etc = expected_etc(one_sla_policy(m, table), cost, stages, opts);
    report.rows.push_back(detail::make_row(cost, m, etc));
  }
  report.policy_at_best = one_sla_policy(best, table);
  report.best_total_cost = report.row(best)->total_cost;
  report.closed_form = diag;
  return report;
}

/// Places M by the O(N) 1-sla enumeration, then splits with the optimal rule
/// for that M.
inline PlacementReport hybrid(const CostModel& cost, std::span<const StageDistribution> stages,
                              const QuadratureOptions& opts = {}) {
  PlacementReport report = optimize_exhaustive(cost, stages, RuleKind::one_sla, opts);
  report.strategy = Strategy::hybrid;
  report.policy_at_best = backward_induction(report.best_m, cost, stages, opts);
  const auto row = detail::make_row(cost, report.best_m, report.policy_at_best.value_table.front());
  for (auto& r : report.rows)
    if (r.m == report.best_m) r = row;
  report.best_total_cost = row.total_cost;
  return report;
}

}  // namespace coinfer

#endif  // COINFER_PLACEMENT_HPP
