#include <gtest/gtest.h>

#include <numeric>

#include "coinfer/sim_harness.hpp"
#include "coinfer/splitting_policy.hpp"
#include "test_support.hpp"

namespace coinfer {
namespace {

using testing::autoencoder;
using testing::floored_law;

TEST(BackwardInduction, HorizonZeroIsPlainOffload) {
  const auto cost = autoencoder();
  const auto stages = identical_stages(floored_law(), 9);
  const auto p = backward_induction(0, cost, stages);
  EXPECT_TRUE(p.thresholds.empty());
  ASSERT_EQ(p.value_table.size(), 1u);
  EXPECT_DOUBLE_EQ(p.value_table[0],
                   cost.omega(1) + cost.offload_coefficient(1) * mean_inverse_rate(stages[0], cost.params()));
  EXPECT_DOUBLE_EQ(expected_etc(p, cost, stages), p.value_table[0]);
}

TEST(BackwardInduction, ThresholdEqualisesStopAndContinue) {
  const auto cost = autoencoder();
  const auto stages = identical_stages(floored_law(), 9);
  const auto p = backward_induction(8, cost, stages);
  for (int n = 1; n <= 8; ++n) {
    const double t = p.threshold(n);
    if (std::isinf(t)) continue;
    EXPECT_NEAR(cost.eta(n, t), p.value_table[static_cast<std::size_t>(n)], 1e-12 * cost.eta(n, t)) << n;
  }
}

TEST(BackwardInduction, ValueTableMatchesPolicyEvaluation) {
  const auto cost = autoencoder();
  const auto stages = identical_stages(floored_law(), 9);
  for (int m = 0; m <= 8; ++m) {
    const auto p = backward_induction(m, cost, stages);
    const auto e = evaluate_policy(p, cost, stages);
    EXPECT_NEAR(e.expected_etc, p.value_table.front(), 1e-12 * e.expected_etc) << m;
    EXPECT_NEAR(std::accumulate(e.stop_probability.begin(), e.stop_probability.end(), 0.0), 1.0, 1e-12);
  }
}

TEST(BackwardInduction, RejectsBadHorizon) {
  const auto cost = autoencoder();
  const auto stages = identical_stages(floored_law(), 9);
  EXPECT_THROW(backward_induction(-1, cost, stages), std::out_of_range);
  EXPECT_THROW(backward_induction(9, cost, stages), std::out_of_range);
  EXPECT_THROW(backward_induction(8, cost, std::span(stages).first(5)), std::invalid_argument);
}

TEST(OneSla, ThresholdsDoNotDependOnHorizon) {
  const auto cost = autoencoder();
  const auto stages = identical_stages(floored_law(), 9);
  const auto table = one_sla_threshold_table(cost, stages);
  for (int m = 1; m <= 8; ++m) {
    const auto p = one_sla_thresholds(m, cost, stages);
    for (int n = 1; n <= m; ++n) EXPECT_EQ(p.threshold(n), table[static_cast<std::size_t>(n - 1)]);
  }
}

TEST(OneSla, LastStageAgreesWithOptimal) {
  // With one stage left the look-ahead is exact.
  const auto cost = autoencoder();
  const auto stages = identical_stages(floored_law(), 9);
  for (int m = 1; m <= 8; ++m)
    EXPECT_NEAR(one_sla_thresholds(m, cost, stages).threshold(m), backward_induction(m, cost, stages).threshold(m),
                1e-12 * backward_induction(m, cost, stages).threshold(m));
}

TEST(OneSla, OptimalityProbabilityBoundsAndMonotone) {
  const auto cost = autoencoder();
  const auto stages = identical_stages(floored_law(), 9);
  EXPECT_NEAR(one_sla_optimality_probability(1, cost, stages), 1.0, 1e-15);
  double prev = 1.0;
  for (int m = 1; m <= 8; ++m) {
    const double p = one_sla_optimality_probability(m, cost, stages);
    EXPECT_GT(p, 0.0);
    EXPECT_LE(p, prev + 1e-15);
    prev = p;
  }
  EXPECT_THROW(one_sla_optimality_probability(0, cost, stages), std::out_of_range);
}

TEST(StopStage, InclusiveThresholds) {
  ThresholdPolicy p{.horizon = 2, .thresholds = {1.0, 2.0}, .rule = RuleKind::custom, .value_table = {}};
  const std::vector<double> a{1.0, 0.0, 0.0};
  const std::vector<double> b{0.5, 2.0, 0.0};
  const std::vector<double> c{0.5, 1.9, 0.1};
  EXPECT_EQ(stop_stage(p, a), 1);
  EXPECT_EQ(stop_stage(p, b), 2);
  EXPECT_EQ(stop_stage(p, c), 3);
  EXPECT_THROW(stop_stage(p, std::vector<double>{1.0, 1.0}), std::invalid_argument);
  const auto cost = autoencoder();
  const auto out = apply_rule(p, c, cost);
  EXPECT_EQ(out.snr_at_stop, 0.1);
  EXPECT_DOUBLE_EQ(out.realized_etc, cost.eta(3, 0.1));
}

TEST(FixedRules, StopImmediatelyAndNeverStop) {
  const auto cost = autoencoder();
  const auto stages = identical_stages(floored_law(), 9);
  const auto first = evaluate_policy(stop_immediately_policy(5), cost, stages);
  EXPECT_DOUBLE_EQ(first.stop_probability[0], 1.0);
  EXPECT_NEAR(first.expected_etc, backward_induction(0, cost, stages).value_table[0], 1e-12);
  const auto last = evaluate_policy(never_stop_early_policy(5), cost, stages);
  EXPECT_DOUBLE_EQ(last.stop_probability[5], 1.0);
  EXPECT_NEAR(last.expected_etc, cost.omega(6) + cost.offload_coefficient(6) * mean_inverse_rate(stages[5], cost.params()),
              1e-12);
}

TEST(PolicyValueTable, ReproducesOptimalTableAndEvaluation) {
  const auto cost = autoencoder();
  const auto stages = identical_stages(floored_law(), 9);
  const auto opt = backward_induction(6, cost, stages);
  const auto table = policy_value_table(opt, cost, stages);
  ASSERT_EQ(table.size(), opt.value_table.size());
  for (std::size_t i = 0; i < table.size(); ++i) EXPECT_NEAR(table[i], opt.value_table[i], 1e-13 * table[i]);
  const auto sla = one_sla_thresholds(6, cost, stages);
  EXPECT_NEAR(policy_value_table(sla, cost, stages).front(), expected_etc(sla, cost, stages), 1e-13);
}

// Property: on discrete laws backward induction is exact, so it must equal the
// atom-level dynamic programme, and no threshold rule may beat it.
TEST(PolicyProperties, OptimalMatchesAtomDpAndDominates) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    const auto cost = testing::random_cost(rng);
    const int n = cost.layer_count();
    const auto stages = testing::random_stages(rng, n + 1, true);
    const int m = static_cast<int>(u(rng) * (n + 1));
    const auto opt = backward_induction(m, cost, stages);
    const double v = opt.value_table.front();
    const auto dp = oracle_dp(m, cost, stages);
    ASSERT_NEAR(v, dp.expected_cost, 1e-12 * v) << "trial " << trial;
    EXPECT_LE(v, expected_etc(one_sla_thresholds(m, cost, stages), cost, stages) * (1 + 1e-12));
    ThresholdPolicy random_rule{.horizon = m, .thresholds = {}, .rule = RuleKind::custom, .value_table = {}};
    for (int k = 0; k < m; ++k) random_rule.thresholds.push_back(u(rng) < 0.2 ? kInfinity : 10 * u(rng));
    EXPECT_LE(v, expected_etc(random_rule, cost, stages) * (1 + 1e-12));
  }
}

TEST(PolicyProperties, ContinuousDominanceAndCoherentProbabilities) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    const auto cost = testing::random_cost(rng);
    const int n = cost.layer_count();
    const auto stages = testing::random_stages(rng, n + 1, false);
    const auto opt = evaluate_policy(backward_induction(n, cost, stages), cost, stages);
    const auto sla = evaluate_policy(one_sla_thresholds(n, cost, stages), cost, stages);
    EXPECT_LE(opt.expected_etc, sla.expected_etc * (1 + 1e-9));
    for (const auto* e : {&opt, &sla}) {
      double total = 0.0;
      double recomposed = 0.0;
      for (std::size_t i = 0; i < e->stop_probability.size(); ++i) {
        EXPECT_GE(e->stop_probability[i], 0.0);
        total += e->stop_probability[i];
        recomposed += e->stop_probability[i] * e->conditional_etc[i];
      }
      EXPECT_NEAR(total, 1.0, 1e-12);
      EXPECT_NEAR(recomposed, e->expected_etc, 1e-9 * e->expected_etc);
    }
  }
}

}  // namespace
}  // namespace coinfer
