#include <gtest/gtest.h>

#include "coinfer/sim_harness.hpp"
#include "test_support.hpp"

namespace coinfer {
namespace {

using testing::autoencoder;
using testing::floored_law;

TEST(Simulate, AgreesWithAnalyticExpectation) {
  const auto cost = autoencoder();
  const auto stages = identical_stages(floored_law(), 9);
  for (int m : {0, 3, 8}) {
    const auto policy = backward_induction(m, cost, stages);
    const auto eval = evaluate_policy(policy, cost, stages);
    const auto sim = simulate(policy, cost, stages, 100000, 42);
    EXPECT_NEAR(sim.mean_etc, eval.expected_etc, 4 * sim.std_error) << m;
    ASSERT_EQ(sim.stop_histogram.size(), static_cast<std::size_t>(m) + 1);
    for (std::size_t i = 0; i < sim.stop_histogram.size(); ++i) {
      const double p = eval.stop_probability[i];
      EXPECT_NEAR(sim.stop_histogram[i], p, 5 * std::sqrt(p * (1 - p) / 100000) + 1e-12);
    }
  }
}

TEST(Simulate, DeterministicAcrossThreadCounts) {
  const auto cost = autoencoder();
  const auto stages = identical_stages(floored_law(), 9);
  const auto policy = one_sla_thresholds(5, cost, stages);
  const auto a = simulate(policy, cost, stages, 50000, 7, {.threads = 1});
  const auto b = simulate(policy, cost, stages, 50000, 7, {.threads = 4});
  EXPECT_EQ(a.mean_etc, b.mean_etc);
  EXPECT_EQ(a.std_error, b.std_error);
  EXPECT_EQ(a.stop_histogram, b.stop_histogram);
  EXPECT_EQ(a.rng_algorithm, std::string(kRngAlgorithm));
  const auto c = simulate(policy, cost, stages, 50000, 8, {.threads = 1});
  EXPECT_NE(a.mean_etc, c.mean_etc);
}

TEST(Simulate, SingleTrialAndValidation) {
  const auto cost = autoencoder();
  const auto stages = identical_stages(floored_law(), 9);
  const auto policy = never_stop_early_policy(2);
  const auto one = simulate(policy, cost, stages, 1, 3);
  EXPECT_EQ(one.std_error, 0.0);
  EXPECT_EQ(one.stop_histogram[2], 1.0);
  EXPECT_THROW(simulate(policy, cost, stages, 0, 3), std::invalid_argument);
}

TEST(Simulate, PointMassLawsAreDeterministic) {
  const auto cost = autoencoder();
  for (double snr : {0.05, 0.7, 30.0}) {
    const auto stages = identical_stages(StageDistribution::discrete({{snr, 1.0}}), 9);
    for (int m : {0, 4, 8}) {
      const auto policy = backward_induction(m, cost, stages);
      const auto sim = simulate(policy, cost, stages, 2000, 5);
      EXPECT_NEAR(sim.mean_etc, evaluate_policy(policy, cost, stages).expected_etc, 1e-12 * sim.mean_etc);
      EXPECT_NEAR(sim.std_error, 0.0, 1e-15) << snr << " " << m;
    }
  }
}

TEST(Coincidence, IdenticalRulesAtHorizonOne) {
  // With M = 1 the 1-sla threshold equals the optimal one.
  const auto cost = autoencoder();
  const auto stages = identical_stages(floored_law(), 9);
  EXPECT_EQ(coincidence_rate(1, cost, stages, 20000, 1), 1.0);
  const double r = coincidence_rate(8, cost, stages, 20000, 1);
  EXPECT_GE(r, one_sla_optimality_probability(8, cost, stages) - 0.02);
  EXPECT_LE(r, 1.0);
}

TEST(OracleDp, HandWorkedTwoStageExample) {
  const auto cost = autoencoder();
  const std::vector<std::vector<SnrAtom>> atoms{{{0.1, 0.5}, {50.0, 0.5}}, {{1.0, 1.0}}};
  const auto r = oracle_dp_atoms(1, cost, atoms);
  const double cont = cost.eta(2, 1.0);
  const double expected = 0.5 * std::min(cost.eta(1, 0.1), cont) + 0.5 * std::min(cost.eta(1, 50.0), cont);
  EXPECT_DOUBLE_EQ(r.expected_cost, expected);
  EXPECT_EQ(r.grid_points, 2);
  EXPECT_EQ(r.thresholds[0], cost.eta(1, 0.1) <= cont ? 0.1 : 50.0);
}

TEST(OracleDp, UnsortedAtomsGiveTheSameAnswer) {
  const auto cost = autoencoder();
  const std::vector<std::vector<SnrAtom>> sorted{{{0.2, 0.3}, {0.9, 0.3}, {4.0, 0.4}}, {{0.5, 0.5}, {2.0, 0.5}}};
  const std::vector<std::vector<SnrAtom>> shuffled{{{4.0, 0.4}, {0.2, 0.3}, {0.9, 0.3}}, {{2.0, 0.5}, {0.5, 0.5}}};
  EXPECT_DOUBLE_EQ(oracle_dp_atoms(1, cost, sorted).expected_cost, oracle_dp_atoms(1, cost, shuffled).expected_cost);
}

TEST(OracleDp, SplittingAnAtomChangesNothing) {
  const auto cost = autoencoder();
  const std::vector<std::vector<SnrAtom>> whole{{{0.2, 0.3}, {0.9, 0.3}, {4.0, 0.4}}, {{0.5, 0.5}, {2.0, 0.5}}};
  const std::vector<std::vector<SnrAtom>> split{{{0.2, 0.3}, {0.9, 0.1}, {0.9, 0.2}, {4.0, 0.4}},
                                                {{0.5, 0.25}, {0.5, 0.25}, {2.0, 0.5}}};
  EXPECT_NEAR(oracle_dp_atoms(1, cost, whole).expected_cost, oracle_dp_atoms(1, cost, split).expected_cost, 1e-15);
}

TEST(OracleDp, ConvergesToBackwardInductionOnContinuousLaws) {
  const auto cost = autoencoder();
  const auto law = floored_law();
  const auto stages = identical_stages(law, 9);
  for (int m : {2, 5, 8}) {
    const double exact = backward_induction(m, cost, stages).value_table.front();
    double prev_err = kInfinity;
    for (int g : {256, 1024, 4096}) {
      const auto oracle = oracle_dp(m, cost, identical_stages(discretize(law, g), 9));
      const double err = std::fabs(oracle.expected_cost - exact) / exact;
      EXPECT_LT(err, prev_err) << "M " << m << " G " << g;
      prev_err = err;
    }
    EXPECT_LT(prev_err, 1e-4) << m;
  }
}

TEST(OracleDp, RejectsContinuousLaws) {
  const auto cost = autoencoder();
  const auto stages = identical_stages(floored_law(), 9);
  EXPECT_THROW(oracle_dp(2, cost, stages), std::invalid_argument);
  EXPECT_THROW(oracle_dp(9, cost, stages), std::invalid_argument);
}

}  // namespace
}  // namespace coinfer
