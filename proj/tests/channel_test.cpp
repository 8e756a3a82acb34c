#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "coinfer/channel.hpp"
#include "coinfer/error.hpp"

namespace coinfer {
namespace {

double inverse_log2(double g) { return std::log(2.0) / std::log1p(g); }

TEST(TruncatedExponential, InverseRateMomentMatchesReference) {
  // E[1/log2(1+gamma)] at d = 50 m with the 1e-3 floor; scipy.integrate.quad reference.
  const auto d = StageDistribution::with_floor_ratio(0.5839863535734268, 1e-3);
  EXPECT_NEAR(d.expect(inverse_log2), 7.845846640554906, 1e-8 * 7.85);
}

TEST(Exponential, MomentsAndCdf) {
  const auto d = StageDistribution::exponential(2.5);
  EXPECT_NEAR(d.expect([](double) { return 1.0; }), 1.0, 1e-10);
  EXPECT_NEAR(d.expect([](double g) { return g; }), 2.5, 1e-8);
  EXPECT_DOUBLE_EQ(d.cdf(2.5), 1.0 - std::exp(-1.0));
  EXPECT_EQ(d.cdf(-1.0), 0.0);
  EXPECT_EQ(d.prob_below(0.0), 0.0);
}

TEST(TruncatedExponential, FloorShiftsTheLaw) {
  const auto d = StageDistribution::with_floor_ratio(0.6, 1e-3);
  EXPECT_EQ(d.kind(), DistributionKind::truncated_exponential);
  EXPECT_DOUBLE_EQ(d.support_lo(), 0.6e-3);
  EXPECT_EQ(d.cdf(0.6e-3), 0.0);
  EXPECT_NEAR(d.expect([](double g) { return g; }), 0.6 + 0.6e-3, 1e-8);
  EXPECT_NEAR(d.expect([](double) { return 1.0; }), 1.0, 1e-10);
  EXPECT_EQ(StageDistribution::with_floor_ratio(0.6, 0.0).kind(), DistributionKind::exponential);
}

TEST(TruncatedExponential, UpperCutRenormalises) {
  const auto d = StageDistribution::truncated_exponential(1.0, 0.5, 2.0);
  EXPECT_EQ(d.cdf(2.0), 1.0);
  EXPECT_NEAR(d.cdf(1.0), (1 - std::exp(-0.5)) / (1 - std::exp(-1.5)), 1e-15);
  EXPECT_NEAR(d.expect([](double) { return 1.0; }), 1.0, 1e-10);
  EXPECT_EQ(d.pdf(2.5), 0.0);
}

TEST(TruncatedExponential, PartialExpectationsAreAdditive) {
  const auto d = StageDistribution::with_floor_ratio(0.58, 1e-3);
  for (double t : {1e-3, 0.01, 0.2, 0.58, 3.0, 40.0}) {
    const double lo = d.partial_expect(inverse_log2, 0.0, t);
    const double hi = d.partial_expect(inverse_log2, t, kInfinity);
    EXPECT_NEAR(lo + hi, d.expect(inverse_log2), 1e-8 * d.expect(inverse_log2)) << t;
  }
  // Limits outside the support are clamped.
  EXPECT_EQ(d.partial_expect(inverse_log2, 0.0, 1e-4), 0.0);
  EXPECT_THROW(d.partial_expect(inverse_log2, 2.0, 1.0), std::invalid_argument);
}

TEST(TruncatedExponential, QuantileInvertsCdf) {
  const auto d = StageDistribution::truncated_exponential(3.0, 0.1, 9.0);
  for (double u = 0.01; u < 1.0; u += 0.07) EXPECT_NEAR(d.cdf(d.quantile(u)), u, 1e-13);
  EXPECT_THROW(d.quantile(0.0), std::domain_error);
  EXPECT_THROW(d.quantile(1.0), std::domain_error);
}

TEST(Exponential, DivergentMomentIsReportedNotHidden) {
  // 1/log2(1+gamma) ~ ln2/gamma at the origin: not integrable without a floor.
  const auto d = StageDistribution::exponential(1.0);
  EXPECT_THROW(d.expect([](double g) { return 1.0 / g; }), numerical_failure);
}

TEST(Discrete, IntervalConventions) {
  const auto d = StageDistribution::discrete({{1.0, 0.25}, {2.0, 0.5}, {4.0, 0.25}});
  EXPECT_EQ(d.prob_below(2.0), 0.25);  // strictly below
  EXPECT_EQ(d.cdf(2.0), 0.75);
  EXPECT_EQ(d.pdf(2.0), 0.5);
  EXPECT_EQ(d.pdf(3.0), 0.0);
  EXPECT_EQ(d.partial_expect([](double) { return 1.0; }, 2.0, 4.0), 0.5);  // [2, 4)
  EXPECT_EQ(d.expect([](double g) { return g; }), 2.25);
  EXPECT_EQ(d.mean_snr(), 2.25);
  EXPECT_EQ(d.quantile(0.25), 1.0);
  EXPECT_EQ(d.quantile(0.26), 2.0);
}

TEST(Discrete, Validation) {
  EXPECT_THROW(StageDistribution::discrete({}), std::invalid_argument);
  EXPECT_THROW(StageDistribution::discrete({{1.0, 0.5}, {1.0, 0.5}}), std::invalid_argument);
  EXPECT_THROW(StageDistribution::discrete({{2.0, 0.5}, {1.0, 0.5}}), std::invalid_argument);
  EXPECT_THROW(StageDistribution::discrete({{1.0, 0.5}, {2.0, 0.4}}), std::invalid_argument);
  EXPECT_THROW(StageDistribution::discrete({{0.0, 1.0}}), std::invalid_argument);
  EXPECT_NO_THROW(StageDistribution::discrete({{3.0, 1.0}}));
}

TEST(Discretize, EqualMassAtoms) {
  const auto d = StageDistribution::with_floor_ratio(0.58, 1e-3);
  const auto q = discretize(d, 512);
  ASSERT_EQ(q.atoms().size(), 512u);
  for (const auto& a : q.atoms()) EXPECT_NEAR(a.probability, 1.0 / 512, 1e-15);
  EXPECT_NEAR(q.atoms()[255].snr, d.quantile(255.5 / 512), 0.0);
  // Midpoint rule converges on smooth moments.
  EXPECT_NEAR(q.expect([](double g) { return g; }), d.expect([](double g) { return g; }), 5e-3);
  EXPECT_THROW(discretize(d, 1), std::invalid_argument);
}

TEST(Sampling, DeterministicAndUnbiased) {
  const auto d = StageDistribution::with_floor_ratio(2.0, 1e-3);
  auto a = trial_stream(11, 3);
  auto b = trial_stream(11, 3);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(d.sample(a), d.sample(b));
  auto gen = trial_stream(5, 0);
  double sum = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = d.sample(gen);
    ASSERT_GE(x, d.support_lo());
    sum += x;
  }
  // Standard deviation of the mean is 2/sqrt(n); 5 sigma.
  EXPECT_NEAR(sum / n, 2.002, 5 * 2.0 / std::sqrt(n));
}

TEST(Sampling, SubstreamsDiffer) {
  auto a = trial_stream(1, 0);
  auto b = trial_stream(1, 1);
  auto c = trial_stream(2, 0);
  const auto x = a();
  EXPECT_NE(x, b());
  EXPECT_NE(x, c());
  for (int i = 0; i < 1000; ++i) {
    const double u = uniform_open01(a);
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(PathLoss, MeanSnrAtFiftyMetres) {
  const auto p = default_system_params();
  EXPECT_NEAR(mean_snr_from_pathloss({}, p), 0.58398635357342641, 1e-14);  // mpmath
  PathLossParams near;
  near.distance_m = 25.0;
  EXPECT_NEAR(mean_snr_from_pathloss(near, p), 8 * 0.58398635357342641, 1e-13);
  near.distance_m = 0.0;
  EXPECT_THROW(mean_snr_from_pathloss(near, p), std::invalid_argument);
}

TEST(Construction, RejectsBadParameters) {
  EXPECT_THROW(StageDistribution::exponential(0.0), std::invalid_argument);
  EXPECT_THROW(StageDistribution::exponential(kInfinity), std::invalid_argument);
  EXPECT_THROW(StageDistribution::truncated_exponential(1.0, 2.0, 1.0), std::invalid_argument);
  EXPECT_THROW(StageDistribution::with_floor_ratio(1.0, -1.0), std::invalid_argument);
  EXPECT_THROW(identical_stages(StageDistribution::exponential(1.0), 0), std::invalid_argument);
}

TEST(ChannelProperties, RandomTruncatedLaws) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 60; ++trial) {
    const double mean = std::pow(10.0, -2 + 4 * u(rng));
    const auto d = StageDistribution::with_floor_ratio(mean, std::pow(10.0, -4 + 3 * u(rng)));
    EXPECT_NEAR(d.expect([](double) { return 1.0; }), 1.0, 1e-9);
    double prev = 0.0;
    for (int k = 0; k < 20; ++k) {
      const double x = d.support_lo() + mean * 0.3 * k;
      const double c = d.cdf(x);
      EXPECT_GE(c, prev);
      EXPECT_LE(c, 1.0);
      prev = c;
    }
    // Jensen: E[1/log2(1+g)] >= 1/log2(1+E g).
    EXPECT_GE(d.expect(inverse_log2), inverse_log2(d.expect([](double g) { return g; })) * (1 - 1e-8));
  }
}

}  // namespace
}  // namespace coinfer
