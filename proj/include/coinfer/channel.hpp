#ifndef COINFER_CHANNEL_HPP
#define COINFER_CHANNEL_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "coinfer/cost_model.hpp"
#include "coinfer/quadrature.hpp"
#include "coinfer/rng.hpp"

namespace coinfer {

enum class DistributionKind { exponential, truncated_exponential, discrete };

inline std::string_view to_string(DistributionKind k) {
  switch (k) {
    case DistributionKind::exponential: return "exponential";
    case DistributionKind::truncated_exponential: return "truncated_exponential";
    case DistributionKind::discrete: return "discrete";
  }
  return "unknown";
}

struct SnrAtom {
  double snr = 0.0;
  double probability = 0.0;
};

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// SNR law of one splitting stage.
///
/// Exponential kinds are the Rayleigh-fading law with mean `mean_snr`,
/// optionally truncated to [support_lo, support_hi] and renormalised. The
/// discrete kind is a finite set of atoms and is what the DP oracle consumes.
///
/// Interval conventions: `prob_below(t)` is P(gamma < t) and partial
/// expectations integrate over [lo, hi). For continuous laws these coincide
/// with the CDF and the closed interval.
class StageDistribution {
 public:
  static StageDistribution exponential(double mean) {
    return StageDistribution(DistributionKind::exponential, mean, 0.0, kInfinity);
  }

  static StageDistribution truncated_exponential(double mean, double lo, double hi = kInfinity) {
    return StageDistribution(DistributionKind::truncated_exponential, mean, lo, hi);
  }

  /// Truncated exponential with floor gamma_min = floor_ratio * mean.
  static StageDistribution with_floor_ratio(double mean, double floor_ratio) {
    if (!(floor_ratio >= 0.0) || !std::isfinite(floor_ratio))
      throw std::invalid_argument("snr_floor_ratio must be finite and >= 0");
    if (floor_ratio == 0.0) return exponential(mean);
    return truncated_exponential(mean, floor_ratio * mean);
  }

  static StageDistribution discrete(std::vector<SnrAtom> atoms) {
    if (atoms.empty()) throw std::invalid_argument("discrete distribution needs at least one atom");
    double total = 0.0;
    double mean = 0.0;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      const auto& a = atoms[i];
      if (!(a.snr > 0.0) || !std::isfinite(a.snr))
        throw std::invalid_argument("atom snr must be finite and > 0");
      if (!(a.probability > 0.0)) throw std::invalid_argument("atom probability must be > 0");
      if (i > 0 && !(a.snr > atoms[i - 1].snr))
        throw std::invalid_argument("atom snr values must be strictly increasing");
      total += a.probability;
      mean += a.probability * a.snr;
    }
    if (std::fabs(total - 1.0) > 1e-12)
      throw std::invalid_argument("atom probabilities must sum to 1 (got " + std::to_string(total) + ")");
    StageDistribution d(DistributionKind::discrete, mean, atoms.front().snr, atoms.back().snr);
    d.atoms_ = std::move(atoms);
    d.cumulative_.reserve(d.atoms_.size());
    double c = 0.0;
    for (const auto& a : d.atoms_) d.cumulative_.push_back(c += a.probability);
    return d;
  }

  DistributionKind kind() const noexcept { return kind_; }
  double mean_snr() const noexcept { return mean_; }
  double support_lo() const noexcept { return lo_; }
  double support_hi() const noexcept { return hi_; }
  const std::vector<SnrAtom>& atoms() const noexcept { return atoms_; }
  bool is_discrete() const noexcept { return kind_ == DistributionKind::discrete; }

  /// Density for continuous kinds; point mass at x for the discrete kind.
  double pdf(double x) const {
    if (is_discrete()) {
      for (const auto& a : atoms_)
        if (a.snr == x) return a.probability;
      return 0.0;
    }
    if (x < lo_ || x > hi_) return 0.0;
    return std::exp(-(x - lo_) / mean_) / (mean_ * mass_);
  }

  /// P(gamma <= x).
  double cdf(double x) const {
    if (is_discrete()) {
      const auto it = std::upper_bound(atoms_.begin(), atoms_.end(), x,
                                       [](double v, const SnrAtom& a) { return v < a.snr; });
      return it == atoms_.begin() ? 0.0 : std::min(1.0, cumulative_[static_cast<std::size_t>(it - atoms_.begin()) - 1]);
    }
    if (x <= lo_) return 0.0;
    if (x >= hi_) return 1.0;
    return -std::expm1(-(x - lo_) / mean_) / mass_;
  }

  /// P(gamma < x): the probability that a stage with threshold x continues.
  double prob_below(double x) const {
    if (is_discrete()) {
      const auto it = std::lower_bound(atoms_.begin(), atoms_.end(), x,
                                       [](const SnrAtom& a, double v) { return a.snr < v; });
      return it == atoms_.begin() ? 0.0 : std::min(1.0, cumulative_[static_cast<std::size_t>(it - atoms_.begin()) - 1]);
    }
    return cdf(x);
  }

  /// Generalised inverse CDF for u in (0, 1).
  double quantile(double u) const {
    if (!(u > 0.0 && u < 1.0)) throw std::domain_error("quantile: u must be in (0, 1)");
    if (is_discrete()) {
      const auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), u);
      const auto idx = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), atoms_.size() - 1);
      return atoms_[idx].snr;
    }
    return lo_ - mean_ * std::log1p(-u * mass_);
  }

  /// Inverse-CDF draw; deterministic given the generator state.
  template <class Urbg>
  double sample(Urbg& gen) const {
    return quantile(uniform_open01(gen));
  }

  /// E[g(gamma)] over the full support.
  template <class G>
  double expect(G&& g, const QuadratureOptions& opts = {}) const {
    return partial_expect(g, lo_, kInfinity, opts);
  }

  /// Integral of g * pdf over [lo, hi), limits clamped to the support.
  template <class G>
  double partial_expect(G&& g, double lo, double hi, const QuadratureOptions& opts = {}) const {
    if (std::isnan(lo) || std::isnan(hi) || lo > hi)
      throw std::invalid_argument("partial_expect: lo must not exceed hi");
    if (is_discrete()) {
      double sum = 0.0;
      for (const auto& a : atoms_)
        if (a.snr >= lo && (a.snr < hi || hi == kInfinity)) sum += a.probability * g(a.snr);
      return sum;
    }
    const double a = std::max(lo, lo_);
    double b = std::min(hi, hi_);
    if (!(b > a) || a == kInfinity) return 0.0;
    if (b == kInfinity) b = a + mean_ * std::log(1.0 / opts.tail_mass);

    auto integrand = [&](double x) { return g(x) * pdf(x); };
    QuadratureResult total;
    double from = a;
    if (a == 0.0) {
      const double head_end = std::min(b, mean_ * 1e-3);
      total = integrate_from_zero(integrand, head_end, opts);
      detail::require_converged(total, opts, "partial_expect head");
      from = head_end;
    }
    const auto body = integrate_log_domain(integrand, from, b, opts);
    total.value += body.value;
    total.error += body.error;
    detail::require_converged(total, opts, "partial_expect");
    return total.value;
  }

 private:
  StageDistribution(DistributionKind kind, double mean, double lo, double hi)
      : kind_(kind), mean_(mean), lo_(lo), hi_(hi) {
    if (!(mean > 0.0) || !std::isfinite(mean)) throw std::invalid_argument("mean_snr must be finite and > 0");
    if (!(lo >= 0.0) || !std::isfinite(lo)) throw std::invalid_argument("support_lo must be finite and >= 0");
    if (!(hi > lo)) {
      if (kind != DistributionKind::discrete || hi != lo)
        throw std::invalid_argument("support_hi must exceed support_lo");
    }
    if (kind != DistributionKind::discrete) {
      // Mass of the untruncated law on [lo, hi] relative to its mass above lo.
      mass_ = hi == kInfinity ? 1.0 : -std::expm1(-(hi - lo) / mean);
      if (!(mass_ > 0.0)) throw std::invalid_argument("truncation interval carries no probability mass");
    }
  }

  DistributionKind kind_;
  double mean_;
  double lo_;
  double hi_;
  double mass_ = 1.0;
  std::vector<SnrAtom> atoms_;
  std::vector<double> cumulative_;
};

/// Probability-matched discretisation: `grid_points` equal-mass atoms placed at
/// the quantile midpoints (i + 1/2) / grid_points.
inline StageDistribution discretize(const StageDistribution& dist, int grid_points) {
  if (grid_points < 2) throw std::invalid_argument("discretize: grid_points must be >= 2");
  const double p = 1.0 / grid_points;
  std::vector<SnrAtom> atoms;
  atoms.reserve(static_cast<std::size_t>(grid_points));
  for (int i = 0; i < grid_points; ++i) {
    const double snr = dist.quantile((i + 0.5) * p);
    if (!atoms.empty() && !(snr > atoms.back().snr)) {
      atoms.back().probability += p;  // coincident quantiles of a discrete law
      continue;
    }
    atoms.push_back({snr, p});
  }
  double total = 0.0;
  for (const auto& a : atoms) total += a.probability;
  atoms.back().probability += 1.0 - total;
  return StageDistribution::discrete(std::move(atoms));
}

/// Per-stage laws; element n-1 is stage n.
using StageChannels = std::vector<StageDistribution>;

inline StageChannels identical_stages(const StageDistribution& dist, int count) {
  if (count < 1) throw std::invalid_argument("stage count must be >= 1");
  return StageChannels(static_cast<std::size_t>(count), dist);
}

struct PathLossParams {
  double antenna_gain = 4.11;  // A_d
  double carrier_hz = 915e6;   // f^c
  double distance_m = 50.0;    // d
  double exponent = 3.0;       // PL
};

/// gamma_bar = (P / sigma^2) A_d (3e8 / (4 pi f^c d))^PL.
inline double mean_snr_from_pathloss(const PathLossParams& pl, const SystemParams& params) {
  if (!(pl.antenna_gain > 0.0) || !(pl.carrier_hz > 0.0) || !(pl.distance_m > 0.0) || !(pl.exponent >= 0.0))
    throw std::invalid_argument("path-loss parameters must be positive");
  const double ratio = 3e8 / (4.0 * std::numbers::pi * pl.carrier_hz * pl.distance_m);
  return params.tx_power_w / params.noise_w * pl.antenna_gain * std::pow(ratio, pl.exponent);
}

}  // namespace coinfer

#endif  // COINFER_CHANNEL_HPP
