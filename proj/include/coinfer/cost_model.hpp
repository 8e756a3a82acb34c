#ifndef COINFER_COST_MODEL_HPP
#define COINFER_COST_MODEL_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "coinfer/model_graph.hpp"

namespace coinfer {

/// K, the number of inferences served per model update. May be infinite.
class UpdateCount {
 public:
  explicit UpdateCount(std::uint64_t k) : value_(k) {
    if (k == 0) throw std::invalid_argument("updates_per_model must be >= 1");
  }

  static UpdateCount infinite() noexcept { return UpdateCount(); }

  bool is_infinite() const noexcept { return value_ == 0; }

  /// Finite K. Throws when infinite.
  std::uint64_t value() const {
    if (is_infinite()) throw std::logic_error("updates_per_model is infinite");
    return value_;
  }

  /// 1/K, exactly 0 when K is infinite.
  double reciprocal() const noexcept { return is_infinite() ? 0.0 : 1.0 / static_cast<double>(value_); }

  std::string to_string() const { return is_infinite() ? "inf" : std::to_string(value_); }

  friend bool operator==(const UpdateCount&, const UpdateCount&) = default;

 private:
  UpdateCount() = default;
  std::uint64_t value_ = 0;  // 0 encodes infinity
};

struct SystemParams {
  double tx_power_w = 0.1;     // P
  double noise_w = 1e-10;      // sigma^2
  double bandwidth_hz = 2e6;   // W
  double local_freq_hz = 1e8;  // f_l
  double edge_freq_hz = 1e10;  // f_c
  double kappa = 1e-26;
  double beta_t = 0.5;
  double beta_e = 0.5;
  UpdateCount updates_per_model{50};  // K
  double downlink_rate_bps = 0.0;     // R^d

  /// (beta_t + beta_e P), the weight per offloaded second.
  double offload_weight() const noexcept { return beta_t + beta_e * tx_power_w; }
};

inline void validate(const SystemParams& p) {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw std::invalid_argument(std::string(name) + " must be finite and > 0");
  };
  positive(p.tx_power_w, "tx_power_w");
  positive(p.noise_w, "noise_w");
  positive(p.bandwidth_hz, "bandwidth_hz");
  positive(p.local_freq_hz, "local_freq_hz");
  positive(p.edge_freq_hz, "edge_freq_hz");
  positive(p.kappa, "kappa");
  positive(p.downlink_rate_bps, "downlink_rate_bps");
  if (!(p.beta_t >= 0.0) || !(p.beta_e >= 0.0) || !std::isfinite(p.beta_t) || !std::isfinite(p.beta_e))
    throw std::invalid_argument("beta_t and beta_e must be finite and >= 0");
  if (!(p.beta_t + p.beta_e > 0.0)) throw std::invalid_argument("beta_t + beta_e must be > 0");
  if (!(p.local_freq_hz < p.edge_freq_hz))
    throw std::invalid_argument("local_freq_hz must be below edge_freq_hz");
}

/// Free-space downlink rate W log2(1 + P_bs/sigma^2 * A_d * (c/(4 pi f d))^2).
inline double free_space_downlink_rate(double bs_power_w, double noise_w, double bandwidth_hz,
                                       double antenna_gain, double carrier_hz, double distance_m) {
  const double ratio = 3e8 / (4.0 * std::numbers::pi * carrier_hz * distance_m);
  return bandwidth_hz * std::log2(1.0 + bs_power_w / noise_w * antenna_gain * ratio * ratio);
}

/// Simulation settings: P = 100 mW, sigma^2 = 1e-10 W, W = 2 MHz, f_l = 1e8,
/// f_c = 1e10, kappa = 1e-26, beta_t = beta_e = 0.5, K = 50. The downlink
/// rate assumes a 1 W base station over a free-space link at 50 m.
inline SystemParams default_system_params() {
  SystemParams p;
  p.downlink_rate_bps = free_space_downlink_rate(1.0, p.noise_w, p.bandwidth_hz, 4.11, 915e6, 50.0);
  return p;
}

/// R(gamma) = W log2(1 + gamma) in bits/s.
inline double uplink_rate(double gamma, const SystemParams& params) {
  if (!(gamma > 0.0)) throw std::domain_error("uplink_rate: snr must be > 0");
  return params.bandwidth_hz * std::log2(1.0 + gamma);
}

/// Components of the cost of splitting at stage n with observed SNR gamma.
struct CostBreakdown {
  int stage = 0;
  double etc = 0.0;    // eta_n(gamma)
  double omega = 0.0;  // omega_n
  double uplink_seconds = 0.0;
  double uplink_joules = 0.0;
  double local_seconds = 0.0;
  double edge_seconds = 0.0;
  double local_joules = 0.0;

  double total_seconds() const noexcept { return local_seconds + edge_seconds + uplink_seconds; }
  double device_joules() const noexcept { return local_joules + uplink_joules; }
};

/// Deterministic cost primitives for one network under one parameter set.
/// omega_n is precomputed for every stage, so queries are O(1).
class CostModel {
 public:
  CostModel(NetworkSpec network, SystemParams params)
      : network_(std::move(network)), params_(std::move(params)) {
    validate(params_);
    const int n_layers = network_.layer_count();
    local_cycles_.assign(static_cast<std::size_t>(n_layers) + 2, 0.0);
    edge_cycles_.assign(static_cast<std::size_t>(n_layers) + 2, 0.0);
    download_prefix_.assign(static_cast<std::size_t>(n_layers) + 1, 0.0);
    // local_cycles_[n] = sum_{i<n} L_i, edge_cycles_[n] = sum_{i>=n} L_i
    for (int n = 1; n <= n_layers + 1; ++n)
      local_cycles_[n] = local_cycles_[n - 1] + network_.workload(n - 1);
    for (int n = n_layers; n >= 1; --n) edge_cycles_[n] = edge_cycles_[n + 1] + network_.workload(n);
    for (int m = 1; m <= n_layers; ++m)
      download_prefix_[m] = download_prefix_[m - 1] + network_.layer(m).download_seconds;
    omega_.assign(static_cast<std::size_t>(n_layers) + 2, 0.0);
    for (int n = 1; n <= n_layers + 1; ++n) omega_[n] = compute_omega(n);
  }

  const NetworkSpec& network() const noexcept { return network_; }
  const SystemParams& params() const noexcept { return params_; }
  int layer_count() const noexcept { return network_.layer_count(); }

  double omega(int n) const {
    check_stage(n);
    return omega_[static_cast<std::size_t>(n)];
  }

  /// omega_{n+1} - omega_n for n in [1, N], evaluated from layer n directly.
  double omega_increment(int n) const {
    const double l = network_.layer(n).workload_cycles;
    return params_.beta_t * (l / params_.local_freq_hz - l / params_.edge_freq_hz) +
           params_.beta_e * params_.kappa * l * params_.local_freq_hz * params_.local_freq_hz;
  }

  /// (beta_t I_n + beta_e P I_n), the numerator multiplying 1/R_n.
  double offload_coefficient(int n) const {
    check_stage(n);
    return params_.offload_weight() * network_.input_bits(n);
  }

  /// eta_n(gamma) = omega_n + (beta_t I_n + beta_e P I_n) / R(gamma).
  double eta(int n, double gamma) const {
    return omega(n) + offload_coefficient(n) / uplink_rate(gamma, params_);
  }

  CostBreakdown etc(int n, double gamma) const {
    check_stage(n);
    const double rate = uplink_rate(gamma, params_);
    CostBreakdown b;
    b.stage = n;
    b.omega = omega_[static_cast<std::size_t>(n)];
    b.uplink_seconds = network_.input_bits(n) / rate;
    b.uplink_joules = params_.tx_power_w * b.uplink_seconds;
    b.local_seconds = local_cycles_[n] / params_.local_freq_hz;
    b.edge_seconds = edge_cycles_[n] / params_.edge_freq_hz;
    b.local_joules = params_.kappa * local_cycles_[n] * params_.local_freq_hz * params_.local_freq_hz;
    b.etc = b.omega + offload_coefficient(n) / rate;
    return b;
  }

  /// psi(M) = sum_{i<=M} tau_i^m / K; exactly 0 for infinite K.
  double placement_cost(int m) const {
    if (m < 0 || m > layer_count()) throw std::out_of_range("placement M " + std::to_string(m));
    if (params_.updates_per_model.is_infinite()) return 0.0;
    return download_prefix_[static_cast<std::size_t>(m)] * params_.updates_per_model.reciprocal();
  }

  /// Z = beta_t psi(M) + expected ETC.
  double total_cost(int m, double expected_etc) const {
    return params_.beta_t * placement_cost(m) + expected_etc;
  }

 private:
  void check_stage(int n) const {
    if (n < 1 || n > layer_count() + 1) throw std::out_of_range("stage " + std::to_string(n));
  }

  double compute_omega(int n) const {
    const double local = local_cycles_[n];
    const double edge = edge_cycles_[n];
    return params_.beta_t * (local / params_.local_freq_hz + edge / params_.edge_freq_hz) +
           params_.beta_e * params_.kappa * local * params_.local_freq_hz * params_.local_freq_hz;
  }

  NetworkSpec network_;
  SystemParams params_;
  std::vector<double> local_cycles_;
  std::vector<double> edge_cycles_;
  std::vector<double> download_prefix_;
  std::vector<double> omega_;
};

}  // namespace coinfer

#endif  // COINFER_COST_MODEL_HPP
