#ifndef COINFER_MODEL_GRAPH_HPP
#define COINFER_MODEL_GRAPH_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace coinfer {

/// One DNN layer as a subtask of the sequential task graph.
/// Data sizes are in bits and times in seconds throughout the library.
struct LayerSpec {
  double workload_cycles = 0.0;   // L_i
  double input_bits = 0.0;        // I_i, payload offloaded when splitting here
  double download_seconds = 0.0;  // tau_i^m

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// Sequential task graph with implicit virtual entry (0) and exit (N+1)
/// subtasks. Both virtual subtasks carry zero workload.
class NetworkSpec {
 public:
  NetworkSpec(std::vector<LayerSpec> layers, double exit_input_bits)
      : layers_(std::move(layers)), exit_input_bits_(exit_input_bits) {
    if (layers_.empty()) throw std::invalid_argument("network must have at least one layer");
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const auto& l = layers_[i];
      const auto where = " (layer " + std::to_string(i + 1) + ")";
      if (!(l.workload_cycles >= 0.0) || !std::isfinite(l.workload_cycles))
        throw std::invalid_argument("workload_cycles must be finite and >= 0" + where);
      if (!(l.input_bits > 0.0) || !std::isfinite(l.input_bits))
        throw std::invalid_argument("input_bits must be finite and > 0" + where);
      if (!(l.download_seconds >= 0.0) || !std::isfinite(l.download_seconds))
        throw std::invalid_argument("download_seconds must be finite and >= 0" + where);
    }
    if (!(exit_input_bits_ > 0.0) || !std::isfinite(exit_input_bits_))
      throw std::invalid_argument("exit_input_bits must be finite and > 0");
  }

  /// N, the number of real layers.
  int layer_count() const noexcept { return static_cast<int>(layers_.size()); }

  /// Layer i for i in [1, N].
  const LayerSpec& layer(int i) const {
    if (i < 1 || i > layer_count()) throw std::out_of_range("layer index " + std::to_string(i));
    return layers_[static_cast<std::size_t>(i - 1)];
  }

  const std::vector<LayerSpec>& layers() const noexcept { return layers_; }
  double exit_input_bits() const noexcept { return exit_input_bits_; }

  /// L_i for i in [0, N+1]; zero for the virtual subtasks.
  double workload(int i) const {
    if (i == 0 || i == layer_count() + 1) return 0.0;
    return layer(i).workload_cycles;
  }

  /// I_n for n in [1, N+1].
  double input_bits(int n) const {
    if (n == layer_count() + 1) return exit_input_bits_;
    return layer(n).input_bits;
  }

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;

 private:
  std::vector<LayerSpec> layers_;
  double exit_input_bits_;
};

/// Fully-connected MLP description. Widths X_0..X_N, X_0 is the input layer.
struct MlpSpec {
  std::vector<int> neurons;
  double bytes_per_activation = 8.0;  // lambda
  double bytes_per_parameter = 8.0;   // mu
  double cycles_per_macc = 100.0;     // alpha
  double downlink_rate_bps = 0.0;     // R^d

  int layer_count() const noexcept { return static_cast<int>(neurons.size()) - 1; }

  bool equal_width() const noexcept {
    for (std::size_t i = 1; i < neurons.size(); ++i)
      if (neurons[i] != neurons[0]) return false;
    return true;
  }
};

inline void validate(const MlpSpec& spec) {
  if (spec.neurons.size() < 2)
    throw std::invalid_argument("mlp needs at least two widths (input and one layer)");
  for (int x : spec.neurons)
    if (x < 1) throw std::invalid_argument("mlp widths must be >= 1");
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw std::invalid_argument(std::string(name) + " must be finite and > 0");
  };
  positive(spec.bytes_per_activation, "lambda_bytes");
  positive(spec.bytes_per_parameter, "mu_bytes");
  positive(spec.cycles_per_macc, "alpha");
  positive(spec.downlink_rate_bps, "downlink_bps");
}

/// Layer i: I_i = 8 lambda X_{i-1}, L_i = alpha X_{i-1} X_i,
/// tau_i^m = 8 mu (X_{i-1} + 1) X_i / R^d. Exit payload is 8 lambda X_N.
inline NetworkSpec build_mlp(const MlpSpec& spec) {
  validate(spec);
  std::vector<LayerSpec> layers;
  layers.reserve(spec.neurons.size() - 1);
  for (std::size_t i = 1; i < spec.neurons.size(); ++i) {
    const double prev = spec.neurons[i - 1];
    const double cur = spec.neurons[i];
    layers.push_back({.workload_cycles = spec.cycles_per_macc * prev * cur,
                      .input_bits = 8.0 * spec.bytes_per_activation * prev,
                      .download_seconds =
                          8.0 * spec.bytes_per_parameter * (prev + 1.0) * cur / spec.downlink_rate_bps});
  }
  return NetworkSpec(std::move(layers), 8.0 * spec.bytes_per_activation * spec.neurons.back());
}

inline MlpSpec autoencoder_mlp(double downlink_rate_bps) {
  return {.neurons = {784, 128, 64, 32, 10, 32, 64, 128, 784},
          .bytes_per_activation = 8.0,
          .bytes_per_parameter = 8.0,
          .cycles_per_macc = 100.0,
          .downlink_rate_bps = downlink_rate_bps};
}

/// 784-128-64-32-10-32-64-128-784 autoencoder, lambda = mu = 8 bytes, alpha = 100.
inline NetworkSpec build_autoencoder_preset(double downlink_rate_bps) {
  return build_mlp(autoencoder_mlp(downlink_rate_bps));
}

namespace alexnet {

/// Frozen per-layer counts for the two-group AlexNet on a 227x227x3 input with
/// 1000 classes. Regenerate with tools/gen_alexnet_preset.py; see
/// docs/alexnet_preset.md. This is a reconstruction, not measured data.
struct LayerCounts {
  const char* name;
  double maccs;        // multiply-accumulates
  double input_values; // activations entering the layer (after pooling)
  double parameters;   // weights + biases
};

inline constexpr std::array<LayerCounts, 8> kLayers{{
    {"conv1", 105415200.0, 154587.0, 34944.0},
    {"conv2", 223948800.0, 69984.0, 307456.0},
    {"conv3", 149520384.0, 43264.0, 885120.0},
    {"conv4", 112140288.0, 64896.0, 663936.0},
    {"conv5", 74760192.0, 64896.0, 442624.0},
    {"fc6", 37748736.0, 9216.0, 37752832.0},
    {"fc7", 16777216.0, 4096.0, 16781312.0},
    {"fc8", 4096000.0, 4096.0, 4097000.0},
}};

inline constexpr double kOutputValues = 1000.0;
inline constexpr double kBytesPerActivation = 8.0;
inline constexpr double kBytesPerParameter = 8.0;
inline constexpr double kCyclesPerMacc = 100.0;

}  // namespace alexnet

/// Eight-layer AlexNet (5 conv + 3 fc) converted with lambda = mu = 8 bytes and
/// alpha = 100 cycles per multiply-add.
inline NetworkSpec build_alexnet_preset(double downlink_rate_bps) {
  if (!(downlink_rate_bps > 0.0)) throw std::invalid_argument("downlink rate must be > 0");
  std::vector<LayerSpec> layers;
  for (const auto& l : alexnet::kLayers) {
    layers.push_back({.workload_cycles = alexnet::kCyclesPerMacc * l.maccs,
                      .input_bits = 8.0 * alexnet::kBytesPerActivation * l.input_values,
                      .download_seconds =
                          8.0 * alexnet::kBytesPerParameter * l.parameters / downlink_rate_bps});
  }
  return NetworkSpec(std::move(layers), 8.0 * alexnet::kBytesPerActivation * alexnet::kOutputValues);
}

}  // namespace coinfer

#endif  // COINFER_MODEL_GRAPH_HPP
