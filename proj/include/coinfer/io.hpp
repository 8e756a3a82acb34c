#ifndef COINFER_IO_HPP
#define COINFER_IO_HPP

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "coinfer/channel.hpp"
#include "coinfer/cost_model.hpp"
#include "coinfer/error.hpp"
#include "coinfer/model_graph.hpp"
#include "coinfer/placement.hpp"
#include "coinfer/quadrature.hpp"
#include "coinfer/sim_harness.hpp"
#include "coinfer/splitting_policy.hpp"
#include "coinfer/version.hpp"

namespace coinfer::io {

using json = nlohmann::json;

/// 12 significant digits; "inf", "-inf" and "nan" spelled out.
inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

/// Round-trip precision, used for hashing.
inline std::string fmt_exact(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// JSON number, or the string "inf" for +infinity (JSON has no infinity).
inline json number_or_inf(double v) {
  if (std::isinf(v) && v > 0) return "inf";
  if (!std::isfinite(v)) return nullptr;
  return v;
}

inline std::string fnv1a(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string network_hash(const NetworkSpec& net) {
  std::string s;
  for (const auto& l : net.layers())
    s += fmt_exact(l.workload_cycles) + ',' + fmt_exact(l.input_bits) + ',' + fmt_exact(l.download_seconds) + ';';
  s += fmt_exact(net.exit_input_bits());
  return fnv1a(s);
}

// ---------------------------------------------------------------------------
// Parsing helpers. Every error names the key path.

inline std::string join_path(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

inline void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw config_error("expected an object", path);
}

inline void reject_unknown(const json& j, const std::string& path, std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw config_error("unknown key", join_path(path, key));
  }
}

inline const json& require_key(const json& j, const std::string& path, const std::string& key) {
  const auto it = j.find(key);
  if (it == j.end()) throw config_error("missing required key", join_path(path, key));
  return *it;
}

inline double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw config_error("expected a number", path);
  return j.get<double>();
}

inline double get_number(const json& j, const std::string& path, const std::string& key) {
  return as_number(require_key(j, path, key), join_path(path, key));
}

inline double get_number_or(const json& j, const std::string& path, const std::string& key, double fallback) {
  return j.contains(key) ? get_number(j, path, key) : fallback;
}

inline std::uint64_t as_count(const json& j, const std::string& path, std::uint64_t min_value) {
  if (j.is_number_unsigned() || (j.is_number_integer() && j.get<std::int64_t>() >= 0)) {
    const auto v = j.get<std::uint64_t>();
    if (v >= min_value) return v;
  } else if (j.is_number_float()) {
    const double v = j.get<double>();
    if (v >= static_cast<double>(min_value) && v == std::floor(v) && v < 1.8e19) return static_cast<std::uint64_t>(v);
  }
  throw config_error("expected an integer >= " + std::to_string(min_value), path);
}

/// K: integer >= 1 or "inf".
inline UpdateCount parse_update_count(const json& j, const std::string& path) {
  if (j.is_string()) {
    if (j.get<std::string>() == "inf") return UpdateCount::infinite();
    throw config_error("expected an integer >= 1 or \"inf\"", path);
  }
  if (!j.is_number()) throw config_error("expected an integer >= 1 or \"inf\"", path);
  return UpdateCount(as_count(j, path, 1));
}

inline UpdateCount parse_update_count_text(std::string_view text, const std::string& path) {
  if (text == "inf") return UpdateCount::infinite();
  std::uint64_t v = 0;
  std::size_t used = 0;
  try {
    v = std::stoull(std::string(text), &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || v < 1) throw config_error("expected an integer >= 1 or \"inf\"", path);
  return UpdateCount(v);
}

/// Wraps domain validation failures as config errors on `path`.
template <class F>
auto validated(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    throw config_error(e.what(), path);
  }
}

// ---------------------------------------------------------------------------
// SystemParams

inline SystemParams parse_system_params(const json& j, const std::string& path = "params") {
  require_object(j, path);
  reject_unknown(j, path,
                 {"tx_power_w", "noise_w", "bandwidth_hz", "local_freq_hz", "edge_freq_hz", "kappa", "beta_t",
                  "beta_e", "updates_per_model", "downlink_rate_bps"});
  SystemParams p;
  p.tx_power_w = get_number(j, path, "tx_power_w");
  p.noise_w = get_number(j, path, "noise_w");
  p.bandwidth_hz = get_number(j, path, "bandwidth_hz");
  p.local_freq_hz = get_number(j, path, "local_freq_hz");
  p.edge_freq_hz = get_number(j, path, "edge_freq_hz");
  p.kappa = get_number(j, path, "kappa");
  p.beta_t = get_number(j, path, "beta_t");
  p.beta_e = get_number(j, path, "beta_e");
  p.updates_per_model = parse_update_count(require_key(j, path, "updates_per_model"), join_path(path, "updates_per_model"));
  p.downlink_rate_bps = get_number(j, path, "downlink_rate_bps");
  validated(path, [&] {
    validate(p);
    return 0;
  });
  return p;
}

inline json to_json(const SystemParams& p) {
  json k = p.updates_per_model.is_infinite() ? json("inf") : json(p.updates_per_model.value());
  return {{"tx_power_w", p.tx_power_w},       {"noise_w", p.noise_w},
          {"bandwidth_hz", p.bandwidth_hz},   {"local_freq_hz", p.local_freq_hz},
          {"edge_freq_hz", p.edge_freq_hz},   {"kappa", p.kappa},
          {"beta_t", p.beta_t},               {"beta_e", p.beta_e},
          {"updates_per_model", k},           {"downlink_rate_bps", p.downlink_rate_bps}};
}

// ---------------------------------------------------------------------------
// Networks

struct NetworkSource {
  std::string label;          // preset name, "mlp" or "layers"
  NetworkSpec net;
  std::optional<MlpSpec> mlp;  // set when the network came from an MLP description
};

inline NetworkSource parse_network(const json& j, const SystemParams& params, const std::string& path = "network") {
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (name == "autoencoder")
      return {name, build_autoencoder_preset(params.downlink_rate_bps), autoencoder_mlp(params.downlink_rate_bps)};
    if (name == "alexnet") return {name, build_alexnet_preset(params.downlink_rate_bps), std::nullopt};
    throw config_error("unknown preset '" + name + "' (expected autoencoder or alexnet)", path);
  }
  require_object(j, path);
  const bool has_layers = j.contains("layers");
  const bool has_mlp = j.contains("mlp");
  if (has_layers == has_mlp) throw config_error("exactly one of 'layers' or 'mlp' must be given", path);
  if (has_mlp) {
    reject_unknown(j, path, {"mlp"});
    const auto mpath = join_path(path, "mlp");
    const auto& m = j.at("mlp");
    require_object(m, mpath);
    reject_unknown(m, mpath, {"neurons", "lambda_bytes", "mu_bytes", "alpha", "downlink_bps"});
    const auto& widths = require_key(m, mpath, "neurons");
    if (!widths.is_array()) throw config_error("expected an array of widths", join_path(mpath, "neurons"));
    MlpSpec spec;
    for (std::size_t i = 0; i < widths.size(); ++i) {
      const auto w = as_count(widths[i], join_path(mpath, "neurons[" + std::to_string(i) + "]"), 1);
      if (w > 1000000000ULL) throw config_error("width too large", join_path(mpath, "neurons[" + std::to_string(i) + "]"));
      spec.neurons.push_back(static_cast<int>(w));
    }
    spec.bytes_per_activation = get_number_or(m, mpath, "lambda_bytes", spec.bytes_per_activation);
    spec.bytes_per_parameter = get_number_or(m, mpath, "mu_bytes", spec.bytes_per_parameter);
    spec.cycles_per_macc = get_number_or(m, mpath, "alpha", spec.cycles_per_macc);
    spec.downlink_rate_bps = get_number_or(m, mpath, "downlink_bps", params.downlink_rate_bps);
    auto net = validated(mpath, [&] { return build_mlp(spec); });
    return {"mlp", std::move(net), spec};
  }
  reject_unknown(j, path, {"layers", "exit_input_bits"});
  const auto lpath = join_path(path, "layers");
  const auto& arr = j.at("layers");
  if (!arr.is_array() || arr.empty()) throw config_error("expected a nonempty array", lpath);
  std::vector<LayerSpec> layers;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto ipath = lpath + "[" + std::to_string(i) + "]";
    require_object(arr[i], ipath);
    reject_unknown(arr[i], ipath, {"workload_cycles", "input_bits", "download_seconds"});
    layers.push_back({.workload_cycles = get_number(arr[i], ipath, "workload_cycles"),
                      .input_bits = get_number(arr[i], ipath, "input_bits"),
                      .download_seconds = get_number(arr[i], ipath, "download_seconds")});
  }
  const double exit_bits = get_number(j, path, "exit_input_bits");
  auto net = validated(path, [&] { return NetworkSpec(std::move(layers), exit_bits); });
  return {"layers", std::move(net), std::nullopt};
}

inline json to_json(const NetworkSpec& net) {
  json layers = json::array();
  for (const auto& l : net.layers())
    layers.push_back({{"workload_cycles", l.workload_cycles},
                      {"input_bits", l.input_bits},
                      {"download_seconds", l.download_seconds}});
  return {{"layers", layers}, {"exit_input_bits", net.exit_input_bits()}};
}

// ---------------------------------------------------------------------------
// Channel laws

enum class ChannelKind { truncated_exponential, pathloss_rayleigh, discrete };

/// One stage's SNR law as written in the config. Path-loss laws are kept
/// symbolic so sweeps can move the device.
struct ChannelSpec {
  ChannelKind kind = ChannelKind::truncated_exponential;
  double mean_snr = 0.0;
  PathLossParams pathloss;
  double floor_ratio = 1e-3;
  std::vector<SnrAtom> atoms;
};

inline ChannelSpec parse_channel_spec(const json& j, const std::string& path) {
  require_object(j, path);
  const auto& kind_j = require_key(j, path, "kind");
  if (!kind_j.is_string()) throw config_error("expected a string", join_path(path, "kind"));
  const auto kind = kind_j.get<std::string>();
  ChannelSpec c;
  if (kind == "truncated_exponential") {
    reject_unknown(j, path, {"kind", "mean_snr", "snr_floor_ratio"});
    c.kind = ChannelKind::truncated_exponential;
    c.mean_snr = get_number(j, path, "mean_snr");
    c.floor_ratio = get_number_or(j, path, "snr_floor_ratio", c.floor_ratio);
  } else if (kind == "pathloss_rayleigh") {
    reject_unknown(j, path, {"kind", "distance_m", "antenna_gain", "carrier_hz", "exponent", "snr_floor_ratio"});
    c.kind = ChannelKind::pathloss_rayleigh;
    c.pathloss.distance_m = get_number(j, path, "distance_m");
    c.pathloss.antenna_gain = get_number_or(j, path, "antenna_gain", c.pathloss.antenna_gain);
    c.pathloss.carrier_hz = get_number_or(j, path, "carrier_hz", c.pathloss.carrier_hz);
    c.pathloss.exponent = get_number_or(j, path, "exponent", c.pathloss.exponent);
    c.floor_ratio = get_number_or(j, path, "snr_floor_ratio", c.floor_ratio);
  } else if (kind == "discrete") {
    reject_unknown(j, path, {"kind", "atoms"});
    c.kind = ChannelKind::discrete;
    const auto apath = join_path(path, "atoms");
    const auto& atoms = require_key(j, path, "atoms");
    if (!atoms.is_array()) throw config_error("expected an array of [snr, probability] pairs", apath);
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      const auto ipath = apath + "[" + std::to_string(i) + "]";
      if (!atoms[i].is_array() || atoms[i].size() != 2) throw config_error("expected [snr, probability]", ipath);
      c.atoms.push_back({as_number(atoms[i][0], ipath), as_number(atoms[i][1], ipath)});
    }
  } else {
    throw config_error("unknown kind '" + kind + "' (expected truncated_exponential, pathloss_rayleigh or discrete)",
                       join_path(path, "kind"));
  }
  return c;
}

inline json to_json(const ChannelSpec& c) {
  switch (c.kind) {
    case ChannelKind::truncated_exponential:
      return {{"kind", "truncated_exponential"}, {"mean_snr", c.mean_snr}, {"snr_floor_ratio", c.floor_ratio}};
    case ChannelKind::pathloss_rayleigh:
      return {{"kind", "pathloss_rayleigh"},           {"distance_m", c.pathloss.distance_m},
              {"antenna_gain", c.pathloss.antenna_gain}, {"carrier_hz", c.pathloss.carrier_hz},
              {"exponent", c.pathloss.exponent},        {"snr_floor_ratio", c.floor_ratio}};
    case ChannelKind::discrete: {
      json atoms = json::array();
      for (const auto& a : c.atoms) atoms.push_back({a.snr, a.probability});
      return {{"kind", "discrete"}, {"atoms", atoms}};
    }
  }
  return {};
}

inline StageDistribution build_distribution(const ChannelSpec& c, const SystemParams& params,
                                            const std::string& path = "channel") {
  return validated(path, [&] {
    switch (c.kind) {
      case ChannelKind::truncated_exponential: return StageDistribution::with_floor_ratio(c.mean_snr, c.floor_ratio);
      case ChannelKind::pathloss_rayleigh:
        return StageDistribution::with_floor_ratio(mean_snr_from_pathloss(c.pathloss, params), c.floor_ratio);
      case ChannelKind::discrete: return StageDistribution::discrete(c.atoms);
    }
    throw std::invalid_argument("unknown channel kind");
  });
}

/// Shared law (one entry) or one law per stage 1..N+1.
struct ChannelConfig {
  std::vector<ChannelSpec> specs;
  bool shared = true;

  StageChannels build(const SystemParams& params, int stage_count) const {
    if (!shared && specs.size() < static_cast<std::size_t>(stage_count))
      throw config_error("per-stage channel list needs " + std::to_string(stage_count) + " entries (stages 1..N+1)",
                         "channel");
    if (shared) return identical_stages(build_distribution(specs.front(), params), stage_count);
    StageChannels out;
    for (int i = 0; i < stage_count; ++i)
      out.push_back(build_distribution(specs[static_cast<std::size_t>(i)], params,
                                       "channel[" + std::to_string(i) + "]"));
    return out;
  }
};

inline ChannelConfig parse_channel(const json& j, const std::string& path = "channel") {
  ChannelConfig c;
  if (j.is_array()) {
    if (j.empty()) throw config_error("per-stage channel list is empty", path);
    c.shared = false;
    for (std::size_t i = 0; i < j.size(); ++i)
      c.specs.push_back(parse_channel_spec(j[i], path + "[" + std::to_string(i) + "]"));
  } else {
    c.specs.push_back(parse_channel_spec(j, path));
  }
  return c;
}

inline json to_json(const ChannelConfig& c) {
  if (c.shared) return to_json(c.specs.front());
  json arr = json::array();
  for (const auto& s : c.specs) arr.push_back(to_json(s));
  return arr;
}

// ---------------------------------------------------------------------------
// Results

inline json to_json(const ThresholdPolicy& p) {
  json t = json::array();
  for (double v : p.thresholds) t.push_back(number_or_inf(v));
  json out{{"rule_kind", std::string(to_string(p.rule))}, {"horizon_M", p.horizon}, {"thresholds", t}};
  if (!p.value_table.empty()) out["value_table"] = p.value_table;
  return out;
}

inline ThresholdPolicy policy_from_json(const json& j, const std::string& path = "policy") {
  require_object(j, path);
  reject_unknown(j, path, {"rule_kind", "horizon_M", "thresholds", "value_table"});
  ThresholdPolicy p;
  const auto& kind = require_key(j, path, "rule_kind");
  const auto name = kind.is_string() ? kind.get<std::string>() : std::string();
  if (name == "optimal") p.rule = RuleKind::optimal;
  else if (name == "one_sla") p.rule = RuleKind::one_sla;
  else if (name == "custom") p.rule = RuleKind::custom;
  else throw config_error("expected optimal, one_sla or custom", join_path(path, "rule_kind"));
  p.horizon = static_cast<int>(as_count(require_key(j, path, "horizon_M"), join_path(path, "horizon_M"), 0));
  const auto& t = require_key(j, path, "thresholds");
  if (!t.is_array() || t.size() != static_cast<std::size_t>(p.horizon))
    throw config_error("expected horizon_M thresholds", join_path(path, "thresholds"));
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto ipath = join_path(path, "thresholds[" + std::to_string(i) + "]");
    if (t[i].is_string() && t[i].get<std::string>() == "inf") p.thresholds.push_back(kInfinity);
    else p.thresholds.push_back(as_number(t[i], ipath));
  }
  if (j.contains("value_table"))
    for (const auto& v : j.at("value_table")) p.value_table.push_back(as_number(v, join_path(path, "value_table")));
  return p;
}

inline json to_json(const PlacementRow& r, bool best) {
  json out{{"M", r.m}, {"Z", number_or_inf(r.total_cost)}, {"expected_etc", number_or_inf(r.expected_etc)},
           {"psi", r.psi}, {"best", best}};
  if (!r.ok()) out["error"] = r.error;
  return out;
}

inline json to_json(const PlacementReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows) rows.push_back(to_json(row, row.m == r.best_m));
  json out{{"strategy", std::string(to_string(r.strategy))},
           {"best_M", r.best_m},
           {"best_Z", r.best_total_cost},
           {"rows", rows},
           {"policy_at_best", to_json(r.policy_at_best)}};
  if (r.closed_form) {
    const auto& d = *r.closed_form;
    out["closed_form"] = {{"delta", number_or_inf(d.delta)},
                          {"continue_probability", d.continue_probability},
                          {"g_raw", d.g_raw},
                          {"g_simplified", d.g_simplified},
                          {"g_gap", std::fabs(d.g_raw - d.g_simplified)},
                          {"download_term", d.download_term},
                          {"root", number_or_inf(d.root)},
                          {"branch", d.branch}};
  }
  return out;
}

inline std::string placement_csv_header() { return "strategy,M,Z,expected_etc,psi,best\n"; }

inline std::string placement_csv_rows(const PlacementReport& r) {
  std::string out;
  for (const auto& row : r.rows)
    out += std::string(to_string(r.strategy)) + ',' + std::to_string(row.m) + ',' + fmt(row.total_cost) + ',' +
           fmt(row.expected_etc) + ',' + fmt(row.psi) + ',' + (row.m == r.best_m ? "1" : "0") + '\n';
  return out;
}

inline json to_json(const SimResult& s) {
  return {{"trials", s.trials},
          {"mean_etc", s.mean_etc},
          {"std_error", s.std_error},
          {"stop_histogram", s.stop_histogram},
          {"seed", s.seed},
          {"rng_algorithm", s.rng_algorithm}};
}

inline json to_json(const OracleResult& o) {
  json t = json::array();
  for (double v : o.thresholds) t.push_back(number_or_inf(v));
  return {{"grid_points", o.grid_points}, {"thresholds", t}, {"expected_cost", o.expected_cost}};
}

// ---------------------------------------------------------------------------
// Provenance metadata carried by every output file.

struct Metadata {
  std::string config_hash;
  std::string network_hash;
  std::uint64_t seed = 0;
  std::string gamma_min;  // floor(s) in use; ';'-separated when it varies
  QuadratureOptions quadrature;
};

/// Distinct gamma_min values across stages (support_lo of each law).
inline std::string gamma_min_summary(const StageChannels& stages) {
  std::vector<double> seen;
  for (const auto& s : stages) {
    bool dup = false;
    for (double v : seen) dup = dup || v == s.support_lo();
    if (!dup) seen.push_back(s.support_lo());
  }
  std::string out;
  for (double v : seen) out += (out.empty() ? "" : ";") + fmt(v);
  return out;
}

inline std::vector<std::pair<std::string, std::string>> metadata_fields(const Metadata& m) {
  return {{"tool", kToolName},
          {"tool_version", kToolVersion},
          {"config_hash", m.config_hash},
          {"network_hash", m.network_hash},
          {"rng_algorithm", kRngAlgorithm},
          {"seed", std::to_string(m.seed)},
          {"gamma_min", m.gamma_min},
          {"quadrature_abs_tol", fmt(m.quadrature.abs_tol)},
          {"quadrature_rel_tol", fmt(m.quadrature.rel_tol)},
          {"quadrature_tail_mass", fmt(m.quadrature.tail_mass)}};
}

inline std::string csv_metadata(const Metadata& m) {
  std::string out;
  for (const auto& [k, v] : metadata_fields(m)) out += "# " + k + ": " + v + '\n';
  return out;
}

inline json json_metadata(const Metadata& m) {
  json out = json::object();
  for (const auto& [k, v] : metadata_fields(m)) out[k] = v;
  return out;
}

}  // namespace coinfer::io

#endif  // COINFER_IO_HPP
