#ifndef COINFER_EXPERIMENT_HPP
#define COINFER_EXPERIMENT_HPP

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "coinfer/io.hpp"

namespace coinfer {

enum class SweepAxis { distance_m, updates_per_model, M };

inline std::string_view to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::distance_m: return "distance_m";
    case SweepAxis::updates_per_model: return "updates_per_model";
    case SweepAxis::M: return "M";
  }
  return "unknown";
}

struct SweepSpec {
  SweepAxis axis = SweepAxis::distance_m;
  std::vector<double> values;  // +inf encodes K = inf
};

struct ExperimentConfig {
  io::json raw;  // effective document after command-line overrides
  std::string hash;
  io::NetworkSource network;
  SystemParams params;
  io::ChannelConfig channel;
  std::optional<int> m;
  std::optional<SweepSpec> sweep;
  std::vector<Strategy> strategies;  // empty: every applicable strategy
  std::optional<std::uint64_t> trials;
  std::optional<std::uint64_t> seed;
  QuadratureOptions quadrature;

  int layer_count() const { return network.net.layer_count(); }
};

/// Values given on the command line; they replace the matching config keys
/// before parsing, so the config hash covers them.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> trials;
  std::vector<std::string> strategies;
  std::optional<std::string> updates;
  std::optional<int> m;
};

namespace detail {

inline std::string line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < text.size() && i + 1 < byte; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

inline SweepSpec parse_sweep(const io::json& j) {
  const std::string path = "sweep";
  io::require_object(j, path);
  io::reject_unknown(j, path, {"variable", "values"});
  const auto& var = io::require_key(j, path, "variable");
  const std::string name = var.is_string() ? var.get<std::string>() : "";
  SweepSpec s;
  if (name == "distance_m") s.axis = SweepAxis::distance_m;
  else if (name == "updates_per_model") s.axis = SweepAxis::updates_per_model;
  else if (name == "M") s.axis = SweepAxis::M;
  else throw config_error("expected distance_m, updates_per_model or M", "sweep.variable");
  const auto& vals = io::require_key(j, path, "values");
  if (!vals.is_array() || vals.empty()) throw config_error("expected a nonempty array", "sweep.values");
  for (std::size_t i = 0; i < vals.size(); ++i) {
    const auto ipath = "sweep.values[" + std::to_string(i) + "]";
    switch (s.axis) {
      case SweepAxis::distance_m: {
        const double d = io::as_number(vals[i], ipath);
        if (!(d > 0.0) || !std::isfinite(d)) throw config_error("distance must be finite and > 0", ipath);
        s.values.push_back(d);
        break;
      }
      case SweepAxis::updates_per_model: {
        const auto k = io::parse_update_count(vals[i], ipath);
        s.values.push_back(k.is_infinite() ? kInfinity : static_cast<double>(k.value()));
        break;
      }
      case SweepAxis::M: s.values.push_back(static_cast<double>(io::as_count(vals[i], ipath, 0))); break;
    }
  }
  return s;
}

inline QuadratureOptions parse_quadrature(const io::json& j) {
  const std::string path = "quadrature";
  io::require_object(j, path);
  io::reject_unknown(j, path, {"abs_tol", "rel_tol", "tail_mass"});
  QuadratureOptions q;
  q.abs_tol = io::get_number_or(j, path, "abs_tol", q.abs_tol);
  q.rel_tol = io::get_number_or(j, path, "rel_tol", q.rel_tol);
  q.tail_mass = io::get_number_or(j, path, "tail_mass", q.tail_mass);
  if (!(q.abs_tol > 0) || !(q.rel_tol > 0) || !(q.tail_mass > 0) || !(q.tail_mass < 1))
    throw config_error("tolerances must be positive and tail_mass < 1", path);
  return q;
}

}  // namespace detail

inline ExperimentConfig parse_config(io::json doc, const Overrides& o = {}) {
  if (!doc.is_object()) throw config_error("config must be a JSON object", "");
  if (o.seed) doc["seed"] = *o.seed;
  if (o.trials) doc["trials"] = *o.trials;
  if (!o.strategies.empty()) doc["strategies"] = o.strategies;
  if (o.m) doc["M"] = *o.m;
  if (o.updates) {
    if (!doc.contains("params") || !doc["params"].is_object()) throw config_error("missing required key", "params");
    const auto k = io::parse_update_count_text(*o.updates, "--updates");
    doc["params"]["updates_per_model"] = k.is_infinite() ? io::json("inf") : io::json(k.value());
  }
  io::reject_unknown(doc, "",
                     {"network", "params", "channel", "M", "sweep", "strategies", "trials", "seed", "quadrature"});

  const auto params = io::parse_system_params(io::require_key(doc, "", "params"));
  ExperimentConfig c{.raw = {},
                     .hash = {},
                     .network = io::parse_network(io::require_key(doc, "", "network"), params),
                     .params = params,
                     .channel = io::parse_channel(io::require_key(doc, "", "channel")),
                     .m = {},
                     .sweep = {},
                     .strategies = {},
                     .trials = {},
                     .seed = {},
                     .quadrature = {}};
  if (doc.contains("M")) {
    const auto m = io::as_count(doc["M"], "M", 0);
    if (m > static_cast<std::uint64_t>(c.layer_count()))
      throw config_error("must lie in [0, " + std::to_string(c.layer_count()) + "]", "M");
    c.m = static_cast<int>(m);
  }
  if (doc.contains("sweep")) c.sweep = detail::parse_sweep(doc["sweep"]);
  if (doc.contains("strategies")) {
    const auto& s = doc["strategies"];
    if (!s.is_array() || s.empty()) throw config_error("expected a nonempty array", "strategies");
    for (std::size_t i = 0; i < s.size(); ++i) {
      const auto ipath = "strategies[" + std::to_string(i) + "]";
      const auto parsed = s[i].is_string() ? parse_strategy(s[i].get<std::string>()) : std::nullopt;
      if (!parsed)
        throw config_error("expected optimal_exhaustive, one_sla_exhaustive, mlp_closed_form or hybrid", ipath);
      bool dup = false;
      for (auto x : c.strategies) dup = dup || x == *parsed;
      if (!dup) c.strategies.push_back(*parsed);
    }
  }
  if (doc.contains("trials")) c.trials = io::as_count(doc["trials"], "trials", 1);
  if (doc.contains("seed")) c.seed = io::as_count(doc["seed"], "seed", 0);
  if (doc.contains("quadrature")) c.quadrature = detail::parse_quadrature(doc["quadrature"]);
  // Build once so bad laws fail at load time with their field name.
  (void)c.channel.build(c.params, c.layer_count() + 1);
  c.raw = std::move(doc);
  c.hash = io::fnv1a(c.raw.dump());
  return c;
}

inline ExperimentConfig parse_config_text(const std::string& text, const Overrides& o = {}) {
  io::json doc;
  try {
    doc = io::json::parse(text);
  } catch (const io::json::parse_error& e) {
    throw config_error("malformed JSON at " + detail::line_column(text, e.byte), "");
  }
  return parse_config(std::move(doc), o);
}

inline ExperimentConfig load_config(const std::filesystem::path& path, const Overrides& o = {}) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file '" + path.string() + "'", "");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), o);
}

// ---------------------------------------------------------------------------

namespace detail {

inline void write_file(const std::filesystem::path& dir, const std::string& name, const std::string& content) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
  out << content;
}

inline io::Metadata metadata(const ExperimentConfig& c, const StageChannels& stages, std::uint64_t seed = 0) {
  return {.config_hash = c.hash,
          .network_hash = io::network_hash(c.network.net),
          .seed = seed,
          .gamma_min = io::gamma_min_summary(stages),
          .quadrature = c.quadrature};
}

inline io::json json_header(const ExperimentConfig& c, const io::Metadata& m) {
  return {{"metadata", io::json_metadata(m)}, {"config", c.raw}};
}

inline bool closed_form_applicable(const ExperimentConfig& c, std::string* why) {
  if (!c.network.mlp || !c.network.mlp->equal_width()) {
    if (why) *why = "network is not an equal-width MLP";
    return false;
  }
  if (!c.channel.shared) {
    if (why) *why = "closed form needs one SNR law shared by all stages";
    return false;
  }
  return true;
}

/// Requested strategies, or every applicable one when none were named.
inline std::vector<Strategy> strategies_for(const ExperimentConfig& c) {
  if (!c.strategies.empty()) {
    std::string why;
    for (auto s : c.strategies)
      if (s == Strategy::mlp_closed_form && !closed_form_applicable(c, &why))
        throw config_error("unsupported strategy mlp_closed_form: " + why, "strategies");
    return c.strategies;
  }
  std::vector<Strategy> all{Strategy::optimal_exhaustive, Strategy::one_sla_exhaustive, Strategy::hybrid};
  if (closed_form_applicable(c, nullptr)) all.push_back(Strategy::mlp_closed_form);
  return all;
}

inline PlacementReport run_strategy(Strategy s, const ExperimentConfig& c, const SystemParams& params,
                                    const io::NetworkSource& network, const StageChannels& stages) {
  const CostModel cost(network.net, params);
  switch (s) {
    case Strategy::optimal_exhaustive: return optimize_exhaustive(cost, stages, RuleKind::optimal, c.quadrature);
    case Strategy::one_sla_exhaustive: return optimize_exhaustive(cost, stages, RuleKind::one_sla, c.quadrature);
    case Strategy::hybrid: return hybrid(cost, stages, c.quadrature);
    case Strategy::mlp_closed_form: return mlp_closed_form(*network.mlp, params, stages.front(), c.quadrature);
  }
  throw std::logic_error("unknown strategy");
}

}  // namespace detail

/// thresholds.csv (+ thresholds.json) for the optimal and 1-sla rules at M
/// (default N). Stage M+1 is the forced stop and carries threshold 0.
inline void cmd_thresholds(const ExperimentConfig& c, const std::filesystem::path& out_dir) {
  const int m = c.m.value_or(c.layer_count());
  const CostModel cost(c.network.net, c.params);
  const auto stages = c.channel.build(c.params, c.layer_count() + 1);
  const auto optimal = backward_induction(m, cost, stages, c.quadrature);
  const auto sla = one_sla_thresholds(m, cost, stages, c.quadrature);
  const auto meta = detail::metadata(c, stages);

  std::string csv = io::csv_metadata(meta) + "stage,rule,threshold_snr,value_table\n";
  io::json policies = io::json::array();
  for (const auto* p : {&optimal, &sla}) {
    const auto values = p->rule == RuleKind::optimal ? p->value_table : policy_value_table(*p, cost, stages, c.quadrature);
    for (int n = 1; n <= m + 1; ++n)
      csv += std::to_string(n) + ',' + std::string(to_string(p->rule)) + ',' + io::fmt(n <= m ? p->threshold(n) : 0.0) +
             ',' + io::fmt(values[static_cast<std::size_t>(n - 1)]) + '\n';
    auto pj = io::to_json(*p);
    pj["value_table"] = values;
    policies.push_back(pj);
  }
  auto doc = detail::json_header(c, meta);
  doc["policies"] = policies;
  detail::write_file(out_dir, "thresholds.csv", csv);
  detail::write_file(out_dir, "thresholds.json", doc.dump(2) + '\n');
}

/// placement.csv and placement.json, one report per strategy.
inline std::vector<PlacementReport> cmd_place(const ExperimentConfig& c, const std::filesystem::path& out_dir) {
  const auto strategies = detail::strategies_for(c);
  const auto stages = c.channel.build(c.params, c.layer_count() + 1);
  std::vector<PlacementReport> reports;
  for (auto s : strategies) reports.push_back(detail::run_strategy(s, c, c.params, c.network, stages));

  const auto meta = detail::metadata(c, stages);
  std::string csv = io::csv_metadata(meta) + io::placement_csv_header();
  io::json arr = io::json::array();
  for (const auto& r : reports) {
    csv += io::placement_csv_rows(r);
    arr.push_back(io::to_json(r));
  }
  auto doc = detail::json_header(c, meta);
  doc["reports"] = arr;
  detail::write_file(out_dir, "placement.csv", csv);
  detail::write_file(out_dir, "placement.json", doc.dump(2) + '\n');
  return reports;
}

struct SweepRow {
  double axis_value = 0.0;
  Strategy strategy = Strategy::optimal_exhaustive;
  int best_m = 0;
  double total_cost = 0.0;
  double expected_etc = 0.0;
  std::optional<double> optimality_probability;
};

/// sweep.csv: one row per axis value per strategy. On the M axis each
/// strategy is evaluated at that fixed M with its splitting rule (optimal for
/// optimal_exhaustive and hybrid, 1-sla otherwise).
inline std::vector<SweepRow> cmd_sweep(const ExperimentConfig& c, const std::filesystem::path& out_dir) {
  if (!c.sweep) throw config_error("sweep needs a 'sweep' section", "sweep");
  const auto& sweep = *c.sweep;
  std::vector<Strategy> strategies = c.strategies;
  if (strategies.empty())
    strategies = sweep.axis == SweepAxis::M ? std::vector<Strategy>{Strategy::optimal_exhaustive, Strategy::one_sla_exhaustive}
                                            : detail::strategies_for(c);
  else if (sweep.axis != SweepAxis::M)
    (void)detail::strategies_for(c);
  if (sweep.axis == SweepAxis::distance_m)
    for (const auto& s : c.channel.specs)
      if (s.kind != io::ChannelKind::pathloss_rayleigh)
        throw config_error("distance sweep needs pathloss_rayleigh channel laws", "channel");

  std::vector<SweepRow> rows;
  std::vector<std::string> floors;
  for (double v : sweep.values) {
    SystemParams params = c.params;
    io::ChannelConfig channel = c.channel;
    if (sweep.axis == SweepAxis::distance_m)
      for (auto& s : channel.specs) s.pathloss.distance_m = v;
    if (sweep.axis == SweepAxis::updates_per_model)
      params.updates_per_model = std::isinf(v) ? UpdateCount::infinite() : UpdateCount(static_cast<std::uint64_t>(v));
    const auto stages = channel.build(params, c.layer_count() + 1);
    floors.push_back(io::gamma_min_summary(stages));

    if (sweep.axis == SweepAxis::M) {
      const int m = static_cast<int>(v);
      if (m > c.layer_count())
        throw config_error("M value " + std::to_string(m) + " exceeds N = " + std::to_string(c.layer_count()),
                           "sweep.values");
      const CostModel cost(c.network.net, params);
      std::optional<double> prob;
      if (m >= 1) prob = one_sla_optimality_probability(m, cost, stages, c.quadrature);
      for (auto s : strategies) {
        const bool optimal_rule = s == Strategy::optimal_exhaustive || s == Strategy::hybrid;
        const auto policy = optimal_rule ? backward_induction(m, cost, stages, c.quadrature)
                                         : one_sla_thresholds(m, cost, stages, c.quadrature);
        const double etc = expected_etc(policy, cost, stages, c.quadrature);
        rows.push_back({v, s, m, cost.total_cost(m, etc), etc, prob});
      }
      continue;
    }
    for (auto s : strategies) {
      const auto r = detail::run_strategy(s, c, params, c.network, stages);
      rows.push_back({v, s, r.best_m, r.best_total_cost, r.row(r.best_m)->expected_etc, std::nullopt});
    }
  }

  auto meta = detail::metadata(c, c.channel.build(c.params, c.layer_count() + 1));
  meta.gamma_min.clear();
  for (const auto& f : floors) meta.gamma_min += (meta.gamma_min.empty() ? "" : ";") + f;
  std::string csv = io::csv_metadata(meta) + "# axis: " + std::string(to_string(sweep.axis)) + '\n' +
                    "axis_value,strategy,best_M,Z,expected_etc,optimality_prob\n";
  for (const auto& r : rows)
    csv += io::fmt(r.axis_value) + ',' + std::string(to_string(r.strategy)) + ',' + std::to_string(r.best_m) + ',' +
           io::fmt(r.total_cost) + ',' + io::fmt(r.expected_etc) + ',' +
           (r.optimality_probability ? io::fmt(*r.optimality_probability) : std::string()) + '\n';
  detail::write_file(out_dir, "sweep.csv", csv);
  return rows;
}

struct SimulateOutcome {
  bool all_checks_pass = true;
  io::json document;
};

/// sim.json and sim.csv: Monte Carlo vs analytic for both rules at M
/// (default N), with 3-sigma checks on the mean and on every stop bin.
inline SimulateOutcome cmd_simulate(const ExperimentConfig& c, const std::filesystem::path& out_dir,
                                    const SimOptions& sim_opts = {}) {
  if (!c.trials) throw config_error("simulate needs 'trials' (config or --trials)", "trials");
  if (!c.seed) throw config_error("simulate needs 'seed' (config or --seed)", "seed");
  const std::uint64_t trials = *c.trials;
  const std::uint64_t seed = *c.seed;
  const int m = c.m.value_or(c.layer_count());
  const CostModel cost(c.network.net, c.params);
  const auto stages = c.channel.build(c.params, c.layer_count() + 1);
  const auto meta = detail::metadata(c, stages, seed);

  SimulateOutcome out;
  std::string csv = io::csv_metadata(meta) + "rule,stage,simulated_frequency,analytic_probability,std_error,within_3sigma\n";
  io::json results = io::json::array();
  const double n = static_cast<double>(trials);
  for (const auto& policy : {backward_induction(m, cost, stages, c.quadrature), one_sla_thresholds(m, cost, stages, c.quadrature)}) {
    const auto analytic = evaluate_policy(policy, cost, stages, c.quadrature);
    const auto sim = simulate(policy, cost, stages, trials, seed, sim_opts);
    const double delta = sim.mean_etc - analytic.expected_etc;
    const double slack = 1e-12 * std::fabs(analytic.expected_etc);
    const bool mean_ok = std::fabs(delta) <= 3.0 * sim.std_error + slack;
    bool rule_ok = mean_ok;
    io::json bins = io::json::array();
    const std::string rule(to_string(policy.rule));
    for (std::size_t i = 0; i < sim.stop_histogram.size(); ++i) {
      const double p = analytic.stop_probability[i];
      const double se = std::sqrt(std::max(p * (1.0 - p), 0.0) / n);
      const bool ok = std::fabs(sim.stop_histogram[i] - p) <= 3.0 * se + 1e-12;
      rule_ok = rule_ok && ok;
      bins.push_back({{"stage", i + 1}, {"simulated", sim.stop_histogram[i]}, {"analytic", p}, {"std_error", se}, {"pass", ok}});
      csv += rule + ',' + std::to_string(i + 1) + ',' + io::fmt(sim.stop_histogram[i]) + ',' + io::fmt(p) + ',' +
             io::fmt(se) + ',' + (ok ? "1" : "0") + '\n';
    }
    out.all_checks_pass = out.all_checks_pass && rule_ok;
    results.push_back({{"rule", rule},
                       {"policy", io::to_json(policy)},
                       {"simulation", io::to_json(sim)},
                       {"analytic_expected_etc", analytic.expected_etc},
                       {"delta", delta},
                       {"delta_std_errors", sim.std_error > 0 ? delta / sim.std_error : 0.0},
                       {"mean_within_3sigma", mean_ok},
                       {"histogram", bins},
                       {"pass", rule_ok}});
  }
  auto doc = detail::json_header(c, meta);
  doc["M"] = m;
  doc["results"] = results;
  if (m >= 1)
    doc["coincidence"] = {{"rate", coincidence_rate(m, cost, stages, trials, seed, sim_opts, c.quadrature)},
                          {"optimality_probability", one_sla_optimality_probability(m, cost, stages, c.quadrature)}};
  doc["pass"] = out.all_checks_pass;
  detail::write_file(out_dir, "sim.json", doc.dump(2) + '\n');
  detail::write_file(out_dir, "sim.csv", csv);
  out.document = std::move(doc);
  return out;
}

}  // namespace coinfer

#endif  // COINFER_EXPERIMENT_HPP
