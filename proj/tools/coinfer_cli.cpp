// coinfer: placement and split-point planner for device-edge co-inference.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "coinfer/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitAcceptance = 4;

struct Args {
  std::string config;
  std::string out = ".";
  coinfer::Overrides overrides;
  unsigned threads = 0;
};

void add_common(CLI::App* sub, Args& a) {
  sub->add_option("-c,--config", a.config, "experiment config (JSON)")->required();
  sub->add_option("-o,--out", a.out, "output directory")->capture_default_str();
  sub->add_option("--seed", a.overrides.seed, "Monte Carlo seed");
  sub->add_option("--trials", a.overrides.trials, "Monte Carlo trials");
  sub->add_option("--strategy", a.overrides.strategies,
                  "optimal_exhaustive | one_sla_exhaustive | mlp_closed_form | hybrid (repeatable)");
  sub->add_option("--updates", a.overrides.updates, "inferences per model update K, or 'inf'");
  sub->add_option("-M,--horizon", a.overrides.m, "layers placed on the device");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Model placement and online splitting for device-edge co-inference"};
  app.set_version_flag("--version", std::string(coinfer::kToolVersion));
  app.require_subcommand(1);

  Args args;
  auto* thresholds = app.add_subcommand("thresholds", "write stopping thresholds for both rules");
  auto* place = app.add_subcommand("place", "choose the number of layers to place");
  auto* sweep = app.add_subcommand("sweep", "placement over a distance, K or M sweep");
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo check of the analytic costs");
  for (auto* sub : {thresholds, place, sweep, simulate}) add_common(sub, args);
  simulate->add_option("--threads", args.threads, "worker threads (0: all cores)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    const auto config = coinfer::load_config(args.config, args.overrides);
    const std::filesystem::path out = args.out;
    if (*thresholds) {
      coinfer::cmd_thresholds(config, out);
      std::printf("wrote %s\n", (out / "thresholds.csv").c_str());
    } else if (*place) {
      for (const auto& r : coinfer::cmd_place(config, out))
        std::printf("%-20s best_M=%d Z=%s\n", std::string(coinfer::to_string(r.strategy)).c_str(), r.best_m,
                    coinfer::io::fmt(r.best_total_cost).c_str());
      std::printf("wrote %s\n", (out / "placement.csv").c_str());
    } else if (*sweep) {
      const auto rows = coinfer::cmd_sweep(config, out);
      std::printf("wrote %zu rows to %s\n", rows.size(), (out / "sweep.csv").c_str());
    } else if (*simulate) {
      const auto result = coinfer::cmd_simulate(config, out, {.threads = args.threads});
      std::printf("wrote %s\n", (out / "sim.json").c_str());
      if (!result.all_checks_pass) {
        std::fprintf(stderr, "error: Monte Carlo result outside 3 standard errors of the analytic value\n");
        return kExitAcceptance;
      }
    }
  } catch (const coinfer::config_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const coinfer::numerical_failure& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::out_of_range& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return kExitOk;
}
