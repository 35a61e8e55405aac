// fast: command-line driver for two-pass federated active learning runs.
//
//   fast run --config exp.cfg
//   fast gen-synth --classes 4 --per-class 400 --dim 16 --sigma 0.15 --seed 1 --out s.femb
//   fast inspect s.femb
//   fast sweep --config exp.cfg --param al.budget_fraction --values 0.05,0.2
//
// Exit codes: 0 success, 2 config error, 3 data error.

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fast/config.hpp"
#include "fast/datastore.hpp"
#include "fast/error.hpp"
#include "fast/orchestrator.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void print_run(const fast::RunResult& r) {
  std::printf("method=%s final_acc=%.4f rounds=%u total_mb=%.4f budget=%llu/%llu\n",
              r.trace.method.c_str(), r.trace.final_acc, r.trace.round_count, r.ledger.total_mb(),
              static_cast<unsigned long long>(r.trace.budget_consumed),
              static_cast<unsigned long long>(r.trace.budget_total));
}

int cmd_run(const std::string& config_path) {
  const auto cfg = fast::load_config(config_path);
  const auto result = fast::run_experiment(cfg);
  if (!cfg.output_dir.empty()) fast::write_run_outputs(result, cfg.output_dir);
  print_run(result);
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& key, const std::string& values) {
  const auto cfg = fast::load_config(config_path);
  const auto points = fast::run_sweep(cfg, key, split_csv(values));
  for (const auto& p : points) {
    std::printf("%s=%s ", key.c_str(), p.value.c_str());
    print_run(p.result);
  }
  return 0;
}

int cmd_inspect(const std::string& path) {
  const auto store = fast::load_store(path);
  std::printf("file: %s\nformat: FASTEMB1\nn: %u\nd: %u\nc: %u\nclass histogram:\n", path.c_str(),
              store.n(), store.d(), store.c());
  const auto hist = store.class_histogram();
  for (std::size_t c = 0; c < hist.size(); ++c) std::printf("  %zu: %u\n", c, hist[c]);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-pass federated active learning simulator"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "Execute one experiment");
  run->add_option("--config", config_path, "Experiment config file")->required();

  std::uint32_t classes = 4, per_class = 400, dim = 16;
  double sigma = 0.15;
  std::uint64_t seed = 0;
  std::string out_path;
  auto* gen = app.add_subcommand("gen-synth", "Write a synthetic FASTEMB1 store");
  gen->add_option("--classes", classes, "Class count")->required();
  gen->add_option("--per-class", per_class, "Samples per class")->required();
  gen->add_option("--dim", dim, "Embedding dimension")->required();
  gen->add_option("--sigma", sigma, "Cluster standard deviation")->required();
  gen->add_option("--seed", seed, "Generator seed")->required();
  gen->add_option("--out", out_path, "Output path")->required();

  std::string inspect_path;
  auto* inspect = app.add_subcommand("inspect", "Print header and class histogram");
  inspect->add_option("file", inspect_path, "FASTEMB1 file")->required();

  std::string param, values;
  auto* sweep = app.add_subcommand("sweep", "Run one experiment per parameter value");
  sweep->add_option("--config", config_path, "Base experiment config")->required();
  sweep->add_option("--param", param, "Dotted config key to vary")->required();
  sweep->add_option("--values", values, "Comma-separated values")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*run) return cmd_run(config_path);
    if (*gen) {
      fast::save_store(fast::gen_synthetic(classes, per_class, dim, sigma, seed), out_path);
      std::printf("wrote %s\n", out_path.c_str());
      return 0;
    }
    if (*inspect) return cmd_inspect(inspect_path);
    if (*sweep) return cmd_sweep(config_path, param, values);
  } catch (const fast::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const fast::Error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  }
  return 0;
}
