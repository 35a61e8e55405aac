#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "fast/partition.hpp"
#include "fast/trainer.hpp"
#include "fast/weaklabel.hpp"

namespace fast {

enum class AlMethod { kFast, kRandom, kEntropy, kCoreset, kAblation };

std::string to_string(AlMethod m);
AlMethod parse_al_method(const std::string& name);

// Pipeline pieces of the linear-probing ablation.
enum class Component { kProbe, kWeak, kRefine, kRandomRefine };

using ComponentSet = std::set<Component>;

std::string to_string(const ComponentSet& components);
ComponentSet parse_components(const std::string& csv);
// Throws ConfigError unless probe is present and refine/random_refine are
// not both set.
void validate_components(const ComponentSet& components);

struct DataConfig {
  std::string source = "synthetic";  // synthetic | file
  std::filesystem::path path;
  std::uint32_t classes = 4;
  std::uint32_t per_class = 400;
  std::uint32_t dim = 16;
  double sigma = 0.15;
  std::uint64_t seed = 0;
  double test_fraction = 0.2;
};

struct PartitionConfig {
  PartitionMode mode = PartitionMode::kDirichlet;
  double alpha = 0.1;
  std::uint32_t clients = 10;
};

struct AlConfig {
  AlMethod method = AlMethod::kFast;
  double budget_fraction = 0.05;
  double per_round_fraction = 0.05;
  double initial_fraction = 0.01;
  std::uint32_t k_nn = 5;
  UncertaintyMetric metric = UncertaintyMetric::kEntropy;
  std::uint32_t rounds = 1;
  bool initial_in_budget = true;
  bool share_initial_embeddings = false;
  bool warm_start = true;
  ComponentSet components = {Component::kProbe, Component::kWeak, Component::kRefine};
};

struct ModelConfig {
  std::uint32_t hidden = 0;  // 0 = linear head
};

struct ExperimentConfig {
  DataConfig data;
  PartitionConfig partition;
  AlConfig al;
  TrainConfig fl;
  ModelConfig model;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir;
  std::uint32_t threads = 1;

  // Range checks and path resolution; throws ConfigError.
  void validate() const;
};

// Assigns one dotted key; throws ConfigError for unknown keys or bad values.
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);

// Every key accepted by set_config_value.
const std::vector<std::string>& config_keys();

// Line-oriented "key = value" text; '#' starts a comment.
ExperimentConfig parse_config(const std::string& text,
                              const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace fast
