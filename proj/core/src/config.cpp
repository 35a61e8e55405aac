#include "fast/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "fast/error.hpp"

namespace fast {

std::string to_string(AlMethod m) {
  switch (m) {
    case AlMethod::kFast: return "fast";
    case AlMethod::kRandom: return "random";
    case AlMethod::kEntropy: return "entropy";
    case AlMethod::kCoreset: return "coreset";
    case AlMethod::kAblation: return "ablation";
  }
  return "?";
}

AlMethod parse_al_method(const std::string& name) {
  if (name == "fast") return AlMethod::kFast;
  if (name == "random") return AlMethod::kRandom;
  if (name == "entropy") return AlMethod::kEntropy;
  if (name == "coreset") return AlMethod::kCoreset;
  if (name == "ablation") return AlMethod::kAblation;
  throw ConfigError("unknown AL method '" + name + "'");
}

std::string to_string(const ComponentSet& components) {
  std::string out;
  for (Component c : components) {
    if (!out.empty()) out += ',';
    switch (c) {
      case Component::kProbe: out += "probe"; break;
      case Component::kWeak: out += "weak"; break;
      case Component::kRefine: out += "refine"; break;
      case Component::kRandomRefine: out += "random_refine"; break;
    }
  }
  return out;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

ComponentSet parse_components(const std::string& csv) {
  ComponentSet out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item == "probe") out.insert(Component::kProbe);
    else if (item == "weak") out.insert(Component::kWeak);
    else if (item == "refine") out.insert(Component::kRefine);
    else if (item == "random_refine") out.insert(Component::kRandomRefine);
    else throw ConfigError("unknown ablation component '" + item + "'");
  }
  return out;
}

void validate_components(const ComponentSet& components) {
  if (!components.contains(Component::kProbe)) {
    throw ConfigError("ablation components must include probe");
  }
  if (components.contains(Component::kRefine) && components.contains(Component::kRandomRefine)) {
    throw ConfigError("refine and random_refine are mutually exclusive");
  }
  // Uncertainty ranking reads the prototype scores of the preliminary pass.
  if (components.contains(Component::kRefine) && !components.contains(Component::kWeak)) {
    throw ConfigError("refine requires weak");
  }
}

namespace {

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size() || !std::isfinite(x)) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t x = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  }
  return x;
}

std::uint32_t to_u32(const std::string& key, const std::string& v) {
  const auto x = to_u64(key, v);
  if (x > 0xFFFFFFFFULL) throw ConfigError(key + ": value too large");
  return static_cast<std::uint32_t>(x);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"seed", [](auto& c, auto& k, auto& v) { c.seed = to_u64(k, v); }},
      {"output.dir", [](auto& c, auto&, auto& v) { c.output_dir = v; }},
      {"run.threads", [](auto& c, auto& k, auto& v) { c.threads = to_u32(k, v); }},
      {"data.source", [](auto& c, auto& k, auto& v) {
         if (v != "synthetic" && v != "file") throw ConfigError(k + ": expected synthetic|file");
         c.data.source = v;
       }},
      {"data.path", [](auto& c, auto&, auto& v) { c.data.path = v; }},
      {"data.classes", [](auto& c, auto& k, auto& v) { c.data.classes = to_u32(k, v); }},
      {"data.per_class", [](auto& c, auto& k, auto& v) { c.data.per_class = to_u32(k, v); }},
      {"data.dim", [](auto& c, auto& k, auto& v) { c.data.dim = to_u32(k, v); }},
      {"data.sigma", [](auto& c, auto& k, auto& v) { c.data.sigma = to_double(k, v); }},
      {"data.seed", [](auto& c, auto& k, auto& v) { c.data.seed = to_u64(k, v); }},
      {"data.test_fraction", [](auto& c, auto& k, auto& v) { c.data.test_fraction = to_double(k, v); }},
      {"partition.mode", [](auto& c, auto&, auto& v) { c.partition.mode = parse_partition_mode(v); }},
      {"partition.alpha", [](auto& c, auto& k, auto& v) { c.partition.alpha = to_double(k, v); }},
      {"partition.clients", [](auto& c, auto& k, auto& v) { c.partition.clients = to_u32(k, v); }},
      {"al.method", [](auto& c, auto&, auto& v) { c.al.method = parse_al_method(v); }},
      {"al.budget_fraction", [](auto& c, auto& k, auto& v) { c.al.budget_fraction = to_double(k, v); }},
      {"al.per_round_fraction", [](auto& c, auto& k, auto& v) { c.al.per_round_fraction = to_double(k, v); }},
      {"al.initial_fraction", [](auto& c, auto& k, auto& v) { c.al.initial_fraction = to_double(k, v); }},
      {"al.k_nn", [](auto& c, auto& k, auto& v) { c.al.k_nn = to_u32(k, v); }},
      {"al.metric", [](auto& c, auto&, auto& v) { c.al.metric = parse_uncertainty_metric(v); }},
      {"al.rounds", [](auto& c, auto& k, auto& v) { c.al.rounds = to_u32(k, v); }},
      {"al.initial_in_budget", [](auto& c, auto& k, auto& v) { c.al.initial_in_budget = to_bool(k, v); }},
      {"al.share_initial_embeddings",
       [](auto& c, auto& k, auto& v) { c.al.share_initial_embeddings = to_bool(k, v); }},
      {"al.warm_start", [](auto& c, auto& k, auto& v) { c.al.warm_start = to_bool(k, v); }},
      {"al.components", [](auto& c, auto&, auto& v) { c.al.components = parse_components(v); }},
      {"fl.strategy", [](auto& c, auto&, auto& v) { c.fl.strategy = parse_strategy(v); }},
      {"fl.mu", [](auto& c, auto& k, auto& v) { c.fl.mu = to_double(k, v); }},
      {"fl.eta", [](auto& c, auto& k, auto& v) { c.fl.eta = to_double(k, v); }},
      {"fl.tau", [](auto& c, auto& k, auto& v) { c.fl.tau = to_u32(k, v); }},
      {"fl.batch", [](auto& c, auto& k, auto& v) { c.fl.batch = to_u32(k, v); }},
      {"fl.rounds", [](auto& c, auto& k, auto& v) { c.fl.rounds = to_u32(k, v); }},
      {"fl.sample_weighted", [](auto& c, auto& k, auto& v) { c.fl.sample_weighted = to_bool(k, v); }},
      {"model.hidden", [](auto& c, auto& k, auto& v) { c.model.hidden = to_u32(k, v); }},
  };
  return table;
}

bool in_unit(double x) { return x >= 0.0 && x <= 1.0; }

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, fn] : setters()) k.push_back(name);
    return k;
  }();
  return keys;
}

void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  const auto it = setters().find(key);
  if (it == setters().end()) throw ConfigError("unknown config key '" + key + "'");
  it->second(cfg, key, value);
}

void ExperimentConfig::validate() const {
  if (data.source == "file") {
    if (data.path.empty()) throw ConfigError("data.path is required when data.source = file");
    if (!std::filesystem::exists(data.path)) {
      throw ConfigError("data.path '" + data.path.string() + "' does not exist");
    }
  } else {
    if (data.classes < 2) throw ConfigError("data.classes must be >= 2");
    if (data.per_class < 1) throw ConfigError("data.per_class must be >= 1");
    if (data.dim < 1) throw ConfigError("data.dim must be >= 1");
    if (!(data.sigma >= 0.0)) throw ConfigError("data.sigma must be >= 0");
  }
  if (!(data.test_fraction > 0.0 && data.test_fraction < 1.0)) {
    throw ConfigError("data.test_fraction must lie in (0, 1)");
  }
  if (partition.clients < 1) throw ConfigError("partition.clients must be >= 1");
  if (partition.mode != PartitionMode::kIid && !(partition.alpha > 0.0)) {
    throw ConfigError("partition.alpha must be > 0");
  }
  if (!in_unit(al.budget_fraction)) throw ConfigError("al.budget_fraction must lie in [0, 1]");
  if (!in_unit(al.per_round_fraction)) throw ConfigError("al.per_round_fraction must lie in [0, 1]");
  if (!(al.initial_fraction > 0.0 && al.initial_fraction <= 1.0)) {
    throw ConfigError("al.initial_fraction must lie in (0, 1]");
  }
  if (al.k_nn < 1) throw ConfigError("al.k_nn must be >= 1");
  if (al.rounds < 1) throw ConfigError("al.rounds must be >= 1");
  if (al.method == AlMethod::kFast && al.rounds != 1) {
    throw ConfigError("FAST runs a single AL round; set al.rounds = 1");
  }
  if (al.method == AlMethod::kAblation) validate_components(al.components);
  fl.validate();
  if (threads < 1) throw ConfigError("run.threads must be >= 1");
}

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      set_config_value(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  // Data paths are relative to the config file; output.dir is relative to the
  // working directory.
  if (!base_dir.empty() && !cfg.data.path.empty() && cfg.data.path.is_relative()) {
    cfg.data.path = base_dir / cfg.data.path;
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

}  // namespace fast
