#include "fast/config.hpp"

#include <gtest/gtest.h>

#include <fstream>

#include "fast/error.hpp"
#include "test_util.hpp"

namespace fast {
namespace {

TEST(Config, DefaultsAreValid) {
  const ExperimentConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_EQ(cfg.al.k_nn, 5u);
  EXPECT_DOUBLE_EQ(cfg.al.initial_fraction, 0.01);
  EXPECT_DOUBLE_EQ(cfg.fl.eta, 0.01);
  EXPECT_FALSE(cfg.al.share_initial_embeddings);
}

TEST(Config, ParsesKeysCommentsAndBlanks) {
  const auto cfg = parse_config(
      "# experiment\n"
      "\n"
      "seed = 9\n"
      "  partition.mode = iid   # trailing\n"
      "partition.clients=3\n"
      "al.method = entropy\n"
      "al.rounds = 4\n"
      "al.metric = smallest_margin\n"
      "al.share_initial_embeddings = true\n"
      "fl.strategy = fedprox\n"
      "fl.mu = 0.5\n"
      "model.hidden = 32\n");
  EXPECT_EQ(cfg.seed, 9u);
  EXPECT_EQ(cfg.partition.mode, PartitionMode::kIid);
  EXPECT_EQ(cfg.partition.clients, 3u);
  EXPECT_EQ(cfg.al.method, AlMethod::kEntropy);
  EXPECT_EQ(cfg.al.rounds, 4u);
  EXPECT_EQ(cfg.al.metric, UncertaintyMetric::kSmallestMargin);
  EXPECT_TRUE(cfg.al.share_initial_embeddings);
  EXPECT_EQ(cfg.fl.strategy, AggregationStrategy::kFedProx);
  EXPECT_DOUBLE_EQ(cfg.fl.mu, 0.5);
  EXPECT_EQ(cfg.model.hidden, 32u);
}

TEST(Config, UnknownKeyReportsLine) {
  try {
    parse_config("seed = 1\n\nal.budjet = 0.2\n");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("al.budjet"), std::string::npos) << e.what();
  }
}

TEST(Config, MalformedLines) {
  EXPECT_THROW(parse_config("seed 1\n"), ConfigError);
  EXPECT_THROW(parse_config("seed = -1\n"), ConfigError);
  EXPECT_THROW(parse_config("fl.eta = fast\n"), ConfigError);
  EXPECT_THROW(parse_config("fl.eta = 0.1x\n"), ConfigError);
  EXPECT_THROW(parse_config("fl.sample_weighted = maybe\n"), ConfigError);
  EXPECT_THROW(parse_config("al.method = bald\n"), ConfigError);
  EXPECT_THROW(parse_config("data.source = http\n"), ConfigError);
}

TEST(Config, RelativeDataPathResolvesAgainstConfigDir) {
  testing::TempDir dir;
  {
    std::ofstream out(dir / "exp.cfg");
    out << "data.source = file\ndata.path = data/e.femb\noutput.dir = out\n";
  }
  const auto cfg = load_config(dir / "exp.cfg");
  EXPECT_EQ(cfg.data.path, dir.path() / "data/e.femb");
  EXPECT_EQ(cfg.output_dir, std::filesystem::path("out"));
  EXPECT_THROW(cfg.validate(), ConfigError);  // file does not exist

  const auto abs = parse_config("data.path = /abs/e.femb\n", dir.path());
  EXPECT_EQ(abs.data.path, std::filesystem::path("/abs/e.femb"));
}

TEST(Config, MissingFile) {
  EXPECT_THROW(load_config("/nonexistent/exp.cfg"), ConfigError);
}

TEST(Config, ValidationRules) {
  const auto invalid = [](const std::string& key, const std::string& value) {
    ExperimentConfig cfg;
    set_config_value(cfg, key, value);
    EXPECT_THROW(cfg.validate(), ConfigError) << key << "=" << value;
  };
  invalid("data.classes", "1");
  invalid("data.per_class", "0");
  invalid("data.dim", "0");
  invalid("data.sigma", "-0.1");
  invalid("data.test_fraction", "0");
  invalid("data.test_fraction", "1");
  invalid("partition.clients", "0");
  invalid("partition.alpha", "0");
  invalid("al.budget_fraction", "1.5");
  invalid("al.per_round_fraction", "-0.1");
  invalid("al.initial_fraction", "0");
  invalid("al.k_nn", "0");
  invalid("al.rounds", "2");  // method fast
  invalid("fl.eta", "0");
  invalid("fl.tau", "0");
  invalid("fl.batch", "0");
  invalid("fl.rounds", "0");
  invalid("fl.mu", "-1");
  invalid("run.threads", "0");
  invalid("data.source", "file");

  ExperimentConfig iid;
  set_config_value(iid, "partition.mode", "iid");
  set_config_value(iid, "partition.alpha", "0");
  EXPECT_NO_THROW(iid.validate());

  ExperimentConfig base;
  set_config_value(base, "al.method", "random");
  set_config_value(base, "al.rounds", "5");
  EXPECT_NO_THROW(base.validate());
}

TEST(Config, Components) {
  EXPECT_EQ(parse_components("probe, weak,refine"),
            (ComponentSet{Component::kProbe, Component::kWeak, Component::kRefine}));
  EXPECT_EQ(to_string(ComponentSet{Component::kProbe, Component::kRandomRefine}), "probe,random_refine");
  EXPECT_THROW(parse_components("probe,magic"), ConfigError);
  EXPECT_NO_THROW(validate_components({Component::kProbe}));
  EXPECT_NO_THROW(validate_components({Component::kProbe, Component::kWeak}));
  EXPECT_THROW(validate_components({Component::kWeak}), ConfigError);
  EXPECT_THROW(validate_components({Component::kProbe, Component::kRefine}), ConfigError);
  EXPECT_THROW(validate_components({Component::kProbe, Component::kWeak, Component::kRefine,
                                    Component::kRandomRefine}),
               ConfigError);

  ExperimentConfig cfg;
  set_config_value(cfg, "al.method", "ablation");
  set_config_value(cfg, "al.components", "weak");
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Config, EveryKeyIsSettable) {
  const std::map<std::string, std::string> sample = {
      {"seed", "4"},
      {"output.dir", "runs/x"},
      {"run.threads", "2"},
      {"data.source", "synthetic"},
      {"data.path", "e.femb"},
      {"data.classes", "5"},
      {"data.per_class", "30"},
      {"data.dim", "6"},
      {"data.sigma", "0.2"},
      {"data.seed", "8"},
      {"data.test_fraction", "0.25"},
      {"partition.mode", "diversity"},
      {"partition.alpha", "0.7"},
      {"partition.clients", "6"},
      {"al.method", "coreset"},
      {"al.budget_fraction", "0.3"},
      {"al.per_round_fraction", "0.1"},
      {"al.initial_fraction", "0.02"},
      {"al.k_nn", "3"},
      {"al.metric", "norm"},
      {"al.rounds", "3"},
      {"al.initial_in_budget", "false"},
      {"al.share_initial_embeddings", "yes"},
      {"al.warm_start", "off"},
      {"al.components", "probe,weak"},
      {"fl.strategy", "fednova"},
      {"fl.mu", "0.01"},
      {"fl.eta", "0.05"},
      {"fl.tau", "3"},
      {"fl.batch", "16"},
      {"fl.rounds", "20"},
      {"fl.sample_weighted", "false"},
      {"model.hidden", "24"},
  };
  for (const auto& key : config_keys()) {
    ASSERT_TRUE(sample.contains(key)) << "no sample value for " << key;
    ExperimentConfig cfg;
    EXPECT_NO_THROW(set_config_value(cfg, key, sample.at(key))) << key;
  }
  std::string text;
  for (const auto& [k, v] : sample) text += k + " = " + v + "\n";
  const auto cfg = parse_config(text);
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_EQ(cfg.partition.mode, PartitionMode::kDiversity);
  EXPECT_EQ(cfg.al.metric, UncertaintyMetric::kNorm);
  EXPECT_FALSE(cfg.al.initial_in_budget);
  EXPECT_FALSE(cfg.al.warm_start);
  EXPECT_EQ(cfg.fl.strategy, AggregationStrategy::kFedNova);
  EXPECT_EQ(cfg.fl.tau, 3u);
  EXPECT_EQ(cfg.threads, 2u);
  EXPECT_EQ(config_keys().size(), sample.size());
}

TEST(Config, MethodNames) {
  for (auto m : {AlMethod::kFast, AlMethod::kRandom, AlMethod::kEntropy, AlMethod::kCoreset,
                 AlMethod::kAblation}) {
    EXPECT_EQ(parse_al_method(to_string(m)), m);
  }
}

}  // namespace
}  // namespace fast
