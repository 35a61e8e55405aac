#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fast/datastore.hpp"

namespace fast {

// Layer widths, input first: {d, c} for a linear head, {d, h, c} for a
// one-hidden-layer ReLU MLP.
struct ModelShape {
  std::vector<std::uint32_t> dims;

  std::size_t layer_count() const { return dims.empty() ? 0 : dims.size() - 1; }
  std::uint32_t input_dim() const { return dims.front(); }
  std::uint32_t output_dim() const { return dims.back(); }
  // Sum over layers of in * out + out.
  std::size_t param_count() const;

  bool operator==(const ModelShape&) const = default;
};

ModelShape linear_shape(std::uint32_t d, std::uint32_t c);
ModelShape mlp_shape(std::uint32_t d, std::uint32_t hidden, std::uint32_t c);

// theta is laid out layer by layer: an out x in row-major weight block, then
// the out biases.
struct ModelParams {
  ModelShape shape;
  std::vector<float> theta;

  std::size_t byte_size() const { return theta.size() * sizeof(float); }
  bool operator==(const ModelParams&) const = default;
};

ModelParams zero_params(const ModelShape& shape);
// Weights and biases uniform in +-1/sqrt(fan_in).
ModelParams init_params(const ModelShape& shape, std::uint64_t seed);

enum class AggregationStrategy { kFedAvg, kFedProx, kFedNova };

std::string to_string(AggregationStrategy s);
AggregationStrategy parse_strategy(const std::string& name);

struct TrainConfig {
  double eta = 0.01;
  std::uint32_t tau = 5;
  std::uint32_t batch = 64;
  AggregationStrategy strategy = AggregationStrategy::kFedAvg;
  double mu = 0.0;
  std::uint32_t rounds = 100;
  // FedAvg/FedProx server rule: uniform 1/K when false, sample-count
  // weighted when true.
  bool sample_weighted = false;
  std::uint64_t seed = 0;

  void validate() const;
};

// Labeled training data: (sample id, label) pairs resolved against a store.
struct TrainingSet {
  const EmbeddingStore* store = nullptr;
  std::vector<std::pair<SampleId, ClassId>> records;

  std::size_t size() const { return records.size(); }
};

std::vector<double> forward(const ModelParams& params, std::span<const float> features);
std::vector<double> forward(const ModelShape& shape, std::span<const double> theta,
                            std::span<const float> features);

struct LossAndGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

// Mean softmax cross-entropy over a batch. `features` is row-major with
// labels.size() rows of shape.input_dim() columns.
LossAndGrad loss_and_grad(const ModelShape& shape, std::span<const double> theta,
                          std::span<const float> features, std::span<const ClassId> labels);
LossAndGrad loss_and_grad(const ModelParams& params, std::span<const float> features,
                          std::span<const ClassId> labels);

struct LocalResult {
  ModelParams params;
  std::uint32_t steps_taken = 0;
  std::size_t sample_count = 0;
};

// tau minibatch SGD steps from the global params. Each client/round pair
// draws its own shuffling stream from cfg.seed; the last batch of an epoch
// may be short.
LocalResult local_update(const ModelParams& global, const TrainingSet& data,
                         const TrainConfig& cfg, ClientId client, std::uint32_t round);

ModelParams aggregate(std::span<const LocalResult> locals, const ModelParams& global,
                      AggregationStrategy strategy, bool sample_weighted = false);

// Fraction of argmax-correct predictions; argmax ties go to the smaller class.
double evaluate(const ModelParams& params, const EmbeddingStore& store,
                std::span<const SampleId> test_ids);

std::size_t predict(const ModelParams& params, std::span<const float> features);

inline constexpr char kModelMagic[8] = {'F', 'A', 'S', 'T', 'M', 'D', 'L', '1'};

// FASTMDL1: magic, u32 layer count, (layer count + 1) u32 dims, f32 theta.
void save_model(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_model(const std::filesystem::path& path);

}  // namespace fast
