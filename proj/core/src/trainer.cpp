#include "fast/trainer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>

#include "fast/error.hpp"
#include "fast/rng.hpp"

namespace fast {

std::size_t ModelShape::param_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    n += static_cast<std::size_t>(dims[l]) * dims[l + 1] + dims[l + 1];
  }
  return n;
}

ModelShape linear_shape(std::uint32_t d, std::uint32_t c) { return ModelShape{{d, c}}; }

ModelShape mlp_shape(std::uint32_t d, std::uint32_t hidden, std::uint32_t c) {
  return ModelShape{{d, hidden, c}};
}

namespace {

void check_shape(const ModelShape& shape) {
  if (shape.dims.size() < 2) throw ShapeError("model needs at least one layer");
  for (auto w : shape.dims) {
    if (w == 0) throw ShapeError("layer width must be >= 1");
  }
}

}  // namespace

ModelParams zero_params(const ModelShape& shape) {
  check_shape(shape);
  return ModelParams{shape, std::vector<float>(shape.param_count(), 0.0f)};
}

ModelParams init_params(const ModelShape& shape, std::uint64_t seed) {
  ModelParams p = zero_params(shape);
  Rng rng = make_rng(seed, {kTagModelInit});
  std::size_t off = 0;
  for (std::size_t l = 0; l < shape.layer_count(); ++l) {
    const std::uint32_t in = shape.dims[l];
    const std::uint32_t out = shape.dims[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> u(-bound, bound);
    const std::size_t count = static_cast<std::size_t>(in) * out + out;
    for (std::size_t i = 0; i < count; ++i) p.theta[off + i] = static_cast<float>(u(rng));
    off += count;
  }
  return p;
}

std::string to_string(AggregationStrategy s) {
  switch (s) {
    case AggregationStrategy::kFedAvg: return "fedavg";
    case AggregationStrategy::kFedProx: return "fedprox";
    case AggregationStrategy::kFedNova: return "fednova";
  }
  return "?";
}

AggregationStrategy parse_strategy(const std::string& name) {
  if (name == "fedavg") return AggregationStrategy::kFedAvg;
  if (name == "fedprox") return AggregationStrategy::kFedProx;
  if (name == "fednova") return AggregationStrategy::kFedNova;
  throw ConfigError("unknown aggregation strategy '" + name + "'");
}

void TrainConfig::validate() const {
  if (!(eta > 0.0)) throw ConfigError("fl.eta must be > 0");
  if (tau < 1) throw ConfigError("fl.tau must be >= 1");
  if (batch < 1) throw ConfigError("fl.batch must be >= 1");
  if (!(mu >= 0.0)) throw ConfigError("fl.mu must be >= 0");
  if (rounds < 1) throw ConfigError("fl.rounds must be >= 1");
}

namespace {

// Activations of every layer for one input; acts[0] is the input, the last
// entry holds the logits (pre-softmax). Hidden layers store post-ReLU values.
void forward_all(const ModelShape& shape, std::span<const double> theta,
                 std::span<const float> x, std::vector<std::vector<double>>& acts) {
  const std::size_t layers = shape.layer_count();
  acts.resize(layers + 1);
  acts[0].assign(x.begin(), x.end());
  std::size_t off = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    const std::uint32_t in = shape.dims[l];
    const std::uint32_t out = shape.dims[l + 1];
    const double* w = theta.data() + off;
    const double* b = w + static_cast<std::size_t>(in) * out;
    auto& next = acts[l + 1];
    next.assign(out, 0.0);
    for (std::uint32_t o = 0; o < out; ++o) {
      double z = b[o];
      const double* row = w + static_cast<std::size_t>(o) * in;
      for (std::uint32_t i = 0; i < in; ++i) z += row[i] * acts[l][i];
      next[o] = (l + 1 < layers) ? std::max(z, 0.0) : z;
    }
    off += static_cast<std::size_t>(in) * out + out;
  }
}

std::vector<double> widen(std::span<const float> v) { return {v.begin(), v.end()}; }

}  // namespace

std::vector<double> forward(const ModelShape& shape, std::span<const double> theta,
                            std::span<const float> features) {
  check_shape(shape);
  if (theta.size() != shape.param_count()) throw ShapeError("theta length mismatch");
  if (features.size() != shape.input_dim()) {
    throw ShapeError("feature dimension " + std::to_string(features.size()) +
                     " does not match model input " + std::to_string(shape.input_dim()));
  }
  std::vector<std::vector<double>> acts;
  forward_all(shape, theta, features, acts);
  return std::move(acts.back());
}

std::vector<double> forward(const ModelParams& params, std::span<const float> features) {
  const auto theta = widen(params.theta);
  return forward(params.shape, theta, features);
}

LossAndGrad loss_and_grad(const ModelShape& shape, std::span<const double> theta,
                          std::span<const float> features, std::span<const ClassId> labels) {
  check_shape(shape);
  if (labels.empty()) throw ShapeError("empty batch");
  if (theta.size() != shape.param_count()) throw ShapeError("theta length mismatch");
  const std::uint32_t d = shape.input_dim();
  const std::uint32_t c = shape.output_dim();
  if (features.size() != labels.size() * d) throw ShapeError("batch feature size mismatch");

  LossAndGrad out;
  out.grad.assign(theta.size(), 0.0);
  const double inv_b = 1.0 / static_cast<double>(labels.size());
  const std::size_t layers = shape.layer_count();
  std::vector<std::vector<double>> acts;
  std::vector<double> delta, prev_delta;

  for (std::size_t s = 0; s < labels.size(); ++s) {
    const ClassId y = labels[s];
    if (y >= c) throw ValidationError("label " + std::to_string(y) + " out of range");
    forward_all(shape, theta, features.subspan(s * d, d), acts);
    const auto& logits = acts.back();
    const double hi = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double v : logits) z += std::exp(v - hi);
    const double lse = hi + std::log(z);
    out.loss += (lse - logits[y]) * inv_b;

    delta.resize(c);
    for (std::uint32_t k = 0; k < c; ++k) {
      delta[k] = (std::exp(logits[k] - lse) - (k == y ? 1.0 : 0.0)) * inv_b;
    }

    // Walk layers backwards; offsets are recomputed from the end.
    std::size_t end = theta.size();
    for (std::size_t l = layers; l-- > 0;) {
      const std::uint32_t in = shape.dims[l];
      const std::uint32_t outw = shape.dims[l + 1];
      const std::size_t off = end - (static_cast<std::size_t>(in) * outw + outw);
      const double* w = theta.data() + off;
      double* gw = out.grad.data() + off;
      double* gb = gw + static_cast<std::size_t>(in) * outw;
      const auto& a = acts[l];
      for (std::uint32_t o = 0; o < outw; ++o) {
        gb[o] += delta[o];
        double* grow = gw + static_cast<std::size_t>(o) * in;
        for (std::uint32_t i = 0; i < in; ++i) grow[i] += delta[o] * a[i];
      }
      if (l > 0) {
        prev_delta.assign(in, 0.0);
        for (std::uint32_t o = 0; o < outw; ++o) {
          const double* row = w + static_cast<std::size_t>(o) * in;
          for (std::uint32_t i = 0; i < in; ++i) prev_delta[i] += row[i] * delta[o];
        }
        // ReLU derivative: acts hold post-activation values.
        for (std::uint32_t i = 0; i < in; ++i) {
          if (a[i] <= 0.0) prev_delta[i] = 0.0;
        }
        delta.swap(prev_delta);
      }
      end = off;
    }
  }
  return out;
}

LossAndGrad loss_and_grad(const ModelParams& params, std::span<const float> features,
                          std::span<const ClassId> labels) {
  const auto theta = widen(params.theta);
  return loss_and_grad(params.shape, theta, features, labels);
}

LocalResult local_update(const ModelParams& global, const TrainingSet& data,
                         const TrainConfig& cfg, ClientId client, std::uint32_t round) {
  LocalResult result{global, 0, data.size()};
  if (data.records.empty() || cfg.tau == 0) return result;
  if (data.store == nullptr) throw ValidationError("training set has no store");
  const std::uint32_t d = global.shape.input_dim();
  if (data.store->d() != d) throw ShapeError("store dimension does not match model input");

  Rng rng = make_rng(cfg.seed, {kTagTrain, client, round});
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t pos = 0;

  const std::vector<double> anchor = widen(global.theta);
  std::vector<double> theta = anchor;
  std::vector<float> feats;
  std::vector<ClassId> labels;

  for (std::uint32_t step = 0; step < cfg.tau; ++step) {
    if (pos >= order.size()) {
      std::shuffle(order.begin(), order.end(), rng);
      pos = 0;
    }
    const std::size_t take = std::min<std::size_t>(cfg.batch, order.size() - pos);
    feats.clear();
    labels.clear();
    for (std::size_t i = 0; i < take; ++i) {
      const auto& [id, y] = data.records[order[pos + i]];
      const auto f = data.store->features(id);
      feats.insert(feats.end(), f.begin(), f.end());
      labels.push_back(y);
    }
    pos += take;

    auto lg = loss_and_grad(global.shape, theta, feats, labels);
    if (cfg.strategy == AggregationStrategy::kFedProx) {
      for (std::size_t i = 0; i < theta.size(); ++i) lg.grad[i] += cfg.mu * (theta[i] - anchor[i]);
    }
    for (std::size_t i = 0; i < theta.size(); ++i) {
      // Parameters live in float; round after every step.
      theta[i] = static_cast<float>(theta[i] - cfg.eta * lg.grad[i]);
    }
  }
  for (std::size_t i = 0; i < theta.size(); ++i) result.params.theta[i] = static_cast<float>(theta[i]);
  result.steps_taken = cfg.tau;
  return result;
}

ModelParams aggregate(std::span<const LocalResult> locals, const ModelParams& global,
                      AggregationStrategy strategy, bool sample_weighted) {
  if (locals.empty()) throw ValidationError("nothing to aggregate");
  for (const auto& l : locals) {
    if (l.params.shape != global.shape || l.params.theta.size() != global.theta.size()) {
      throw ShapeError("local model shape differs from the global model");
    }
  }
  const std::size_t p = global.theta.size();
  std::vector<double> acc(p, 0.0);
  ModelParams out = global;

  if (strategy == AggregationStrategy::kFedNova) {
    double total_samples = 0.0;
    for (const auto& l : locals) {
      if (l.steps_taken > 0) total_samples += static_cast<double>(l.sample_count);
    }
    if (total_samples <= 0.0) return global;
    double tau_eff = 0.0;
    for (const auto& l : locals) {
      if (l.steps_taken == 0) continue;
      const double pk = static_cast<double>(l.sample_count) / total_samples;
      tau_eff += pk * l.steps_taken;
      const double scale = pk / l.steps_taken;
      for (std::size_t i = 0; i < p; ++i) {
        acc[i] += scale * (static_cast<double>(global.theta[i]) - l.params.theta[i]);
      }
    }
    for (std::size_t i = 0; i < p; ++i) {
      out.theta[i] = static_cast<float>(global.theta[i] - tau_eff * acc[i]);
    }
    return out;
  }

  bool any_steps = false;
  for (const auto& l : locals) any_steps = any_steps || l.steps_taken > 0;
  if (!any_steps) return global;

  if (sample_weighted) {
    double total = 0.0;
    for (const auto& l : locals) total += static_cast<double>(l.sample_count);
    if (total <= 0.0) return global;
    for (const auto& l : locals) {
      const double w = static_cast<double>(l.sample_count);
      for (std::size_t i = 0; i < p; ++i) acc[i] += w * l.params.theta[i];
    }
    for (std::size_t i = 0; i < p; ++i) out.theta[i] = static_cast<float>(acc[i] / total);
    return out;
  }
  for (const auto& l : locals) {
    for (std::size_t i = 0; i < p; ++i) acc[i] += l.params.theta[i];
  }
  const double k = static_cast<double>(locals.size());
  for (std::size_t i = 0; i < p; ++i) out.theta[i] = static_cast<float>(acc[i] / k);
  return out;
}

std::size_t predict(const ModelParams& params, std::span<const float> features) {
  const auto logits = forward(params, features);
  // max_element returns the first maximum, i.e. the smallest class id.
  return static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) -
                                  logits.begin());
}

double evaluate(const ModelParams& params, const EmbeddingStore& store,
                std::span<const SampleId> test_ids) {
  if (test_ids.empty()) throw ValidationError("empty test set");
  const auto theta = widen(params.theta);
  std::vector<std::vector<double>> acts;
  std::size_t correct = 0;
  for (SampleId id : test_ids) {
    forward_all(params.shape, theta, store.features(id), acts);
    const auto& logits = acts.back();
    const auto best = static_cast<ClassId>(
        std::max_element(logits.begin(), logits.end()) - logits.begin());
    if (best == store.label(id)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test_ids.size());
}

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

void save_model(const ModelParams& params, const std::filesystem::path& path) {
  check_shape(params.shape);
  if (params.theta.size() != params.shape.param_count()) throw ShapeError("theta length mismatch");
  std::vector<std::uint8_t> bytes(std::begin(kModelMagic), std::end(kModelMagic));
  put_u32(bytes, static_cast<std::uint32_t>(params.shape.layer_count()));
  for (auto w : params.shape.dims) put_u32(bytes, w);
  for (float f : params.theta) put_u32(bytes, std::bit_cast<std::uint32_t>(f));
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

ModelParams load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kModelMagic, 8) != 0) {
    throw FormatError("missing FASTMDL1 magic");
  }
  const std::uint32_t layers = get_u32(bytes.data() + 8);
  if (layers == 0 || layers > 64) throw FormatError("implausible layer count");
  const std::size_t header = 12 + 4 * (static_cast<std::size_t>(layers) + 1);
  if (bytes.size() < header) throw CorruptionError("truncated model header");
  ModelShape shape;
  for (std::uint32_t i = 0; i <= layers; ++i) shape.dims.push_back(get_u32(bytes.data() + 12 + 4 * i));
  check_shape(shape);
  const std::size_t expected = header + 4 * shape.param_count();
  if (bytes.size() != expected) throw CorruptionError("model payload size mismatch");
  ModelParams p{shape, std::vector<float>(shape.param_count())};
  for (std::size_t i = 0; i < p.theta.size(); ++i) {
    p.theta[i] = std::bit_cast<float>(get_u32(bytes.data() + header + 4 * i));
  }
  return p;
}

}  // namespace fast
