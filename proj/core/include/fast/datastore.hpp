#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace fast {

using SampleId = std::uint32_t;
using ClassId = std::uint32_t;
using ClientId = std::uint32_t;

// The simulation universe: n samples of d float features, each with a hidden
// ground-truth label in [0, c). Sample ids are record indices.
class EmbeddingStore {
 public:
  EmbeddingStore() = default;

  // Validates every invariant; throws ValidationError on violation.
  EmbeddingStore(std::uint32_t d, std::uint32_t c, std::vector<float> features,
                 std::vector<ClassId> labels);

  std::uint32_t n() const { return static_cast<std::uint32_t>(labels_.size()); }
  std::uint32_t d() const { return d_; }
  std::uint32_t c() const { return c_; }

  std::span<const float> features(SampleId id) const {
    return {features_.data() + static_cast<std::size_t>(id) * d_, d_};
  }
  ClassId label(SampleId id) const { return labels_[id]; }

  const std::vector<float>& feature_matrix() const { return features_; }
  const std::vector<ClassId>& labels() const { return labels_; }

  // Histogram of ground-truth labels, length c.
  std::vector<std::uint32_t> class_histogram() const;

  bool operator==(const EmbeddingStore&) const = default;

 private:
  std::uint32_t d_ = 0;
  std::uint32_t c_ = 0;
  std::vector<float> features_;
  std::vector<ClassId> labels_;
};

struct SplitSpec {
  std::vector<SampleId> train_ids;  // ascending
  std::vector<SampleId> test_ids;   // ascending
  std::uint64_t seed = 0;
  // False when per-class stratification was infeasible and the split fell
  // back to a plain shuffled cut.
  bool stratified = true;
};

inline constexpr char kStoreMagic[8] = {'F', 'A', 'S', 'T', 'E', 'M', 'B', '1'};
inline constexpr std::size_t kStoreHeaderBytes = 8 + 3 * 4;

// FASTEMB1 reader. Throws FormatError, CorruptionError, ValidationError or
// IoError.
EmbeddingStore load_store(const std::filesystem::path& path);
EmbeddingStore parse_store(std::span<const std::uint8_t> bytes);

void save_store(const EmbeddingStore& store, const std::filesystem::path& path);
std::vector<std::uint8_t> serialize_store(const EmbeddingStore& store);

// c isotropic Gaussian clusters around unit-norm centers whose pairwise cosine
// is below 0.5. Samples are laid out class-major.
EmbeddingStore gen_synthetic(std::uint32_t c, std::uint32_t per_class,
                             std::uint32_t d, double sigma, std::uint64_t seed);

// Stratified train/test split: each class contributes
// round(class size * test_fraction) test samples.
SplitSpec split(const EmbeddingStore& store, double test_fraction,
                std::uint64_t seed);

}  // namespace fast
