#include "fast/datastore.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>
#include <string>

#include "fast/error.hpp"
#include "fast/rng.hpp"
#include "fast/synthetic.hpp"

namespace fast {

EmbeddingStore::EmbeddingStore(std::uint32_t d, std::uint32_t c,
                               std::vector<float> features,
                               std::vector<ClassId> labels)
    : d_(d), c_(c), features_(std::move(features)), labels_(std::move(labels)) {
  if (labels_.empty()) throw ValidationError("store must hold at least one sample");
  if (d_ < 1) throw ValidationError("embedding dimension must be >= 1");
  if (c_ < 2) throw ValidationError("class count must be >= 2");
  if (features_.size() != static_cast<std::size_t>(labels_.size()) * d_) {
    throw ValidationError("feature matrix size does not match n * d");
  }
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] >= c_) {
      throw ValidationError("label " + std::to_string(labels_[i]) + " of sample " +
                            std::to_string(i) + " is outside [0, " +
                            std::to_string(c_) + ")");
    }
  }
  for (std::size_t i = 0; i < features_.size(); ++i) {
    if (!std::isfinite(features_[i])) {
      throw ValidationError("non-finite feature in sample " +
                            std::to_string(i / d_));
    }
  }
}

std::vector<std::uint32_t> EmbeddingStore::class_histogram() const {
  std::vector<std::uint32_t> hist(c_, 0);
  for (ClassId y : labels_) ++hist[y];
  return hist;
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

std::vector<std::uint8_t> serialize_store(const EmbeddingStore& store) {
  if (store.n() == 0) throw ValidationError("cannot save an empty store");
  std::vector<std::uint8_t> out;
  const std::size_t record = 4 + static_cast<std::size_t>(store.d()) * 4;
  out.reserve(kStoreHeaderBytes + record * store.n());
  for (char ch : kStoreMagic) out.push_back(static_cast<std::uint8_t>(ch));
  put_u32(out, store.n());
  put_u32(out, store.d());
  put_u32(out, store.c());
  for (SampleId i = 0; i < store.n(); ++i) {
    put_u32(out, store.label(i));
    for (float f : store.features(i)) put_u32(out, std::bit_cast<std::uint32_t>(f));
  }
  return out;
}

EmbeddingStore parse_store(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < sizeof(kStoreMagic) ||
      std::memcmp(bytes.data(), kStoreMagic, sizeof(kStoreMagic)) != 0) {
    throw FormatError("missing FASTEMB1 magic");
  }
  if (bytes.size() < kStoreHeaderBytes) throw CorruptionError("truncated header");
  const std::uint32_t n = get_u32(bytes.data() + 8);
  const std::uint32_t d = get_u32(bytes.data() + 12);
  const std::uint32_t c = get_u32(bytes.data() + 16);
  if (n == 0 || d == 0 || c < 2) {
    throw ValidationError("header declares n=" + std::to_string(n) + " d=" +
                          std::to_string(d) + " c=" + std::to_string(c));
  }
  const std::uint64_t record = 4 + static_cast<std::uint64_t>(d) * 4;
  const std::uint64_t expected = kStoreHeaderBytes + record * n;
  if (bytes.size() < expected) {
    throw CorruptionError("payload truncated: expected " + std::to_string(expected) +
                          " bytes, found " + std::to_string(bytes.size()));
  }
  if (bytes.size() > expected) {
    throw CorruptionError("trailing bytes after " + std::to_string(n) + " records");
  }
  std::vector<float> features(static_cast<std::size_t>(n) * d);
  std::vector<ClassId> labels(n);
  const std::uint8_t* p = bytes.data() + kStoreHeaderBytes;
  for (std::uint32_t i = 0; i < n; ++i) {
    labels[i] = get_u32(p);
    p += 4;
    for (std::uint32_t j = 0; j < d; ++j, p += 4) {
      features[static_cast<std::size_t>(i) * d + j] = std::bit_cast<float>(get_u32(p));
    }
  }
  return EmbeddingStore(d, c, std::move(features), std::move(labels));
}

EmbeddingStore load_store(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return parse_store(bytes);
}

void save_store(const EmbeddingStore& store, const std::filesystem::path& path) {
  const auto bytes = serialize_store(store);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<std::vector<double>> synthetic_centers(std::uint32_t c, std::uint32_t d,
                                                   std::uint64_t seed) {
  constexpr int kMaxAttempts = 10000;
  constexpr double kMaxCosine = 0.5;
  Rng rng = make_rng(seed, {kTagSynthetic, 0});
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::vector<double>> centers;
  centers.reserve(c);
  while (centers.size() < c) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
      std::vector<double> v(d);
      double norm2 = 0.0;
      for (double& x : v) {
        x = normal(rng);
        norm2 += x * x;
      }
      if (norm2 == 0.0) continue;
      const double inv = 1.0 / std::sqrt(norm2);
      for (double& x : v) x *= inv;
      placed = std::all_of(centers.begin(), centers.end(), [&](const auto& u) {
        return std::inner_product(u.begin(), u.end(), v.begin(), 0.0) < kMaxCosine;
      });
      if (placed) centers.push_back(std::move(v));
    }
    if (!placed) {
      throw GenerationError("could not place " + std::to_string(c) +
                            " separated centers in dimension " + std::to_string(d));
    }
  }
  return centers;
}

EmbeddingStore gen_synthetic(std::uint32_t c, std::uint32_t per_class, std::uint32_t d,
                             double sigma, std::uint64_t seed) {
  if (c < 2) throw GenerationError("need at least two classes");
  if (per_class < 1) throw GenerationError("need at least one sample per class");
  if (d < 1) throw GenerationError("dimension must be >= 1");
  if (!(sigma >= 0.0)) throw GenerationError("sigma must be >= 0");
  const auto centers = synthetic_centers(c, d, seed);

  Rng rng = make_rng(seed, {kTagSynthetic, 1});
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<float> features;
  features.reserve(static_cast<std::size_t>(c) * per_class * d);
  std::vector<ClassId> labels;
  labels.reserve(static_cast<std::size_t>(c) * per_class);
  for (ClassId k = 0; k < c; ++k) {
    for (std::uint32_t i = 0; i < per_class; ++i) {
      for (std::uint32_t j = 0; j < d; ++j) {
        const double noise = sigma > 0.0 ? sigma * normal(rng) : 0.0;
        features.push_back(static_cast<float>(centers[k][j] + noise));
      }
      labels.push_back(k);
    }
  }
  return EmbeddingStore(d, c, std::move(features), std::move(labels));
}

SplitSpec split(const EmbeddingStore& store, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
    throw ValidationError("test_fraction must lie in [0, 1)");
  }
  SplitSpec spec;
  spec.seed = seed;
  Rng rng = make_rng(seed, {kTagSplit});

  std::vector<std::vector<SampleId>> by_class(store.c());
  for (SampleId i = 0; i < store.n(); ++i) by_class[store.label(i)].push_back(i);

  // Stratification needs every non-empty class to keep at least one training
  // sample after its test share is removed.
  bool stratifiable = true;
  for (const auto& ids : by_class) {
    const auto take = static_cast<std::size_t>(std::llround(ids.size() * test_fraction));
    if (!ids.empty() && take >= ids.size() && test_fraction > 0.0) stratifiable = false;
  }

  std::vector<char> is_test(store.n(), 0);
  if (stratifiable) {
    for (auto& ids : by_class) {
      std::shuffle(ids.begin(), ids.end(), rng);
      const auto take = static_cast<std::size_t>(std::llround(ids.size() * test_fraction));
      for (std::size_t i = 0; i < take; ++i) is_test[ids[i]] = 1;
    }
  } else {
    spec.stratified = false;
    std::vector<SampleId> all(store.n());
    std::iota(all.begin(), all.end(), 0u);
    std::shuffle(all.begin(), all.end(), rng);
    const auto take = static_cast<std::size_t>(std::llround(all.size() * test_fraction));
    for (std::size_t i = 0; i < take; ++i) is_test[all[i]] = 1;
  }
  for (SampleId i = 0; i < store.n(); ++i) {
    (is_test[i] ? spec.test_ids : spec.train_ids).push_back(i);
  }
  return spec;
}

}  // namespace fast
