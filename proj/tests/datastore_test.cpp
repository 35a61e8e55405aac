#include "fast/datastore.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <numeric>
#include <set>

#include "fast/error.hpp"
#include "fast/synthetic.hpp"
#include "test_util.hpp"

namespace fast {
namespace {

std::vector<std::uint8_t> le32(std::uint32_t v) {
  return {static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v >> 8),
          static_cast<std::uint8_t>(v >> 16), static_cast<std::uint8_t>(v >> 24)};
}

// Hand-assembled FASTEMB1 image, independent of serialize_store.
std::vector<std::uint8_t> image(std::uint32_t n, std::uint32_t d, std::uint32_t c,
                                const std::vector<std::pair<std::uint32_t, std::vector<float>>>& recs) {
  std::vector<std::uint8_t> out = {'F', 'A', 'S', 'T', 'E', 'M', 'B', '1'};
  for (std::uint32_t v : {n, d, c}) {
    auto b = le32(v);
    out.insert(out.end(), b.begin(), b.end());
  }
  for (const auto& [label, feats] : recs) {
    auto b = le32(label);
    out.insert(out.end(), b.begin(), b.end());
    for (float f : feats) {
      std::uint32_t bits;
      std::memcpy(&bits, &f, 4);
      auto fb = le32(bits);
      out.insert(out.end(), fb.begin(), fb.end());
    }
  }
  return out;
}

TEST(Store, MinimalFileParses) {
  const auto bytes = image(1, 1, 2, {{0, {0.0f}}});
  const EmbeddingStore s = parse_store(bytes);
  EXPECT_EQ(s.n(), 1u);
  EXPECT_EQ(s.d(), 1u);
  EXPECT_EQ(s.c(), 2u);
  EXPECT_EQ(s.label(0), 0u);
  EXPECT_EQ(s.features(0)[0], 0.0f);
}

TEST(Store, MinimalFileSize) {
  const EmbeddingStore s(1, 2, {0.5f}, {1});
  const auto bytes = serialize_store(s);
  EXPECT_EQ(bytes.size(), 8u + 12u + (4u + 4u));
  EXPECT_EQ(bytes, image(1, 1, 2, {{1, {0.5f}}}));
}

TEST(Store, FileRoundTripIsByteIdentical) {
  testing::TempDir dir;
  const auto bytes = image(3, 2, 3, {{2, {1.5f, -0.25f}}, {0, {3.0f, 1e-30f}}, {1, {-7.0f, 0.0f}}});
  {
    std::ofstream out(dir / "a.femb", std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }
  save_store(load_store(dir / "a.femb"), dir / "b.femb");
  EXPECT_EQ(testing::read_file(dir / "a.femb"), testing::read_file(dir / "b.femb"));
}

TEST(Store, RandomRoundTripPreservesFields) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const std::uint32_t n = 1 + rng() % 30, d = 1 + rng() % 9, c = 2 + rng() % 6;
    std::normal_distribution<float> normal(0.0f, 3.0f);
    std::vector<float> f(static_cast<std::size_t>(n) * d);
    for (float& x : f) x = normal(rng);
    std::vector<ClassId> y(n);
    for (auto& v : y) v = static_cast<ClassId>(rng() % c);
    const EmbeddingStore s(d, c, f, y);
    const EmbeddingStore back = parse_store(serialize_store(s));
    EXPECT_EQ(back, s);
  }
}

TEST(Store, EmptyStoreRejected) {
  EXPECT_THROW(EmbeddingStore(1, 2, {}, {}), ValidationError);
  EXPECT_THROW(parse_store(image(0, 1, 2, {})), ValidationError);
}

TEST(Store, BadMagic) {
  auto bytes = image(1, 1, 2, {{0, {0.0f}}});
  bytes[7] = '2';
  EXPECT_THROW(parse_store(bytes), FormatError);
  EXPECT_THROW(parse_store(std::vector<std::uint8_t>{'F', 'A'}), FormatError);
}

TEST(Store, TruncatedHeaderAndPayload) {
  auto bytes = image(2, 2, 2, {{0, {0.0f, 1.0f}}, {1, {2.0f, 3.0f}}});
  auto header_only = std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + 14);
  EXPECT_THROW(parse_store(header_only), CorruptionError);
  bytes.pop_back();
  EXPECT_THROW(parse_store(bytes), CorruptionError);
}

TEST(Store, TrailingBytes) {
  auto bytes = image(1, 1, 2, {{0, {0.0f}}});
  bytes.push_back(0);
  EXPECT_THROW(parse_store(bytes), CorruptionError);
}

TEST(Store, LabelOutOfRange) {
  EXPECT_THROW(parse_store(image(1, 1, 2, {{2, {0.0f}}})), ValidationError);
}

TEST(Store, NonFiniteFeature) {
  EXPECT_THROW(parse_store(image(1, 1, 2, {{0, {NAN}}})), ValidationError);
}

TEST(Store, MissingFileIsIoError) {
  EXPECT_THROW(load_store("/nonexistent/dir/x.femb"), IoError);
}

TEST(Synthetic, ZeroSigmaEqualsCenters) {
  const auto s = gen_synthetic(3, 5, 8, 0.0, 42);
  const auto centers = synthetic_centers(3, 8, 42);
  for (SampleId i = 0; i < s.n(); ++i) {
    const auto& ctr = centers[s.label(i)];
    for (std::uint32_t j = 0; j < s.d(); ++j) {
      EXPECT_EQ(s.features(i)[j], static_cast<float>(ctr[j]));
    }
  }
}

TEST(Synthetic, CentersAreUnitAndSeparated) {
  const auto centers = synthetic_centers(6, 16, 3);
  for (std::size_t a = 0; a < centers.size(); ++a) {
    const double na = std::inner_product(centers[a].begin(), centers[a].end(), centers[a].begin(), 0.0);
    EXPECT_NEAR(na, 1.0, 1e-12);
    for (std::size_t b = a + 1; b < centers.size(); ++b) {
      const double cos = std::inner_product(centers[a].begin(), centers[a].end(), centers[b].begin(), 0.0);
      EXPECT_LT(cos, 0.5);
    }
  }
}

TEST(Synthetic, Deterministic) {
  EXPECT_EQ(gen_synthetic(4, 20, 6, 0.2, 9), gen_synthetic(4, 20, 6, 0.2, 9));
  EXPECT_NE(gen_synthetic(4, 20, 6, 0.2, 9), gen_synthetic(4, 20, 6, 0.2, 10));
}

TEST(Synthetic, ImpossibleSeparation) {
  EXPECT_THROW(gen_synthetic(6, 1, 1, 0.0, 1), GenerationError);
}

TEST(Synthetic, NearestCentroidIsPerfect) {
  const auto s = gen_synthetic(4, 100, 16, 0.1, 5);
  std::vector<std::vector<double>> mean(4, std::vector<double>(16, 0.0));
  const auto hist = s.class_histogram();
  for (SampleId i = 0; i < s.n(); ++i) {
    for (std::uint32_t j = 0; j < 16; ++j) mean[s.label(i)][j] += s.features(i)[j] / hist[s.label(i)];
  }
  std::size_t correct = 0;
  for (SampleId i = 0; i < s.n(); ++i) {
    double best = INFINITY;
    ClassId arg = 0;
    for (ClassId k = 0; k < 4; ++k) {
      double dist = 0.0;
      for (std::uint32_t j = 0; j < 16; ++j) {
        const double diff = s.features(i)[j] - mean[k][j];
        dist += diff * diff;
      }
      if (dist < best) best = dist, arg = k;
    }
    correct += arg == s.label(i);
  }
  EXPECT_EQ(correct, s.n());
}

TEST(Split, ZeroFractionEmptyTest) {
  const auto s = gen_synthetic(2, 10, 2, 0.1, 1);
  const auto sp = split(s, 0.0, 1);
  EXPECT_TRUE(sp.test_ids.empty());
  EXPECT_EQ(sp.train_ids.size(), 20u);
}

TEST(Split, BalancedArithmetic) {
  const auto s = gen_synthetic(2, 50, 3, 0.1, 1);
  const auto sp = split(s, 0.2, 4);
  EXPECT_TRUE(sp.stratified);
  std::vector<int> per_class(2, 0);
  for (SampleId id : sp.test_ids) ++per_class[s.label(id)];
  EXPECT_EQ(per_class[0], 10);
  EXPECT_EQ(per_class[1], 10);
}

TEST(Split, DisjointCoverAndSorted) {
  const auto s = gen_synthetic(3, 17, 2, 0.1, 2);
  const auto sp = split(s, 0.3, 8);
  std::set<SampleId> all(sp.train_ids.begin(), sp.train_ids.end());
  for (SampleId id : sp.test_ids) EXPECT_TRUE(all.insert(id).second);
  EXPECT_EQ(all.size(), s.n());
  EXPECT_TRUE(std::is_sorted(sp.train_ids.begin(), sp.train_ids.end()));
  EXPECT_TRUE(std::is_sorted(sp.test_ids.begin(), sp.test_ids.end()));
}

TEST(Split, ClassProportionsMatchWithinOne) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 25; ++trial) {
    const std::uint32_t c = 2 + rng() % 5;
    std::vector<ClassId> y(40 + rng() % 200);
    for (auto& v : y) v = static_cast<ClassId>(rng() % c);
    for (ClassId k = 0; k < c; ++k) y[k] = k;  // every class present
    std::vector<float> f(y.size(), 0.0f);
    const EmbeddingStore s(1, c, f, y);
    const double frac = 0.1 + 0.05 * (rng() % 6);
    const auto sp = split(s, frac, trial);
    if (!sp.stratified) continue;
    const auto hist = s.class_histogram();
    std::vector<double> test(c, 0.0);
    for (SampleId id : sp.test_ids) test[s.label(id)] += 1;
    for (ClassId k = 0; k < c; ++k) {
      // Expected share of the test split for class k, scaled to test size.
      const double expected = static_cast<double>(hist[k]) * sp.test_ids.size() / s.n();
      EXPECT_LE(std::abs(test[k] - expected), 1.0 + 1e-9) << "class " << k;
    }
  }
}

TEST(Split, FallsBackWhenClassTooSmall) {
  // Class 1 has a single sample; with fraction 0.6 it would lose its only training sample.
  const EmbeddingStore s(1, 2, std::vector<float>(6, 0.0f), {0, 0, 0, 0, 0, 1});
  const auto sp = split(s, 0.6, 3);
  EXPECT_FALSE(sp.stratified);
  EXPECT_EQ(sp.test_ids.size(), 4u);
}

TEST(Split, Deterministic) {
  const auto s = gen_synthetic(3, 30, 2, 0.1, 2);
  const auto a = split(s, 0.2, 5), b = split(s, 0.2, 5);
  EXPECT_EQ(a.test_ids, b.test_ids);
  EXPECT_EQ(a.train_ids, b.train_ids);
}

TEST(Split, RejectsBadFraction) {
  const auto s = gen_synthetic(2, 3, 2, 0.1, 2);
  EXPECT_THROW(split(s, 1.0, 1), ValidationError);
  EXPECT_THROW(split(s, -0.1, 1), ValidationError);
}

}  // namespace
}  // namespace fast
