#include "fast/query.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fast/refine.hpp"

namespace fast {

std::vector<SampleId> query_random(const ClientPool& pool, std::size_t b, Rng& rng) {
  std::vector<SampleId> ids(pool.unlabeled.begin(), pool.unlabeled.end());
  std::shuffle(ids.begin(), ids.end(), rng);
  ids.resize(std::min(b, ids.size()));
  return ids;
}

std::vector<SampleId> query_entropy(const EmbeddingStore& store, const ClientPool& pool,
                                    const ModelParams& global, std::size_t b) {
  std::vector<PrototypeScores> scores;
  scores.reserve(pool.unlabeled.size());
  for (SampleId id : pool.unlabeled) {
    const auto logits = forward(global, store.features(id));
    scores.push_back({id, {}, uncertainty(logits, UncertaintyMetric::kEntropy)});
  }
  return select_top_b(scores, b);
}

std::vector<SampleId> query_coreset(const EmbeddingStore& store, const ClientPool& pool,
                                    std::size_t b) {
  std::vector<SampleId> cand(pool.unlabeled.begin(), pool.unlabeled.end());
  std::vector<double> min_d2(cand.size(), std::numeric_limits<double>::infinity());

  auto relax = [&](SampleId center) {
    const auto c = store.features(center);
    for (std::size_t i = 0; i < cand.size(); ++i) {
      const auto z = store.features(cand[i]);
      double acc = 0.0;
      for (std::size_t j = 0; j < z.size(); ++j) {
        const double diff = static_cast<double>(z[j]) - c[j];
        acc += diff * diff;
      }
      min_d2[i] = std::min(min_d2[i], acc);
    }
  };
  for (const auto& [id, rec] : pool.labeled) relax(id);

  std::vector<SampleId> picked;
  std::vector<char> taken(cand.size(), 0);
  const std::size_t take = std::min(b, cand.size());
  while (picked.size() < take) {
    std::size_t best = cand.size();
    for (std::size_t i = 0; i < cand.size(); ++i) {
      // cand is ascending, so strict > keeps the smaller id on ties.
      if (!taken[i] && (best == cand.size() || min_d2[i] > min_d2[best])) best = i;
    }
    taken[best] = 1;
    picked.push_back(cand[best]);
    relax(cand[best]);
  }
  return picked;
}

}  // namespace fast
