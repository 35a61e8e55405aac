#pragma once

#include <cstddef>
#include <vector>

#include "fast/datastore.hpp"
#include "fast/rng.hpp"
#include "fast/trainer.hpp"
#include "fast/weaklabel.hpp"

namespace fast {

// Query strategies of the iterative FAL baselines. Each returns up to b ids
// drawn from pool.unlabeled.

std::vector<SampleId> query_random(const ClientPool& pool, std::size_t b, Rng& rng);

// Highest softmax entropy of the global model; ties go to smaller ids.
std::vector<SampleId> query_entropy(const EmbeddingStore& store, const ClientPool& pool,
                                    const ModelParams& global, std::size_t b);

// k-center greedy over embeddings: repeatedly takes the unlabeled sample
// farthest (L2) from the labeled set plus everything already picked. Ties go
// to smaller ids.
std::vector<SampleId> query_coreset(const EmbeddingStore& store, const ClientPool& pool,
                                    std::size_t b);

}  // namespace fast
