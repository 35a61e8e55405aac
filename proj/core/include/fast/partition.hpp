#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "fast/datastore.hpp"

namespace fast {

enum class PartitionMode { kIid, kDirichlet, kDiversity };

std::string to_string(PartitionMode mode);
PartitionMode parse_partition_mode(const std::string& name);

// Assignment of training samples to k clients. Every assigned id maps to a
// client in [0, k) and no client is empty.
struct PartitionPlan {
  std::uint32_t k = 0;
  std::map<SampleId, ClientId> assignment;
  PartitionMode mode = PartitionMode::kIid;
  double alpha = 0.0;  // unused for kIid
  std::uint64_t seed = 0;

  // Ascending member ids per client.
  std::vector<std::vector<SampleId>> members() const;
  std::vector<std::size_t> sizes() const;
};

PartitionPlan partition_iid(std::span<const SampleId> ids, std::uint32_t k,
                            std::uint64_t seed);

// Label-aware variant: each class is shuffled and dealt round-robin with the
// dealer position carried across classes, so per-client class counts differ
// by at most one.
PartitionPlan partition_iid(std::span<const SampleId> ids, std::span<const ClassId> labels,
                            std::uint32_t k, std::uint64_t seed);

// labels is indexed by sample id (typically EmbeddingStore::labels()).
PartitionPlan partition_dirichlet(std::span<const SampleId> ids,
                                  std::span<const ClassId> labels, std::uint32_t k,
                                  double alpha, std::uint64_t seed);

PartitionPlan partition_diversity(std::span<const SampleId> ids,
                                  std::span<const ClassId> labels, std::uint32_t k,
                                  double alpha, std::uint64_t seed);

// "sample_id,client_id" audit export, rows ascending by sample id.
void write_plan_csv(const PartitionPlan& plan, const std::filesystem::path& path);

}  // namespace fast
