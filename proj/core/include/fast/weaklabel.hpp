#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fast/datastore.hpp"

namespace fast {

enum class Provenance { kInitialRandom, kWeak, kOracle };

std::string to_string(Provenance p);

struct LabelRecord {
  ClassId label = 0;
  Provenance provenance = Provenance::kWeak;
  std::optional<double> score;

  bool operator==(const LabelRecord&) const = default;
};

// One client's view of its partition. `labeled` holds ground-truth records
// (initial-random or oracle) and is what the labeling budget counts;
// `weak` holds machine labels for ids that are still in `unlabeled`.
struct ClientPool {
  ClientId client_id = 0;
  std::uint32_t class_count = 0;
  std::map<SampleId, LabelRecord> labeled;
  std::set<SampleId> unlabeled;
  std::map<SampleId, LabelRecord> weak;

  // (id, label) pairs used for local training, ascending by id.
  std::vector<std::pair<SampleId, ClassId>> training_records(bool include_weak) const;

  // Labeled records whose provenance is kInitialRandom, ascending by id.
  std::vector<std::pair<SampleId, ClassId>> initial_records() const;

  std::size_t size() const { return labeled.size() + unlabeled.size(); }

  bool operator==(const ClientPool&) const = default;
};

// A labeled reference set for propagation and prototype scoring.
using Reference = std::vector<std::pair<SampleId, ClassId>>;

struct PrototypeScores {
  SampleId sample_id = 0;
  std::vector<double> s;  // mean cosine similarity per class
  double u = 0.0;         // uncertainty, larger = more uncertain

  bool operator==(const PrototypeScores&) const = default;
};

enum class UncertaintyMetric {
  kEntropy,
  kLeastConfidence,
  kSmallestMargin,
  kLargestMargin,
  kNorm,
};

std::string to_string(UncertaintyMetric m);
UncertaintyMetric parse_uncertainty_metric(const std::string& name);

// Majority vote over the k_nn nearest reference samples (L2). Vote ties go to
// the tied class whose member is nearest; distance ties go to the smaller id.
ClassId knn_label(const EmbeddingStore& store, const Reference& reference,
                  SampleId query, std::uint32_t k_nn);

std::map<SampleId, ClassId> knn_propagate(const EmbeddingStore& store,
                                          const Reference& reference,
                                          const std::set<SampleId>& queries,
                                          std::uint32_t k_nn);

// Propagates from the pool's labeled records onto its unlabeled ids.
std::map<SampleId, ClassId> knn_propagate(const EmbeddingStore& store,
                                          const ClientPool& pool, std::uint32_t k_nn);

// Precomputed unit vectors of a reference set, grouped by class.
class PrototypeIndex {
 public:
  PrototypeIndex(const EmbeddingStore& store, const Reference& reference,
                 std::uint32_t class_count);

  // s_c = mean cosine to class c's references, or -1 for a class without any.
  std::vector<double> similarities(std::span<const float> z, SampleId id) const;

 private:
  std::uint32_t d_;
  std::vector<std::vector<std::vector<double>>> unit_by_class_;
};

PrototypeScores prototype_scores(const EmbeddingStore& store, const ClientPool& pool,
                                 SampleId sample_id,
                                 UncertaintyMetric metric = UncertaintyMetric::kEntropy);

double uncertainty(std::span<const double> s, UncertaintyMetric metric);

struct PreliminaryResult {
  ClientPool pool;
  std::vector<PrototypeScores> scores;  // ascending by sample id
};

// Weak-labels every unlabeled sample and scores its uncertainty. The
// reference set defaults to the pool's initial-random records.
PreliminaryResult preliminary_pass(const EmbeddingStore& store, const ClientPool& pool,
                                   std::uint32_t k_nn, UncertaintyMetric metric,
                                   const Reference* reference = nullptr);

// "sample_id,weak_label,uncertainty" audit export.
void write_scores_csv(const std::vector<PreliminaryResult>& results,
                      const std::filesystem::path& path);

}  // namespace fast
