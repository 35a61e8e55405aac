#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "fast/datastore.hpp"
#include "fast/partition.hpp"
#include "fast/weaklabel.hpp"

namespace fast {

// Global labeling budget. `consumed` counts ground-truth records handed out
// (initial-random and oracle); weak labels are free.
struct Budget {
  std::uint64_t total_b = 0;
  std::uint64_t per_client_b = 0;
  std::uint64_t consumed = 0;

  std::uint64_t remaining() const { return consumed >= total_b ? 0 : total_b - consumed; }

  // Grants min(n, remaining()) and records it as consumed.
  std::uint64_t reserve(std::uint64_t n);
};

// total_b = round(budget_fraction * n_train). per_client_b is the per-round,
// per-client quota for `query_rounds` rounds spread over k clients.
Budget make_budget(std::size_t n_train, double budget_fraction, std::uint32_t k,
                   std::uint32_t query_rounds);

// Simulated annotator backed by the hidden ground truth.
class Oracle {
 public:
  explicit Oracle(const EmbeddingStore& store) : store_(&store) {}

  ClassId annotate(SampleId id) {
    ++query_count_;
    return store_->label(id);
  }
  std::uint64_t query_count() const { return query_count_; }

 private:
  const EmbeddingStore* store_;
  std::uint64_t query_count_ = 0;
};

struct AuditRow {
  std::uint32_t round = 0;
  ClientId client_id = 0;
  SampleId sample_id = 0;
  std::optional<ClassId> weak_label;
  ClassId oracle_label = 0;
  std::optional<double> u;
  Provenance provenance = Provenance::kOracle;
};

using AuditLog = std::vector<AuditRow>;

// "round,client_id,sample_id,weak_label,oracle_label,u,provenance".
void write_audit_csv(const AuditLog& log, const std::filesystem::path& path);

struct InitialPoolOptions {
  double initial_fraction = 0.01;
  // When false the initial draw sits on top of the budget: total_b grows by
  // the drawn count, so the refinement share is unchanged.
  bool counts_against_budget = true;
};

// Per client, max(1, round(initial_fraction * size)) uniformly drawn samples
// become initial-random records. Throws ConfigError when the draw exceeds the
// budget.
std::vector<ClientPool> initial_pool(const PartitionPlan& plan, const EmbeddingStore& store,
                                     const InitialPoolOptions& opts, std::uint64_t seed,
                                     Budget& budget, AuditLog* audit = nullptr);

// Ids of the b largest u, ordered by (u desc, id asc).
std::vector<SampleId> select_top_b(std::span<const PrototypeScores> scores, std::size_t b);

// Splits min(round_quota, remaining) evenly over k clients; the remainder
// goes one each to the lowest client ids.
std::vector<std::uint64_t> allocate_shares(const Budget& budget, std::uint32_t k,
                                           std::uint64_t round_quota);

// Replaces records for `ids` with oracle labels and moves them from
// unlabeled to labeled. Consumes budget; ids beyond the remaining budget are
// dropped. Returns the number annotated.
std::size_t annotate(ClientPool& pool, std::span<const SampleId> ids, Budget& budget,
                     Oracle& oracle, std::uint32_t round, AuditLog* audit = nullptr);

struct RefineOutcome {
  ClientPool pool;
  std::size_t annotated = 0;
  bool skipped = false;  // budget was already exhausted
};

// Oracle-labels the top-b' uncertain samples, b' = min(share, remaining
// budget, |unlabeled|). Unselected samples keep their weak labels.
RefineOutcome refinement_pass(const ClientPool& pool, std::span<const PrototypeScores> scores,
                              std::uint64_t share, Budget& budget, Oracle& oracle,
                              std::uint32_t round = 1, AuditLog* audit = nullptr);

// Total ground-truth records across pools stays within total_b.
bool budget_check(std::span<const ClientPool> pools, const Budget& budget);

}  // namespace fast
