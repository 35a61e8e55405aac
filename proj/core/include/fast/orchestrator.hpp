#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fast/config.hpp"
#include "fast/datastore.hpp"
#include "fast/ledger.hpp"
#include "fast/partition.hpp"
#include "fast/refine.hpp"
#include "fast/trainer.hpp"
#include "fast/weaklabel.hpp"

namespace fast {

// Everything a run produces. Only `trace` and `ledger` feed the metrics
// files; the rest is kept for audits and tests.
struct RunResult {
  MetricsTrace trace;
  CommLedger ledger;
  ModelParams model;
  PartitionPlan plan;
  SplitSpec split;
  std::vector<ClientPool> pools;
  std::vector<PreliminaryResult> preliminary;
  AuditLog audit;
  Budget budget;
  std::uint64_t oracle_queries = 0;
};

// Data, split, partition and initial model shared by every method at a given
// seed, so paired runs see identical inputs.
struct ExperimentSetup {
  EmbeddingStore store;
  SplitSpec split;
  PartitionPlan plan;
  ModelParams initial_model;
};

ExperimentSetup prepare(const ExperimentConfig& cfg);

// One two-pass round (initial pool, weak labeling, oracle refinement) then
// fl.rounds FL rounds on the merged labels. Requires al.rounds == 1.
RunResult run_fast(const ExperimentConfig& cfg);

// Iterative FAL: al.rounds rounds of query + fl.rounds FL rounds each,
// training on ground-truth labels only. al.method picks the query strategy.
RunResult run_baseline(const ExperimentConfig& cfg);

// Linear-probing ablation variant selected by `components`.
RunResult run_ablation(const ExperimentConfig& cfg, const ComponentSet& components);

// Dispatches on cfg.al.method.
RunResult run_experiment(const ExperimentConfig& cfg);

// Writes metrics, summary, audit log, partition plan, scores and the final
// model under `dir`.
void write_run_outputs(const RunResult& result, const std::filesystem::path& dir);

struct SweepPoint {
  std::string value;
  RunResult result;
};

// Runs cfg once per value of `key`. With an output dir, each run writes to
// <dir>/<key>=<value>/ and a sweep.csv summary goes to <dir>.
std::vector<SweepPoint> run_sweep(const ExperimentConfig& cfg, const std::string& key,
                                  const std::vector<std::string>& values);

}  // namespace fast
