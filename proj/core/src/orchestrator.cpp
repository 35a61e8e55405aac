#include "fast/orchestrator.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <thread>

#include "fast/error.hpp"
#include "fast/query.hpp"
#include "fast/rng.hpp"

namespace fast {

namespace {

class PhaseTimer {
 public:
  PhaseTimer(CommLedger& ledger, std::string phase)
      : ledger_(ledger), phase_(std::move(phase)), start_(std::chrono::steady_clock::now()) {}
  ~PhaseTimer() {
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start_;
    ledger_.add_walltime(phase_, dt.count());
  }
  PhaseTimer(const PhaseTimer&) = delete;
  PhaseTimer& operator=(const PhaseTimer&) = delete;

 private:
  CommLedger& ledger_;
  std::string phase_;
  std::chrono::steady_clock::time_point start_;
};

// Runs fn(client) for every client, on up to `threads` workers. Work per
// client is independent, so the schedule does not affect results.
template <class Fn>
void for_each_client(std::uint32_t k, std::uint32_t threads, Fn&& fn) {
  if (threads <= 1 || k <= 1) {
    for (std::uint32_t c = 0; c < k; ++c) fn(c);
    return;
  }
  const std::uint32_t workers = std::min(threads, k);
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::uint32_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::uint32_t c = w; c < k; c += workers) fn(c);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

double label_accuracy(const EmbeddingStore& store, const std::vector<ClientPool>& pools,
                      bool include_weak) {
  std::size_t total = 0;
  std::size_t correct = 0;
  for (const auto& p : pools) {
    for (const auto& [id, y] : p.training_records(include_weak)) {
      ++total;
      if (store.label(id) == y) ++correct;
    }
  }
  return total == 0 ? 1.0 : static_cast<double>(correct) / static_cast<double>(total);
}

struct Context {
  const ExperimentConfig& cfg;
  const ExperimentSetup& setup;
  TrainConfig fl;
  RunResult& result;
};

// T FL rounds from `global`; appends ledger entries and per-round metrics.
ModelParams train_rounds(Context& ctx, ModelParams global, bool include_weak,
                         const std::string& phase) {
  const auto& store = ctx.setup.store;
  const std::uint32_t k = ctx.setup.plan.k;
  auto& result = ctx.result;
  PhaseTimer timer(result.ledger, "training");

  std::vector<TrainingSet> data(k);
  for (ClientId c = 0; c < k; ++c) {
    data[c] = TrainingSet{&store, result.pools[c].training_records(include_weak)};
  }
  std::vector<LocalResult> locals(k);
  for (std::uint32_t t = 0; t < ctx.fl.rounds; ++t) {
    const auto round = static_cast<std::uint32_t>(result.ledger.round_count() + 1);
    for_each_client(k, ctx.cfg.threads, [&](ClientId c) {
      locals[c] = local_update(global, data[c], ctx.fl, c, round);
    });
    global = aggregate(locals, global, ctx.fl.strategy, ctx.fl.sample_weighted);
    result.ledger.record_round(round, global.theta.size(), k);
    const double acc = evaluate(global, store, ctx.setup.split.test_ids);
    result.trace.rounds.push_back(
        {round, acc, result.ledger.cumulative_mb(result.ledger.round_count()), phase});
  }
  return global;
}

void require_budget(const RunResult& result) {
  if (!budget_check(result.pools, result.budget)) {
    throw Error("labeling budget exceeded: " + std::to_string(result.budget.consumed) + " > " +
                std::to_string(result.budget.total_b));
  }
}

void finish_trace(RunResult& result, std::uint32_t al_rounds, std::uint32_t fl_rounds) {
  auto& trace = result.trace;
  trace.al_rounds = al_rounds;
  trace.fl_rounds_per_al_round = fl_rounds;
  trace.round_count = static_cast<std::uint32_t>(trace.rounds.size());
  trace.final_acc = trace.rounds.empty() ? 0.0 : trace.rounds.back().test_acc;
  trace.budget_consumed = result.budget.consumed;
  trace.budget_total = result.budget.total_b;
}

TrainConfig train_config(const ExperimentConfig& cfg) {
  TrainConfig fl = cfg.fl;
  fl.seed = cfg.seed;
  return fl;
}

std::string phase_name(std::uint32_t al_round) { return "al" + std::to_string(al_round); }

RunResult run_pipeline(const ExperimentConfig& cfg, const ComponentSet& components,
                       const std::string& label) {
  validate_components(components);
  const ExperimentSetup setup = prepare(cfg);
  const auto& store = setup.store;
  const std::uint32_t k = setup.plan.k;

  RunResult result;
  result.plan = setup.plan;
  result.split = setup.split;
  result.trace.method = label;
  Context ctx{cfg, setup, train_config(cfg), result};
  Oracle oracle(store);

  result.budget = make_budget(setup.split.train_ids.size(), cfg.al.budget_fraction, k, 1);
  result.pools = initial_pool(setup.plan, store,
                              {cfg.al.initial_fraction, cfg.al.initial_in_budget}, cfg.seed,
                              result.budget, &result.audit);

  const bool weak = components.contains(Component::kWeak);
  if (weak) {
    PhaseTimer timer(result.ledger, "preliminary");
    Reference shared;
    if (cfg.al.share_initial_embeddings) {
      for (const auto& p : result.pools) {
        const auto recs = p.initial_records();
        shared.insert(shared.end(), recs.begin(), recs.end());
      }
      std::sort(shared.begin(), shared.end());
      result.ledger.set_preliminary_bytes(2ULL * shared.size() * store.d() * sizeof(float));
    }
    result.preliminary.resize(k);
    for_each_client(k, cfg.threads, [&](ClientId c) {
      result.preliminary[c] =
          preliminary_pass(store, result.pools[c], cfg.al.k_nn, cfg.al.metric,
                           cfg.al.share_initial_embeddings ? &shared : nullptr);
    });
    for (ClientId c = 0; c < k; ++c) result.pools[c] = result.preliminary[c].pool;
  }
  result.trace.label_acc_before = label_accuracy(store, result.pools, weak);

  const bool refine = components.contains(Component::kRefine);
  const bool random_refine = components.contains(Component::kRandomRefine);
  if (refine || random_refine) {
    PhaseTimer timer(result.ledger, "refinement");
    // Shares are fixed before any client annotates, so client order is moot.
    const auto shares = allocate_shares(result.budget, k, result.budget.remaining());
    for (ClientId c = 0; c < k; ++c) {
      auto& pool = result.pools[c];
      if (refine) {
        auto out = refinement_pass(pool, result.preliminary[c].scores, shares[c], result.budget,
                                   oracle, 1, &result.audit);
        pool = std::move(out.pool);
        if (out.skipped) ++result.trace.skip_events;
      } else if (result.budget.remaining() == 0) {
        ++result.trace.skip_events;
      } else {
        Rng rng = make_rng(cfg.seed, {kTagQuery, c, 1});
        const auto ids = query_random(pool, shares[c], rng);
        annotate(pool, ids, result.budget, oracle, 1, &result.audit);
      }
    }
  }
  result.trace.label_acc_after = label_accuracy(store, result.pools, weak);
  require_budget(result);

  result.model = train_rounds(ctx, setup.initial_model, weak, phase_name(1));
  result.oracle_queries = oracle.query_count();
  finish_trace(result, 1, cfg.fl.rounds);
  return result;
}

}  // namespace

ExperimentSetup prepare(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentSetup setup;
  setup.store = cfg.data.source == "file"
                    ? load_store(cfg.data.path)
                    : gen_synthetic(cfg.data.classes, cfg.data.per_class, cfg.data.dim,
                                    cfg.data.sigma, cfg.data.seed);
  setup.split = split(setup.store, cfg.data.test_fraction, cfg.seed);
  if (setup.split.test_ids.empty()) throw ConfigError("test split is empty");
  const auto& ids = setup.split.train_ids;
  const auto& labels = setup.store.labels();
  switch (cfg.partition.mode) {
    case PartitionMode::kIid:
      setup.plan = partition_iid(ids, labels, cfg.partition.clients, cfg.seed);
      break;
    case PartitionMode::kDirichlet:
      setup.plan = partition_dirichlet(ids, labels, cfg.partition.clients, cfg.partition.alpha,
                                       cfg.seed);
      break;
    case PartitionMode::kDiversity:
      setup.plan = partition_diversity(ids, labels, cfg.partition.clients, cfg.partition.alpha,
                                       cfg.seed);
      break;
  }
  const auto shape = cfg.model.hidden == 0
                         ? linear_shape(setup.store.d(), setup.store.c())
                         : mlp_shape(setup.store.d(), cfg.model.hidden, setup.store.c());
  setup.initial_model = init_params(shape, cfg.seed);
  return setup;
}

RunResult run_fast(const ExperimentConfig& cfg) {
  if (cfg.al.rounds != 1) throw ConfigError("FAST runs a single AL round; set al.rounds = 1");
  return run_pipeline(cfg, {Component::kProbe, Component::kWeak, Component::kRefine}, "fast");
}

RunResult run_ablation(const ExperimentConfig& cfg, const ComponentSet& components) {
  return run_pipeline(cfg, components, "ablation:" + to_string(components));
}

RunResult run_baseline(const ExperimentConfig& cfg) {
  const AlMethod method = cfg.al.method;
  if (method != AlMethod::kRandom && method != AlMethod::kEntropy && method != AlMethod::kCoreset) {
    throw ConfigError("baseline method must be random, entropy or coreset");
  }
  const ExperimentSetup setup = prepare(cfg);
  const auto& store = setup.store;
  const std::uint32_t k = setup.plan.k;
  const std::uint32_t rounds = cfg.al.rounds;
  const std::size_t n_train = setup.split.train_ids.size();

  RunResult result;
  result.plan = setup.plan;
  result.split = setup.split;
  result.trace.method = to_string(method);
  Context ctx{cfg, setup, train_config(cfg), result};
  Oracle oracle(store);

  result.budget = make_budget(n_train, cfg.al.budget_fraction, k, std::max(1u, rounds - 1));
  result.pools = initial_pool(setup.plan, store,
                              {cfg.al.initial_fraction, cfg.al.initial_in_budget}, cfg.seed,
                              result.budget, &result.audit);
  require_budget(result);

  const auto quota =
      static_cast<std::uint64_t>(std::llround(cfg.al.per_round_fraction * static_cast<double>(n_train)));
  ModelParams global = setup.initial_model;
  for (std::uint32_t r = 1; r <= rounds; ++r) {
    if (r > 1) {
      PhaseTimer timer(result.ledger, "query");
      if (result.budget.remaining() == 0) ++result.trace.skip_events;
      const auto shares = allocate_shares(result.budget, k, quota);
      for (ClientId c = 0; c < k; ++c) {
        auto& pool = result.pools[c];
        const std::size_t b = std::min<std::size_t>(shares[c], pool.unlabeled.size());
        if (b == 0) continue;
        std::vector<SampleId> ids;
        switch (method) {
          case AlMethod::kRandom: {
            Rng rng = make_rng(cfg.seed, {kTagQuery, c, r});
            ids = query_random(pool, b, rng);
            break;
          }
          case AlMethod::kEntropy: ids = query_entropy(store, pool, global, b); break;
          case AlMethod::kCoreset: ids = query_coreset(store, pool, b); break;
          default: break;
        }
        annotate(pool, ids, result.budget, oracle, r, &result.audit);
      }
      require_budget(result);
      if (!cfg.al.warm_start) global = setup.initial_model;
    }
    global = train_rounds(ctx, global, false, phase_name(r));
  }
  result.model = std::move(global);
  result.trace.label_acc_before = label_accuracy(store, result.pools, false);
  result.trace.label_acc_after = result.trace.label_acc_before;
  result.oracle_queries = oracle.query_count();
  finish_trace(result, rounds, cfg.fl.rounds);
  return result;
}

RunResult run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.al.method) {
    case AlMethod::kFast: return run_fast(cfg);
    case AlMethod::kAblation: return run_ablation(cfg, cfg.al.components);
    default: return run_baseline(cfg);
  }
}

void write_run_outputs(const RunResult& result, const std::filesystem::path& dir) {
  emit_metrics(result.trace, result.ledger, dir);
  write_audit_csv(result.audit, dir / "audit.csv");
  write_plan_csv(result.plan, dir / "partition.csv");
  if (!result.preliminary.empty()) write_scores_csv(result.preliminary, dir / "scores.csv");
  save_model(result.model, dir / "model.fmdl");
}

std::vector<SweepPoint> run_sweep(const ExperimentConfig& cfg, const std::string& key,
                                  const std::vector<std::string>& values) {
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  std::vector<SweepPoint> points;
  for (const auto& v : values) {
    ExperimentConfig c = cfg;
    set_config_value(c, key, v);
    c.validate();
    points.push_back({v, run_experiment(c)});
  }
  if (!cfg.output_dir.empty()) {
    std::filesystem::create_directories(cfg.output_dir);
    std::ofstream csv(cfg.output_dir / "sweep.csv", std::ios::trunc);
    if (!csv) throw IoError("cannot write sweep.csv");
    csv << "value,final_acc,total_mb,rounds,budget_consumed\n";
    for (const auto& p : points) {
      write_run_outputs(p.result, cfg.output_dir / (key + "=" + p.value));
      char buf[128];
      std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%u,%llu", p.result.trace.final_acc,
                    p.result.ledger.total_mb(), p.result.trace.round_count,
                    static_cast<unsigned long long>(p.result.trace.budget_consumed));
      csv << p.value << ',' << buf << '\n';
    }
  }
  return points;
}

}  // namespace fast
