#include "fast/refine.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

#include "fast/error.hpp"
#include "fast/rng.hpp"

namespace fast {

std::uint64_t Budget::reserve(std::uint64_t n) {
  const std::uint64_t granted = std::min(n, remaining());
  consumed += granted;
  return granted;
}

Budget make_budget(std::size_t n_train, double budget_fraction, std::uint32_t k,
                   std::uint32_t query_rounds) {
  if (!(budget_fraction >= 0.0 && budget_fraction <= 1.0)) {
    throw ConfigError("budget fraction must lie in [0, 1]");
  }
  if (k < 1) throw ConfigError("client count must be >= 1");
  Budget b;
  b.total_b = static_cast<std::uint64_t>(std::llround(budget_fraction * n_train));
  b.per_client_b = query_rounds == 0 ? 0 : b.total_b / (static_cast<std::uint64_t>(k) * query_rounds);
  return b;
}

void write_audit_csv(const AuditLog& log, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "round,client_id,sample_id,weak_label,oracle_label,u,provenance\n"
      << std::setprecision(17);
  for (const auto& r : log) {
    out << r.round << ',' << r.client_id << ',' << r.sample_id << ',';
    if (r.weak_label) out << *r.weak_label;
    out << ',' << r.oracle_label << ',';
    if (r.u) out << *r.u;
    out << ',' << to_string(r.provenance) << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<ClientPool> initial_pool(const PartitionPlan& plan, const EmbeddingStore& store,
                                     const InitialPoolOptions& opts, std::uint64_t seed,
                                     Budget& budget, AuditLog* audit) {
  if (!(opts.initial_fraction > 0.0 && opts.initial_fraction <= 1.0)) {
    throw ConfigError("initial fraction must lie in (0, 1]");
  }
  const auto members = plan.members();
  std::vector<std::size_t> draw(plan.k);
  std::uint64_t total = 0;
  for (ClientId c = 0; c < plan.k; ++c) {
    if (members[c].empty()) throw ConfigError("client " + std::to_string(c) + " is empty");
    const auto want = static_cast<std::size_t>(
        std::llround(opts.initial_fraction * static_cast<double>(members[c].size())));
    draw[c] = std::clamp<std::size_t>(want, 1, members[c].size());
    total += draw[c];
  }
  if (opts.counts_against_budget) {
    if (total > budget.remaining()) {
      throw ConfigError("initial pool of " + std::to_string(total) +
                        " samples exceeds the remaining budget of " +
                        std::to_string(budget.remaining()));
    }
  } else {
    budget.total_b += total;
  }
  budget.consumed += total;

  std::vector<ClientPool> pools(plan.k);
  for (ClientId c = 0; c < plan.k; ++c) {
    Rng rng = make_rng(seed, {kTagInitialPool, c});
    std::vector<SampleId> ids = members[c];
    std::shuffle(ids.begin(), ids.end(), rng);
    ClientPool& pool = pools[c];
    pool.client_id = c;
    pool.class_count = store.c();
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (i < draw[c]) {
        pool.labeled[ids[i]] = LabelRecord{store.label(ids[i]), Provenance::kInitialRandom, {}};
      } else {
        pool.unlabeled.insert(ids[i]);
      }
    }
    if (audit) {
      for (const auto& [id, rec] : pool.labeled) {
        audit->push_back({0, c, id, std::nullopt, rec.label, std::nullopt,
                          Provenance::kInitialRandom});
      }
    }
  }
  return pools;
}

std::vector<SampleId> select_top_b(std::span<const PrototypeScores> scores, std::size_t b) {
  std::vector<std::pair<double, SampleId>> order;
  order.reserve(scores.size());
  for (const auto& s : scores) order.emplace_back(s.u, s.sample_id);
  const std::size_t take = std::min(b, order.size());
  auto by_rank = [](const auto& x, const auto& y) {
    return x.first != y.first ? x.first > y.first : x.second < y.second;
  };
  std::partial_sort(order.begin(), order.begin() + take, order.end(), by_rank);
  std::vector<SampleId> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.push_back(order[i].second);
  return out;
}

std::vector<std::uint64_t> allocate_shares(const Budget& budget, std::uint32_t k,
                                           std::uint64_t round_quota) {
  std::vector<std::uint64_t> shares(k, 0);
  if (k == 0) return shares;
  const std::uint64_t q = std::min(round_quota, budget.remaining());
  for (std::uint32_t c = 0; c < k; ++c) shares[c] = q / k + (c < q % k ? 1 : 0);
  return shares;
}

std::size_t annotate(ClientPool& pool, std::span<const SampleId> ids, Budget& budget,
                     Oracle& oracle, std::uint32_t round, AuditLog* audit) {
  std::size_t done = 0;
  for (SampleId id : ids) {
    if (!pool.unlabeled.contains(id)) {
      throw ValidationError("sample " + std::to_string(id) + " is not unlabeled on client " +
                            std::to_string(pool.client_id));
    }
    if (budget.reserve(1) == 0) break;
    const ClassId truth = oracle.annotate(id);
    std::optional<ClassId> weak_label;
    std::optional<double> u;
    if (auto it = pool.weak.find(id); it != pool.weak.end()) {
      weak_label = it->second.label;
      u = it->second.score;
      pool.weak.erase(it);
    }
    pool.unlabeled.erase(id);
    pool.labeled[id] = LabelRecord{truth, Provenance::kOracle, u};
    if (audit) {
      audit->push_back({round, pool.client_id, id, weak_label, truth, u, Provenance::kOracle});
    }
    ++done;
  }
  return done;
}

RefineOutcome refinement_pass(const ClientPool& pool, std::span<const PrototypeScores> scores,
                              std::uint64_t share, Budget& budget, Oracle& oracle,
                              std::uint32_t round, AuditLog* audit) {
  RefineOutcome out{pool, 0, false};
  if (budget.remaining() == 0) {
    out.skipped = true;
    return out;
  }
  const std::uint64_t b = std::min<std::uint64_t>(
      {share, budget.remaining(), static_cast<std::uint64_t>(pool.unlabeled.size())});
  const auto ids = select_top_b(scores, b);
  out.annotated = annotate(out.pool, ids, budget, oracle, round, audit);
  return out;
}

bool budget_check(std::span<const ClientPool> pools, const Budget& budget) {
  std::uint64_t labeled = 0;
  for (const auto& p : pools) labeled += p.labeled.size();
  return labeled <= budget.total_b && budget.consumed <= budget.total_b;
}

}  // namespace fast
