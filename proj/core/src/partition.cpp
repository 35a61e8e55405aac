#include "fast/partition.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "fast/error.hpp"
#include "fast/rng.hpp"

namespace fast {

std::string to_string(PartitionMode mode) {
  switch (mode) {
    case PartitionMode::kIid: return "iid";
    case PartitionMode::kDirichlet: return "dirichlet";
    case PartitionMode::kDiversity: return "diversity";
  }
  return "?";
}

PartitionMode parse_partition_mode(const std::string& name) {
  if (name == "iid") return PartitionMode::kIid;
  if (name == "dirichlet") return PartitionMode::kDirichlet;
  if (name == "diversity") return PartitionMode::kDiversity;
  throw ConfigError("unknown partition mode '" + name + "'");
}

std::vector<std::vector<SampleId>> PartitionPlan::members() const {
  std::vector<std::vector<SampleId>> out(k);
  for (const auto& [id, client] : assignment) out[client].push_back(id);
  return out;
}

std::vector<std::size_t> PartitionPlan::sizes() const {
  std::vector<std::size_t> out(k, 0);
  for (const auto& [id, client] : assignment) ++out[client];
  return out;
}

namespace {

std::vector<double> sample_dirichlet(std::uint32_t k, double alpha, Rng& rng) {
  std::gamma_distribution<double> gamma(alpha, 1.0);
  std::vector<double> p(k);
  double total = 0.0;
  for (double& x : p) {
    x = gamma(rng);
    total += x;
  }
  if (!(total > 0.0)) {
    // Every draw underflowed (tiny alpha); the limit is a one-hot vector.
    std::fill(p.begin(), p.end(), 0.0);
    p[std::uniform_int_distribution<std::uint32_t>(0, k - 1)(rng)] = 1.0;
    return p;
  }
  for (double& x : p) x /= total;
  return p;
}

// Cuts a shuffled id list into k consecutive chunks sized by proportions p.
void route_by_proportions(std::vector<SampleId>& ids, const std::vector<double>& p,
                          std::vector<std::vector<SampleId>>& clients) {
  const std::size_t n = ids.size();
  double cum = 0.0;
  std::size_t begin = 0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    cum += p[j];
    std::size_t end = j + 1 == p.size()
                          ? n
                          : std::min(n, static_cast<std::size_t>(std::llround(cum * n)));
    end = std::max(end, begin);
    clients[j].insert(clients[j].end(), ids.begin() + begin, ids.begin() + end);
    begin = end;
  }
}

std::vector<std::vector<SampleId>> group_by_class(std::span<const SampleId> ids,
                                                  std::span<const ClassId> labels) {
  ClassId max_label = 0;
  for (SampleId id : ids) {
    if (id >= labels.size()) throw ValidationError("sample id outside label table");
    max_label = std::max(max_label, labels[id]);
  }
  std::vector<std::vector<SampleId>> by_class(ids.empty() ? 0 : max_label + 1);
  for (SampleId id : ids) by_class[labels[id]].push_back(id);
  for (auto& v : by_class) std::sort(v.begin(), v.end());
  return by_class;
}

void repair_empty_clients(std::vector<std::vector<SampleId>>& clients) {
  for (;;) {
    auto empty = std::find_if(clients.begin(), clients.end(),
                              [](const auto& c) { return c.empty(); });
    if (empty == clients.end()) return;
    auto largest = std::max_element(
        clients.begin(), clients.end(),
        [](const auto& a, const auto& b) { return a.size() < b.size(); });
    if (largest->size() < 2) throw InfeasibleError("not enough samples to fill every client");
    auto donor = std::max_element(largest->begin(), largest->end());
    empty->push_back(*donor);
    largest->erase(donor);
  }
}

PartitionPlan make_plan(const std::vector<std::vector<SampleId>>& clients,
                        PartitionMode mode, double alpha, std::uint64_t seed) {
  PartitionPlan plan;
  plan.k = static_cast<std::uint32_t>(clients.size());
  plan.mode = mode;
  plan.alpha = alpha;
  plan.seed = seed;
  for (ClientId c = 0; c < plan.k; ++c) {
    for (SampleId id : clients[c]) {
      if (!plan.assignment.emplace(id, c).second) {
        throw ValidationError("duplicate sample id " + std::to_string(id));
      }
    }
  }
  return plan;
}

void check_common(std::span<const SampleId> ids, std::uint32_t k) {
  if (k < 1) throw InfeasibleError("client count must be >= 1");
  if (ids.size() < k) {
    throw InfeasibleError("cannot split " + std::to_string(ids.size()) + " samples over " +
                          std::to_string(k) + " clients");
  }
}

}  // namespace

PartitionPlan partition_iid(std::span<const SampleId> ids, std::uint32_t k,
                            std::uint64_t seed) {
  check_common(ids, k);
  Rng rng = make_rng(seed, {kTagPartition});
  std::vector<SampleId> shuffled(ids.begin(), ids.end());
  std::sort(shuffled.begin(), shuffled.end());
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  std::vector<std::vector<SampleId>> clients(k);
  for (std::size_t i = 0; i < shuffled.size(); ++i) clients[i % k].push_back(shuffled[i]);
  return make_plan(clients, PartitionMode::kIid, 0.0, seed);
}

PartitionPlan partition_iid(std::span<const SampleId> ids, std::span<const ClassId> labels,
                            std::uint32_t k, std::uint64_t seed) {
  check_common(ids, k);
  Rng rng = make_rng(seed, {kTagPartition});
  auto by_class = group_by_class(ids, labels);
  std::vector<std::vector<SampleId>> clients(k);
  std::size_t dealer = 0;
  for (auto& members : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    for (SampleId id : members) clients[dealer++ % k].push_back(id);
  }
  return make_plan(clients, PartitionMode::kIid, 0.0, seed);
}

PartitionPlan partition_dirichlet(std::span<const SampleId> ids,
                                  std::span<const ClassId> labels, std::uint32_t k,
                                  double alpha, std::uint64_t seed) {
  if (!(alpha > 0.0)) throw InfeasibleError("Dirichlet alpha must be > 0");
  check_common(ids, k);
  Rng rng = make_rng(seed, {kTagPartition});
  auto by_class = group_by_class(ids, labels);
  std::vector<std::vector<SampleId>> clients(k);
  for (auto& members : by_class) {
    const auto p = sample_dirichlet(k, alpha, rng);
    std::shuffle(members.begin(), members.end(), rng);
    route_by_proportions(members, p, clients);
  }
  repair_empty_clients(clients);
  return make_plan(clients, PartitionMode::kDirichlet, alpha, seed);
}

PartitionPlan partition_diversity(std::span<const SampleId> ids,
                                  std::span<const ClassId> labels, std::uint32_t k,
                                  double alpha, std::uint64_t seed) {
  if (!(alpha > 0.0)) throw InfeasibleError("Dirichlet alpha must be > 0");
  check_common(ids, k);
  auto by_class = group_by_class(ids, labels);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    if (!by_class[c].empty() && by_class[c].size() < k) {
      throw InfeasibleError("class " + std::to_string(c) + " has fewer than " +
                            std::to_string(k) + " samples");
    }
  }
  Rng rng = make_rng(seed, {kTagPartition});
  std::vector<std::vector<SampleId>> clients(k);
  for (auto& members : by_class) {
    if (members.empty()) continue;
    const auto p = sample_dirichlet(k, alpha, rng);
    std::shuffle(members.begin(), members.end(), rng);
    for (ClientId j = 0; j < k; ++j) clients[j].push_back(members[j]);
    std::vector<SampleId> rest(members.begin() + k, members.end());
    route_by_proportions(rest, p, clients);
  }
  return make_plan(clients, PartitionMode::kDiversity, alpha, seed);
}

void write_plan_csv(const PartitionPlan& plan, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "sample_id,client_id\n";
  for (const auto& [id, client] : plan.assignment) out << id << ',' << client << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace fast
