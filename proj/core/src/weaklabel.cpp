#include "fast/weaklabel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <tuple>

#include "fast/error.hpp"

namespace fast {

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::kInitialRandom: return "initial";
    case Provenance::kWeak: return "weak";
    case Provenance::kOracle: return "oracle";
  }
  return "?";
}

std::string to_string(UncertaintyMetric m) {
  switch (m) {
    case UncertaintyMetric::kEntropy: return "entropy";
    case UncertaintyMetric::kLeastConfidence: return "least_confidence";
    case UncertaintyMetric::kSmallestMargin: return "smallest_margin";
    case UncertaintyMetric::kLargestMargin: return "largest_margin";
    case UncertaintyMetric::kNorm: return "norm";
  }
  return "?";
}

UncertaintyMetric parse_uncertainty_metric(const std::string& name) {
  if (name == "entropy") return UncertaintyMetric::kEntropy;
  if (name == "least_confidence") return UncertaintyMetric::kLeastConfidence;
  if (name == "smallest_margin") return UncertaintyMetric::kSmallestMargin;
  if (name == "largest_margin") return UncertaintyMetric::kLargestMargin;
  if (name == "norm") return UncertaintyMetric::kNorm;
  throw ConfigError("unknown uncertainty metric '" + name + "'");
}

std::vector<std::pair<SampleId, ClassId>> ClientPool::training_records(
    bool include_weak) const {
  std::vector<std::pair<SampleId, ClassId>> out;
  out.reserve(labeled.size() + (include_weak ? weak.size() : 0));
  for (const auto& [id, rec] : labeled) out.emplace_back(id, rec.label);
  if (include_weak) {
    for (const auto& [id, rec] : weak) out.emplace_back(id, rec.label);
    std::sort(out.begin(), out.end());
  }
  return out;
}

std::vector<std::pair<SampleId, ClassId>> ClientPool::initial_records() const {
  std::vector<std::pair<SampleId, ClassId>> out;
  for (const auto& [id, rec] : labeled) {
    if (rec.provenance == Provenance::kInitialRandom) out.emplace_back(id, rec.label);
  }
  return out;
}

namespace {

double squared_l2(std::span<const float> a, std::span<const float> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc += diff * diff;
  }
  return acc;
}

}  // namespace

ClassId knn_label(const EmbeddingStore& store, const Reference& reference,
                  SampleId query, std::uint32_t k_nn) {
  if (reference.empty()) throw PropagationError("labeled reference set is empty");
  if (k_nn < 1) throw PropagationError("k_nn must be >= 1");

  const auto z = store.features(query);
  std::vector<std::tuple<double, SampleId, ClassId>> cand;
  cand.reserve(reference.size());
  for (const auto& [id, label] : reference) {
    cand.emplace_back(squared_l2(z, store.features(id)), id, label);
  }
  const std::size_t k = std::min<std::size_t>(k_nn, cand.size());
  std::partial_sort(cand.begin(), cand.begin() + k, cand.end());

  ClassId max_label = 0;
  for (std::size_t i = 0; i < k; ++i) max_label = std::max(max_label, std::get<2>(cand[i]));
  std::vector<std::uint32_t> votes(max_label + 1, 0);
  for (std::size_t i = 0; i < k; ++i) ++votes[std::get<2>(cand[i])];
  const std::uint32_t best = *std::max_element(votes.begin(), votes.end());
  // Walk neighbors nearest-first; the first one from a top-voted class wins.
  for (std::size_t i = 0; i < k; ++i) {
    if (votes[std::get<2>(cand[i])] == best) return std::get<2>(cand[i]);
  }
  return std::get<2>(cand.front());
}

std::map<SampleId, ClassId> knn_propagate(const EmbeddingStore& store,
                                          const Reference& reference,
                                          const std::set<SampleId>& queries,
                                          std::uint32_t k_nn) {
  if (reference.empty()) throw PropagationError("labeled reference set is empty");
  std::map<SampleId, ClassId> out;
  for (SampleId q : queries) out.emplace_hint(out.end(), q, knn_label(store, reference, q, k_nn));
  return out;
}

std::map<SampleId, ClassId> knn_propagate(const EmbeddingStore& store,
                                          const ClientPool& pool, std::uint32_t k_nn) {
  return knn_propagate(store, pool.training_records(false), pool.unlabeled, k_nn);
}

namespace {

std::vector<double> unit_vector(std::span<const float> z, SampleId id) {
  double norm2 = 0.0;
  for (float x : z) norm2 += static_cast<double>(x) * x;
  if (!(norm2 > 0.0)) {
    throw DegenerateInputError("zero-norm embedding for sample " + std::to_string(id));
  }
  const double inv = 1.0 / std::sqrt(norm2);
  std::vector<double> u(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) u[i] = z[i] * inv;
  return u;
}

}  // namespace

PrototypeIndex::PrototypeIndex(const EmbeddingStore& store, const Reference& reference,
                               std::uint32_t class_count)
    : d_(store.d()), unit_by_class_(class_count) {
  for (const auto& [id, label] : reference) {
    if (label >= class_count) throw ValidationError("reference label out of range");
    unit_by_class_[label].push_back(unit_vector(store.features(id), id));
  }
  if (std::all_of(unit_by_class_.begin(), unit_by_class_.end(),
                  [](const auto& v) { return v.empty(); })) {
    throw PropagationError("no class has labeled samples");
  }
}

std::vector<double> PrototypeIndex::similarities(std::span<const float> z,
                                                 SampleId id) const {
  const auto zu = unit_vector(z, id);
  std::vector<double> s(unit_by_class_.size(), -1.0);
  for (std::size_t c = 0; c < unit_by_class_.size(); ++c) {
    const auto& members = unit_by_class_[c];
    if (members.empty()) continue;
    double sum = 0.0;
    for (const auto& m : members) {
      double dot = 0.0;
      for (std::uint32_t i = 0; i < d_; ++i) dot += zu[i] * m[i];
      sum += dot;
    }
    s[c] = sum / static_cast<double>(members.size());
  }
  return s;
}

PrototypeScores prototype_scores(const EmbeddingStore& store, const ClientPool& pool,
                                 SampleId sample_id, UncertaintyMetric metric) {
  const PrototypeIndex index(store, pool.training_records(false), pool.class_count);
  PrototypeScores out;
  out.sample_id = sample_id;
  out.s = index.similarities(store.features(sample_id), sample_id);
  out.u = uncertainty(out.s, metric);
  return out;
}

double uncertainty(std::span<const double> s, UncertaintyMetric metric) {
  for (double x : s) {
    if (std::isnan(x)) throw ScoringError("NaN in prototype vector");
  }
  if (metric == UncertaintyMetric::kNorm) {
    if (s.empty()) throw ScoringError("norm metric needs at least one class");
    double acc = 0.0;
    for (double x : s) acc += x * x;
    return -std::sqrt(acc);
  }
  if (s.size() < 2) throw ScoringError("softmax metrics need at least two classes");

  const double hi = *std::max_element(s.begin(), s.end());
  std::vector<double> p(s.size());
  double z = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    p[i] = std::exp(s[i] - hi);
    z += p[i];
  }
  for (double& x : p) x /= z;

  switch (metric) {
    case UncertaintyMetric::kEntropy: {
      double h = 0.0;
      for (double x : p) {
        if (x > 0.0) h -= x * std::log(x);
      }
      return h;
    }
    case UncertaintyMetric::kLeastConfidence:
      return 1.0 - *std::max_element(p.begin(), p.end());
    case UncertaintyMetric::kSmallestMargin: {
      std::partial_sort(p.begin(), p.begin() + 2, p.end(), std::greater<>());
      return -(p[0] - p[1]);
    }
    case UncertaintyMetric::kLargestMargin: {
      const auto [lo, top] = std::minmax_element(p.begin(), p.end());
      return -(*top - *lo);
    }
    case UncertaintyMetric::kNorm: break;
  }
  return 0.0;
}

PreliminaryResult preliminary_pass(const EmbeddingStore& store, const ClientPool& pool,
                                   std::uint32_t k_nn, UncertaintyMetric metric,
                                   const Reference* reference) {
  PreliminaryResult result{pool, {}};
  if (pool.unlabeled.empty()) return result;

  const Reference local = reference ? Reference{} : pool.initial_records();
  const Reference& ref = reference ? *reference : local;
  const auto weak = knn_propagate(store, ref, pool.unlabeled, k_nn);
  const PrototypeIndex index(store, ref, pool.class_count);

  result.pool.weak.clear();
  result.scores.reserve(pool.unlabeled.size());
  for (SampleId id : pool.unlabeled) {
    PrototypeScores ps;
    ps.sample_id = id;
    ps.s = index.similarities(store.features(id), id);
    ps.u = uncertainty(ps.s, metric);
    result.pool.weak[id] = LabelRecord{weak.at(id), Provenance::kWeak, ps.u};
    result.scores.push_back(std::move(ps));
  }
  return result;
}

void write_scores_csv(const std::vector<PreliminaryResult>& results,
                      const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "sample_id,weak_label,uncertainty\n" << std::setprecision(17);
  for (const auto& r : results) {
    for (const auto& s : r.scores) {
      out << s.sample_id << ',' << r.pool.weak.at(s.sample_id).label << ',' << s.u << '\n';
    }
  }
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace fast
