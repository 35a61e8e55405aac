#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace fast {

inline constexpr double kBytesPerMb = 1024.0 * 1024.0;

struct LedgerEntry {
  std::uint32_t round = 0;
  std::uint64_t upload_bytes = 0;
  std::uint64_t download_bytes = 0;
};

// Parameter-payload communication accounting. Headers and compression are
// not modeled.
class CommLedger {
 public:
  // One FL round with k clients exchanging a model of param_count floats:
  // k downloads and k uploads.
  void record_round(std::uint32_t round, std::uint64_t param_count, std::uint32_t k);
  void record(const LedgerEntry& entry) { entries_.push_back(entry); }

  // Initial labeled-embedding exchange: every shared embedding goes up once
  // and comes back down once.
  void set_preliminary_bytes(std::uint64_t bytes) { preliminary_bytes_ = bytes; }
  std::uint64_t preliminary_bytes() const { return preliminary_bytes_; }

  void add_walltime(const std::string& phase, double seconds) { walltime_[phase] += seconds; }
  const std::map<std::string, double>& walltime() const { return walltime_; }
  double total_walltime() const;

  const std::vector<LedgerEntry>& entries() const { return entries_; }
  std::size_t round_count() const { return entries_.size(); }

  std::uint64_t total_bytes() const;
  double total_mb() const { return static_cast<double>(total_bytes()) / kBytesPerMb; }
  // Preliminary bytes plus the first `rounds` entries, in MB.
  double cumulative_mb(std::size_t rounds) const;

 private:
  std::vector<LedgerEntry> entries_;
  std::uint64_t preliminary_bytes_ = 0;
  std::map<std::string, double> walltime_;
};

struct RoundMetric {
  std::uint32_t round = 0;
  double test_acc = 0.0;
  double cum_mb = 0.0;
  std::string phase;
};

struct MetricsTrace {
  std::vector<RoundMetric> rounds;
  double final_acc = 0.0;
  // Accuracy of the training labels (ground-truth + weak) against the hidden
  // truth, before and after oracle refinement.
  double label_acc_before = 1.0;
  double label_acc_after = 1.0;
  std::uint64_t budget_consumed = 0;
  std::uint64_t budget_total = 0;
  std::uint32_t al_rounds = 0;
  std::uint32_t fl_rounds_per_al_round = 0;
  std::uint32_t round_count = 0;
  std::uint32_t skip_events = 0;
  std::string method;
};

// Writes <dir>/metrics.csv ("round,test_acc,cum_mb,phase") and
// <dir>/summary.json. Output depends only on its inputs.
void emit_metrics(const MetricsTrace& trace, const CommLedger& ledger,
                  const std::filesystem::path& dir);

std::string metrics_csv(const MetricsTrace& trace);
std::string summary_json(const MetricsTrace& trace, const CommLedger& ledger);

}  // namespace fast
