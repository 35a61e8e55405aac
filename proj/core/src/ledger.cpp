#include "fast/ledger.hpp"

#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "fast/error.hpp"

namespace fast {

void CommLedger::record_round(std::uint32_t round, std::uint64_t param_count, std::uint32_t k) {
  const std::uint64_t per_direction = param_count * sizeof(float) * k;
  entries_.push_back({round, per_direction, per_direction});
}

double CommLedger::total_walltime() const {
  double s = 0.0;
  for (const auto& [phase, sec] : walltime_) s += sec;
  return s;
}

std::uint64_t CommLedger::total_bytes() const {
  std::uint64_t total = preliminary_bytes_;
  for (const auto& e : entries_) total += e.upload_bytes + e.download_bytes;
  return total;
}

double CommLedger::cumulative_mb(std::size_t rounds) const {
  std::uint64_t total = preliminary_bytes_;
  for (std::size_t i = 0; i < rounds && i < entries_.size(); ++i) {
    total += entries_[i].upload_bytes + entries_[i].download_bytes;
  }
  return static_cast<double>(total) / kBytesPerMb;
}

namespace {

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

std::string metrics_csv(const MetricsTrace& trace) {
  std::string out = "round,test_acc,cum_mb,phase\n";
  for (const auto& r : trace.rounds) {
    out += std::to_string(r.round) + ',' + fixed6(r.test_acc) + ',' + fixed6(r.cum_mb) + ',' +
           r.phase + '\n';
  }
  return out;
}

std::string summary_json(const MetricsTrace& trace, const CommLedger& ledger) {
  nlohmann::ordered_json j;
  j["method"] = trace.method;
  j["final_acc"] = trace.final_acc;
  j["total_mb"] = ledger.total_mb();
  j["walltime_s"] = ledger.total_walltime();
  j["rounds"] = trace.round_count;
  j["al_rounds"] = trace.al_rounds;
  j["budget_consumed"] = trace.budget_consumed;
  j["budget_total"] = trace.budget_total;
  j["label_acc_before"] = trace.label_acc_before;
  j["label_acc_after"] = trace.label_acc_after;
  j["skip_events"] = trace.skip_events;
  j["preliminary_bytes"] = ledger.preliminary_bytes();
  return j.dump(2) + "\n";
}

void emit_metrics(const MetricsTrace& trace, const CommLedger& ledger,
                  const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_text(dir / "metrics.csv", metrics_csv(trace));
  write_text(dir / "summary.json", summary_json(trace, ledger));
}

}  // namespace fast
