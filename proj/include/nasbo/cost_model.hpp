#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nasbo/search_space.hpp"

namespace nasbo {

struct CostEntry {
  StageId stage = StageId::E1;
  std::string label;
  double latency_ms = 0.0;
  std::optional<double> params_m;

  friend bool operator==(const CostEntry&, const CostEntry&) = default;
};

/// Per-block costs for one device and precision.
class CostTable {
 public:
  using Key = std::pair<StageId, std::string>;

  CostTable() = default;
  CostTable(std::string device, std::string precision, double fixed_overhead_ms = 0.0);

  /// Throws DataError on a duplicate key or a negative value.
  void add(CostEntry entry);

  const CostEntry* find(StageId stage, std::string_view label) const;
  bool complete_for(const SearchSpace& space) const;

  const std::string& device() const { return device_; }
  const std::string& precision() const { return precision_; }
  double fixed_overhead_ms() const { return fixed_overhead_ms_; }
  const std::map<Key, CostEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  friend bool operator==(const CostTable&, const CostTable&) = default;

 private:
  std::string device_ = "unknown";
  std::string precision_ = "unknown";
  double fixed_overhead_ms_ = 0.0;
  std::map<Key, CostEntry> entries_;
};

/// Reads `# device=`, `# precision=`, `# overhead_ms=` metadata and
/// `stage,label,latency_ms[,params_m]` rows.
CostTable ingest_profile(std::string_view document, const std::string& source = "<profile>");
CostTable load_profile(const std::string& path);
std::string serialize_profile(const CostTable& table);

/// Overhead plus the summed latency of the selected block per stage.
/// Throws DataError when a selected block has no entry.
double estimate_latency(const DecisionVector& z, const SearchSpace& space, const CostTable& table);
/// Same composition over params_m; entries without params count as missing.
double estimate_params(const DecisionVector& z, const SearchSpace& space, const CostTable& table);

/// Spearman rank correlation with average ranks for ties. Requires identical
/// key sets with at least three keys.
double rank_consistency(const std::map<std::string, double>& estimates, const std::map<std::string, double>& measured);

/// Average (1-based) ranks; tied values share the mean of their positions.
std::vector<double> average_ranks(const std::vector<double>& values);

struct MeasuredModel {
  std::string model;
  std::string arch;
  double latency_ms = 0.0;
};

/// Whole-model latency measurements: `model,arch,latency_ms` rows.
struct MeasuredTable {
  std::string device = "unknown";
  std::string precision = "unknown";
  std::vector<MeasuredModel> rows;

  std::map<std::string, double> latencies(std::string_view model_prefix = {}) const;
};

MeasuredTable ingest_measured(std::string_view document, const std::string& source = "<measured>");
MeasuredTable load_measured(const std::string& path);

}  // namespace nasbo
