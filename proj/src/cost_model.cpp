#include "nasbo/cost_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "nasbo/csv.hpp"
#include "nasbo/errors.hpp"

namespace nasbo {

CostTable::CostTable(std::string device, std::string precision, double fixed_overhead_ms)
    : device_(std::move(device)), precision_(std::move(precision)), fixed_overhead_ms_(fixed_overhead_ms) {
  if (!(fixed_overhead_ms_ >= 0.0) || !std::isfinite(fixed_overhead_ms_)) {
    throw DataError("fixed overhead must be a non-negative number");
  }
}

void CostTable::add(CostEntry entry) {
  const std::string where = std::string(stage_name(entry.stage)) + "/" + entry.label;
  if (!(entry.latency_ms >= 0.0) || !std::isfinite(entry.latency_ms)) {
    throw DataError("negative or non-finite latency for " + where);
  }
  if (entry.params_m && (!(*entry.params_m >= 0.0) || !std::isfinite(*entry.params_m))) {
    throw DataError("negative or non-finite params for " + where);
  }
  Key key{entry.stage, entry.label};
  if (!entries_.emplace(std::move(key), std::move(entry)).second) {
    throw DataError("duplicate cost entry " + where);
  }
}

const CostEntry* CostTable::find(StageId stage, std::string_view label) const {
  const auto it = entries_.find(Key{stage, std::string(label)});
  return it == entries_.end() ? nullptr : &it->second;
}

bool CostTable::complete_for(const SearchSpace& space) const {
  for (StageId s : kStages) {
    for (const auto& v : space.variants(s)) {
      if (!find(s, v.label())) return false;
    }
  }
  return true;
}

CostTable ingest_profile(std::string_view document, const std::string& source) {
  const CsvTable csv = parse_csv(document, source);

  double overhead = 0.0;
  if (auto it = csv.meta.find("overhead_ms"); it != csv.meta.end()) overhead = parse_double(it->second, source, 0);
  auto meta_or = [&](const char* key) {
    auto it = csv.meta.find(key);
    return it == csv.meta.end() ? std::string("unknown") : it->second;
  };
  CostTable table;
  try {
    table = CostTable(meta_or("device"), meta_or("precision"), overhead);
  } catch (const DataError& e) {
    throw ParseError(source, 0, e.what());
  }
  if (csv.header.empty()) return table;

  const auto stage_col = csv.require_column("stage");
  const auto label_col = csv.require_column("label");
  const auto latency_col = csv.require_column("latency_ms");
  const auto params_col = csv.column("params_m");

  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    const auto line = csv.row_lines[r];
    const auto stage = parse_stage(row[stage_col]);
    if (!stage) throw ParseError(source, line, "unknown stage id '" + row[stage_col] + "'");
    CostEntry entry;
    entry.stage = *stage;
    entry.label = row[label_col];
    if (entry.label.empty()) throw ParseError(source, line, "empty label");
    entry.latency_ms = parse_double(row[latency_col], source, line);
    if (params_col && !row[*params_col].empty()) entry.params_m = parse_double(row[*params_col], source, line);
    try {
      table.add(std::move(entry));
    } catch (const DataError& e) {
      throw ParseError(source, line, e.what());
    }
  }
  return table;
}

CostTable load_profile(const std::string& path) { return ingest_profile(read_text_file(path), path); }

std::string serialize_profile(const CostTable& table) {
  bool any_params = false;
  for (const auto& [key, e] : table.entries()) any_params = any_params || e.params_m.has_value();

  std::string out;
  out += "# device=" + table.device() + "\n";
  out += "# precision=" + table.precision() + "\n";
  out += "# overhead_ms=" + format_double(table.fixed_overhead_ms()) + "\n";
  out += any_params ? "stage,label,latency_ms,params_m\n" : "stage,label,latency_ms\n";
  for (const auto& [key, e] : table.entries()) {
    out += std::string(stage_name(e.stage)) + "," + e.label + "," + format_double(e.latency_ms);
    if (any_params) out += "," + (e.params_m ? format_double(*e.params_m) : std::string());
    out += "\n";
  }
  return out;
}

namespace {

template <typename Pick>
double compose(const DecisionVector& z, const SearchSpace& space, const CostTable& table, double base,
               const char* what, Pick pick) {
  if (!is_valid(z, space)) throw DataError("decision vector out of range for space " + space.name());
  double total = base;
  for (StageId s : kStages) {
    const auto& label = space.variants(s)[z[s]].label();
    const CostEntry* entry = table.find(s, label);
    const auto value = entry ? pick(*entry) : std::nullopt;
    if (!value) {
      throw DataError(std::string("missing ") + what + " entry for " + std::string(stage_name(s)) + "/" + label +
                      " in profile " + table.device() + "/" + table.precision());
    }
    total += *value;
  }
  return total;
}

}  // namespace

double estimate_latency(const DecisionVector& z, const SearchSpace& space, const CostTable& table) {
  return compose(z, space, table, table.fixed_overhead_ms(), "latency",
                 [](const CostEntry& e) { return std::optional<double>(e.latency_ms); });
}

double estimate_params(const DecisionVector& z, const SearchSpace& space, const CostTable& table) {
  // Overhead is a latency quantity; params compose from zero.
  return compose(z, space, table, 0.0, "params", [](const CostEntry& e) { return e.params_m; });
}

std::vector<double> average_ranks(const std::vector<double>& values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double rank_consistency(const std::map<std::string, double>& estimates, const std::map<std::string, double>& measured) {
  if (estimates.size() != measured.size()) throw DataError("rank_consistency: key sets differ in size");
  if (estimates.size() < 3) throw DataError("rank_consistency needs at least 3 points");
  std::vector<double> a, b;
  for (const auto& [key, value] : estimates) {
    const auto it = measured.find(key);
    if (it == measured.end()) throw DataError("rank_consistency: key '" + key + "' missing from measured set");
    a.push_back(value);
    b.push_back(it->second);
  }
  // Pearson correlation of the average ranks.
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double n = static_cast<double>(ra.size());
  const double mean = (n + 1.0) / 2.0;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - mean) * (rb[i] - mean);
    saa += (ra[i] - mean) * (ra[i] - mean);
    sbb += (rb[i] - mean) * (rb[i] - mean);
  }
  if (saa == 0.0 || sbb == 0.0) throw DataError("rank_consistency undefined: all values tied");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

std::map<std::string, double> MeasuredTable::latencies(std::string_view model_prefix) const {
  std::map<std::string, double> out;
  for (const auto& row : rows) {
    if (row.model.starts_with(model_prefix)) out[row.model] = row.latency_ms;
  }
  return out;
}

MeasuredTable ingest_measured(std::string_view document, const std::string& source) {
  const CsvTable csv = parse_csv(document, source);
  MeasuredTable table;
  if (auto it = csv.meta.find("device"); it != csv.meta.end()) table.device = it->second;
  if (auto it = csv.meta.find("precision"); it != csv.meta.end()) table.precision = it->second;
  if (csv.header.empty()) return table;
  const auto model_col = csv.require_column("model");
  const auto arch_col = csv.require_column("arch");
  const auto latency_col = csv.require_column("latency_ms");
  std::set<std::string> seen;
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    MeasuredModel m{row[model_col], row[arch_col], parse_double(row[latency_col], source, csv.row_lines[r])};
    if (!(m.latency_ms >= 0.0) || !std::isfinite(m.latency_ms)) {
      throw ParseError(source, csv.row_lines[r], "negative or non-finite latency");
    }
    if (!seen.insert(m.model).second) throw ParseError(source, csv.row_lines[r], "duplicate model '" + m.model + "'");
    table.rows.push_back(std::move(m));
  }
  return table;
}

MeasuredTable load_measured(const std::string& path) { return ingest_measured(read_text_file(path), path); }

}  // namespace nasbo
