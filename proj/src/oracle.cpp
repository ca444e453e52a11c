#include "nasbo/oracle.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <limits>

#include "nasbo/csv.hpp"
#include "nasbo/errors.hpp"
#include "nasbo/random.hpp"

namespace nasbo {

namespace {

constexpr std::array<std::string_view, 3> kObjectiveNames{"tafid", "latency_ms", "params_m"};

}  // namespace

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string_view objective_name(Objective o) { return kObjectiveNames[static_cast<std::size_t>(o)]; }

Objective parse_objective(std::string_view name) {
  for (std::size_t i = 0; i < kObjectiveNames.size(); ++i) {
    if (kObjectiveNames[i] == name) return static_cast<Objective>(i);
  }
  throw DataError("unknown objective '" + std::string(name) + "'");
}

std::string_view source_name(EvalSource s) {
  switch (s) {
    case EvalSource::Lookup: return "lookup";
    case EvalSource::Subprocess: return "subprocess";
    case EvalSource::Synthetic: return "synthetic";
  }
  return "unknown";
}

EvalSource parse_source(std::string_view name) {
  for (auto s : {EvalSource::Lookup, EvalSource::Subprocess, EvalSource::Synthetic}) {
    if (source_name(s) == name) return s;
  }
  throw DataError("unknown evaluation source '" + std::string(name) + "'");
}

EvaluationRecord evaluate_record(Oracle& oracle, const EvaluationRequest& request) {
  const auto start = std::chrono::steady_clock::now();
  ObjectiveValues values = oracle.evaluate(request);
  const auto stop = std::chrono::steady_clock::now();

  EvaluationRecord record;
  for (Objective o : request.objectives) {
    const auto it = values.find(o);
    if (it == values.end()) {
      throw OracleError(OracleError::Kind::Malformed, "evaluator returned no value for " +
                                                          std::string(objective_name(o)) + " (" + request.arch + ")");
    }
    if (!std::isfinite(it->second)) {
      throw OracleError(OracleError::Kind::NonFinite, "non-finite " + std::string(objective_name(o)) + " for " +
                                                          request.arch);
    }
    record.values[o] = it->second;
  }
  record.request = request;
  record.source = oracle.source();
  record.wall_time_s = std::chrono::duration<double>(stop - start).count();
  record.timestamp = utc_timestamp();
  return record;
}

// ---------------------------------------------------------------- lookup

LookupOracle::LookupOracle(std::map<std::string, ObjectiveValues> table) : table_(std::move(table)) {}

LookupOracle LookupOracle::from_csv(std::string_view document, const std::string& source) {
  const CsvTable csv = parse_csv(document, source);
  const auto arch_col = csv.require_column("arch");
  std::vector<std::pair<Objective, std::size_t>> columns;
  for (std::size_t i = 0; i < kObjectiveNames.size(); ++i) {
    if (auto c = csv.column(kObjectiveNames[i])) columns.emplace_back(static_cast<Objective>(i), *c);
  }
  std::map<std::string, ObjectiveValues> table;
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    ObjectiveValues values;
    for (const auto& [objective, col] : columns) {
      values[objective] = parse_double(csv.rows[r][col], source, csv.row_lines[r]);
    }
    if (!table.emplace(csv.rows[r][arch_col], std::move(values)).second) {
      throw ParseError(source, csv.row_lines[r], "duplicate architecture '" + csv.rows[r][arch_col] + "'");
    }
  }
  return LookupOracle(std::move(table));
}

LookupOracle LookupOracle::load(const std::string& path) { return from_csv(read_text_file(path), path); }

ObjectiveValues LookupOracle::evaluate(const EvaluationRequest& request) {
  const auto it = table_.find(request.arch);
  if (it == table_.end()) {
    throw OracleError(OracleError::Kind::Miss, "lookup oracle has no entry for " + request.arch);
  }
  for (Objective o : request.objectives) {
    if (!it->second.contains(o)) {
      throw OracleError(OracleError::Kind::Miss,
                        "lookup oracle has no " + std::string(objective_name(o)) + " for " + request.arch);
    }
  }
  return it->second;
}

// ---------------------------------------------------------------- synthetic

std::string_view synthetic_kind_name(SyntheticKind k) { return k == SyntheticKind::Additive ? "additive" : "conflicting"; }

SyntheticKind parse_synthetic_kind(std::string_view name) {
  if (name == "additive") return SyntheticKind::Additive;
  if (name == "conflicting") return SyntheticKind::Conflicting;
  throw DataError("unknown synthetic benchmark '" + std::string(name) + "'");
}

SyntheticOracle::SyntheticOracle(SyntheticKind kind, const SearchSpace& space, StageTable f1, StageTable f2,
                                 std::optional<StageTable> params)
    : kind_(kind), counts_(space.counts()), f1_(std::move(f1)), f2_(std::move(f2)), params_(std::move(params)) {
  for (std::size_t s = 0; s < kStageCount; ++s) {
    if (f1_[s].size() != counts_[s] || f2_[s].size() != counts_[s] || (params_ && (*params_)[s].size() != counts_[s])) {
      throw DataError("synthetic coefficient table does not match the space's stage counts");
    }
  }
}

SyntheticOracle SyntheticOracle::additive(const SearchSpace& space, std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0xadd));
  StageTable a, b;
  for (StageId s : kStages) {
    for (std::size_t v = 0; v < space.count(s); ++v) {
      a[ordinal(s)].push_back(rng.uniform());
      b[ordinal(s)].push_back(rng.uniform());
    }
  }
  return additive(space, std::move(a), std::move(b));
}

SyntheticOracle SyntheticOracle::additive(const SearchSpace& space, StageTable f1_coeffs, StageTable f2_coeffs) {
  return SyntheticOracle(SyntheticKind::Additive, space, std::move(f1_coeffs), std::move(f2_coeffs), std::nullopt);
}

namespace {

// Least-squares per-module latency (residual, attention) over the stage's
// profiled variants; used for blocks the profile does not list.
std::pair<double, double> fit_module_latency(StageId s, const SearchSpace& space, const CostTable& profile) {
  double srr = 0.0, sra = 0.0, saa = 0.0, sry = 0.0, say = 0.0;
  for (const auto& v : space.variants(s)) {
    const CostEntry* e = profile.find(s, v.label());
    if (!e) continue;
    const auto a = static_cast<double>(v.attention_count());
    const auto r = static_cast<double>(v.tokens().size()) - a;
    srr += r * r;
    sra += r * a;
    saa += a * a;
    sry += r * e->latency_ms;
    say += a * e->latency_ms;
  }
  const double det = srr * saa - sra * sra;
  if (!(det > 1e-12)) {
    throw DataError("profile lists too few " + std::string(stage_name(s)) +
                    " blocks to estimate the latency of unprofiled variants");
  }
  const double r = std::max(0.0, (sry * saa - say * sra) / det);
  const double a = std::max(0.0, (say * srr - sry * sra) / det);
  return {r, a};
}

}  // namespace

SyntheticOracle SyntheticOracle::conflicting(const SearchSpace& space, const CostTable& profile, std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0xc0f));
  StageTable fidelity, latency, params;
  bool has_params = true;
  for (StageId s : kStages) {
    auto& lat = latency[ordinal(s)];
    std::optional<std::pair<double, double>> module_cost;
    for (const auto& v : space.variants(s)) {
      const CostEntry* e = profile.find(s, v.label());
      if (!e) {
        if (!module_cost) module_cost = fit_module_latency(s, space, profile);
        lat.push_back(module_cost->first * static_cast<double>(v.tokens().size() - v.attention_count()) +
                      module_cost->second * static_cast<double>(v.attention_count()));
        has_params = false;
        params[ordinal(s)].push_back(0.0);
        continue;
      }
      lat.push_back(e->latency_ms);
      has_params = has_params && e->params_m.has_value();
      params[ordinal(s)].push_back(e->params_m.value_or(0.0));
    }
    const auto [lo, hi] = std::minmax_element(lat.begin(), lat.end());
    const double range = *hi - *lo;
    // Stage importance and a small per-block perturbation; slower (more
    // attention) blocks buy fidelity with diminishing returns.
    const double weight = rng.uniform(0.5, 2.0);
    for (double l : lat) {
      const double u = range > 0.0 ? (l - *lo) / range : 0.0;
      fidelity[ordinal(s)].push_back(weight * (1.0 - std::sqrt(u)) + rng.uniform(0.0, 0.05 * weight));
    }
  }
  auto oracle = SyntheticOracle(SyntheticKind::Conflicting, space, std::move(fidelity), std::move(latency),
                                has_params ? std::optional<StageTable>(std::move(params)) : std::nullopt);
  return oracle;
}

SyntheticOracle SyntheticOracle::make(SyntheticKind kind, const SearchSpace& space, std::uint64_t seed,
                                      const CostTable* profile) {
  if (kind == SyntheticKind::Additive) return additive(space, seed);
  if (!profile) throw DataError("the conflicting benchmark needs a latency profile");
  return conflicting(space, *profile, seed);
}

std::pair<double, double> SyntheticOracle::objectives(const DecisionVector& z) const {
  double f1 = 0.0, f2 = 0.0;
  for (std::size_t s = 0; s < kStageCount; ++s) {
    if (z.indices[s] >= counts_[s]) throw DataError("decision vector out of range for synthetic benchmark");
    f1 += f1_[s][z.indices[s]];
    f2 += f2_[s][z.indices[s]];
  }
  return {f1, f2};
}

ObjectiveValues SyntheticOracle::evaluate(const EvaluationRequest& request) {
  const auto [f1, f2] = objectives(request.decision);
  ObjectiveValues values{{Objective::Tafid, f1}, {Objective::LatencyMs, f2}};
  if (kind_ == SyntheticKind::Additive) {
    values[Objective::ParamsM] = f2;
  } else if (params_) {
    double p = 0.0;
    for (std::size_t s = 0; s < kStageCount; ++s) p += (*params_)[s][request.decision.indices[s]];
    values[Objective::ParamsM] = p;
  }
  return values;
}

// ---------------------------------------------------------------- wire protocol

std::string encode_request_line(const EvaluationRequest& request) {
  nlohmann::ordered_json j;
  j["request_id"] = request.request_id;
  j["decision"] = request.decision.indices;
  j["arch"] = request.arch;
  auto& objectives = j["objectives_requested"] = nlohmann::ordered_json::array();
  for (Objective o : request.objectives) objectives.push_back(objective_name(o));
  if (request.n_samples) j["n_samples"] = *request.n_samples;
  return j.dump() + "\n";
}

EvaluationRequest decode_request_line(std::string_view line) {
  try {
    const auto j = nlohmann::json::parse(line);
    EvaluationRequest r;
    r.request_id = j.at("request_id").get<std::string>();
    const auto decision = j.at("decision").get<std::vector<std::uint32_t>>();
    if (decision.size() != kStageCount) throw DataError("decision must have 6 entries");
    std::copy(decision.begin(), decision.end(), r.decision.indices.begin());
    r.arch = j.at("arch").get<std::string>();
    for (const auto& o : j.at("objectives_requested")) r.objectives.push_back(parse_objective(o.get<std::string>()));
    if (j.contains("n_samples")) r.n_samples = j.at("n_samples").get<std::uint64_t>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed request: ") + e.what());
  }
}

EvaluationResponse decode_response_line(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw OracleError(OracleError::Kind::Malformed, std::string("unparseable evaluator response: ") + e.what());
  }
  if (!j.is_object() || !j.contains("request_id") || !j["request_id"].is_string() || !j.contains("values") ||
      !j["values"].is_object()) {
    throw OracleError(OracleError::Kind::Malformed, "evaluator response needs request_id and values");
  }
  EvaluationResponse r;
  r.request_id = j["request_id"].get<std::string>();
  for (const auto& [key, value] : j["values"].items()) {
    Objective o;
    try {
      o = parse_objective(key);
    } catch (const DataError& e) {
      throw OracleError(OracleError::Kind::Malformed, e.what());
    }
    double v;
    if (value.is_number()) {
      v = value.get<double>();
    } else if (value.is_null()) {
      v = std::numeric_limits<double>::quiet_NaN();
    } else if (value.is_string() && value == "NaN") {
      v = std::numeric_limits<double>::quiet_NaN();
    } else if (value.is_string() && value == "Infinity") {
      v = std::numeric_limits<double>::infinity();
    } else if (value.is_string() && value == "-Infinity") {
      v = -std::numeric_limits<double>::infinity();
    } else {
      throw OracleError(OracleError::Kind::Malformed, "value for " + key + " is not a number");
    }
    r.values[o] = v;
  }
  return r;
}

std::string encode_response_line(const EvaluationResponse& response) {
  nlohmann::ordered_json j;
  j["request_id"] = response.request_id;
  auto& values = j["values"] = nlohmann::ordered_json::object();
  for (const auto& [o, v] : response.values) {
    if (std::isnan(v)) {
      values[std::string(objective_name(o))] = "NaN";
    } else if (std::isinf(v)) {
      values[std::string(objective_name(o))] = v > 0 ? "Infinity" : "-Infinity";
    } else {
      values[std::string(objective_name(o))] = v;
    }
  }
  return j.dump() + "\n";
}

// ---------------------------------------------------------------- subprocess

SubprocessOracle::SubprocessOracle(std::vector<std::string> argv, double timeout_s)
    : argv_(std::move(argv)), timeout_s_(timeout_s) {
  if (argv_.empty()) throw OracleError(OracleError::Kind::Spawn, "empty evaluator command");
  const std::string resolved = find_executable(argv_.front());
  if (resolved.empty()) {
    throw OracleError(OracleError::Kind::Spawn, "evaluator '" + argv_.front() + "' is not an executable file");
  }
  argv_.front() = resolved;
  if (!(timeout_s_ > 0.0)) throw DataError("evaluator timeout must be positive");
}

ObjectiveValues SubprocessOracle::evaluate(const EvaluationRequest& request) {
  const std::string line = encode_request_line(request);
  for (int attempt = 0;; ++attempt) {
    const ProcessOutcome out = run_process(argv_, line, timeout_s_);
    if (out.timed_out) {
      throw OracleError(OracleError::Kind::Timeout,
                        "evaluator timed out after " + format_double(timeout_s_) + " s on " + request.arch);
    }
    if (out.signaled || out.exit_code != 0) {
      throw OracleError(OracleError::Kind::ExitStatus,
                        "evaluator exited with status " + std::to_string(out.exit_code) + " on " + request.arch);
    }
    const auto nl = out.output.find('\n');
    try {
      if (nl == std::string::npos) {
        throw OracleError(OracleError::Kind::Malformed, "evaluator produced no complete response line");
      }
      EvaluationResponse response = decode_response_line(std::string_view(out.output).substr(0, nl));
      if (response.request_id != request.request_id) {
        throw OracleError(OracleError::Kind::IdMismatch, "evaluator answered request '" + response.request_id +
                                                             "', expected '" + request.request_id + "'");
      }
      for (const auto& [o, v] : response.values) {
        if (!std::isfinite(v)) {
          throw OracleError(OracleError::Kind::NonFinite,
                            "evaluator returned non-finite " + std::string(objective_name(o)) + " for " + request.arch);
        }
      }
      return std::move(response.values);
    } catch (const OracleError& e) {
      if (e.kind() != OracleError::Kind::Malformed || attempt >= 1) throw;
    }
  }
}

}  // namespace nasbo
