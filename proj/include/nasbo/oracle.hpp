#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nasbo/cost_model.hpp"
#include "nasbo/search_space.hpp"

namespace nasbo {

enum class Objective { Tafid, LatencyMs, ParamsM };

std::string_view objective_name(Objective o);
/// Throws DataError for names other than tafid, latency_ms, params_m.
Objective parse_objective(std::string_view name);

using ObjectiveValues = std::map<Objective, double>;

struct EvaluationRequest {
  DecisionVector decision;
  std::string arch;
  std::vector<Objective> objectives;
  std::string request_id;
  /// Optional sample-count hint forwarded to external evaluators.
  std::optional<std::uint64_t> n_samples;
};

enum class EvalSource { Lookup, Subprocess, Synthetic };

std::string_view source_name(EvalSource s);
EvalSource parse_source(std::string_view name);

struct EvaluationRecord {
  EvaluationRequest request;
  ObjectiveValues values;
  EvalSource source = EvalSource::Synthetic;
  double wall_time_s = 0.0;
  std::string timestamp;
};

/// Black-box objective evaluator.
class Oracle {
 public:
  virtual ~Oracle() = default;
  virtual ObjectiveValues evaluate(const EvaluationRequest& request) = 0;
  virtual EvalSource source() const = 0;
};

/// Runs `oracle` and checks that every requested objective came back finite.
/// Throws OracleError.
EvaluationRecord evaluate_record(Oracle& oracle, const EvaluationRequest& request);

/// Replays a fixed table keyed by architecture string.
class LookupOracle final : public Oracle {
 public:
  explicit LookupOracle(std::map<std::string, ObjectiveValues> table);

  /// CSV with an `arch` column and any of tafid, latency_ms, params_m.
  static LookupOracle from_csv(std::string_view document, const std::string& source = "<lookup>");
  static LookupOracle load(const std::string& path);

  ObjectiveValues evaluate(const EvaluationRequest& request) override;
  EvalSource source() const override { return EvalSource::Lookup; }
  const std::map<std::string, ObjectiveValues>& table() const { return table_; }

 private:
  std::map<std::string, ObjectiveValues> table_;
};

enum class SyntheticKind { Additive, Conflicting };

std::string_view synthetic_kind_name(SyntheticKind k);
/// Throws DataError for unknown benchmark ids.
SyntheticKind parse_synthetic_kind(std::string_view name);

/// Deterministic benchmarks with enumerable ground truth. Both objectives are
/// sums of per-stage coefficients, so any decision vector can be scored exactly.
class SyntheticOracle final : public Oracle {
 public:
  using StageTable = std::array<std::vector<double>, kStageCount>;

  /// f1 = sum a[s][z_s], f2 = sum b[s][z_s]; a, b uniform on [0, 1) from `seed`.
  static SyntheticOracle additive(const SearchSpace& space, std::uint64_t seed);
  /// Additive benchmark with explicit coefficient tables.
  static SyntheticOracle additive(const SearchSpace& space, StageTable f1_coeffs, StageTable f2_coeffs);
  /// f2 = composed latency from `profile`; f1 = sum c[s][z_s] with c falling
  /// as block latency rises (per-stage weight and jitter drawn from `seed`).
  /// Blocks missing from the profile get latency from a per-stage
  /// least-squares fit of residual and attention module costs.
  static SyntheticOracle conflicting(const SearchSpace& space, const CostTable& profile, std::uint64_t seed);
  static SyntheticOracle make(SyntheticKind kind, const SearchSpace& space, std::uint64_t seed,
                              const CostTable* profile = nullptr);

  /// (f1, f2) for a decision vector; the basis for brute-force fronts.
  std::pair<double, double> objectives(const DecisionVector& z) const;

  ObjectiveValues evaluate(const EvaluationRequest& request) override;
  EvalSource source() const override { return EvalSource::Synthetic; }
  SyntheticKind kind() const { return kind_; }

 private:
  SyntheticOracle(SyntheticKind kind, const SearchSpace& space, StageTable f1, StageTable f2,
                  std::optional<StageTable> params);

  SyntheticKind kind_;
  StageCounts counts_;
  StageTable f1_;
  StageTable f2_;
  std::optional<StageTable> params_;
};

/// Spawns `argv` per evaluation, writes one request line to its stdin and
/// reads one response line from its stdout.
class SubprocessOracle final : public Oracle {
 public:
  /// Throws OracleError(Spawn) when argv[0] is not an executable file.
  SubprocessOracle(std::vector<std::string> argv, double timeout_s = 3600.0);

  ObjectiveValues evaluate(const EvaluationRequest& request) override;
  EvalSource source() const override { return EvalSource::Subprocess; }

 private:
  std::vector<std::string> argv_;
  double timeout_s_;
};

/// One-line JSON request: request_id, decision, arch, objectives_requested
/// and optionally n_samples.
std::string encode_request_line(const EvaluationRequest& request);
EvaluationRequest decode_request_line(std::string_view line);

struct EvaluationResponse {
  std::string request_id;
  ObjectiveValues values;
};

/// One-line JSON response: request_id and a values object. Values may be
/// numbers, null, or the strings "NaN"/"Infinity"/"-Infinity". Throws
/// OracleError(Malformed) on anything else.
EvaluationResponse decode_response_line(std::string_view line);
std::string encode_response_line(const EvaluationResponse& response);

/// Current UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string utc_timestamp();

/// Resolves a command name against PATH; returns empty when not executable.
std::string find_executable(const std::string& name);

struct ProcessOutcome {
  bool timed_out = false;
  int exit_code = 0;
  bool signaled = false;
  std::string output;
};

/// Runs argv with `input` on stdin and collects stdout, killing the child
/// after `timeout_s`.
ProcessOutcome run_process(const std::vector<std::string>& argv, const std::string& input, double timeout_s);

}  // namespace nasbo
