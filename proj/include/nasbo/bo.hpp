#pragma once

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "nasbo/gp.hpp"
#include "nasbo/moo.hpp"
#include "nasbo/oracle.hpp"
#include "nasbo/search_space.hpp"

namespace nasbo {

enum class ObjectivePair { TafidLatency, TafidParams };

Objective second_objective(ObjectivePair pair);
std::string_view objective_pair_name(ObjectivePair pair);
ObjectivePair parse_objective_pair(std::string_view name);

struct RunConfig {
  std::string space_id = "nanosd_default";
  ObjectivePair objectives = ObjectivePair::TafidLatency;
  int n_init = 15;
  int n_iter = 120;
  std::uint64_t seed = 0;
  int candidate_pool_size = 4096;
  int gp_restarts = 8;
  int gp_max_evals = 400;
  /// Reference point = max observed + ref_margin * range (or + 1 when the
  /// range is zero), per objective.
  double ref_margin = 0.1;
  /// Scrambled Halton initial design instead of uniform draws.
  bool low_discrepancy_init = false;
  /// When non-empty, initialization and proposals are restricted to these.
  std::vector<DecisionVector> candidates;
  std::optional<std::uint64_t> n_samples_hint;

  /// Throws DataError when n_init < 2, n_iter < 0, pool < 1, restarts < 1 or
  /// ref_margin <= 0.
  void validate() const;
};

/// Receives structured run events (run_header, init_eval, bo_eval, refit,
/// refpoint_update, front_snapshot, run_end).
class EventSink {
 public:
  virtual ~EventSink() = default;
  virtual void emit(std::string_view kind, const nlohmann::json& payload) = 0;
};

struct IterationTiming {
  int iteration = 0;
  double propose_s = 0.0;
  double evaluate_s = 0.0;
  double fit_s = 0.0;
};

struct RunState {
  RunConfig config;
  std::vector<EvaluationRecord> history;
  /// Decision vectors whose evaluation missed; never proposed again.
  std::vector<DecisionVector> infeasible;
  std::set<DecisionVector> evaluated;
  int init_done = 0;
  bool initialized = false;
  /// BO steps executed, including infeasible ones.
  int iteration = 0;
  std::optional<ObjectivePoint> ref;
  std::optional<ParetoArchive> archive;
  /// Hypervolume after each successful evaluation, under the current ref.
  std::vector<double> hv_trace;
  std::optional<GPModel> gp1;
  std::optional<GPModel> gp2;
  /// Hyperparameters of the previous fits; the next fit starts from them.
  std::optional<KernelParams> warm1;
  std::optional<KernelParams> warm2;
  std::vector<IterationTiming> timings;
  std::string stop_reason;
};

/// Objective-space view of an evaluation under a configured pair.
ObjectivePoint to_objective_point(const EvaluationRecord& record, ObjectivePair pair);
std::vector<ObjectivePoint> objective_points(const std::vector<EvaluationRecord>& history, ObjectivePair pair);

/// Per objective: max + margin * (max - min), or max + 1 for a zero range.
/// Throws DataError on an empty history.
ObjectivePoint set_reference_point(const std::vector<ObjectivePoint>& observed, double margin = 0.1);

/// n_init continuous points from the run seed whose projections are pairwise
/// distinct (each collision re-drawn up to 100 times).
std::vector<ContinuousPoint> init_design(const RunConfig& config, const SearchSpace& space);

struct Proposal {
  ContinuousPoint x;
  DecisionVector z;
  double ehvi = 0.0;
};

/// EHVI argmax over a seeded candidate pool, skipping evaluated decision
/// vectors; ties go to the lexicographically smallest vector. When the random
/// pool only hits evaluated cells, spaces of up to a million cells are
/// enumerated instead. Returns nullopt when every candidate has been
/// evaluated. Requires fitted GPs and a ref.
std::optional<Proposal> propose(const RunState& state, const SearchSpace& space);

struct RunReport {
  ParetoArchive front;
  std::vector<double> hv_trace;
  std::vector<IterationTiming> timings;
  std::string stop_reason;
};

class BayesOptimizer {
 public:
  /// `oracle` may be null for replay-only use; `sink` may be null.
  BayesOptimizer(const SearchSpace& space, RunConfig config, Oracle* oracle, EventSink* sink = nullptr);

  /// Evaluates the initial design points not yet in the state, then sets the
  /// reference point and fits the surrogates.
  void initialize();
  /// One propose/evaluate/refit cycle. Returns false once the budget is spent
  /// or the space is exhausted.
  bool step();
  /// initialize() plus steps until done; emits run_end.
  RunReport run();

  /// Feeds a recorded evaluation without invoking the oracle. Records must
  /// arrive in their original order.
  void absorb_init(const EvaluationRecord* record, const DecisionVector& z);
  void absorb_step(const EvaluationRecord* record, const DecisionVector& z);

  const RunState& state() const { return state_; }
  const SearchSpace& space() const { return space_; }
  void set_sink(EventSink* sink) { sink_ = sink; }
  void set_oracle(Oracle* oracle) { oracle_ = oracle; }
  /// Restores the hyperparameter warm start of an interrupted run.
  void set_warm_start(std::optional<KernelParams> gp1, std::optional<KernelParams> gp2);
  /// Marks a replayed run as finished for the given reason.
  void set_stop_reason(std::string reason) { state_.stop_reason = std::move(reason); }
  bool finished() const;
  RunReport report() const;

 private:
  EvaluationRequest make_request(const DecisionVector& z, std::string id) const;
  void record_success(EvaluationRecord record);
  void finish_init();
  void refit();
  void ensure_fitted();
  void rebuild_trace();
  void emit(std::string_view kind, const nlohmann::json& payload);

  const SearchSpace& space_;
  Oracle* oracle_;
  EventSink* sink_;
  RunState state_;
  bool gps_stale_ = true;
};

/// JSON forms used by the event log.
nlohmann::json record_to_json(const EvaluationRecord& record);
EvaluationRecord record_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& config, const SearchSpace& space);
RunConfig config_from_json(const nlohmann::json& j, const SearchSpace& space);
nlohmann::json kernel_to_json(const KernelParams& p);
KernelParams kernel_from_json(const nlohmann::json& j);

}  // namespace nasbo
