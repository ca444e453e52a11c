#include "nasbo/bo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <unordered_set>

#include "nasbo/errors.hpp"
#include "nasbo/random.hpp"

namespace nasbo {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Stream ids for mix_seed.
constexpr std::uint64_t kInitStream = 0x1417;
constexpr std::uint64_t kPoolStream = 0x9001;
constexpr std::uint64_t kFallbackEnumerationCap = 1'000'000;
constexpr std::uint64_t kFitStream = 0x6f17;

double radical_inverse(std::uint64_t i, std::uint64_t base) {
  double inv = 1.0 / static_cast<double>(base);
  double f = inv;
  double r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

Eigen::MatrixXd centers_matrix(const std::vector<DecisionVector>& zs, const SearchSpace& space) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(zs.size()), static_cast<Eigen::Index>(kInputDim));
  for (std::size_t i = 0; i < zs.size(); ++i) {
    const auto c = cell_center(zs[i], space);
    for (std::size_t d = 0; d < kInputDim; ++d) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = c.coords[d];
  }
  return m;
}

}  // namespace

Objective second_objective(ObjectivePair pair) {
  return pair == ObjectivePair::TafidLatency ? Objective::LatencyMs : Objective::ParamsM;
}

std::string_view objective_pair_name(ObjectivePair pair) {
  return pair == ObjectivePair::TafidLatency ? "tafid,latency_ms" : "tafid,params_m";
}

ObjectivePair parse_objective_pair(std::string_view name) {
  if (name == "tafid,latency_ms" || name == "latency") return ObjectivePair::TafidLatency;
  if (name == "tafid,params_m" || name == "params") return ObjectivePair::TafidParams;
  throw DataError("unknown objective pair '" + std::string(name) + "' (use tafid,latency_ms or tafid,params_m)");
}

void RunConfig::validate() const {
  if (n_init < 2) throw DataError("n_init must be at least 2");
  if (n_iter < 0) throw DataError("n_iter must be non-negative");
  if (candidate_pool_size < 1) throw DataError("candidate_pool_size must be at least 1");
  if (gp_restarts < 1) throw DataError("gp_restarts must be at least 1");
  if (gp_max_evals < 1) throw DataError("gp_max_evals must be at least 1");
  if (!(ref_margin > 0.0)) throw DataError("ref_margin must be positive");
}

ObjectivePoint to_objective_point(const EvaluationRecord& record, ObjectivePair pair) {
  return {record.values.at(Objective::Tafid), record.values.at(second_objective(pair)), record.request.arch};
}

std::vector<ObjectivePoint> objective_points(const std::vector<EvaluationRecord>& history, ObjectivePair pair) {
  std::vector<ObjectivePoint> out;
  out.reserve(history.size());
  for (const auto& r : history) out.push_back(to_objective_point(r, pair));
  return out;
}

ObjectivePoint set_reference_point(const std::vector<ObjectivePoint>& observed, double margin) {
  if (observed.empty()) throw DataError("reference point needs at least one observation");
  auto axis = [&](auto get) {
    double lo = get(observed.front()), hi = lo;
    for (const auto& p : observed) {
      lo = std::min(lo, get(p));
      hi = std::max(hi, get(p));
    }
    const double range = hi - lo;
    return hi + (range > 0.0 ? margin * range : 1.0);
  };
  return {axis([](const ObjectivePoint& p) { return p.f1; }), axis([](const ObjectivePoint& p) { return p.f2; }), "ref"};
}

std::vector<ContinuousPoint> init_design(const RunConfig& config, const SearchSpace& space) {
  if (config.n_init < 1) throw DataError("n_init must be at least 1");
  const auto n = static_cast<std::size_t>(config.n_init);
  Rng rng(mix_seed(config.seed, kInitStream));
  std::vector<ContinuousPoint> points;

  if (!config.candidates.empty()) {
    if (config.candidates.size() < n) {
      throw DataError("candidate set has " + std::to_string(config.candidates.size()) + " entries, n_init is " +
                      std::to_string(n));
    }
    std::vector<DecisionVector> pool = config.candidates;
    for (std::size_t i = 0; i < n; ++i) {
      std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
      points.push_back(cell_center(pool[i], space));
    }
    return points;
  }

  if (cardinality(space) < n) {
    throw DataError("cannot draw " + std::to_string(n) + " distinct initial architectures from a space of " +
                    std::to_string(cardinality(space)));
  }
  constexpr std::array<std::uint64_t, kStageCount> kPrimes{2, 3, 5, 7, 11, 13};
  ContinuousPoint shift;
  for (auto& c : shift.coords) c = rng.uniform();
  std::uint64_t halton_index = 1;

  auto draw = [&] {
    ContinuousPoint x;
    if (config.low_discrepancy_init) {
      for (std::size_t d = 0; d < kStageCount; ++d) {
        const double v = radical_inverse(halton_index, kPrimes[d]) + shift.coords[d];
        x.coords[d] = v - std::floor(v);
      }
      ++halton_index;
    } else {
      for (auto& c : x.coords) c = rng.uniform();
    }
    return x;
  };

  std::set<DecisionVector> seen;
  for (std::size_t i = 0; i < n; ++i) {
    ContinuousPoint x = draw();
    int attempts = 0;
    while (!seen.insert(project(x, space)).second) {
      if (++attempts > 100) throw DataError("could not find distinct initial projections after 100 re-draws");
      x = draw();
    }
    points.push_back(x);
  }
  return points;
}

std::optional<Proposal> propose(const RunState& state, const SearchSpace& space) {
  if (!state.gp1 || !state.gp2 || !state.archive) throw DataError("propose needs fitted surrogates and an archive");
  const auto& cfg = state.config;

  std::vector<Proposal> pool;
  if (!cfg.candidates.empty()) {
    for (const auto& z : cfg.candidates) {
      if (!state.evaluated.contains(z)) pool.push_back({cell_center(z, space), z, 0.0});
    }
  } else {
    Rng rng(mix_seed(cfg.seed, kPoolStream + static_cast<std::uint64_t>(state.iteration)));
    std::unordered_set<DecisionVector, DecisionVectorHash> seen;
    for (int i = 0; i < cfg.candidate_pool_size; ++i) {
      ContinuousPoint x;
      for (auto& c : x.coords) c = rng.uniform();
      const DecisionVector z = project(x, space);
      if (state.evaluated.contains(z) || !seen.insert(z).second) continue;
      pool.push_back({x, z, 0.0});
    }
    // A pool that only hit evaluated cells is not proof of exhaustion.
    if (pool.empty() && state.evaluated.size() < cardinality(space) && cardinality(space) <= kFallbackEnumerationCap) {
      for (const auto& z : Enumeration(space, kFallbackEnumerationCap)) {
        if (!state.evaluated.contains(z)) pool.push_back({cell_center(z, space), z, 0.0});
      }
    }
  }
  if (pool.empty()) return std::nullopt;

  std::vector<DecisionVector> zs;
  zs.reserve(pool.size());
  for (const auto& p : pool) zs.push_back(p.z);
  const Eigen::MatrixXd centers = centers_matrix(zs, space);
  Eigen::VectorXd m1, v1, m2, v2;
  state.gp1->posterior_batch(centers, m1, v1);
  state.gp2->posterior_batch(centers, m2, v2);

  std::size_t best = 0;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    pool[i].ehvi = ehvi_2d(m1[k], v1[k], m2[k], v2[k], *state.archive);
    if (pool[i].ehvi > pool[best].ehvi || (pool[i].ehvi == pool[best].ehvi && pool[i].z < pool[best].z)) best = i;
  }
  return pool[best];
}

// ---------------------------------------------------------------- optimizer

BayesOptimizer::BayesOptimizer(const SearchSpace& space, RunConfig config, Oracle* oracle, EventSink* sink)
    : space_(space), oracle_(oracle), sink_(sink) {
  config.validate();
  for (const auto& z : config.candidates) {
    if (!is_valid(z, space_)) throw DataError("candidate decision vector out of range for space " + space_.name());
  }
  state_.config = std::move(config);
}

void BayesOptimizer::emit(std::string_view kind, const nlohmann::json& payload) {
  if (sink_) sink_->emit(kind, payload);
}

EvaluationRequest BayesOptimizer::make_request(const DecisionVector& z, std::string id) const {
  EvaluationRequest r;
  r.decision = z;
  r.arch = encode_arch(z, space_);
  r.objectives = {Objective::Tafid, second_objective(state_.config.objectives)};
  r.request_id = std::move(id);
  r.n_samples = state_.config.n_samples_hint;
  return r;
}

bool BayesOptimizer::finished() const {
  return !state_.stop_reason.empty() || (state_.initialized && state_.iteration >= state_.config.n_iter);
}

void BayesOptimizer::rebuild_trace() {
  state_.hv_trace.clear();
  std::vector<ObjectivePoint> prefix;
  for (const auto& r : state_.history) {
    prefix.push_back(to_objective_point(r, state_.config.objectives));
    state_.hv_trace.push_back(hypervolume_2d(ParetoArchive::from_points(prefix, *state_.ref)));
  }
}

void BayesOptimizer::record_success(EvaluationRecord record) {
  const auto pair = state_.config.objectives;
  state_.evaluated.insert(record.request.decision);
  state_.history.push_back(std::move(record));
  if (!state_.initialized) return;

  const auto points = objective_points(state_.history, pair);
  const auto& latest = points.back();
  if (!(latest.f1 < state_.ref->f1 && latest.f2 < state_.ref->f2)) {
    const ObjectivePoint old = *state_.ref;
    state_.ref = set_reference_point(points, state_.config.ref_margin);
    emit("refpoint_update", {{"reason", "exceeded"},
                             {"evaluations", state_.history.size()},
                             {"old", {old.f1, old.f2}},
                             {"ref", {state_.ref->f1, state_.ref->f2}}});
    state_.archive = ParetoArchive::from_points(points, *state_.ref);
    rebuild_trace();
    return;
  }
  state_.archive = ParetoArchive::from_points(points, *state_.ref);
  state_.hv_trace.push_back(hypervolume_2d(*state_.archive));
}

void BayesOptimizer::finish_init() {
  if (state_.history.size() < 2) {
    throw DataError("initialization produced " + std::to_string(state_.history.size()) +
                    " feasible evaluations; at least 2 are needed to fit the surrogates");
  }
  const auto points = objective_points(state_.history, state_.config.objectives);
  state_.ref = set_reference_point(points, state_.config.ref_margin);
  state_.archive = ParetoArchive::from_points(points, *state_.ref);
  state_.initialized = true;
  rebuild_trace();
  gps_stale_ = true;
  emit("refpoint_update", {{"reason", "init"},
                           {"evaluations", state_.history.size()},
                           {"ref", {state_.ref->f1, state_.ref->f2}}});
}

void BayesOptimizer::refit() {
  const auto& cfg = state_.config;
  std::vector<DecisionVector> zs;
  Eigen::VectorXd y1(static_cast<Eigen::Index>(state_.history.size()));
  Eigen::VectorXd y2(y1.size());
  for (std::size_t i = 0; i < state_.history.size(); ++i) {
    const auto p = to_objective_point(state_.history[i], cfg.objectives);
    zs.push_back(state_.history[i].request.decision);
    y1[static_cast<Eigen::Index>(i)] = p.f1;
    y2[static_cast<Eigen::Index>(i)] = p.f2;
  }
  const Eigen::MatrixXd xs = centers_matrix(zs, space_);

  FitConfig fc;
  fc.restarts = cfg.gp_restarts;
  fc.max_evals_per_restart = cfg.gp_max_evals;
  const auto n = static_cast<std::uint64_t>(state_.history.size());
  fc.seed = mix_seed(cfg.seed, kFitStream + 2 * n);
  fc.warm_start = state_.warm1;
  state_.gp1 = GPModel::fit(xs, y1, fc);
  fc.seed = mix_seed(cfg.seed, kFitStream + 2 * n + 1);
  fc.warm_start = state_.warm2;
  state_.gp2 = GPModel::fit(xs, y2, fc);
  state_.warm1 = state_.gp1->params();
  state_.warm2 = state_.gp2->params();
  gps_stale_ = false;
  emit("refit", {{"evaluations", n},
                 {"gp1", kernel_to_json(state_.gp1->params())},
                 {"gp2", kernel_to_json(state_.gp2->params())},
                 {"lml", {state_.gp1->log_marginal_likelihood(), state_.gp2->log_marginal_likelihood()}}});
}

void BayesOptimizer::set_warm_start(std::optional<KernelParams> gp1, std::optional<KernelParams> gp2) {
  state_.warm1 = gp1;
  state_.warm2 = gp2;
}

void BayesOptimizer::ensure_fitted() {
  if (gps_stale_ || !state_.gp1 || !state_.gp2) refit();
}

void BayesOptimizer::initialize() {
  if (state_.initialized) return;
  const auto points = init_design(state_.config, space_);
  for (auto i = static_cast<std::size_t>(state_.init_done); i < points.size(); ++i) {
    if (!oracle_) throw DataError("initialization needs an oracle");
    const DecisionVector z = project(points[i], space_);
    const auto request = make_request(z, "init-" + std::to_string(i));
    try {
      EvaluationRecord record = evaluate_record(*oracle_, request);
      emit("init_eval", {{"index", i}, {"x", points[i].coords}, {"record", record_to_json(record)}});
      absorb_init(&record, z);
    } catch (const OracleError& e) {
      if (e.kind() != OracleError::Kind::Miss) {
        throw OracleError(e.kind(), "initial evaluation " + std::to_string(i) + ": " + e.what());
      }
      emit("init_eval", {{"index", i}, {"x", points[i].coords}, {"decision", z.indices}, {"infeasible", e.what()}});
      absorb_init(nullptr, z);
    }
  }
  if (!state_.initialized) finish_init();
  ensure_fitted();
  emit("front_snapshot", {{"iteration", state_.iteration},
                          {"hypervolume", state_.hv_trace.back()},
                          {"front_size", state_.archive->size()}});
}

void BayesOptimizer::absorb_init(const EvaluationRecord* record, const DecisionVector& z) {
  if (record) {
    record_success(*record);
  } else {
    state_.infeasible.push_back(z);
    state_.evaluated.insert(z);
  }
  ++state_.init_done;
  if (state_.init_done >= state_.config.n_init && !state_.initialized) finish_init();
}

void BayesOptimizer::absorb_step(const EvaluationRecord* record, const DecisionVector& z) {
  if (!state_.initialized) throw DataError("BO step recorded before initialization completed");
  if (record) {
    record_success(*record);
  } else {
    state_.infeasible.push_back(z);
    state_.evaluated.insert(z);
  }
  ++state_.iteration;
  gps_stale_ = true;
}

bool BayesOptimizer::step() {
  if (!state_.initialized) initialize();
  if (finished()) return false;
  if (!oracle_) throw DataError("stepping needs an oracle");

  IterationTiming timing;
  timing.iteration = state_.iteration;
  auto t0 = Clock::now();
  ensure_fitted();
  const auto proposal = propose(state_, space_);
  timing.propose_s = seconds_since(t0);
  if (!proposal) {
    state_.stop_reason = "exhausted";
    return false;
  }

  t0 = Clock::now();
  const auto request = make_request(proposal->z, "iter-" + std::to_string(state_.iteration));
  std::optional<EvaluationRecord> record;
  try {
    record = evaluate_record(*oracle_, request);
  } catch (const OracleError& e) {
    if (e.kind() != OracleError::Kind::Miss) {
      throw OracleError(e.kind(), "iteration " + std::to_string(state_.iteration) + ": " + e.what());
    }
    emit("bo_eval", {{"iteration", state_.iteration},
                     {"x", proposal->x.coords},
                     {"ehvi", proposal->ehvi},
                     {"decision", proposal->z.indices},
                     {"infeasible", e.what()}});
  }
  timing.evaluate_s = seconds_since(t0);
  if (record) {
    emit("bo_eval", {{"iteration", state_.iteration},
                     {"x", proposal->x.coords},
                     {"ehvi", proposal->ehvi},
                     {"record", record_to_json(*record)}});
  }
  absorb_step(record ? &*record : nullptr, proposal->z);

  t0 = Clock::now();
  if (!finished()) refit();
  timing.fit_s = seconds_since(t0);
  state_.timings.push_back(timing);
  emit("front_snapshot", {{"iteration", state_.iteration},
                          {"hypervolume", state_.hv_trace.back()},
                          {"front_size", state_.archive->size()}});
  return true;
}

RunReport BayesOptimizer::run() {
  initialize();
  while (step()) {
  }
  if (state_.stop_reason.empty()) state_.stop_reason = "budget";
  emit("run_end", {{"reason", state_.stop_reason},
                   {"evaluations", state_.history.size()},
                   {"iterations", state_.iteration},
                   {"hypervolume", state_.hv_trace.empty() ? 0.0 : state_.hv_trace.back()}});
  return report();
}

RunReport BayesOptimizer::report() const {
  if (!state_.archive) throw DataError("run has no archive yet");
  return {*state_.archive, state_.hv_trace, state_.timings, state_.stop_reason};
}

// ---------------------------------------------------------------- JSON

nlohmann::json record_to_json(const EvaluationRecord& r) {
  nlohmann::json values = nlohmann::json::object();
  for (const auto& [o, v] : r.values) values[std::string(objective_name(o))] = v;
  std::vector<std::string> objectives;
  for (Objective o : r.request.objectives) objectives.emplace_back(objective_name(o));
  nlohmann::json j{{"request_id", r.request.request_id},
                   {"decision", r.request.decision.indices},
                   {"arch", r.request.arch},
                   {"objectives_requested", objectives},
                   {"values", values},
                   {"source", source_name(r.source)},
                   {"wall_time_s", r.wall_time_s},
                   {"timestamp", r.timestamp}};
  if (r.request.n_samples) j["n_samples"] = *r.request.n_samples;
  return j;
}

EvaluationRecord record_from_json(const nlohmann::json& j) {
  EvaluationRecord r;
  r.request.request_id = j.at("request_id").get<std::string>();
  const auto d = j.at("decision").get<std::vector<std::uint32_t>>();
  if (d.size() != kStageCount) throw DataError("recorded decision must have 6 entries");
  std::copy(d.begin(), d.end(), r.request.decision.indices.begin());
  r.request.arch = j.at("arch").get<std::string>();
  for (const auto& o : j.at("objectives_requested")) r.request.objectives.push_back(parse_objective(o.get<std::string>()));
  if (j.contains("n_samples")) r.request.n_samples = j.at("n_samples").get<std::uint64_t>();
  for (const auto& [k, v] : j.at("values").items()) r.values[parse_objective(k)] = v.get<double>();
  r.source = parse_source(j.at("source").get<std::string>());
  r.wall_time_s = j.value("wall_time_s", 0.0);
  r.timestamp = j.value("timestamp", "");
  return r;
}

nlohmann::json config_to_json(const RunConfig& c, const SearchSpace& space) {
  std::vector<std::string> candidates;
  for (const auto& z : c.candidates) candidates.push_back(encode_arch(z, space));
  nlohmann::json j{{"space_id", c.space_id},
                   {"objectives", objective_pair_name(c.objectives)},
                   {"n_init", c.n_init},
                   {"n_iter", c.n_iter},
                   {"seed", c.seed},
                   {"candidate_pool_size", c.candidate_pool_size},
                   {"gp_restarts", c.gp_restarts},
                   {"gp_max_evals", c.gp_max_evals},
                   {"ref_margin", c.ref_margin},
                   {"ref_policy", "max + margin * range (+1 if degenerate), frozen after init, re-based on excess"},
                   {"low_discrepancy_init", c.low_discrepancy_init},
                   {"candidates", candidates}};
  if (c.n_samples_hint) j["n_samples_hint"] = *c.n_samples_hint;
  return j;
}

RunConfig config_from_json(const nlohmann::json& j, const SearchSpace& space) {
  RunConfig c;
  c.space_id = j.at("space_id").get<std::string>();
  c.objectives = parse_objective_pair(j.at("objectives").get<std::string>());
  c.n_init = j.at("n_init").get<int>();
  c.n_iter = j.at("n_iter").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.candidate_pool_size = j.at("candidate_pool_size").get<int>();
  c.gp_restarts = j.at("gp_restarts").get<int>();
  c.gp_max_evals = j.at("gp_max_evals").get<int>();
  c.ref_margin = j.at("ref_margin").get<double>();
  c.low_discrepancy_init = j.value("low_discrepancy_init", false);
  for (const auto& a : j.value("candidates", std::vector<std::string>{})) c.candidates.push_back(decode_arch(a, space));
  if (j.contains("n_samples_hint")) c.n_samples_hint = j.at("n_samples_hint").get<std::uint64_t>();
  return c;
}

nlohmann::json kernel_to_json(const KernelParams& p) {
  return {{"signal_var", p.signal_var}, {"lengthscales", p.lengthscales}, {"noise_var", p.noise_var}};
}

KernelParams kernel_from_json(const nlohmann::json& j) {
  KernelParams p;
  p.signal_var = j.at("signal_var").get<double>();
  p.lengthscales = j.at("lengthscales").get<std::array<double, kInputDim>>();
  p.noise_var = j.at("noise_var").get<double>();
  return p;
}

}  // namespace nasbo
