// Command-line front end: space inspection, cost composition, Fréchet
// distance, Pareto extraction and the search/report run lifecycle.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "nasbo/bo.hpp"
#include "nasbo/cost_model.hpp"
#include "nasbo/csv.hpp"
#include "nasbo/errors.hpp"
#include "nasbo/event_log.hpp"
#include "nasbo/frechet.hpp"
#include "nasbo/moo.hpp"
#include "nasbo/report.hpp"
#include "nasbo/run_config.hpp"
#include "nasbo/search_space.hpp"

namespace fs = std::filesystem;
using namespace nasbo;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitOracle = 3;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string out;
  bool quiet = false;
};

void note(const Globals& g, const std::string& line) {
  if (!g.quiet) std::cerr << line << "\n";
}

// Writes to --out when given, stdout otherwise.
void emit_output(const Globals& g, const std::string& text) {
  if (g.out.empty()) {
    std::cout << text;
  } else {
    write_text_file(g.out, text);
  }
}

// ---------------------------------------------------------------- space

std::string join_counts(const SearchSpace& space) {
  std::string out;
  for (StageId s : kStages) out += (out.empty() ? "" : ",") + std::to_string(space.count(s));
  return out;
}

int cmd_space(const std::string& action, const std::string& file) {
  const SearchSpace space = load_space(file);
  if (action == "validate") {
    std::cout << "ok: " << space.name() << ", stages " << join_counts(space) << ", " << cardinality(space)
              << " architectures\n";
  } else if (action == "show") {
    std::cout << "space " << space.name() << "\n";
    for (StageId s : kStages) {
      std::cout << stage_name(s) << "  " << space.count(s) << "  ";
      bool first = true;
      for (const auto& v : space.variants(s)) {
        std::cout << (first ? "" : " ") << v.label() << (v.is_teacher() ? "*" : "");
        first = false;
      }
      std::cout << "\n";
    }
    std::cout << "cardinality " << cardinality(space) << "  (* teacher block)\n";
  } else {
    std::cout << cardinality(space) << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------- cost

struct CostArgs {
  std::string profile;
  std::string space;
  std::vector<std::string> archs;
  std::string arch_file;
  bool params = false;
  std::string measured;
  std::string against;
  std::string prefix;
};

std::vector<std::string> collect_archs(const CostArgs& a) {
  std::vector<std::string> archs = a.archs;
  if (!a.arch_file.empty()) {
    const CsvTable t = read_csv_file(a.arch_file);
    const std::size_t col = t.require_column("arch");
    for (const auto& row : t.rows) archs.push_back(row[col]);
  }
  if (archs.empty()) throw UsageError("no architectures given (pass them as arguments or with --file)");
  return archs;
}

int cmd_cost_estimate(const CostArgs& a) {
  const SearchSpace space = load_space(a.space);
  const CostTable table = load_profile(a.profile);
  std::cout << "arch," << (a.params ? "params_m" : "latency_ms") << "\n";
  for (const auto& arch : collect_archs(a)) {
    const DecisionVector z = decode_arch(arch, space);
    const double v = a.params ? estimate_params(z, space, table) : estimate_latency(z, space, table);
    std::cout << arch << "," << format_double(std::round(v * 1e9) / 1e9) << "\n";
  }
  return kExitOk;
}

void print_rank_table(const std::map<std::string, double>& left, const std::map<std::string, double>& right,
                      const std::string& left_name, const std::string& right_name) {
  std::cout << "model," << left_name << "," << right_name << "\n";
  for (const auto& [model, v] : left) {
    const auto it = right.find(model);
    std::cout << model << "," << format_double(std::round(v * 1e9) / 1e9) << ","
              << (it == right.end() ? std::string("-") : format_double(it->second)) << "\n";
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", rank_consistency(left, right));
  std::cout << "spearman_rho=" << buf << "\n";
}

int cmd_cost_rank(const CostArgs& a) {
  if (a.measured.empty()) throw UsageError("cost rank needs --measured");
  const MeasuredTable measured = load_measured(a.measured);
  const auto measured_lat = measured.latencies(a.prefix);
  if (!a.against.empty()) {
    const MeasuredTable other = load_measured(a.against);
    print_rank_table(measured_lat, other.latencies(a.prefix), measured.device, other.device);
    return kExitOk;
  }
  if (a.profile.empty() || a.space.empty()) throw UsageError("cost rank needs --profile and --space (or --against)");
  const SearchSpace space = load_space(a.space);
  const CostTable table = load_profile(a.profile);
  std::map<std::string, double> estimates;
  for (const auto& row : measured.rows) {
    if (!measured_lat.contains(row.model)) continue;
    estimates[row.model] = estimate_latency(decode_arch(row.arch, space), space, table);
  }
  print_rank_table(estimates, measured_lat, "estimate_ms", "measured_ms");
  return kExitOk;
}

// ---------------------------------------------------------------- fid

int cmd_fid(const Globals& g, const std::string& a, const std::string& b) {
  const StatsFile student = load_stats_file(a);
  const StatsFile teacher = load_stats_file(b);
  const TafidResult r = tafid(student.stats, teacher.stats, student.provenance, teacher.provenance);
  if (!r.aligned) {
    note(g, "warning: prompt/seed sets differ between the two files; the distance is not teacher-aligned");
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", r.value);
  std::cout << buf << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- pareto

struct ParetoArgs {
  std::vector<std::string> files;
  std::string f1 = "f1";
  std::string f2 = "f2";
};

int cmd_pareto(const Globals& g, const ParetoArgs& a, bool merge) {
  if (!merge && a.files.size() != 1) throw UsageError("pareto extract takes exactly one file (use merge for several)");
  struct Row {
    std::string model;
    std::string arch;
    double f1;
    double f2;
  };
  std::vector<Row> rows;
  bool with_model = false;
  for (const auto& file : a.files) {
    const CsvTable t = read_csv_file(file);
    const std::size_t arch = t.require_column("arch");
    const std::size_t c1 = t.require_column(a.f1);
    const std::size_t c2 = t.require_column(a.f2);
    const auto model = t.column("model");
    with_model = with_model || model.has_value();
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      const auto& r = t.rows[i];
      rows.push_back({model ? r[*model] : std::string(), r[arch], parse_double(r[c1], t.source, t.row_lines[i]),
                      parse_double(r[c2], t.source, t.row_lines[i])});
    }
  }
  if (rows.empty()) throw DataError("no objective rows to extract a front from");

  std::vector<ObjectivePoint> points;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    char suffix[32];
    std::snprintf(suffix, sizeof suffix, "\x1f%08zu", i);
    const std::string& key = rows[i].model.empty() ? rows[i].arch : rows[i].model;
    points.push_back({rows[i].f1, rows[i].f2, key + suffix});
  }
  std::string out = with_model ? "model,arch,f1,f2\n" : "arch,f1,f2\n";
  for (const auto& p : pareto_front(points)) {
    const Row& r = rows[std::stoul(p.id.substr(p.id.rfind('\x1f') + 1))];
    if (with_model) out += r.model + ",";
    out += r.arch + "," + format_double(r.f1) + "," + format_double(r.f2) + "\n";
  }
  emit_output(g, out);
  return kExitOk;
}

// ---------------------------------------------------------------- search

fs::path require_out(const Globals& g, const std::string& what) {
  if (g.out.empty()) throw UsageError(what + " needs --out DIR");
  return g.out;
}

struct LoadedRun {
  RunHeader header;
  SearchSpace space;
  RunConfig config;
  LogContents log;
};

LoadedRun load_run(const fs::path& dir) {
  const fs::path log_path = dir / "events.ndjson";
  if (!fs::exists(log_path)) throw DataError("no event log at " + log_path.string());
  LogContents log = read_event_log(log_path);
  if (log.events.empty() || log.events.front().kind != "run_header") {
    throw DataError(log_path.string() + " does not start with a run_header event");
  }
  RunHeader header = header_from_json(log.events.front().payload);
  SearchSpace space = parse_space(header.space_document, log_path.string() + " (embedded space)");
  RunConfig config = config_from_json(header.config, space);
  return {std::move(header), std::move(space), std::move(config), std::move(log)};
}

void print_run_result(const Globals& g, const RunState& s) {
  if (g.quiet) return;
  std::cout << "evaluations " << s.history.size() << " (+" << s.infeasible.size() << " infeasible), front "
            << (s.archive ? s.archive->size() : 0) << ", hypervolume "
            << (s.hv_trace.empty() ? std::string("-") : format_double(s.hv_trace.back())) << "\n";
}

void drive(BayesOptimizer& bo, std::optional<int> stop_after) {
  if (!stop_after) {
    bo.run();
    return;
  }
  bo.initialize();
  while (bo.state().iteration < *stop_after && bo.step()) {
  }
}

int cmd_search_run(const Globals& g, const std::string& config_path, std::optional<int> stop_after) {
  const fs::path dir = require_out(g, "search run");
  RunSpec spec = load_run_config(config_path);
  if (g.seed) spec.config.seed = *g.seed;
  // Building the oracle first surfaces a missing executable before any work.
  const auto oracle = make_oracle(spec.oracle, spec.space);

  fs::create_directories(dir);
  const RunLock lock(dir);
  EventLogWriter writer = EventLogWriter::create(dir / "events.ndjson");
  RunHeader header;
  header.space_document = serialize_space(spec.space);
  header.config = config_to_json(spec.config, spec.space);
  header.oracle = spec.oracle;
  writer.emit("run_header", header_to_json(header));

  BayesOptimizer bo(spec.space, spec.config, oracle.get(), &writer);
  drive(bo, stop_after);
  write_run_outputs(dir, bo.state());
  print_run_result(g, bo.state());
  return kExitOk;
}

int cmd_search_resume(const Globals& g, std::optional<int> stop_after) {
  const fs::path dir = require_out(g, "search resume");
  const RunLock lock(dir);
  LoadedRun run = load_run(dir);
  if (run.log.truncated_tail) note(g, "dropping a torn final event from the log");
  const auto oracle = make_oracle(run.header.oracle, run.space);

  BayesOptimizer bo(run.space, run.config, oracle.get(), nullptr);
  const std::size_t absorbed = replay_events(run.log.events, bo);
  const bool complete = run.log.events.back().kind == "run_end";
  EventLogWriter writer = EventLogWriter::append(dir / "events.ndjson", run.log);
  if (complete) {
    note(g, "run already complete; outputs rewritten");
  } else {
    note(g, "resuming after " + std::to_string(absorbed) + " recorded evaluations");
    bo.set_sink(&writer);
    drive(bo, stop_after);
  }
  write_run_outputs(dir, bo.state());
  print_run_result(g, bo.state());
  return kExitOk;
}

BayesOptimizer replay_run(const LoadedRun& run) {
  BayesOptimizer bo(run.space, run.config, nullptr, nullptr);
  replay_events(run.log.events, bo);
  if (!bo.state().archive) throw DataError("the log holds too few evaluations to form a front");
  return bo;
}

int cmd_search_replay(const Globals& g, const std::string& output) {
  const fs::path dir = require_out(g, "search replay");
  const LoadedRun run = load_run(dir);
  const BayesOptimizer bo = replay_run(run);
  const fs::path target = output.empty() ? dir / "replay_front.csv" : fs::path(output);
  write_text_file(target, front_csv(bo.state()));
  note(g, "replayed " + std::to_string(bo.state().history.size()) + " evaluations into " + target.string());
  return kExitOk;
}

int cmd_report(const Globals& g, const std::string& dir_arg, bool no_timestamp) {
  const fs::path dir = dir_arg.empty() ? require_out(g, "report") : fs::path(dir_arg);
  const LoadedRun run = load_run(dir);
  const BayesOptimizer bo = replay_run(run);
  write_report(dir, bo.state(), run.space, !no_timestamp);
  note(g, "wrote front.csv, hv_trace.csv, front.svg, hypervolume.svg and summary.txt to " + dir.string());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-objective Bayesian optimization for hardware-aware U-Net block selection"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Override the run seed");
  app.add_option("--out", g.out, "Run directory (search, report) or output file (pareto)");
  app.add_flag("--quiet,-q", g.quiet, "Suppress progress messages");

  std::function<int()> action;

  auto* space = app.add_subcommand("space", "Inspect a search-space file");
  std::string space_action, space_file;
  space->add_option("action", space_action, "validate | show | enumerate-count")
      ->required()
      ->check(CLI::IsMember({"validate", "show", "enumerate-count"}));
  space->add_option("file", space_file, "Space YAML file")->required();
  space->callback([&] { action = [&] { return cmd_space(space_action, space_file); }; });

  auto* cost = app.add_subcommand("cost", "Compose latency estimates from a block profile");
  cost->require_subcommand(1);
  CostArgs cost_args;
  auto* estimate = cost->add_subcommand("estimate", "Block-sum estimate per architecture");
  estimate->add_option("--profile", cost_args.profile, "Block profile CSV")->required();
  estimate->add_option("--space", cost_args.space, "Space YAML file")->required();
  estimate->add_option("--file", cost_args.arch_file, "CSV with an arch column");
  estimate->add_flag("--params", cost_args.params, "Sum params_m instead of latency_ms");
  estimate->add_option("archs", cost_args.archs, "Architecture strings such as R|RA|RA|RARA|RR|RR");
  estimate->callback([&] { action = [&] { return cmd_cost_estimate(cost_args); }; });
  auto* rank = cost->add_subcommand("rank", "Spearman rank agreement of estimates with measurements");
  rank->add_option("--profile", cost_args.profile, "Block profile CSV");
  rank->add_option("--space", cost_args.space, "Space YAML file");
  rank->add_option("--measured", cost_args.measured, "Measured model latencies (model,arch,latency_ms)")->required();
  rank->add_option("--against", cost_args.against, "Second measured table to compare with instead of a profile");
  rank->add_option("--prefix", cost_args.prefix, "Only models whose name starts with this");
  rank->callback([&] { action = [&] { return cmd_cost_rank(cost_args); }; });

  auto* fid = app.add_subcommand("fid", "Fréchet distance between two feature-statistics files");
  std::string fid_a, fid_b;
  fid->add_option("student", fid_a, "Student stats JSON")->required();
  fid->add_option("teacher", fid_b, "Teacher stats JSON")->required();
  fid->callback([&] { action = [&] { return cmd_fid(g, fid_a, fid_b); }; });

  auto* pareto = app.add_subcommand("pareto", "Non-dominated subset of objective CSV files");
  pareto->require_subcommand(1);
  ParetoArgs pareto_args;
  for (const char* name : {"extract", "merge"}) {
    const bool merge = std::string(name) == "merge";
    auto* sub = pareto->add_subcommand(name, merge ? "Front of the union of several files" : "Front of one file");
    sub->add_option("files", pareto_args.files, "CSV files with arch and objective columns")->required();
    sub->add_option("--f1", pareto_args.f1, "Column of the first objective")->capture_default_str();
    sub->add_option("--f2", pareto_args.f2, "Column of the second objective")->capture_default_str();
    sub->callback([&, merge] { action = [&, merge] { return cmd_pareto(g, pareto_args, merge); }; });
  }

  auto* search = app.add_subcommand("search", "Run, resume or replay a search (run directory via --out)");
  search->require_subcommand(1);
  std::string config_path, replay_output;
  std::optional<int> stop_after;
  auto* run = search->add_subcommand("run", "Start a new search");
  run->add_option("config", config_path, "Run config YAML")->required();
  run->add_option("--stop-after", stop_after, "Stop after this many BO iterations without finishing the run");
  run->callback([&] { action = [&] { return cmd_search_run(g, config_path, stop_after); }; });
  auto* resume = search->add_subcommand("resume", "Continue an interrupted search from its event log");
  resume->add_option("--stop-after", stop_after, "Stop after this many BO iterations without finishing the run");
  resume->callback([&] { action = [&] { return cmd_search_resume(g, stop_after); }; });
  auto* replay = search->add_subcommand("replay", "Rebuild the final front from the event log alone");
  replay->add_option("-o,--front", replay_output, "Front CSV path (default <out>/replay_front.csv)");
  replay->callback([&] { action = [&] { return cmd_search_replay(g, replay_output); }; });

  auto* report = app.add_subcommand("report", "Write front/hypervolume plots and a summary for a run");
  std::string report_dir;
  bool no_timestamp = false;
  report->add_option("dir", report_dir, "Run directory (defaults to --out)");
  report->add_flag("--no-timestamp", no_timestamp, "Omit the generation time from plots and summary");
  report->callback([&] { action = [&] { return cmd_report(g, report_dir, no_timestamp); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  if (*seed_opt) g.seed = seed;

  try {
    return action();
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const OracleError& e) {
    std::cerr << "oracle error: " << e.what() << "\n";
    return kExitOracle;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
}
