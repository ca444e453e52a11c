#include "nasbo/run_config.hpp"

#include <yaml-cpp/yaml.h>

#include <set>

#include "nasbo/cost_model.hpp"
#include "nasbo/csv.hpp"
#include "nasbo/errors.hpp"

namespace nasbo {

namespace {

std::size_t line_of(const YAML::Node& node) {
  const auto mark = node.Mark();
  return mark.line >= 0 ? static_cast<std::size_t>(mark.line + 1) : 0;
}

class Reader {
 public:
  Reader(std::string source, std::filesystem::path base) : source_(std::move(source)), base_(std::move(base)) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& what) const {
    throw ParseError(source_, line_of(node), what);
  }

  void check_keys(const YAML::Node& map, const std::set<std::string>& allowed, const std::string& where) const {
    for (const auto& kv : map) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.contains(key)) fail(kv.first, "unknown key '" + key + "' in " + where);
    }
  }

  template <typename T>
  T get(const YAML::Node& map, const std::string& key, T fallback) const {
    const YAML::Node n = map[key];
    if (!n) return fallback;
    try {
      return n.as<T>();
    } catch (const YAML::Exception&) {
      fail(n, "bad value for '" + key + "'");
    }
  }

  std::string require_string(const YAML::Node& map, const std::string& key, const std::string& where) const {
    const YAML::Node n = map[key];
    if (!n || !n.IsScalar()) fail(map, where + " needs '" + key + "'");
    return n.as<std::string>();
  }

  std::filesystem::path path(const std::string& p) const {
    const std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : std::filesystem::absolute(base_ / fp).lexically_normal();
  }

 private:
  std::string source_;
  std::filesystem::path base_;
};

nlohmann::json read_oracle(const Reader& r, const YAML::Node& node) {
  if (!node || !node.IsMap()) r.fail(node, "missing 'oracle' mapping");
  const std::string kind = r.require_string(node, "kind", "oracle");
  nlohmann::json spec{{"kind", kind}};
  if (kind == "synthetic") {
    r.check_keys(node, {"kind", "benchmark", "seed", "profile"}, "oracle");
    const std::string benchmark = r.require_string(node, "benchmark", "synthetic oracle");
    try {
      parse_synthetic_kind(benchmark);
    } catch (const DataError& e) {
      r.fail(node["benchmark"], e.what());
    }
    spec["benchmark"] = benchmark;
    spec["seed"] = r.get<std::uint64_t>(node, "seed", 0);
    if (node["profile"]) spec["profile"] = r.path(node["profile"].as<std::string>()).string();
  } else if (kind == "lookup") {
    r.check_keys(node, {"kind", "table"}, "oracle");
    spec["table"] = r.path(r.require_string(node, "table", "lookup oracle")).string();
  } else if (kind == "subprocess") {
    r.check_keys(node, {"kind", "command", "timeout_s"}, "oracle");
    const YAML::Node cmd = node["command"];
    std::vector<std::string> argv;
    if (cmd && cmd.IsScalar()) {
      argv.push_back(cmd.as<std::string>());
    } else if (cmd && cmd.IsSequence()) {
      for (const auto& a : cmd) argv.push_back(a.as<std::string>());
    }
    if (argv.empty() || argv[0].empty()) r.fail(node, "subprocess oracle needs a non-empty 'command'");
    // A relative command with a slash is a path next to the config file;
    // a bare name is looked up on PATH when the oracle is built.
    if (argv[0].find('/') != std::string::npos) argv[0] = r.path(argv[0]).string();
    spec["command"] = argv;
    const double timeout = r.get<double>(node, "timeout_s", 3600.0);
    if (!(timeout > 0.0)) r.fail(node["timeout_s"], "timeout_s must be positive");
    spec["timeout_s"] = timeout;
  } else {
    r.fail(node["kind"], "unknown oracle kind '" + kind + "' (use synthetic, lookup or subprocess)");
  }
  return spec;
}

}  // namespace

RunSpec parse_run_config(std::string_view document, const std::filesystem::path& base_dir, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(document));
  } catch (const YAML::ParserException& e) {
    throw ParseError(source, static_cast<std::size_t>(e.mark.line + 1), e.msg);
  }
  const Reader r(source, base_dir);
  if (!root.IsMap()) r.fail(root, "run config must be a mapping");
  r.check_keys(root,
               {"space", "objectives", "n_init", "n_iter", "seed", "candidate_pool_size", "gp_restarts",
                "gp_max_evals", "ref_margin", "low_discrepancy_init", "oracle", "candidates", "n_samples"},
               "run config");

  const auto space_path = r.path(r.require_string(root, "space", "run config"));
  SearchSpace space = load_space(space_path);

  RunConfig c;
  c.space_id = space.name();
  if (root["objectives"]) {
    try {
      c.objectives = parse_objective_pair(root["objectives"].as<std::string>());
    } catch (const DataError& e) {
      r.fail(root["objectives"], e.what());
    }
  }
  c.n_init = r.get<int>(root, "n_init", c.n_init);
  c.n_iter = r.get<int>(root, "n_iter", c.n_iter);
  c.seed = r.get<std::uint64_t>(root, "seed", c.seed);
  c.candidate_pool_size = r.get<int>(root, "candidate_pool_size", c.candidate_pool_size);
  c.gp_restarts = r.get<int>(root, "gp_restarts", c.gp_restarts);
  c.gp_max_evals = r.get<int>(root, "gp_max_evals", c.gp_max_evals);
  c.ref_margin = r.get<double>(root, "ref_margin", c.ref_margin);
  c.low_discrepancy_init = r.get<bool>(root, "low_discrepancy_init", false);
  if (root["n_samples"]) c.n_samples_hint = r.get<std::uint64_t>(root, "n_samples", 0);

  if (const YAML::Node cands = root["candidates"]) {
    std::vector<std::string> archs;
    if (cands.IsSequence()) {
      for (const auto& a : cands) archs.push_back(a.as<std::string>());
    } else if (cands.IsScalar()) {
      // A CSV file with an `arch` column.
      const CsvTable t = read_csv_file(r.path(cands.as<std::string>()).string());
      const std::size_t col = t.require_column("arch");
      for (const auto& row : t.rows) archs.push_back(row[col]);
    } else {
      r.fail(cands, "'candidates' must be a list of architecture strings or a CSV path");
    }
    std::set<DecisionVector> seen;
    for (const auto& a : archs) {
      DecisionVector z;
      try {
        z = decode_arch(a, space);
      } catch (const DataError& e) {
        r.fail(cands, e.what());
      }
      if (seen.insert(z).second) c.candidates.push_back(z);
    }
  }
  try {
    c.validate();
  } catch (const DataError& e) {
    r.fail(root, e.what());
  }
  return {std::move(space), std::move(c), read_oracle(r, root["oracle"])};
}

RunSpec load_run_config(const std::filesystem::path& path) {
  return parse_run_config(read_text_file(path.string()), path.parent_path(), path.string());
}

std::unique_ptr<Oracle> make_oracle(const nlohmann::json& spec, const SearchSpace& space) {
  const std::string kind = spec.at("kind").get<std::string>();
  if (kind == "synthetic") {
    const SyntheticKind k = parse_synthetic_kind(spec.at("benchmark").get<std::string>());
    const auto seed = spec.value("seed", std::uint64_t{0});
    if (spec.contains("profile")) {
      const CostTable profile = load_profile(spec.at("profile").get<std::string>());
      return std::make_unique<SyntheticOracle>(SyntheticOracle::make(k, space, seed, &profile));
    }
    return std::make_unique<SyntheticOracle>(SyntheticOracle::make(k, space, seed));
  }
  if (kind == "lookup") {
    return std::make_unique<LookupOracle>(LookupOracle::load(spec.at("table").get<std::string>()));
  }
  if (kind == "subprocess") {
    return std::make_unique<SubprocessOracle>(spec.at("command").get<std::vector<std::string>>(),
                                              spec.value("timeout_s", 3600.0));
  }
  throw DataError("unknown oracle kind '" + kind + "'");
}

}  // namespace nasbo
