#pragma once

#include <json.hpp>

#include <filesystem>
#include <memory>
#include <string>

#include "nasbo/bo.hpp"
#include "nasbo/oracle.hpp"
#include "nasbo/search_space.hpp"

namespace nasbo {

/// A search run as described by a config file: the space, the loop settings
/// and a self-contained oracle description (paths made absolute).
struct RunSpec {
  SearchSpace space;
  RunConfig config;
  nlohmann::json oracle;
};

/// Reads a YAML run config. Relative paths resolve against the file's
/// directory. Throws ParseError with line numbers on unknown keys or bad
/// values, DataError on inconsistent settings.
RunSpec parse_run_config(std::string_view document, const std::filesystem::path& base_dir,
                         const std::string& source = "<run config>");
RunSpec load_run_config(const std::filesystem::path& path);

/// Builds the oracle an oracle description names. Subprocess oracles fail
/// here (OracleError Spawn) when the executable is missing, before any
/// evaluation runs.
std::unique_ptr<Oracle> make_oracle(const nlohmann::json& spec, const SearchSpace& space);

}  // namespace nasbo
