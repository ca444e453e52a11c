#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nasbo/bo.hpp"
#include "nasbo/moo.hpp"

namespace nasbo {

/// `arch,f1,f2,source` rows of the run's Pareto front, f1 ascending, preceded
/// by a `# objectives=` line naming f1 and f2.
std::string front_csv(const RunState& state);

/// `evaluation,hypervolume` rows, one per successful evaluation.
std::string hv_trace_csv(const std::vector<double>& trace);

struct ScatterPlot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<ObjectivePoint> points;
  /// Subset of `points` drawn highlighted and joined by a staircase.
  std::vector<ObjectivePoint> front;
};

/// Self-contained SVG documents. `timestamp`, when given, is embedded in a
/// metadata element and nowhere else.
std::string scatter_svg(const ScatterPlot& plot, const std::optional<std::string>& timestamp);
std::string hypervolume_svg(const std::vector<double>& trace, const std::optional<std::string>& timestamp);

std::string summary_text(const RunState& state, const SearchSpace& space, const std::optional<std::string>& timestamp);

/// front.csv and hv_trace.csv.
void write_run_outputs(const std::filesystem::path& dir, const RunState& state);
/// front.csv, hv_trace.csv, front.svg, hypervolume.svg and summary.txt.
void write_report(const std::filesystem::path& dir, const RunState& state, const SearchSpace& space,
                  bool with_timestamp = true);

void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace nasbo
