#include "nasbo/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "nasbo/csv.hpp"
#include "nasbo/errors.hpp"
#include "nasbo/event_log.hpp"

namespace nasbo {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 440.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 55.0;

std::string fmt(double v, const char* spec = "%.4g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string escape_xml(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Axis {
  double lo;
  double hi;

  static Axis of(double lo, double hi) {
    if (!(hi > lo)) {
      lo -= 0.5;
      hi += 0.5;
    }
    const double pad = 0.05 * (hi - lo);
    return {lo - pad, hi + pad};
  }
  double frac(double v) const { return (v - lo) / (hi - lo); }
};

class Canvas {
 public:
  Canvas(Axis x, Axis y) : x_(x), y_(y) {}

  double px(double v) const { return kLeft + x_.frac(v) * (kWidth - kLeft - kRight); }
  double py(double v) const { return kHeight - kBottom - y_.frac(v) * (kHeight - kTop - kBottom); }

  std::string frame(const std::string& title, const std::string& xl, const std::string& yl,
                    const std::optional<std::string>& timestamp) const {
    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    if (timestamp) o << "<metadata>generated " << escape_xml(*timestamp) << "</metadata>\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape_xml(title)
      << "</text>\n";
    const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
    o << "<rect x=\"" << x0 << "\" y=\"" << y1 << "\" width=\"" << x1 - x0 << "\" height=\"" << y0 - y1
      << "\" fill=\"none\" stroke=\"#333\"/>\n";
    for (int i = 0; i <= 4; ++i) {
      const double vx = x_.lo + (x_.hi - x_.lo) * i / 4.0;
      const double vy = y_.lo + (y_.hi - y_.lo) * i / 4.0;
      o << "<text x=\"" << fmt(px(vx), "%.2f") << "\" y=\"" << y0 + 16 << "\" text-anchor=\"middle\">" << fmt(vx)
        << "</text>\n";
      o << "<text x=\"" << x0 - 6 << "\" y=\"" << fmt(py(vy) + 4, "%.2f") << "\" text-anchor=\"end\">" << fmt(vy)
        << "</text>\n";
    }
    o << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\">" << escape_xml(xl)
      << "</text>\n";
    o << "<text transform=\"translate(16," << (y0 + y1) / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape_xml(yl) << "</text>\n";
    return o.str();
  }

 private:
  Axis x_;
  Axis y_;
};

std::string source_of(const RunState& state, const std::string& arch) {
  for (const auto& r : state.history) {
    if (r.request.arch == arch) return std::string(source_name(r.source));
  }
  return "unknown";
}

std::pair<std::string, std::string> objective_labels(ObjectivePair pair) {
  return {"tafid", std::string(objective_name(second_objective(pair)))};
}

}  // namespace

std::string front_csv(const RunState& state) {
  if (!state.archive) throw DataError("run has no evaluated points yet");
  const auto [l1, l2] = objective_labels(state.config.objectives);
  std::string out = "# objectives=" + l1 + "," + l2 + "\narch,f1,f2,source\n";
  for (const auto& m : state.archive->members()) {
    out += m.id + "," + format_double(m.f1) + "," + format_double(m.f2) + "," + source_of(state, m.id) + "\n";
  }
  return out;
}

std::string hv_trace_csv(const std::vector<double>& trace) {
  std::string out = "evaluation,hypervolume\n";
  for (std::size_t i = 0; i < trace.size(); ++i) out += std::to_string(i + 1) + "," + format_double(trace[i]) + "\n";
  return out;
}

std::string scatter_svg(const ScatterPlot& plot, const std::optional<std::string>& timestamp) {
  if (plot.points.empty()) throw DataError("nothing to plot");
  double xlo = plot.points[0].f1, xhi = xlo, ylo = plot.points[0].f2, yhi = ylo;
  for (const auto& p : plot.points) {
    xlo = std::min(xlo, p.f1);
    xhi = std::max(xhi, p.f1);
    ylo = std::min(ylo, p.f2);
    yhi = std::max(yhi, p.f2);
  }
  const Canvas c(Axis::of(xlo, xhi), Axis::of(ylo, yhi));
  std::ostringstream o;
  o << c.frame(plot.title, plot.x_label, plot.y_label, timestamp);

  std::vector<ObjectivePoint> front = plot.front;
  std::sort(front.begin(), front.end(), [](const auto& a, const auto& b) { return a.f1 < b.f1; });
  if (front.size() > 1) {
    o << "<polyline fill=\"none\" stroke=\"#2a9d3f\" stroke-width=\"1.2\" points=\"";
    for (std::size_t i = 0; i < front.size(); ++i) {
      if (i > 0) o << fmt(c.px(front[i].f1), "%.2f") << ',' << fmt(c.py(front[i - 1].f2), "%.2f") << ' ';
      o << fmt(c.px(front[i].f1), "%.2f") << ',' << fmt(c.py(front[i].f2), "%.2f") << ' ';
    }
    o << "\"/>\n";
  }
  std::map<std::string, bool> on_front;
  for (const auto& f : front) on_front[f.id] = true;
  o << "<g class=\"points\">\n";
  for (const auto& p : plot.points) {
    if (on_front.contains(p.id)) continue;
    o << "<circle class=\"dominated\" cx=\"" << fmt(c.px(p.f1), "%.2f") << "\" cy=\"" << fmt(c.py(p.f2), "%.2f")
      << "\" r=\"3\" fill=\"#9a9a9a\"><title>" << escape_xml(p.id) << "</title></circle>\n";
  }
  for (const auto& p : front) {
    o << "<circle class=\"pareto\" cx=\"" << fmt(c.px(p.f1), "%.2f") << "\" cy=\"" << fmt(c.py(p.f2), "%.2f")
      << "\" r=\"4.5\" fill=\"#2a9d3f\" stroke=\"#145c24\"><title>" << escape_xml(p.id) << "</title></circle>\n";
  }
  o << "</g>\n</svg>\n";
  return o.str();
}

std::string hypervolume_svg(const std::vector<double>& trace, const std::optional<std::string>& timestamp) {
  if (trace.empty()) throw DataError("empty hypervolume trace");
  const auto [lo, hi] = std::minmax_element(trace.begin(), trace.end());
  const Canvas c(Axis::of(1.0, static_cast<double>(trace.size())), Axis::of(*lo, *hi));
  std::ostringstream o;
  o << c.frame("Hypervolume by evaluation", "evaluation", "hypervolume", timestamp);
  o << "<polyline class=\"trace\" fill=\"none\" stroke=\"#1f5fa8\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    o << fmt(c.px(static_cast<double>(i + 1)), "%.2f") << ',' << fmt(c.py(trace[i]), "%.2f") << ' ';
  }
  o << "\"/>\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    o << "<circle class=\"sample\" cx=\"" << fmt(c.px(static_cast<double>(i + 1)), "%.2f") << "\" cy=\""
      << fmt(c.py(trace[i]), "%.2f") << "\" r=\"1.6\" fill=\"#1f5fa8\"/>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::string summary_text(const RunState& state, const SearchSpace& space, const std::optional<std::string>& timestamp) {
  const auto& c = state.config;
  const auto [l1, l2] = objective_labels(c.objectives);
  std::ostringstream o;
  o << "nasbo run summary\n";
  o << "engine: " << kEngineVersion << " (log format " << kLogFormatVersion << ")\n";
  if (timestamp) o << "generated: " << *timestamp << "\n";
  o << "space: " << space.name() << " (" << cardinality(space) << " architectures)\n";
  o << "objectives: " << l1 << ", " << l2 << "\n";
  o << "seed: " << c.seed << "\n";
  o << "budget: n_init " << c.n_init << ", n_iter " << c.n_iter << "\n";
  o << "candidate pool: " << c.candidate_pool_size << ", gp restarts: " << c.gp_restarts << "\n";
  o << "evaluations: " << state.history.size() << " feasible, " << state.infeasible.size() << " infeasible\n";
  o << "iterations: " << state.iteration << "\n";
  o << "stop reason: " << (state.stop_reason.empty() ? "incomplete" : state.stop_reason) << "\n";
  if (state.ref) o << "reference point: (" << format_double(state.ref->f1) << ", " << format_double(state.ref->f2) << ")\n";
  if (!state.hv_trace.empty()) o << "final hypervolume: " << format_double(state.hv_trace.back()) << "\n";
  if (state.archive) {
    o << "pareto front (" << state.archive->size() << " members):\n";
    for (const auto& m : state.archive->members()) {
      o << "  " << m.id << "  " << l1 << "=" << format_double(m.f1) << "  " << l2 << "=" << format_double(m.f2) << "\n";
    }
  }
  return o.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp);
    out << content;
    if (!out) throw DataError("cannot write " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

void write_run_outputs(const std::filesystem::path& dir, const RunState& state) {
  write_text_file(dir / "front.csv", front_csv(state));
  write_text_file(dir / "hv_trace.csv", hv_trace_csv(state.hv_trace));
}

void write_report(const std::filesystem::path& dir, const RunState& state, const SearchSpace& space,
                  bool with_timestamp) {
  const std::optional<std::string> ts = with_timestamp ? std::optional<std::string>(utc_timestamp()) : std::nullopt;
  write_run_outputs(dir, state);
  const auto [l1, l2] = objective_labels(state.config.objectives);
  ScatterPlot plot{"Pareto front (" + std::to_string(state.archive->size()) + " of " +
                       std::to_string(state.history.size()) + " evaluated)",
                   l1, l2, objective_points(state.history, state.config.objectives), state.archive->members()};
  write_text_file(dir / "front.svg", scatter_svg(plot, ts));
  write_text_file(dir / "hypervolume.svg", hypervolume_svg(state.hv_trace, ts));
  write_text_file(dir / "summary.txt", summary_text(state, space, ts));
}

}  // namespace nasbo
