#include "nasbo/search_space.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "nasbo/errors.hpp"

namespace nasbo {

namespace {

constexpr std::array<std::string_view, kStageCount> kStageNames{"E1", "E2", "E3", "D3", "D2", "D1"};

std::size_t line_of(const YAML::Node& node) {
  const auto mark = node.Mark();
  return mark.line >= 0 ? static_cast<std::size_t>(mark.line) + 1 : 0;
}

}  // namespace

std::string_view stage_name(StageId s) { return kStageNames[ordinal(s)]; }

std::optional<StageId> parse_stage(std::string_view name) {
  for (std::size_t i = 0; i < kStageCount; ++i) {
    if (kStageNames[i] == name) return kStages[i];
  }
  return std::nullopt;
}

BlockVariant BlockVariant::parse(std::string_view label, bool is_teacher) {
  if (label.empty()) throw DataError("empty variant label");
  BlockVariant v;
  v.label_ = std::string(label);
  v.is_teacher_ = is_teacher;
  v.tokens_.reserve(label.size());
  for (char c : label) {
    if (c == 'R') {
      v.tokens_.push_back(Token::Residual);
    } else if (c == 'A') {
      v.tokens_.push_back(Token::Attention);
    } else {
      throw DataError("unknown token '" + std::string(1, c) + "' in variant label \"" + v.label_ + "\"");
    }
  }
  if (v.tokens_.front() != Token::Residual) {
    throw DataError("variant label \"" + v.label_ + "\" must start with R");
  }
  return v;
}

std::size_t BlockVariant::attention_count() const {
  std::size_t n = 0;
  for (Token t : tokens_) n += t == Token::Attention;
  return n;
}

SearchSpace::SearchSpace(std::string name, StageVariants variants)
    : name_(std::move(name)), variants_(std::move(variants)) {
  for (StageId s : kStages) {
    const auto& list = variants_[ordinal(s)];
    if (list.empty()) throw DataError("stage " + std::string(stage_name(s)) + " has no variants");
    std::unordered_set<std::string> seen;
    for (const auto& v : list) {
      if (!seen.insert(v.label()).second) {
        throw DataError("duplicate variant label \"" + v.label() + "\" in stage " + std::string(stage_name(s)));
      }
    }
  }
}

StageCounts SearchSpace::counts() const {
  StageCounts c{};
  for (std::size_t i = 0; i < kStageCount; ++i) c[i] = variants_[i].size();
  return c;
}

std::optional<std::size_t> SearchSpace::find(StageId s, std::string_view label) const {
  const auto& list = variants_[ordinal(s)];
  for (std::size_t i = 0; i < list.size(); ++i) {
    if (list[i].label() == label) return i;
  }
  return std::nullopt;
}

std::size_t DecisionVectorHash::operator()(const DecisionVector& z) const noexcept {
  std::size_t h = 0xcbf29ce484222325ULL;
  for (auto i : z.indices) {
    h ^= i;
    h *= 0x100000001b3ULL;
  }
  return h;
}

bool ContinuousPoint::valid() const {
  for (double c : coords) {
    if (!(c >= 0.0 && c <= 1.0)) return false;
  }
  return true;
}

SearchSpace parse_space(std::string_view document, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(document));
  } catch (const YAML::ParserException& e) {
    throw ParseError(source, static_cast<std::size_t>(e.mark.line + 1), e.msg);
  }
  if (!root.IsMap()) throw ParseError(source, line_of(root), "space document must be a mapping");

  std::string name = "unnamed";
  if (auto n = root["name"]) name = n.as<std::string>();

  const YAML::Node stages = root["stages"];
  if (!stages || !stages.IsSequence()) throw ParseError(source, line_of(root), "missing 'stages' list");

  SearchSpace::StageVariants variants;
  std::array<bool, kStageCount> present{};
  for (const auto& stage : stages) {
    const std::size_t line = line_of(stage);
    if (!stage.IsMap() || !stage["id"]) throw ParseError(source, line, "stage entry needs an 'id'");
    const auto id_text = stage["id"].as<std::string>();
    const auto id = parse_stage(id_text);
    if (!id) throw ParseError(source, line, "unknown stage id '" + id_text + "'");
    if (present[ordinal(*id)]) throw ParseError(source, line, "stage " + id_text + " listed twice");
    present[ordinal(*id)] = true;

    const YAML::Node list = stage["variants"];
    if (!list || !list.IsSequence() || list.size() == 0) {
      throw ParseError(source, line, "stage " + id_text + " has an empty variant list");
    }
    auto& out = variants[ordinal(*id)];
    for (const auto& v : list) {
      const std::size_t vline = line_of(v);
      std::string label;
      bool teacher = false;
      if (v.IsScalar()) {
        label = v.as<std::string>();
      } else if (v.IsMap() && v["label"]) {
        label = v["label"].as<std::string>();
        if (auto t = v["teacher"]) teacher = t.as<bool>();
      } else {
        throw ParseError(source, vline, "variant in stage " + id_text + " needs a 'label'");
      }
      try {
        out.push_back(BlockVariant::parse(label, teacher));
      } catch (const DataError& e) {
        throw ParseError(source, vline, "stage " + id_text + ": " + e.what());
      }
      for (std::size_t k = 0; k + 1 < out.size(); ++k) {
        if (out[k].label() == label) {
          throw ParseError(source, vline, "duplicate variant label \"" + label + "\" in stage " + id_text);
        }
      }
    }
  }
  for (StageId s : kStages) {
    if (!present[ordinal(s)]) {
      throw ParseError(source, line_of(stages), "missing stage " + std::string(stage_name(s)));
    }
  }
  return SearchSpace(std::move(name), std::move(variants));
}

SearchSpace load_space(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open space file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_space(buf.str(), path.string());
}

std::string serialize_space(const SearchSpace& space) {
  YAML::Emitter out;
  out << YAML::BeginMap << YAML::Key << "name" << YAML::Value << space.name();
  out << YAML::Key << "stages" << YAML::Value << YAML::BeginSeq;
  for (StageId s : kStages) {
    out << YAML::BeginMap << YAML::Key << "id" << YAML::Value << std::string(stage_name(s));
    out << YAML::Key << "variants" << YAML::Value << YAML::BeginSeq;
    for (const auto& v : space.variants(s)) {
      out << YAML::Flow << YAML::BeginMap << YAML::Key << "label" << YAML::Value << v.label();
      if (v.is_teacher()) out << YAML::Key << "teacher" << YAML::Value << true;
      out << YAML::EndMap;
    }
    out << YAML::EndSeq << YAML::EndMap;
  }
  out << YAML::EndSeq << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

std::uint64_t cardinality(const SearchSpace& space) {
  std::uint64_t total = 1;
  for (std::size_t c : space.counts()) {
    if (__builtin_mul_overflow(total, static_cast<std::uint64_t>(c), &total)) {
      throw DataError("search space cardinality overflows 64 bits");
    }
  }
  return total;
}

bool is_valid(const DecisionVector& z, const SearchSpace& space) {
  for (StageId s : kStages) {
    if (z[s] >= space.count(s)) return false;
  }
  return true;
}

DecisionVector project(const ContinuousPoint& x, const SearchSpace& space) {
  if (!x.valid()) throw std::invalid_argument("continuous point outside [0,1]^6");
  DecisionVector z;
  for (StageId s : kStages) {
    const auto n = space.count(s);
    const auto cell = static_cast<std::size_t>(std::floor(x.coords[ordinal(s)] * static_cast<double>(n)));
    z.indices[ordinal(s)] = static_cast<std::uint32_t>(std::min(cell, n - 1));
  }
  return z;
}

ContinuousPoint cell_center(const DecisionVector& z, const SearchSpace& space) {
  ContinuousPoint x;
  for (StageId s : kStages) {
    x.coords[ordinal(s)] = (static_cast<double>(z[s]) + 0.5) / static_cast<double>(space.count(s));
  }
  return x;
}

std::string encode_arch(const DecisionVector& z, const SearchSpace& space) {
  if (!is_valid(z, space)) throw std::invalid_argument("decision vector out of range for space " + space.name());
  std::string out;
  for (StageId s : kStages) {
    if (!out.empty()) out += '|';
    out += space.variants(s)[z[s]].label();
  }
  return out;
}

DecisionVector decode_arch(std::string_view arch, const SearchSpace& space) {
  DecisionVector z;
  std::size_t stage = 0;
  std::size_t start = 0;
  while (true) {
    const auto bar = arch.find('|', start);
    const auto segment = arch.substr(start, bar == std::string_view::npos ? std::string_view::npos : bar - start);
    if (stage >= kStageCount) {
      throw DataError("architecture \"" + std::string(arch) + "\" has more than 6 segments");
    }
    const StageId s = kStages[stage];
    const auto index = space.find(s, segment);
    if (!index) {
      throw DataError("unknown label \"" + std::string(segment) + "\" at " + std::string(stage_name(s)));
    }
    z.indices[stage++] = static_cast<std::uint32_t>(*index);
    if (bar == std::string_view::npos) break;
    start = bar + 1;
  }
  if (stage != kStageCount) {
    throw DataError("architecture \"" + std::string(arch) + "\" has " + std::to_string(stage) +
                    " segments, expected 6");
  }
  return z;
}

Enumeration::Enumeration(const SearchSpace& space, std::uint64_t cap)
    : counts_(space.counts()), size_(cardinality(space)) {
  if (size_ > cap) {
    throw DataError("cardinality " + std::to_string(size_) + " exceeds enumeration cap " + std::to_string(cap));
  }
}

Enumeration::iterator& Enumeration::iterator::operator++() {
  for (std::size_t i = kStageCount; i-- > 0;) {
    if (++current_.indices[i] < counts_[i]) return *this;
    current_.indices[i] = 0;
  }
  done_ = true;
  return *this;
}

std::vector<DecisionVector> enumerate(const SearchSpace& space, std::uint64_t cap) {
  Enumeration e(space, cap);
  std::vector<DecisionVector> out;
  out.reserve(e.size());
  for (const auto& z : e) out.push_back(z);
  return out;
}

}  // namespace nasbo
