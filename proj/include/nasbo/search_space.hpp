#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nasbo {

inline constexpr std::size_t kStageCount = 6;

/// U-Net stages in serialization order: three encoders, then decoders from
/// lowest resolution up.
enum class StageId : std::uint8_t { E1, E2, E3, D3, D2, D1 };

inline constexpr std::array<StageId, kStageCount> kStages{StageId::E1, StageId::E2, StageId::E3,
                                                         StageId::D3, StageId::D2, StageId::D1};

constexpr std::size_t ordinal(StageId s) { return static_cast<std::size_t>(s); }
std::string_view stage_name(StageId s);
std::optional<StageId> parse_stage(std::string_view name);

enum class Token : char { Residual = 'R', Attention = 'A' };

/// One shape-preserving alternative for a stage, e.g. "RARA".
class BlockVariant {
 public:
  /// Throws DataError on an empty label, a character outside {R, A}, or a
  /// label that does not start with a residual module.
  static BlockVariant parse(std::string_view label, bool is_teacher = false);

  const std::string& label() const { return label_; }
  const std::vector<Token>& tokens() const { return tokens_; }
  bool is_teacher() const { return is_teacher_; }

  std::size_t attention_count() const;

 private:
  BlockVariant() = default;

  std::string label_;
  std::vector<Token> tokens_;
  bool is_teacher_ = false;
};

using StageCounts = std::array<std::size_t, kStageCount>;

class SearchSpace {
 public:
  using StageVariants = std::array<std::vector<BlockVariant>, kStageCount>;

  /// Throws DataError when a stage is empty or repeats a label.
  SearchSpace(std::string name, StageVariants variants);

  const std::string& name() const { return name_; }
  const std::vector<BlockVariant>& variants(StageId s) const { return variants_[ordinal(s)]; }
  std::size_t count(StageId s) const { return variants_[ordinal(s)].size(); }
  StageCounts counts() const;
  std::optional<std::size_t> find(StageId s, std::string_view label) const;

 private:
  std::string name_;
  StageVariants variants_;
};

/// Discrete architecture choice: one variant index per stage.
struct DecisionVector {
  std::array<std::uint32_t, kStageCount> indices{};

  std::uint32_t operator[](StageId s) const { return indices[ordinal(s)]; }
  friend auto operator<=>(const DecisionVector&, const DecisionVector&) = default;
};

struct DecisionVectorHash {
  std::size_t operator()(const DecisionVector& z) const noexcept;
};

/// Relaxed point in [0, 1]^6.
struct ContinuousPoint {
  std::array<double, kStageCount> coords{};

  bool valid() const;
  friend bool operator==(const ContinuousPoint&, const ContinuousPoint&) = default;
};

/// Parses the YAML space document. `source` names the input in diagnostics.
SearchSpace parse_space(std::string_view document, const std::string& source = "<space>");
SearchSpace load_space(const std::filesystem::path& path);
std::string serialize_space(const SearchSpace& space);

/// Product of per-stage counts. Throws DataError if it does not fit 64 bits.
std::uint64_t cardinality(const SearchSpace& space);

bool is_valid(const DecisionVector& z, const SearchSpace& space);

/// floor(x * n) clamped to n - 1, per stage. Throws std::invalid_argument
/// when `x` leaves the unit cube.
DecisionVector project(const ContinuousPoint& x, const SearchSpace& space);

/// Center of the projection cell of `z`; project(cell_center(z)) == z.
ContinuousPoint cell_center(const DecisionVector& z, const SearchSpace& space);

/// Pipe-joined stage labels, e.g. "R|RA|RA|RARA|RARA|RR".
std::string encode_arch(const DecisionVector& z, const SearchSpace& space);
DecisionVector decode_arch(std::string_view arch, const SearchSpace& space);

inline constexpr std::uint64_t kDefaultEnumerationCap = 10'000'000;

/// Lexicographic walk over every decision vector of a space (last stage
/// varies fastest).
class Enumeration {
 public:
  class iterator {
   public:
    using value_type = DecisionVector;
    using difference_type = std::ptrdiff_t;

    iterator() = default;
    const DecisionVector& operator*() const { return current_; }
    const DecisionVector* operator->() const { return &current_; }
    iterator& operator++();
    iterator operator++(int) {
      auto copy = *this;
      ++*this;
      return copy;
    }
    bool operator==(const iterator& other) const { return done_ == other.done_ && (done_ || current_ == other.current_); }

   private:
    friend class Enumeration;
    iterator(StageCounts counts, bool done) : counts_(counts), done_(done) {}

    StageCounts counts_{};
    DecisionVector current_{};
    bool done_ = true;
  };

  /// Throws DataError when the cardinality exceeds `cap`.
  explicit Enumeration(const SearchSpace& space, std::uint64_t cap = kDefaultEnumerationCap);

  iterator begin() const { return iterator(counts_, false); }
  iterator end() const { return iterator(counts_, true); }
  std::uint64_t size() const { return size_; }

 private:
  StageCounts counts_{};
  std::uint64_t size_ = 0;
};

std::vector<DecisionVector> enumerate(const SearchSpace& space, std::uint64_t cap = kDefaultEnumerationCap);

}  // namespace nasbo
