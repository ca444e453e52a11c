#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "nasbo/search_space.hpp"

namespace nasbo::test {

inline std::filesystem::path data_path(const std::string& rel) { return std::filesystem::path(NASBO_DATA_DIR) / rel; }

inline SearchSpace default_space() { return load_space(data_path("spaces/nanosd_default.yaml")); }

/// Space with `counts[s]` variants per stage, labelled R, RA, RAA, ...
inline SearchSpace counted_space(const StageCounts& counts, const std::string& name = "counted") {
  SearchSpace::StageVariants v;
  for (std::size_t s = 0; s < kStageCount; ++s) {
    for (std::size_t i = 0; i < counts[s]; ++i) v[s].push_back(BlockVariant::parse("R" + std::string(i, 'A')));
  }
  return SearchSpace(name, std::move(v));
}

/// Fresh scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("nasbo_test_" + std::to_string(rd()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary | std::ios::trunc) << text;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace nasbo::test
