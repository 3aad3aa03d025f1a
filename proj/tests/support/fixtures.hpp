#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace refiner::testing {

inline std::filesystem::path source_dir() { return REFINER_TEST_SOURCE_DIR; }
inline std::filesystem::path fixture_dir() { return source_dir() / "tests" / "fixtures"; }
inline std::filesystem::path protocol_dir() { return source_dir() / "docs" / "protocol"; }

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
}

}  // namespace refiner::testing
