#pragma once

#include "doctest.h"
#include "visurvey/study.hpp"
#include "visurvey/time.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

namespace support {

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(VISURVEY_FIXTURE_DIR) / name;
}

inline std::filesystem::path golden_path(const std::string& name) {
  return std::filesystem::path(VISURVEY_GOLDEN_DIR) / name;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

inline bool updating_golden() {
  const char* v = std::getenv("UPDATE_GOLDEN");
  return v && *v && std::string(v) != "0";
}

/// Compares against a checked-in golden file; UPDATE_GOLDEN=1 rewrites it.
inline bool matches_golden(const std::string& name, const std::string& actual) {
  const auto p = golden_path(name);
  if (updating_golden()) {
    spit(p, actual);
    return true;
  }
  return std::filesystem::exists(p) && slurp(p) == actual;
}

inline visurvey::StudyDefinition yadl() { return visurvey::load_study_definition(fixture("yadl.json")); }

inline visurvey::Timestamp at(const std::string& text) { return visurvey::parse_timestamp(text); }

/// Scratch directory removed on destruction.
class TempDir {
public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("visurvey-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
  std::filesystem::path path_;
};

}  // namespace support
