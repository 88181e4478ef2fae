#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>

#include "report_audit/corpus.hpp"

namespace ra_test {

inline std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(RA_TEST_DATA_DIR) / name;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch(const std::string& tag) {
  static std::mt19937_64 rng(std::random_device{}());
  auto dir = std::filesystem::temp_directory_path() /
             ("ra_" + tag + "_" + std::to_string(rng() % 1000000007ULL));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline raudit::StudyRecord make_record(const std::string& id, const std::string& report,
                                       const std::map<std::string, double>& q,
                                       std::optional<raudit::LabelMap> refs = std::nullopt) {
  raudit::StudyRecord r;
  r.study_id = id;
  r.generated_report = report;
  for (const auto& [c, v] : q) r.ac_predictions[c] = raudit::AcPrediction::from_q(v);
  r.reference_labels = std::move(refs);
  return r;
}

}  // namespace ra_test
