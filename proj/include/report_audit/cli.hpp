#pragma once

// Batch command-line front end. Exit codes: 0 success, 1 data error,
// 2 usage or configuration error.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "report_audit/corpus.hpp"

namespace raudit::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitData = 1;
inline constexpr int kExitUsage = 2;

enum class OutputFormat { Both, Csv, Json };

/// Fully resolved run configuration (defaults < config file < flags).
struct RunConfig {
  std::string command;
  std::optional<std::string> corpus_path;
  std::optional<std::string> concept_set_path;
  std::optional<std::string> output_path;
  std::optional<std::string> f1_table_path;
  std::vector<std::string> audit_concepts;  // empty: the concept set's report_subset
  double t = 0.8;
  std::vector<double> t_grid{0.0, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::uint64_t seed = 42;
  OutputFormat format = OutputFormat::Both;
  int bleu_max_n = 4;
  SynthProfile profile;
};

/// Parses argv into a RunConfig. Throws ConfigError on invalid input; returns
/// nullopt after printing help.
std::optional<RunConfig> parse_args(int argc, const char* const* argv);

int cmd_label(const RunConfig& cfg);
int cmd_audit(const RunConfig& cfg);
int cmd_eval(const RunConfig& cfg);
int cmd_sweep(const RunConfig& cfg);
int cmd_simulate(const RunConfig& cfg);
int cmd_synth(const RunConfig& cfg);

/// Dispatches cfg.command, translating exceptions into exit codes.
int run_command(const RunConfig& cfg);

/// Entry point used by the executable.
int main(int argc, const char* const* argv);

}  // namespace raudit::cli
