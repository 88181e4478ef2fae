#pragma once

// Monte Carlo reliability simulation and coverage/threshold sweeps.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "report_audit/audit.hpp"
#include "report_audit/corpus.hpp"
#include "report_audit/labeler.hpp"

namespace raudit::relsim {

struct PassStats {
  double pass_rate = 0.0;
  double residual_error = 0.0;  // wrong-label fraction among passed reports
};

/// Agreement-only audit (t = 0) with independent binary label paths.
PassStats analytic_pass_stats(double e_ct, double e_ci);

/// Closed form for the synthetic generator: arbitrary joint flip model and a
/// confidence gate at t under the Beta confidence model.
PassStats analytic_pass_stats(const FlipModel& flips, double t, const ConfidenceModel& conf);

/// Raw outcome counts over (study, concept) pairs.
struct OutcomeCounts {
  std::size_t pairs = 0;
  std::size_t pass = 0;
  std::size_t mismatch = 0;
  std::size_t low_confidence = 0;
  std::size_t pass_wrong = 0;     // passed with c_t != reference
  std::size_t joint_failure = 0;  // c_t and c_i both != reference

  OutcomeCounts& operator+=(const OutcomeCounts& o);
  friend bool operator==(const OutcomeCounts&, const OutcomeCounts&) = default;
};

struct SimResult {
  double pass_rate = 0.0;
  double residual_error = 0.0;
  double deferral_rate = 0.0;
  double mismatch_rate = 0.0;
  double joint_failure_rate = 0.0;
  std::size_t n = 0;  // (study, concept) pairs
  std::uint64_t seed = 0;
  bool pass_set_empty = true;
  OutcomeCounts counts;

  static SimResult from_counts(const OutcomeCounts& counts, std::uint64_t seed);
  nlohmann::json to_json() const;

  friend bool operator==(const SimResult&, const SimResult&) = default;
};

/// Generates the profile's corpus study by study, labels each generated
/// report, audits it under `policy` and counts outcomes. An empty
/// policy.concepts audits every concept in `cs`.
SimResult simulate(const SynthProfile& profile, const ConceptSet& cs,
                   const labeler::LabelerRules& rules, const audit::AuditPolicy& policy);

struct SweepPoint {
  double t = 0.0;
  double pass_fraction = 0.0;
  double f1_pass = 0.0;  // pooled over the audited concepts
  double residual_error = 0.0;
  double joint_failure_rate = 0.0;
  bool pass_set_empty = true;
};

struct SweepCurve {
  std::vector<SweepPoint> points;

  std::string to_csv() const;
  nlohmann::json to_json() const;
};

/// Throws ConfigError unless the grid is non-empty, strictly ascending and
/// inside [0,1].
void validate_grid(std::span<const double> t_grid);

/// Parses "0,0.1,0.2" into a grid (not validated).
std::vector<double> parse_grid(const std::string& text);

/// One point per threshold, all computed from the same corpus. Requires
/// reference labels on every study.
SweepCurve sweep_threshold(std::span<const StudyRecord> corpus, const audit::LabelsByStudy& labels,
                           const std::vector<std::string>& concepts, std::span<const double> t_grid);

/// Generates one corpus from the profile and sweeps it.
SweepCurve sweep_threshold(const SynthProfile& profile, const ConceptSet& cs,
                           const labeler::LabelerRules& rules,
                           const std::vector<std::string>& concepts, std::span<const double> t_grid);

}  // namespace raudit::relsim
