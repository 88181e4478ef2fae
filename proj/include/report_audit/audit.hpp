#pragma once

// Report/image agreement audit with confidence-gated deferral.

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "report_audit/corpus.hpp"
#include "report_audit/labeler.hpp"

namespace raudit::audit {

/// Pass: labels agree and p_ac >= t. Mismatch: labels differ (takes priority
/// over low confidence). LowConfidence: labels agree but p_ac < t.
/// Mismatch and LowConfidence together form the flagged set.
enum class Verdict { Pass, Mismatch, LowConfidence };

const char* to_string(Verdict v);

struct AuditPolicy {
  double t = 0.8;
  std::vector<std::string> concepts;

  /// Throws ConfigError unless t is in [0,1] and every concept is known.
  void validate(const ConceptSet& cs) const;
};

/// Study id -> binarized report labels.
using LabelsByStudy = std::unordered_map<std::string, LabelMap>;

/// Binarizes raw labels (aligned with `corpus` and cs.concepts()) into a
/// study id keyed map.
LabelsByStudy binarized_labels(std::span<const StudyRecord> corpus, const ConceptSet& cs,
                               const std::vector<std::vector<labeler::RawLabel>>& raw);

constexpr Verdict audit_concept(BinaryLabel c_t, const AcPrediction& ac, double t) {
  if (c_t != ac.c_i) return Verdict::Mismatch;
  if (ac.p_ac < t) return Verdict::LowConfidence;
  return Verdict::Pass;
}

/// Verdict per policy concept. Throws DataError if either the labels or the
/// AC predictions lack a policy concept.
std::map<std::string, Verdict> audit_study(const StudyRecord& rec, const LabelMap& labels,
                                           const AuditPolicy& policy);

/// True when every verdict is Pass. Extension: per-concept verdicts are the
/// primary result, whole-report acceptance is only a convenience.
bool all_pass(const std::map<std::string, Verdict>& verdicts);

struct Partition {
  std::string concept_id;
  std::vector<std::string> pass_ids;  // each list sorted
  std::vector<std::string> mismatch_ids;
  std::vector<std::string> low_confidence_ids;
  double pass_fraction = 0.0;
  bool empty = true;

  std::size_t total() const {
    return pass_ids.size() + mismatch_ids.size() + low_confidence_ids.size();
  }
  nlohmann::json to_json(double t) const;
};

/// Splits the corpus for one concept. An empty corpus yields pass_fraction 0
/// with `empty` set.
Partition partition(std::span<const StudyRecord> corpus, std::string_view concept_id,
                    const LabelsByStudy& labels, const AuditPolicy& policy);

/// Joint failure rate of two independent label paths.
constexpr double composed_error(double e_ct, double e_ci) { return e_ct * e_ci; }

/// One verdict line of the audit JSON Lines output.
nlohmann::json verdict_line(const StudyRecord& rec, std::string_view concept_id, BinaryLabel c_t,
                            Verdict v, double t);

}  // namespace raudit::audit
