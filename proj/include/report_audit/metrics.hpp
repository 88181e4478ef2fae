#pragma once

// Classification metrics (per-class, macro, micro) and text overlap metrics.

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "report_audit/audit.hpp"
#include "report_audit/corpus.hpp"

namespace raudit::metrics {

struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
  void add(BinaryLabel pred, BinaryLabel ref);
  Confusion& operator+=(const Confusion& o);
  friend bool operator==(const Confusion&, const Confusion&) = default;
};

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Throws DataError unless both maps have identical key sets.
Confusion confusion(const std::map<std::string, BinaryLabel>& preds,
                    const std::map<std::string, BinaryLabel>& refs);

/// 0/0 evaluates to 0 for every ratio.
Prf prf(const Confusion& c);

/// Unweighted mean over `subset`. Throws DataError for an empty subset or a
/// name missing from `per_class`.
double macro_avg(const std::map<std::string, double>& per_class, std::span<const std::string> subset);

/// prf of the confusion pooled over `subset`.
Prf micro_avg(const std::map<std::string, Confusion>& confusions, std::span<const std::string> subset);

struct ClassScore {
  Prf prf;
  std::size_t support = 0;  // reference positives
};

struct MetricsReport {
  std::map<std::string, ClassScore> per_class;
  Prf macro;
  Prf micro;
  std::vector<std::string> class_subset;

  nlohmann::json to_json() const;
};

MetricsReport classification_report(const std::map<std::string, Confusion>& confusions,
                                    std::span<const std::string> subset);

/// Lowercased tokens per the labeler token rule.
std::vector<std::string> text_tokens(std::string_view text);

/// Sentence BLEU against a single reference, no smoothing.
double bleu_n(std::string_view candidate, std::string_view reference, int n);

/// ROUGE-L F-measure from the token LCS.
double rouge_l(std::string_view candidate, std::string_view reference);

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);

// ---------------------------------------------------------------------------
// Audit evaluation (unfiltered vs pass-set F1)

struct AuditEvalRow {
  std::string concept_id;
  double f1_all = 0.0;
  double f1_pass = 0.0;
  double pass_fraction = 0.0;
  std::size_t n_all = 0;
  std::size_t n_pass = 0;
};

struct AuditEvalTable {
  double t = 0.0;
  std::vector<AuditEvalRow> rows;
  std::vector<std::string> macro_subset;
  double macro_f1_all = 0.0;
  double macro_f1_pass = 0.0;
  double macro_pass_fraction = 0.0;

  /// concept,f1_all,f1_pass,pass_pct with scores as percentages to one
  /// decimal, then a trailing "macro_avg" row.
  std::string to_csv() const;
  nlohmann::json to_json() const;
};

/// For each audited concept: F1 of report labels against reference labels
/// over the full corpus and over the pass set. The macro row averages the
/// concept set's report_subset restricted to the audited concepts (all
/// audited concepts when that intersection is empty). Throws DataError when
/// any study lacks reference labels.
AuditEvalTable audit_eval(std::span<const StudyRecord> corpus, const audit::LabelsByStudy& labels,
                          const audit::AuditPolicy& policy, const ConceptSet& cs);

struct TextMetrics {
  std::size_t n = 0;
  std::map<int, double> bleu;  // n -> mean sentence BLEU-n
  double rouge_l = 0.0;

  nlohmann::json to_json() const;
};

/// Mean BLEU-1..max_n and ROUGE-L of generated vs reference reports. Throws
/// DataError when any study lacks a reference report.
TextMetrics text_metrics(std::span<const StudyRecord> corpus, int max_n = 4);

/// Renders a [0,1] score as a percentage with one decimal ("46.8").
std::string percent(double fraction);

}  // namespace raudit::metrics
