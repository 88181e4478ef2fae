#pragma once

// Study records, concept configuration and JSON Lines ingestion.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace raudit {

/// Binarized concept label, always 0 or 1.
using BinaryLabel = int;

/// Concept name -> binary label for one study.
using LabelMap = std::map<std::string, BinaryLabel>;

/// Image-side prediction for a single concept.
///
/// Only `q` (positive-class probability) is stored on disk; the label and
/// the confidence in that label are derived from it. A tie at q = 0.5 is
/// assigned to the positive class.
struct AcPrediction {
  double q = 0.0;
  BinaryLabel c_i = 0;
  double p_ac = 1.0;

  static AcPrediction from_q(double q);

  friend bool operator==(const AcPrediction&, const AcPrediction&) = default;
};

struct StudyRecord {
  std::string study_id;
  std::string generated_report;
  std::optional<std::string> reference_report;
  std::optional<LabelMap> reference_labels;
  std::map<std::string, AcPrediction> ac_predictions;
  std::optional<std::string> image_ref;

  friend bool operator==(const StudyRecord&, const StudyRecord&) = default;
};

/// Ordered list of concepts with their mention lexicon.
///
/// Phrases are lowercased on construction. `report_subset` names the
/// concepts used for macro/micro averaging; it defaults to all concepts.
class ConceptSet {
 public:
  ConceptSet(std::vector<std::string> concepts,
             std::map<std::string, std::vector<std::string>> lexicon,
             std::vector<std::string> report_subset = {});

  /// Parses {"concepts": [...], "lexicon": {...}, "report_subset": [...]}.
  /// Any "rules" key is ignored here (see labeler::rules_from_json).
  static ConceptSet from_json(const nlohmann::json& doc);
  static ConceptSet load(const std::filesystem::path& path);

  /// The 14 CheXpert observation classes with a hand-written lexicon;
  /// report_subset is the five commonly reported diseases.
  static ConceptSet chexpert();

  nlohmann::json to_json() const;

  std::size_t size() const { return concepts_.size(); }
  const std::vector<std::string>& concepts() const { return concepts_; }
  const std::vector<std::string>& report_subset() const { return report_subset_; }
  bool contains(std::string_view name) const { return index_of(name).has_value(); }
  std::optional<std::size_t> index_of(std::string_view name) const;

  const std::vector<std::string>& phrases(std::size_t index) const { return lexicon_.at(index); }
  const std::vector<std::string>& phrases(std::string_view name) const;

  /// Same concepts and lexicon restricted to `names` (in the given order).
  ConceptSet subset(const std::vector<std::string>& names) const;

 private:
  std::vector<std::string> concepts_;
  std::vector<std::vector<std::string>> lexicon_;
  std::vector<std::string> report_subset_;
};

/// Reads a full JSON document from disk; throws ConfigError when unreadable.
nlohmann::json read_json_file(const std::filesystem::path& path);

StudyRecord parse_record(std::string_view line, const ConceptSet& cs);
StudyRecord record_from_json(const nlohmann::json& obj, const ConceptSet& cs);
nlohmann::json record_to_json(const StudyRecord& rec);
std::string serialize_record(const StudyRecord& rec);

/// Loads a JSON Lines corpus. Whitespace-only lines are skipped; parse
/// errors are reported as "line N: ...". Duplicate study ids are an error.
std::vector<StudyRecord> load_corpus(const std::filesystem::path& path, const ConceptSet& cs);
std::vector<StudyRecord> parse_corpus(std::string_view text, const ConceptSet& cs);
void write_corpus(const std::filesystem::path& path, const std::vector<StudyRecord>& corpus);

// ---------------------------------------------------------------------------
// Synthetic corpus profile

struct ConfidenceModel {
  double a = 8.0;
  double b = 2.0;
};

struct SynthProfile {
  std::size_t n_studies = 100000;
  double e_ct = 0.2;
  double e_ci = 0.1;
  double rho = 0.0;
  double default_prevalence = 0.5;
  std::map<std::string, double> prevalence;
  ConfidenceModel confidence;
  std::uint64_t seed = 42;

  double prevalence_for(const std::string& concept_id) const;
  void validate() const;

  /// Missing keys keep their defaults. "prevalence" may be a number or an
  /// object of concept -> rate.
  static SynthProfile from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
};

/// Cell probabilities of the (text flip, image flip) bivariate Bernoulli.
struct FlipModel {
  double both = 0.0;        // text and image wrong
  double text_only = 0.0;
  double image_only = 0.0;
  double neither = 1.0;
};

/// Joint flip model with marginals e_ct, e_ci and correlation rho. The joint
/// cell is clamped to the Frechet bounds; a clamp larger than 1e-9 throws
/// ConfigError stating the feasible rho interval.
FlipModel joint_flip_model(double e_ct, double e_ci, double rho);

}  // namespace raudit
