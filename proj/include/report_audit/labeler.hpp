#pragma once

// Rule-based report labeler: sentence segmentation, lexicon mention
// matching and pre-span negation/uncertainty scoping.

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "report_audit/corpus.hpp"

namespace raudit::labeler {

enum class RawLabel { Positive, Negative, Uncertain, NotMentioned };

const char* to_string(RawLabel label);
RawLabel raw_label_from_string(std::string_view text);

/// Character range [begin, end) within a sentence.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  friend bool operator==(const Span&, const Span&) = default;
};

struct Token {
  std::string text;  // lowercased
  std::size_t begin = 0;
  std::size_t end = 0;
};

struct Mention {
  std::string concept_id;
  std::size_t sentence_index = 0;
  Span span;
  RawLabel polarity = RawLabel::Positive;  // never NotMentioned
};

struct LabelerRules {
  std::vector<std::string> negation_cues{"no",         "without",  "free of",
                                         "absence of", "clear of", "negative for",
                                         "resolved",   "removed"};
  std::vector<std::string> uncertainty_cues{
      "may",           "might",          "possible",     "possibly",  "suggest",
      "suggests",      "suggestive of",  "cannot exclude", "cannot be excluded",
      "concerning for", "question of",   "equivocal",    "borderline"};
  std::size_t scope_window = 8;
  std::vector<std::string> scope_breakers{"but", "however", "although", ";"};

  /// Post-span negation ("effusion is absent"). Off by default.
  bool enable_post_negation = false;
  std::vector<std::string> post_negation_cues{"is absent", "are absent"};

  void validate() const;
};

/// Reads the optional "rules" object of a concept-set document. Missing keys
/// keep their defaults.
LabelerRules rules_from_json(const nlohmann::json& concept_doc);
nlohmann::json rules_to_json(const LabelerRules& rules);

/// Splits on runs of non-alphanumeric characters. Bytes >= 0x80 count as
/// word characters so UTF-8 words stay whole.
std::vector<Token> tokenize(std::string_view text);

/// Splits after '.', '!' or '?' when followed by whitespace or end of text.
/// There is no abbreviation list: "Dr. Smith" is two segments.
std::vector<std::string> segment_sentences(std::string_view text);

/// Case-insensitive, leftmost longest-first, non-overlapping matches of any
/// phrase in `phrases`, aligned to token boundaries.
std::vector<Span> match_mentions(std::string_view sentence, const std::vector<std::string>& phrases);

/// Lexicon lookup by concept name; throws DataError for unknown concepts.
std::vector<Span> match_mentions(std::string_view sentence, std::string_view concept_id,
                                 const ConceptSet& cs);

/// Cue scoping compiled from LabelerRules.
class ScopeRules {
 public:
  explicit ScopeRules(const LabelerRules& rules);

  /// Polarity of the mention covering tokens [first, after) of `tokens`.
  RawLabel classify(const std::vector<Token>& tokens, std::string_view sentence,
                    std::size_t first, std::size_t after) const;

 private:
  using Phrase = std::vector<std::string>;
  // First cue token -> cues starting with it.
  using CueIndex = std::unordered_map<std::string, std::vector<Phrase>>;

  bool cue_before(const CueIndex& cues, const std::vector<Token>& tokens,
                  std::string_view sentence, std::size_t first) const;
  bool cue_after(const std::vector<Token>& tokens, std::string_view sentence,
                 std::size_t after) const;
  bool broken(const std::vector<Token>& tokens, std::string_view sentence,
              std::size_t from_token, std::size_t to_token) const;

  std::size_t window_;
  bool post_enabled_;
  CueIndex negation_;
  CueIndex uncertainty_;
  std::vector<Phrase> post_negation_;
  std::vector<Phrase> word_breakers_;
  std::vector<std::string> raw_breakers_;  // breakers containing non-word characters
};

RawLabel classify_mention(std::string_view sentence, Span span, const LabelerRules& rules);

constexpr BinaryLabel binarize(RawLabel raw) {
  return (raw == RawLabel::Positive || raw == RawLabel::Uncertain) ? 1 : 0;
}

LabelMap binarize(const std::map<std::string, RawLabel>& raw);

/// Lexicon and rules compiled once for labeling many reports.
class Labeler {
 public:
  Labeler(const ConceptSet& cs, const LabelerRules& rules);

  std::vector<Mention> mentions(std::string_view report) const;

  /// One label per concept, aligned with concepts().concepts().
  std::vector<RawLabel> label_vector(std::string_view report) const;
  std::map<std::string, RawLabel> label(std::string_view report) const;

  const ConceptSet& concepts() const { return cs_; }

 private:
  struct Candidate {
    std::size_t concept_id;
    std::vector<std::string> tokens;
  };

  template <typename Sink>
  void scan(std::string_view report, Sink&& sink) const;

  ConceptSet cs_;
  ScopeRules scope_;
  // First token -> phrases starting with it, grouped by concept, longest first.
  std::unordered_map<std::string, std::vector<Candidate>> index_;
};

/// Raw labels of every generated report, aligned with `corpus`.
std::vector<std::vector<RawLabel>> label_corpus(std::span<const StudyRecord> corpus,
                                                const Labeler& labeler);

std::map<std::string, RawLabel> extract_labels(std::string_view report, const ConceptSet& cs,
                                               const LabelerRules& rules);

}  // namespace raudit::labeler
