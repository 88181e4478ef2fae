#include "report_audit/labeler.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include <fmt/format.h>

#include "report_audit/error.hpp"

namespace raudit::labeler {

using nlohmann::json;

const char* to_string(RawLabel label) {
  switch (label) {
    case RawLabel::Positive: return "positive";
    case RawLabel::Negative: return "negative";
    case RawLabel::Uncertain: return "uncertain";
    case RawLabel::NotMentioned: return "not_mentioned";
  }
  return "not_mentioned";
}

RawLabel raw_label_from_string(std::string_view text) {
  if (text == "positive") return RawLabel::Positive;
  if (text == "negative") return RawLabel::Negative;
  if (text == "uncertain") return RawLabel::Uncertain;
  if (text == "not_mentioned") return RawLabel::NotMentioned;
  throw DataError(fmt::format("unknown raw label '{}'", text));
}

namespace {

bool is_word(char c) {
  auto u = static_cast<unsigned char>(c);
  return u >= 0x80 || std::isalnum(u);
}

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<std::string> phrase_tokens(std::string_view phrase) {
  std::vector<std::string> out;
  for (auto& t : tokenize(phrase)) out.push_back(std::move(t.text));
  return out;
}

bool has_non_word(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](char c) { return !is_word(c) && !is_space(c); });
}

bool matches_at(const std::vector<Token>& tokens, std::size_t pos,
                const std::vector<std::string>& phrase) {
  if (phrase.empty() || pos + phrase.size() > tokens.size()) return false;
  for (std::size_t k = 0; k < phrase.size(); ++k) {
    if (tokens[pos + k].text != phrase[k]) return false;
  }
  return true;
}

// Rank used for aggregation: Positive > Uncertain > Negative > NotMentioned.
int precedence(RawLabel l) {
  switch (l) {
    case RawLabel::Positive: return 3;
    case RawLabel::Uncertain: return 2;
    case RawLabel::Negative: return 1;
    case RawLabel::NotMentioned: return 0;
  }
  return 0;
}

// Token range [first, after) overlapping the character span.
std::pair<std::size_t, std::size_t> token_range(const std::vector<Token>& tokens, Span span) {
  std::size_t first = 0;
  while (first < tokens.size() && tokens[first].end <= span.begin) ++first;
  std::size_t after = first;
  while (after < tokens.size() && tokens[after].begin < span.end) ++after;
  return {first, after};
}

}  // namespace

void LabelerRules::validate() const {
  if (scope_window < 1) throw ConfigError("scope_window must be >= 1");
  auto check = [](const std::vector<std::string>& cues, const char* name) {
    for (const auto& c : cues) {
      if (c.empty()) throw ConfigError(fmt::format("{} contains an empty cue", name));
      if (c != lowercase(c)) throw ConfigError(fmt::format("{} cue '{}' is not lowercase", name, c));
    }
  };
  check(negation_cues, "negation_cues");
  check(uncertainty_cues, "uncertainty_cues");
  check(scope_breakers, "scope_breakers");
  check(post_negation_cues, "post_negation_cues");
}

LabelerRules rules_from_json(const json& concept_doc) {
  LabelerRules rules;
  if (!concept_doc.is_object() || !concept_doc.contains("rules")) return rules;
  const auto& r = concept_doc["rules"];
  if (!r.is_object()) throw ConfigError("\"rules\" must be an object");
  static const std::set<std::string> known{"negation_cues",        "uncertainty_cues", "scope_breakers",
                                           "post_negation_cues",   "enable_post_negation", "scope_window"};
  for (const auto& [key, _] : r.items()) {
    if (!known.count(key)) throw ConfigError(fmt::format("unknown labeler rule \"{}\"", key));
  }
  try {
    if (r.contains("negation_cues")) rules.negation_cues = r["negation_cues"].get<std::vector<std::string>>();
    if (r.contains("uncertainty_cues")) rules.uncertainty_cues = r["uncertainty_cues"].get<std::vector<std::string>>();
    if (r.contains("scope_breakers")) rules.scope_breakers = r["scope_breakers"].get<std::vector<std::string>>();
    if (r.contains("post_negation_cues")) rules.post_negation_cues = r["post_negation_cues"].get<std::vector<std::string>>();
    if (r.contains("enable_post_negation")) rules.enable_post_negation = r["enable_post_negation"].get<bool>();
    if (r.contains("scope_window")) {
      if (!r["scope_window"].is_number_integer() || r["scope_window"].get<long long>() < 1) {
        throw ConfigError("scope_window must be an integer >= 1");
      }
      rules.scope_window = r["scope_window"].get<std::size_t>();
    }
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("invalid labeler rules: {}", e.what()));
  }
  rules.validate();
  return rules;
}

json rules_to_json(const LabelerRules& rules) {
  return json{{"negation_cues", rules.negation_cues},
              {"uncertainty_cues", rules.uncertainty_cues},
              {"scope_window", rules.scope_window},
              {"scope_breakers", rules.scope_breakers},
              {"enable_post_negation", rules.enable_post_negation},
              {"post_negation_cues", rules.post_negation_cues}};
}

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  out.reserve(text.size() / 5 + 1);
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && !is_word(text[i])) ++i;
    if (i >= text.size()) break;
    std::size_t b = i;
    while (i < text.size() && is_word(text[i])) ++i;
    out.push_back(Token{lowercase(text.substr(b, i - b)), b, i});
  }
  return out;
}

std::vector<std::string> segment_sentences(std::string_view text) {
  std::vector<std::string> out;
  auto emit = [&](std::size_t b, std::size_t e) {
    while (b < e && is_space(text[b])) ++b;
    while (e > b && is_space(text[e - 1])) --e;
    if (e > b) out.emplace_back(text.substr(b, e - b));
  };
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if ((c == '.' || c == '!' || c == '?') && (i + 1 == text.size() || is_space(text[i + 1]))) {
      emit(start, i + 1);
      start = i + 1;
    }
  }
  emit(start, text.size());
  return out;
}

std::vector<Span> match_mentions(std::string_view sentence, const std::vector<std::string>& phrases) {
  std::vector<std::vector<std::string>> compiled;
  for (const auto& p : phrases) {
    auto toks = phrase_tokens(p);
    if (!toks.empty()) compiled.push_back(std::move(toks));
  }
  std::stable_sort(compiled.begin(), compiled.end(),
                   [](const auto& a, const auto& b) { return a.size() > b.size(); });
  auto tokens = tokenize(sentence);
  std::vector<Span> out;
  std::size_t i = 0;
  while (i < tokens.size()) {
    bool hit = false;
    for (const auto& phrase : compiled) {
      if (matches_at(tokens, i, phrase)) {
        out.push_back(Span{tokens[i].begin, tokens[i + phrase.size() - 1].end});
        i += phrase.size();
        hit = true;
        break;
      }
    }
    if (!hit) ++i;
  }
  return out;
}

std::vector<Span> match_mentions(std::string_view sentence, std::string_view concept_id,
                                 const ConceptSet& cs) {
  return match_mentions(sentence, cs.phrases(concept_id));
}

// ---------------------------------------------------------------------------
// ScopeRules

ScopeRules::ScopeRules(const LabelerRules& rules)
    : window_(rules.scope_window), post_enabled_(rules.enable_post_negation) {
  rules.validate();
  auto index = [](CueIndex& into, const std::vector<std::string>& cues) {
    for (const auto& c : cues) {
      auto toks = phrase_tokens(c);
      if (!toks.empty()) into[toks.front()].push_back(std::move(toks));
    }
  };
  index(negation_, rules.negation_cues);
  index(uncertainty_, rules.uncertainty_cues);
  for (const auto& c : rules.post_negation_cues) post_negation_.push_back(phrase_tokens(c));
  for (const auto& b : rules.scope_breakers) {
    if (has_non_word(b)) {
      raw_breakers_.push_back(b);
    } else {
      word_breakers_.push_back(phrase_tokens(b));
    }
  }
}

bool ScopeRules::broken(const std::vector<Token>& tokens, std::string_view sentence,
                        std::size_t from_token, std::size_t to_token) const {
  // Tokens strictly between the cue and the mention, [from_token, to_token).
  for (std::size_t k = from_token; k < to_token; ++k) {
    for (const auto& b : word_breakers_) {
      if (k + b.size() <= to_token && matches_at(tokens, k, b)) return true;
    }
  }
  if (raw_breakers_.empty()) return false;
  std::size_t cb = from_token == 0 ? 0 : tokens[from_token - 1].end;
  std::size_t ce = to_token < tokens.size() ? tokens[to_token].begin : sentence.size();
  if (ce <= cb) return false;
  auto gap = lowercase(sentence.substr(cb, ce - cb));
  return std::any_of(raw_breakers_.begin(), raw_breakers_.end(),
                     [&](const std::string& b) { return gap.find(b) != std::string::npos; });
}

bool ScopeRules::cue_before(const CueIndex& cues, const std::vector<Token>& tokens,
                            std::string_view sentence, std::size_t first) const {
  const std::size_t lo = first > window_ ? first - window_ : 0;
  for (std::size_t k = lo; k < first; ++k) {
    const auto it = cues.find(tokens[k].text);
    if (it == cues.end()) continue;
    for (const auto& cue : it->second) {
      if (k + cue.size() <= first && matches_at(tokens, k, cue) &&
          !broken(tokens, sentence, k + cue.size(), first)) {
        return true;
      }
    }
  }
  return false;
}

bool ScopeRules::cue_after(const std::vector<Token>& tokens, std::string_view sentence,
                           std::size_t after) const {
  const std::size_t hi = std::min(tokens.size(), after + window_);
  for (const auto& cue : post_negation_) {
    for (std::size_t k = after; k + cue.size() <= hi; ++k) {
      if (matches_at(tokens, k, cue) && !broken(tokens, sentence, after, k)) return true;
    }
  }
  return false;
}

RawLabel ScopeRules::classify(const std::vector<Token>& tokens, std::string_view sentence,
                              std::size_t first, std::size_t after) const {
  if (cue_before(uncertainty_, tokens, sentence, first)) return RawLabel::Uncertain;
  if (cue_before(negation_, tokens, sentence, first)) return RawLabel::Negative;
  if (post_enabled_ && cue_after(tokens, sentence, after)) return RawLabel::Negative;
  return RawLabel::Positive;
}

RawLabel classify_mention(std::string_view sentence, Span span, const LabelerRules& rules) {
  ScopeRules scope(rules);
  auto tokens = tokenize(sentence);
  auto [first, after] = token_range(tokens, span);
  return scope.classify(tokens, sentence, first, after);
}

LabelMap binarize(const std::map<std::string, RawLabel>& raw) {
  LabelMap out;
  for (const auto& [name, label] : raw) out[name] = binarize(label);
  return out;
}

// ---------------------------------------------------------------------------
// Labeler

Labeler::Labeler(const ConceptSet& cs, const LabelerRules& rules) : cs_(cs), scope_(rules) {
  for (std::size_t c = 0; c < cs_.size(); ++c) {
    for (const auto& p : cs_.phrases(c)) {
      auto toks = phrase_tokens(p);
      if (toks.empty()) continue;
      auto& bucket = index_[toks.front()];
      bucket.push_back(Candidate{c, std::move(toks)});
    }
  }
  for (auto& [_, bucket] : index_) {
    std::stable_sort(bucket.begin(), bucket.end(), [](const Candidate& a, const Candidate& b) {
      if (a.concept_id != b.concept_id) return a.concept_id < b.concept_id;
      return a.tokens.size() > b.tokens.size();
    });
  }
}

template <typename Sink>
void Labeler::scan(std::string_view report, Sink&& sink) const {
  const auto sentences = segment_sentences(report);
  std::vector<std::size_t> next_free(cs_.size());
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    const std::string& sentence = sentences[s];
    const auto tokens = tokenize(sentence);
    std::fill(next_free.begin(), next_free.end(), 0);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      auto it = index_.find(tokens[i].text);
      if (it == index_.end()) continue;
      std::size_t done_concept = static_cast<std::size_t>(-1);
      for (const auto& cand : it->second) {
        if (cand.concept_id == done_concept || i < next_free[cand.concept_id]) continue;
        if (!matches_at(tokens, i, cand.tokens)) continue;
        const std::size_t after = i + cand.tokens.size();
        next_free[cand.concept_id] = after;
        done_concept = cand.concept_id;
        RawLabel polarity = scope_.classify(tokens, sentence, i, after);
        sink(cand.concept_id, s, Span{tokens[i].begin, tokens[after - 1].end}, polarity);
      }
    }
  }
}

std::vector<Mention> Labeler::mentions(std::string_view report) const {
  std::vector<Mention> out;
  scan(report, [&](std::size_t concept_id, std::size_t sentence, Span span, RawLabel polarity) {
    out.push_back(Mention{cs_.concepts()[concept_id], sentence, span, polarity});
  });
  return out;
}

std::vector<RawLabel> Labeler::label_vector(std::string_view report) const {
  std::vector<RawLabel> out(cs_.size(), RawLabel::NotMentioned);
  scan(report, [&](std::size_t concept_id, std::size_t, Span, RawLabel polarity) {
    if (precedence(polarity) > precedence(out[concept_id])) out[concept_id] = polarity;
  });
  return out;
}

std::map<std::string, RawLabel> Labeler::label(std::string_view report) const {
  auto vec = label_vector(report);
  std::map<std::string, RawLabel> out;
  for (std::size_t c = 0; c < vec.size(); ++c) out[cs_.concepts()[c]] = vec[c];
  return out;
}

std::vector<std::vector<RawLabel>> label_corpus(std::span<const StudyRecord> corpus,
                                                const Labeler& labeler) {
  std::vector<std::vector<RawLabel>> out(corpus.size());
  const auto n = static_cast<std::ptrdiff_t>(corpus.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = labeler.label_vector(corpus[i].generated_report);
  return out;
}

std::map<std::string, RawLabel> extract_labels(std::string_view report, const ConceptSet& cs,
                                               const LabelerRules& rules) {
  return Labeler(cs, rules).label(report);
}

}  // namespace raudit::labeler
