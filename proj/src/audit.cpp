#include "report_audit/audit.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "report_audit/error.hpp"

namespace raudit::audit {

using nlohmann::json;

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Mismatch: return "mismatch";
    case Verdict::LowConfidence: return "low_confidence";
  }
  return "mismatch";
}

void AuditPolicy::validate(const ConceptSet& cs) const {
  if (!(t >= 0.0 && t <= 1.0)) throw ConfigError(fmt::format("threshold t must be in [0,1], got {}", t));
  for (const auto& c : concepts) {
    if (!cs.contains(c)) throw ConfigError(fmt::format("policy names unknown concept '{}'", c));
  }
}

namespace {

BinaryLabel text_label(const LabelMap& labels, std::string_view concept_id, const std::string& id) {
  auto it = labels.find(std::string(concept_id));
  if (it == labels.end()) {
    throw DataError(fmt::format("study '{}': no report label for concept '{}'", id, concept_id));
  }
  return it->second;
}

const AcPrediction& image_prediction(const StudyRecord& rec, std::string_view concept_id) {
  auto it = rec.ac_predictions.find(std::string(concept_id));
  if (it == rec.ac_predictions.end()) {
    throw DataError(fmt::format("study '{}': no AC prediction for concept '{}'", rec.study_id, concept_id));
  }
  return it->second;
}

}  // namespace

LabelsByStudy binarized_labels(std::span<const StudyRecord> corpus, const ConceptSet& cs,
                               const std::vector<std::vector<labeler::RawLabel>>& raw) {
  if (raw.size() != corpus.size()) throw DataError("label vector count does not match corpus size");
  LabelsByStudy out;
  out.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    LabelMap m;
    for (std::size_t c = 0; c < cs.size(); ++c) m.emplace(cs.concepts()[c], labeler::binarize(raw[i].at(c)));
    out.emplace(corpus[i].study_id, std::move(m));
  }
  return out;
}

std::map<std::string, Verdict> audit_study(const StudyRecord& rec, const LabelMap& labels,
                                           const AuditPolicy& policy) {
  std::map<std::string, Verdict> out;
  for (const auto& c : policy.concepts) {
    out[c] = audit_concept(text_label(labels, c, rec.study_id), image_prediction(rec, c), policy.t);
  }
  return out;
}

bool all_pass(const std::map<std::string, Verdict>& verdicts) {
  return std::all_of(verdicts.begin(), verdicts.end(),
                     [](const auto& kv) { return kv.second == Verdict::Pass; });
}

Partition partition(std::span<const StudyRecord> corpus, std::string_view concept_id,
                    const LabelsByStudy& labels, const AuditPolicy& policy) {
  const auto n = static_cast<std::ptrdiff_t>(corpus.size());
  std::vector<Verdict> verdicts(corpus.size());
  bool failed = false;
  std::string failure;

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto& rec = corpus[i];
    try {
      auto it = labels.find(rec.study_id);
      if (it == labels.end()) throw DataError(fmt::format("study '{}' has no report labels", rec.study_id));
      verdicts[i] = audit_concept(text_label(it->second, concept_id, rec.study_id),
                                  image_prediction(rec, concept_id), policy.t);
    } catch (const DataError& e) {
#pragma omp critical(raudit_partition_error)
      {
        if (!failed) {
          failed = true;
          failure = e.what();
        }
      }
    }
  }
  if (failed) throw DataError(failure);

  Partition p;
  p.concept_id = std::string(concept_id);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    switch (verdicts[i]) {
      case Verdict::Pass: p.pass_ids.push_back(corpus[i].study_id); break;
      case Verdict::Mismatch: p.mismatch_ids.push_back(corpus[i].study_id); break;
      case Verdict::LowConfidence: p.low_confidence_ids.push_back(corpus[i].study_id); break;
    }
  }
  std::sort(p.pass_ids.begin(), p.pass_ids.end());
  std::sort(p.mismatch_ids.begin(), p.mismatch_ids.end());
  std::sort(p.low_confidence_ids.begin(), p.low_confidence_ids.end());
  p.empty = corpus.empty();
  p.pass_fraction = p.empty ? 0.0 : static_cast<double>(p.pass_ids.size()) / static_cast<double>(corpus.size());
  return p;
}

json Partition::to_json(double t) const {
  return json{{"concept", concept_id},
              {"t", t},
              {"total", total()},
              {"empty", empty},
              {"pass_count", pass_ids.size()},
              {"mismatch_count", mismatch_ids.size()},
              {"low_confidence_count", low_confidence_ids.size()},
              {"pass_fraction", pass_fraction},
              {"pass_ids", pass_ids},
              {"mismatch_ids", mismatch_ids},
              {"low_confidence_ids", low_confidence_ids}};
}

json verdict_line(const StudyRecord& rec, std::string_view concept_id, BinaryLabel c_t, Verdict v,
                  double t) {
  const auto& ac = image_prediction(rec, concept_id);
  return json{{"study_id", rec.study_id}, {"concept", concept_id}, {"verdict", to_string(v)},
              {"c_t", c_t},             {"c_i", ac.c_i},      {"p_ac", ac.p_ac},
              {"t", t}};
}

}  // namespace raudit::audit
