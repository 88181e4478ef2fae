#include "report_audit/serial_reference.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "report_audit/error.hpp"
#include "report_audit/metrics.hpp"
#include "report_audit/synth.hpp"

namespace raudit::serial {

using labeler::RawLabel;

namespace {

int rank(RawLabel l) {
  switch (l) {
    case RawLabel::Positive: return 3;
    case RawLabel::Uncertain: return 2;
    case RawLabel::Negative: return 1;
    case RawLabel::NotMentioned: return 0;
  }
  return 0;
}

}  // namespace

std::vector<RawLabel> label_report(std::string_view report, const ConceptSet& cs,
                                   const labeler::LabelerRules& rules) {
  std::vector<RawLabel> out(cs.size(), RawLabel::NotMentioned);
  for (const auto& sentence : labeler::segment_sentences(report)) {
    for (std::size_t c = 0; c < cs.size(); ++c) {
      for (const auto& span : labeler::match_mentions(sentence, cs.phrases(c))) {
        RawLabel pol = labeler::classify_mention(sentence, span, rules);
        if (rank(pol) > rank(out[c])) out[c] = pol;
      }
    }
  }
  return out;
}

std::vector<std::vector<RawLabel>> label_corpus(std::span<const StudyRecord> corpus,
                                                const ConceptSet& cs,
                                                const labeler::LabelerRules& rules) {
  std::vector<std::vector<RawLabel>> out;
  out.reserve(corpus.size());
  for (const auto& rec : corpus) out.push_back(label_report(rec.generated_report, cs, rules));
  return out;
}

audit::Partition partition(std::span<const StudyRecord> corpus, std::string_view concept_id,
                           const audit::LabelsByStudy& labels, const audit::AuditPolicy& policy) {
  std::set<std::string> pass, mismatch, low;
  const std::string name(concept_id);
  for (const auto& rec : corpus) {
    const auto lit = labels.find(rec.study_id);
    const auto ait = rec.ac_predictions.find(name);
    if (lit == labels.end() || !lit->second.count(name) || ait == rec.ac_predictions.end()) {
      throw DataError(fmt::format("study '{}' lacks inputs for '{}'", rec.study_id, name));
    }
    const BinaryLabel c_t = lit->second.at(name);
    const AcPrediction& ac = ait->second;
    if (c_t != ac.c_i) {
      mismatch.insert(rec.study_id);
    } else if (ac.p_ac >= policy.t) {
      pass.insert(rec.study_id);
    } else {
      low.insert(rec.study_id);
    }
  }
  audit::Partition p;
  p.concept_id = name;
  p.pass_ids.assign(pass.begin(), pass.end());
  p.mismatch_ids.assign(mismatch.begin(), mismatch.end());
  p.low_confidence_ids.assign(low.begin(), low.end());
  p.empty = corpus.empty();
  p.pass_fraction = p.empty ? 0.0 : static_cast<double>(pass.size()) / static_cast<double>(corpus.size());
  return p;
}

relsim::SimResult simulate(const SynthProfile& profile, const ConceptSet& cs,
                           const labeler::LabelerRules& rules, const audit::AuditPolicy& policy) {
  policy.validate(cs);
  SynthGenerator gen(profile, cs, rules);
  const std::vector<std::string>& names = policy.concepts.empty() ? cs.concepts() : policy.concepts;
  relsim::OutcomeCounts counts;
  for (std::size_t i = 0; i < gen.size(); ++i) {
    const StudyRecord rec = gen.study(i);
    const auto raw = label_report(rec.generated_report, cs, rules);
    for (const auto& name : names) {
      const BinaryLabel c_t = labeler::binarize(raw[*cs.index_of(name)]);
      const AcPrediction& ac = rec.ac_predictions.at(name);
      const BinaryLabel truth = rec.reference_labels->at(name);
      ++counts.pairs;
      if (c_t != truth && ac.c_i != truth) ++counts.joint_failure;
      if (c_t != ac.c_i) {
        ++counts.mismatch;
      } else if (ac.p_ac < policy.t) {
        ++counts.low_confidence;
      } else {
        ++counts.pass;
        if (c_t != truth) ++counts.pass_wrong;
      }
    }
  }
  return relsim::SimResult::from_counts(counts, profile.seed);
}

relsim::SweepCurve sweep_threshold(std::span<const StudyRecord> corpus,
                                   const audit::LabelsByStudy& labels,
                                   const std::vector<std::string>& concepts,
                                   std::span<const double> t_grid) {
  relsim::validate_grid(t_grid);
  relsim::SweepCurve curve;
  for (double t : t_grid) {
    audit::AuditPolicy policy{t, concepts};
    metrics::Confusion pass;
    std::size_t pairs = 0, wrong = 0, joint = 0;
    for (const auto& c : concepts) {
      const auto part = serial::partition(corpus, c, labels, policy);
      const std::set<std::string> passed(part.pass_ids.begin(), part.pass_ids.end());
      for (const auto& rec : corpus) {
        const BinaryLabel c_t = labels.at(rec.study_id).at(c);
        const BinaryLabel truth = rec.reference_labels.value().at(c);
        ++pairs;
        if (c_t != truth && rec.ac_predictions.at(c).c_i != truth) ++joint;
        if (!passed.count(rec.study_id)) continue;
        pass.add(c_t, truth);
        if (c_t != truth) ++wrong;
      }
    }
    relsim::SweepPoint pt;
    pt.t = t;
    pt.pass_fraction = pairs ? static_cast<double>(pass.total()) / static_cast<double>(pairs) : 0.0;
    pt.f1_pass = metrics::prf(pass).f1;
    pt.residual_error = pass.total() ? static_cast<double>(wrong) / static_cast<double>(pass.total()) : 0.0;
    pt.joint_failure_rate = pairs ? static_cast<double>(joint) / static_cast<double>(pairs) : 0.0;
    pt.pass_set_empty = pass.total() == 0;
    curve.points.push_back(pt);
  }
  return curve;
}

}  // namespace raudit::serial
