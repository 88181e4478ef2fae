#include "report_audit/synth.hpp"

#include <cctype>
#include <cmath>
#include <random>

#include <boost/random/bernoulli_distribution.hpp>
#include <boost/random/beta_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <fmt/format.h>

#include "report_audit/error.hpp"

namespace raudit {
namespace {

using labeler::RawLabel;

struct Template {
  const char* pattern;
  RawLabel polarity;
};

constexpr Template kTemplates[] = {
    {"There is {}.", RawLabel::Positive},
    {"Findings are consistent with {}.", RawLabel::Positive},
    {"Moderate {} is seen.", RawLabel::Positive},
    {"Findings may represent {}.", RawLabel::Uncertain},
    {"Possible {}.", RawLabel::Uncertain},
    {"No {}.", RawLabel::Negative},
    {"There is no {}.", RawLabel::Negative},
    {"No evidence of {}.", RawLabel::Negative},
};

std::string fill(const char* pattern, const std::string& phrase) {
  std::string s = fmt::format(fmt::runtime(pattern), phrase);
  s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

// True when the sentence is one segment that mentions only `concept`, with
// the intended polarity.
bool labels_exactly(const labeler::Labeler& lab, const std::string& sentence, std::size_t concept_id,
                    RawLabel polarity) {
  if (labeler::segment_sentences(sentence).size() != 1) return false;
  auto labels = lab.label_vector(sentence);
  for (std::size_t c = 0; c < labels.size(); ++c) {
    RawLabel want = c == concept_id ? polarity : RawLabel::NotMentioned;
    if (labels[c] != want) return false;
  }
  return true;
}

}  // namespace

std::uint64_t study_seed(std::uint64_t seed, std::size_t index) {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(index) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

SynthGenerator::SynthGenerator(const SynthProfile& profile, const ConceptSet& cs,
                               const labeler::LabelerRules& rules)
    : profile_(profile), cs_(cs) {
  profile_.validate();
  flips_ = joint_flip_model(profile_.e_ct, profile_.e_ci, profile_.rho);
  for (const auto& [name, _] : profile_.prevalence) {
    if (!cs_.contains(name)) throw ConfigError(fmt::format("prevalence for unknown concept '{}'", name));
  }

  labeler::Labeler lab(cs_, rules);
  positive_.resize(cs_.size());
  negative_.resize(cs_.size());
  for (std::size_t c = 0; c < cs_.size(); ++c) {
    prevalence_.push_back(profile_.prevalence_for(cs_.concepts()[c]));
    for (const auto& phrase : cs_.phrases(c)) {
      for (const auto& t : kTemplates) {
        std::string sentence = fill(t.pattern, phrase);
        if (!labels_exactly(lab, sentence, c, t.polarity)) continue;
        (t.polarity == RawLabel::Negative ? negative_ : positive_)[c].push_back(std::move(sentence));
      }
    }
    if (positive_[c].empty()) {
      throw ConfigError(fmt::format(
          "concept '{}' has no lexicon phrase that can be rendered unambiguously as a positive "
          "mention under the current rules",
          cs_.concepts()[c]));
    }
  }
}

StudyRecord SynthGenerator::study(std::size_t index) const {
  std::mt19937_64 eng(study_seed(profile_.seed, index));
  boost::random::uniform_01<double> unit;
  boost::random::beta_distribution<double> confident(profile_.confidence.a, profile_.confidence.b);
  boost::random::bernoulli_distribution<double> coin(0.5);

  StudyRecord rec;
  rec.study_id = fmt::format("synth-{:07d}", index);
  rec.reference_labels.emplace();
  std::string generated;
  std::string reference;

  auto render = [&](std::string& out, std::size_t c, BinaryLabel label) {
    const std::vector<std::string>* pool = nullptr;
    if (label == 1) {
      pool = &positive_[c];
    } else {
      // Negative labels are either omitted or stated with a negation cue.
      bool omit = coin(eng);
      if (!omit && !negative_[c].empty()) pool = &negative_[c];
    }
    if (pool == nullptr) return;
    boost::random::uniform_int_distribution<std::size_t> pick(0, pool->size() - 1);
    if (!out.empty()) out += ' ';
    out += (*pool)[pick(eng)];
  };

  for (std::size_t c = 0; c < cs_.size(); ++c) {
    const std::string& name = cs_.concepts()[c];
    const BinaryLabel truth = unit(eng) < prevalence_[c] ? 1 : 0;

    const double cell = unit(eng);
    bool text_wrong = false;
    bool image_wrong = false;
    if (cell < flips_.both) {
      text_wrong = image_wrong = true;
    } else if (cell < flips_.both + flips_.text_only) {
      text_wrong = true;
    } else if (cell < flips_.both + flips_.text_only + flips_.image_only) {
      image_wrong = true;
    }
    const BinaryLabel text_label = text_wrong ? 1 - truth : truth;
    const BinaryLabel image_label = image_wrong ? 1 - truth : truth;

    double u = confident(eng);
    if (image_wrong) u = 1.0 - u;
    const double p_ac = 0.5 + 0.5 * u;
    double q = image_label == 1 ? p_ac : 1.0 - p_ac;
    if (image_label == 0 && q >= 0.5) q = std::nextafter(0.5, 0.0);

    rec.reference_labels->emplace(name, truth);
    rec.ac_predictions.emplace(name, AcPrediction::from_q(q));
    render(generated, c, text_label);
    render(reference, c, truth);
  }
  rec.generated_report = std::move(generated);
  rec.reference_report = std::move(reference);
  return rec;
}

std::vector<StudyRecord> synth_generate(const SynthProfile& profile, const ConceptSet& cs,
                                        const labeler::LabelerRules& rules) {
  SynthGenerator gen(profile, cs, rules);
  std::vector<StudyRecord> out(gen.size());
  const auto n = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = gen.study(static_cast<std::size_t>(i));
  return out;
}

}  // namespace raudit
