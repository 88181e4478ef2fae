#pragma once

// Deterministic synthetic corpora with controlled text/image error rates.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "report_audit/corpus.hpp"
#include "report_audit/labeler.hpp"

namespace raudit {

/// Per-study RNG seed derived from the profile seed and the study index, so
/// study i is identical regardless of how the corpus is chunked or threaded.
std::uint64_t study_seed(std::uint64_t seed, std::size_t index);

/// Generates study records one at a time.
///
/// For each concept a true label is drawn at the concept's prevalence.
/// Text-path and image-path flips are drawn jointly from joint_flip_model.
/// The generated report is assembled from sentence templates that were
/// checked against the labeler rules up front, so labeling the report
/// recovers the text-path label exactly. Image confidence is
/// p_ac = 0.5 + u/2 with u ~ Beta(a, b) when the image path is right and
/// u ~ Beta(b, a) when it is wrong.
class SynthGenerator {
 public:
  SynthGenerator(const SynthProfile& profile, const ConceptSet& cs,
                 const labeler::LabelerRules& rules);

  StudyRecord study(std::size_t index) const;
  std::size_t size() const { return profile_.n_studies; }
  const SynthProfile& profile() const { return profile_; }

 private:
  SynthProfile profile_;
  ConceptSet cs_;
  FlipModel flips_;
  std::vector<double> prevalence_;
  std::vector<std::vector<std::string>> positive_;  // per concept, positive or uncertain
  std::vector<std::vector<std::string>> negative_;  // per concept
};

/// Materializes the whole corpus (parallel over studies).
std::vector<StudyRecord> synth_generate(const SynthProfile& profile, const ConceptSet& cs,
                                        const labeler::LabelerRules& rules = {});

}  // namespace raudit
