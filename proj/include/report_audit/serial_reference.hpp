#pragma once

// Straightforward single-threaded versions of the parallel kernels. They are
// kept for cross-checking in tests and as the benchmark baseline; the
// labeling path here uses the per-phrase free functions rather than the
// indexed Labeler scan.

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "report_audit/audit.hpp"
#include "report_audit/corpus.hpp"
#include "report_audit/labeler.hpp"
#include "report_audit/relsim.hpp"

namespace raudit::serial {

std::vector<labeler::RawLabel> label_report(std::string_view report, const ConceptSet& cs,
                                            const labeler::LabelerRules& rules);

std::vector<std::vector<labeler::RawLabel>> label_corpus(std::span<const StudyRecord> corpus,
                                                         const ConceptSet& cs,
                                                         const labeler::LabelerRules& rules);

audit::Partition partition(std::span<const StudyRecord> corpus, std::string_view concept_id,
                           const audit::LabelsByStudy& labels, const audit::AuditPolicy& policy);

relsim::SimResult simulate(const SynthProfile& profile, const ConceptSet& cs,
                           const labeler::LabelerRules& rules, const audit::AuditPolicy& policy);

relsim::SweepCurve sweep_threshold(std::span<const StudyRecord> corpus,
                                   const audit::LabelsByStudy& labels,
                                   const std::vector<std::string>& concepts,
                                   std::span<const double> t_grid);

}  // namespace raudit::serial
