#include "report_audit/relsim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/special_functions/beta.hpp>
#include <fmt/format.h>

#include "report_audit/error.hpp"
#include "report_audit/metrics.hpp"
#include "report_audit/synth.hpp"

namespace raudit::relsim {

using nlohmann::json;

PassStats analytic_pass_stats(double e_ct, double e_ci) {
  PassStats s;
  const double both_wrong = e_ct * e_ci;
  s.pass_rate = (1.0 - e_ct) * (1.0 - e_ci) + both_wrong;
  s.residual_error = s.pass_rate > 0.0 ? both_wrong / s.pass_rate : 0.0;
  return s;
}

namespace {

// P(u >= x) for u ~ Beta(a, b).
double beta_tail(double a, double b, double x) {
  if (x <= 0.0) return 1.0;
  if (x >= 1.0) return 0.0;
  return boost::math::ibetac(a, b, x);
}

double rate(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

PassStats analytic_pass_stats(const FlipModel& flips, double t, const ConfidenceModel& conf) {
  // p_ac >= t  <=>  u >= 2t - 1
  const double x = 2.0 * t - 1.0;
  const double right = flips.neither * beta_tail(conf.a, conf.b, x);
  const double wrong = flips.both * beta_tail(conf.b, conf.a, x);
  PassStats s;
  s.pass_rate = right + wrong;
  s.residual_error = s.pass_rate > 0.0 ? wrong / s.pass_rate : 0.0;
  return s;
}

OutcomeCounts& OutcomeCounts::operator+=(const OutcomeCounts& o) {
  pairs += o.pairs;
  pass += o.pass;
  mismatch += o.mismatch;
  low_confidence += o.low_confidence;
  pass_wrong += o.pass_wrong;
  joint_failure += o.joint_failure;
  return *this;
}

SimResult SimResult::from_counts(const OutcomeCounts& counts, std::uint64_t seed) {
  SimResult r;
  r.counts = counts;
  r.n = counts.pairs;
  r.seed = seed;
  r.pass_rate = rate(counts.pass, counts.pairs);
  r.mismatch_rate = rate(counts.mismatch, counts.pairs);
  r.deferral_rate = rate(counts.low_confidence, counts.pairs);
  r.joint_failure_rate = rate(counts.joint_failure, counts.pairs);
  r.pass_set_empty = counts.pass == 0;
  r.residual_error = rate(counts.pass_wrong, counts.pass);
  return r;
}

json SimResult::to_json() const {
  return json{{"pass_rate", pass_rate},
              {"residual_error", residual_error},
              {"deferral_rate", deferral_rate},
              {"mismatch_rate", mismatch_rate},
              {"joint_failure_rate", joint_failure_rate},
              {"n", n},
              {"seed", seed},
              {"pass_set_empty", pass_set_empty},
              {"counts", {{"pairs", counts.pairs},
                          {"pass", counts.pass},
                          {"mismatch", counts.mismatch},
                          {"low_confidence", counts.low_confidence},
                          {"pass_wrong", counts.pass_wrong},
                          {"joint_failure", counts.joint_failure}}}};
}

SimResult simulate(const SynthProfile& profile, const ConceptSet& cs,
                   const labeler::LabelerRules& rules, const audit::AuditPolicy& policy) {
  policy.validate(cs);
  SynthGenerator gen(profile, cs, rules);
  labeler::Labeler lab(cs, rules);

  std::vector<std::size_t> audited;
  if (policy.concepts.empty()) {
    for (std::size_t c = 0; c < cs.size(); ++c) audited.push_back(c);
  } else {
    for (const auto& name : policy.concepts) audited.push_back(*cs.index_of(name));
  }

  const auto n = static_cast<std::ptrdiff_t>(gen.size());
  std::size_t pairs = 0, pass = 0, mismatch = 0, low = 0, pass_wrong = 0, joint = 0;
#pragma omp parallel for schedule(dynamic, 256) \
    reduction(+ : pairs, pass, mismatch, low, pass_wrong, joint)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const StudyRecord rec = gen.study(static_cast<std::size_t>(i));
    const auto raw = lab.label_vector(rec.generated_report);
    for (std::size_t c : audited) {
      const std::string& name = cs.concepts()[c];
      const BinaryLabel c_t = labeler::binarize(raw[c]);
      const AcPrediction& ac = rec.ac_predictions.at(name);
      const BinaryLabel truth = rec.reference_labels->at(name);
      ++pairs;
      if (c_t != truth && ac.c_i != truth) ++joint;
      switch (audit::audit_concept(c_t, ac, policy.t)) {
        case audit::Verdict::Pass:
          ++pass;
          if (c_t != truth) ++pass_wrong;
          break;
        case audit::Verdict::Mismatch: ++mismatch; break;
        case audit::Verdict::LowConfidence: ++low; break;
      }
    }
  }
  return SimResult::from_counts(OutcomeCounts{pairs, pass, mismatch, low, pass_wrong, joint},
                                profile.seed);
}

// ---------------------------------------------------------------------------
// Sweeps

void validate_grid(std::span<const double> t_grid) {
  if (t_grid.empty()) throw ConfigError("threshold grid is empty");
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (!(t_grid[i] >= 0.0 && t_grid[i] <= 1.0)) {
      throw ConfigError(fmt::format("threshold {} is outside [0,1]", t_grid[i]));
    }
    if (i > 0 && !(t_grid[i] > t_grid[i - 1])) {
      throw ConfigError("threshold grid must be strictly ascending");
    }
  }
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) throw ConfigError(fmt::format("empty entry in threshold grid '{}'", text));
    try {
      std::size_t used = 0;
      double v = std::stod(item.substr(b), &used);
      if (item.find_first_not_of(" \t", b + used) != std::string::npos) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::logic_error&) {
      throw ConfigError(fmt::format("bad threshold '{}' in grid", item));
    }
  }
  return out;
}

namespace {

struct PairView {
  BinaryLabel c_t;
  BinaryLabel c_i;
  BinaryLabel truth;
  double p_ac;
};

}  // namespace

SweepCurve sweep_threshold(std::span<const StudyRecord> corpus, const audit::LabelsByStudy& labels,
                           const std::vector<std::string>& concepts, std::span<const double> t_grid) {
  validate_grid(t_grid);
  std::vector<PairView> pairs;
  pairs.reserve(corpus.size() * concepts.size());
  std::size_t joint = 0;
  for (const auto& rec : corpus) {
    if (!rec.reference_labels) throw DataError(fmt::format("study '{}' has no reference_labels", rec.study_id));
    auto lit = labels.find(rec.study_id);
    if (lit == labels.end()) throw DataError(fmt::format("study '{}' has no report labels", rec.study_id));
    for (const auto& c : concepts) {
      auto ct = lit->second.find(c);
      auto ac = rec.ac_predictions.find(c);
      auto ref = rec.reference_labels->find(c);
      if (ct == lit->second.end() || ac == rec.ac_predictions.end() || ref == rec.reference_labels->end()) {
        throw DataError(fmt::format("study '{}' lacks label, prediction or reference for '{}'", rec.study_id, c));
      }
      pairs.push_back(PairView{ct->second, ac->second.c_i, ref->second, ac->second.p_ac});
      if (ct->second != ref->second && ac->second.c_i != ref->second) ++joint;
    }
  }

  SweepCurve curve;
  curve.points.resize(t_grid.size());
  const auto n_points = static_cast<std::ptrdiff_t>(t_grid.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t k = 0; k < n_points; ++k) {
    const double t = t_grid[k];
    metrics::Confusion pass;
    std::size_t wrong = 0;
    for (const auto& p : pairs) {
      if (p.c_t != p.c_i || p.p_ac < t) continue;
      pass.add(p.c_t, p.truth);
      if (p.c_t != p.truth) ++wrong;
    }
    SweepPoint& pt = curve.points[k];
    pt.t = t;
    pt.pass_fraction = rate(pass.total(), pairs.size());
    pt.f1_pass = metrics::prf(pass).f1;
    pt.residual_error = rate(wrong, pass.total());
    pt.joint_failure_rate = rate(joint, pairs.size());
    pt.pass_set_empty = pass.total() == 0;
  }
  return curve;
}

SweepCurve sweep_threshold(const SynthProfile& profile, const ConceptSet& cs,
                           const labeler::LabelerRules& rules,
                           const std::vector<std::string>& concepts, std::span<const double> t_grid) {
  validate_grid(t_grid);
  const auto corpus = synth_generate(profile, cs, rules);
  labeler::Labeler lab(cs, rules);
  const auto labels = audit::binarized_labels(corpus, cs, labeler::label_corpus(corpus, lab));
  return sweep_threshold(corpus, labels, concepts.empty() ? cs.concepts() : concepts, t_grid);
}

std::string SweepCurve::to_csv() const {
  std::string out = "t,pass_fraction,f1_pass,residual_error,joint_failure_rate\n";
  for (const auto& p : points) {
    out += fmt::format("{},{},{},{},{}\n", p.t, p.pass_fraction, p.f1_pass, p.residual_error,
                       p.joint_failure_rate);
  }
  return out;
}

json SweepCurve::to_json() const {
  json pts = json::array();
  for (const auto& p : points) {
    pts.push_back({{"t", p.t},
                   {"pass_fraction", p.pass_fraction},
                   {"f1_pass", p.f1_pass},
                   {"residual_error", p.residual_error},
                   {"joint_failure_rate", p.joint_failure_rate},
                   {"pass_set_empty", p.pass_set_empty}});
  }
  return json{{"points", pts}};
}

}  // namespace raudit::relsim
