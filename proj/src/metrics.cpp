#include "report_audit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include <fmt/format.h>

#include "report_audit/error.hpp"
#include "report_audit/labeler.hpp"

namespace raudit::metrics {

using nlohmann::json;

void Confusion::add(BinaryLabel pred, BinaryLabel ref) {
  if (pred == 1) {
    ++(ref == 1 ? tp : fp);
  } else {
    ++(ref == 1 ? fn : tn);
  }
}

Confusion& Confusion::operator+=(const Confusion& o) {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  tn += o.tn;
  return *this;
}

Confusion confusion(const std::map<std::string, BinaryLabel>& preds,
                    const std::map<std::string, BinaryLabel>& refs) {
  if (preds.size() != refs.size()) {
    throw DataError(fmt::format("confusion: {} predictions vs {} references", preds.size(), refs.size()));
  }
  Confusion c;
  auto r = refs.begin();
  for (const auto& [key, pred] : preds) {
    if (r->first != key) throw DataError(fmt::format("confusion: key '{}' has no reference", key));
    c.add(pred, r->second);
    ++r;
  }
  return c;
}

namespace {

double ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

}  // namespace

Prf prf(const Confusion& c) {
  Prf out;
  out.precision = ratio(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fp));
  out.recall = ratio(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fn));
  out.f1 = ratio(2.0 * out.precision * out.recall, out.precision + out.recall);
  return out;
}

double macro_avg(const std::map<std::string, double>& per_class, std::span<const std::string> subset) {
  if (subset.empty()) throw DataError("macro_avg: empty class subset");
  double sum = 0.0;
  for (const auto& name : subset) {
    auto it = per_class.find(name);
    if (it == per_class.end()) throw DataError(fmt::format("macro_avg: no score for '{}'", name));
    sum += it->second;
  }
  return sum / static_cast<double>(subset.size());
}

Prf micro_avg(const std::map<std::string, Confusion>& confusions, std::span<const std::string> subset) {
  if (subset.empty()) throw DataError("micro_avg: empty class subset");
  Confusion pooled;
  for (const auto& name : subset) {
    auto it = confusions.find(name);
    if (it == confusions.end()) throw DataError(fmt::format("micro_avg: no confusion for '{}'", name));
    pooled += it->second;
  }
  return prf(pooled);
}

MetricsReport classification_report(const std::map<std::string, Confusion>& confusions,
                                    std::span<const std::string> subset) {
  MetricsReport r;
  r.class_subset.assign(subset.begin(), subset.end());
  std::map<std::string, double> p, rc, f;
  for (const auto& [name, c] : confusions) {
    ClassScore s{prf(c), c.tp + c.fn};
    r.per_class[name] = s;
    p[name] = s.prf.precision;
    rc[name] = s.prf.recall;
    f[name] = s.prf.f1;
  }
  r.macro = Prf{macro_avg(p, subset), macro_avg(rc, subset), macro_avg(f, subset)};
  r.micro = micro_avg(confusions, subset);
  return r;
}

json MetricsReport::to_json() const {
  json pc = json::object();
  for (const auto& [name, s] : per_class) {
    pc[name] = {{"precision", s.prf.precision}, {"recall", s.prf.recall}, {"f1", s.prf.f1},
                {"support", s.support}};
  }
  auto j = [](const Prf& x) { return json{{"precision", x.precision}, {"recall", x.recall}, {"f1", x.f1}}; };
  return json{{"per_class", pc}, {"macro", j(macro)}, {"micro", j(micro)}, {"class_subset", class_subset}};
}

// ---------------------------------------------------------------------------
// Text metrics

std::vector<std::string> text_tokens(std::string_view text) {
  std::vector<std::string> out;
  for (auto& t : labeler::tokenize(text)) out.push_back(std::move(t.text));
  return out;
}

namespace {

std::unordered_map<std::string, std::size_t> ngram_counts(const std::vector<std::string>& toks, int k) {
  std::unordered_map<std::string, std::size_t> counts;
  const auto len = static_cast<std::size_t>(k);
  for (std::size_t i = 0; i + len <= toks.size(); ++i) {
    std::string key;
    for (std::size_t j = 0; j < len; ++j) {
      if (j) key += '\x1f';
      key += toks[i + j];
    }
    ++counts[key];
  }
  return counts;
}

}  // namespace

double bleu_n(std::string_view candidate, std::string_view reference, int n) {
  if (n < 1) throw DataError("bleu_n: n must be >= 1");
  const auto cand = text_tokens(candidate);
  const auto ref = text_tokens(reference);
  if (cand.empty()) return 0.0;
  double log_sum = 0.0;
  for (int k = 1; k <= n; ++k) {
    if (cand.size() < static_cast<std::size_t>(k)) return 0.0;
    auto cc = ngram_counts(cand, k);
    auto rc = ngram_counts(ref, k);
    std::size_t clipped = 0;
    for (const auto& [gram, count] : cc) {
      auto it = rc.find(gram);
      if (it != rc.end()) clipped += std::min(count, it->second);
    }
    if (clipped == 0) return 0.0;
    const double total = static_cast<double>(cand.size() - static_cast<std::size_t>(k) + 1);
    log_sum += std::log(static_cast<double>(clipped) / total);
  }
  const double c = static_cast<double>(cand.size());
  const double r = static_cast<double>(ref.size());
  const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
  return bp * std::exp(log_sum / n);
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l(std::string_view candidate, std::string_view reference) {
  const auto cand = text_tokens(candidate);
  const auto ref = text_tokens(reference);
  const double lcs = static_cast<double>(lcs_length(cand, ref));
  const double r = ratio(lcs, static_cast<double>(ref.size()));
  const double p = ratio(lcs, static_cast<double>(cand.size()));
  return ratio(2.0 * p * r, p + r);
}

// ---------------------------------------------------------------------------
// Audit evaluation

std::string percent(double fraction) { return fmt::format("{:.1f}", 100.0 * fraction); }

AuditEvalTable audit_eval(std::span<const StudyRecord> corpus, const audit::LabelsByStudy& labels,
                          const audit::AuditPolicy& policy, const ConceptSet& cs) {
  for (const auto& rec : corpus) {
    if (!rec.reference_labels) {
      throw DataError(fmt::format("study '{}' has no reference_labels", rec.study_id));
    }
    if (!labels.count(rec.study_id)) {
      throw DataError(fmt::format("study '{}' has no report labels", rec.study_id));
    }
    for (const auto& c : policy.concepts) {
      if (!rec.reference_labels->count(c)) {
        throw DataError(fmt::format("study '{}': reference_labels lacks '{}'", rec.study_id, c));
      }
      if (!labels.at(rec.study_id).count(c)) {
        throw DataError(fmt::format("study '{}': no report label for '{}'", rec.study_id, c));
      }
      if (!rec.ac_predictions.count(c)) {
        throw DataError(fmt::format("study '{}': no AC prediction for '{}'", rec.study_id, c));
      }
    }
  }

  AuditEvalTable table;
  table.t = policy.t;
  const auto n = static_cast<std::ptrdiff_t>(corpus.size());
  for (const auto& concept_id : policy.concepts) {
    std::size_t atp = 0, afp = 0, afn = 0, atn = 0;
    std::size_t ptp = 0, pfp = 0, pfn = 0, ptn = 0;
#pragma omp parallel for schedule(static) reduction(+ : atp, afp, afn, atn, ptp, pfp, pfn, ptn)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const auto& rec = corpus[i];
      const BinaryLabel c_t = labels.at(rec.study_id).at(concept_id);
      const BinaryLabel ref = rec.reference_labels->at(concept_id);
      const bool passed =
          audit::audit_concept(c_t, rec.ac_predictions.at(concept_id), policy.t) == audit::Verdict::Pass;
      if (c_t == 1) {
        if (ref == 1) { ++atp; if (passed) ++ptp; } else { ++afp; if (passed) ++pfp; }
      } else {
        if (ref == 1) { ++afn; if (passed) ++pfn; } else { ++atn; if (passed) ++ptn; }
      }
    }
    Confusion all{atp, afp, afn, atn};
    Confusion pass{ptp, pfp, pfn, ptn};
    AuditEvalRow row;
    row.concept_id = concept_id;
    row.f1_all = prf(all).f1;
    row.f1_pass = prf(pass).f1;
    row.n_all = all.total();
    row.n_pass = pass.total();
    row.pass_fraction = corpus.empty() ? 0.0 : static_cast<double>(row.n_pass) / static_cast<double>(row.n_all);
    table.rows.push_back(row);
  }

  for (const auto& c : cs.report_subset()) {
    if (std::find(policy.concepts.begin(), policy.concepts.end(), c) != policy.concepts.end()) {
      table.macro_subset.push_back(c);
    }
  }
  if (table.macro_subset.empty()) table.macro_subset = policy.concepts;
  if (!table.macro_subset.empty()) {
    std::map<std::string, double> all, pass, frac;
    for (const auto& r : table.rows) {
      all[r.concept_id] = r.f1_all;
      pass[r.concept_id] = r.f1_pass;
      frac[r.concept_id] = r.pass_fraction;
    }
    table.macro_f1_all = macro_avg(all, table.macro_subset);
    table.macro_f1_pass = macro_avg(pass, table.macro_subset);
    table.macro_pass_fraction = macro_avg(frac, table.macro_subset);
  }
  return table;
}

std::string AuditEvalTable::to_csv() const {
  std::string out = "concept,f1_all,f1_pass,pass_pct\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{}\n", r.concept_id, percent(r.f1_all), percent(r.f1_pass),
                       percent(r.pass_fraction));
  }
  out += fmt::format("macro_avg,{},{},{}\n", percent(macro_f1_all), percent(macro_f1_pass),
                     percent(macro_pass_fraction));
  return out;
}

json AuditEvalTable::to_json() const {
  json rows_j = json::array();
  for (const auto& r : rows) {
    rows_j.push_back({{"concept", r.concept_id},
                      {"f1_all", r.f1_all},
                      {"f1_pass", r.f1_pass},
                      {"pass_fraction", r.pass_fraction},
                      {"n_all", r.n_all},
                      {"n_pass", r.n_pass}});
  }
  return json{{"t", t},
              {"rows", rows_j},
              {"macro", {{"subset", macro_subset},
                         {"f1_all", macro_f1_all},
                         {"f1_pass", macro_f1_pass},
                         {"pass_fraction", macro_pass_fraction}}}};
}

TextMetrics text_metrics(std::span<const StudyRecord> corpus, int max_n) {
  if (max_n < 1) throw DataError("text_metrics: max_n must be >= 1");
  for (const auto& rec : corpus) {
    if (!rec.reference_report) {
      throw DataError(fmt::format("study '{}' has no reference_report", rec.study_id));
    }
  }
  TextMetrics tm;
  tm.n = corpus.size();
  const auto n = static_cast<std::ptrdiff_t>(corpus.size());
  std::vector<double> sums(static_cast<std::size_t>(max_n) + 1, 0.0);
  // Per-record scores are computed in parallel, summed serially in record
  // order so the floating-point result does not depend on thread count.
  std::vector<std::vector<double>> scores(corpus.size(), std::vector<double>(sums.size()));
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto& rec = corpus[i];
    for (int k = 1; k <= max_n; ++k) scores[i][k - 1] = bleu_n(rec.generated_report, *rec.reference_report, k);
    scores[i][max_n] = rouge_l(rec.generated_report, *rec.reference_report);
  }
  for (const auto& s : scores) {
    for (std::size_t k = 0; k < s.size(); ++k) sums[k] += s[k];
  }
  const double denom = corpus.empty() ? 1.0 : static_cast<double>(corpus.size());
  for (int k = 1; k <= max_n; ++k) tm.bleu[k] = sums[k - 1] / denom;
  tm.rouge_l = sums[max_n] / denom;
  return tm;
}

json TextMetrics::to_json() const {
  json b = json::object();
  for (const auto& [k, v] : bleu) b[fmt::format("bleu_{}", k)] = v;
  return json{{"n", n}, {"bleu", b}, {"rouge_l", rouge_l}};
}

}  // namespace raudit::metrics
