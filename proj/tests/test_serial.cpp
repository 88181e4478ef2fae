#include <doctest.h>

#include <omp.h>

#include "report_audit/serial_reference.hpp"
#include "report_audit/synth.hpp"

using namespace raudit;

namespace {

const ConceptSet& cs() {
  static const ConceptSet s = ConceptSet::chexpert();
  return s;
}

struct Threads {
  explicit Threads(int n) : saved(omp_get_max_threads()) { omp_set_num_threads(n); }
  ~Threads() { omp_set_num_threads(saved); }
  int saved;
};

}  // namespace

TEST_CASE("parallel kernels match the serial reference") {
  SynthProfile p;
  p.n_studies = 3000;
  p.e_ct = 0.25;
  p.e_ci = 0.15;
  p.rho = 0.2;
  p.prevalence["pneumonia"] = 0.1;

  for (int threads : {1, 4}) {
    Threads guard(threads);
    CAPTURE(threads);
    const auto corpus = synth_generate(p, cs());
    labeler::Labeler lab(cs(), {});
    const auto raw = labeler::label_corpus(corpus, lab);
    CHECK(raw == serial::label_corpus(corpus, cs(), {}));

    const auto labels = audit::binarized_labels(corpus, cs(), raw);
    for (double t : {0.0, 0.8}) {
      audit::AuditPolicy policy{t, cs().concepts()};
      for (const auto& c : cs().concepts()) {
        const auto a = audit::partition(corpus, c, labels, policy);
        const auto b = serial::partition(corpus, c, labels, policy);
        CHECK(a.pass_ids == b.pass_ids);
        CHECK(a.mismatch_ids == b.mismatch_ids);
        CHECK(a.low_confidence_ids == b.low_confidence_ids);
        CHECK(a.pass_fraction == b.pass_fraction);
      }
      CHECK(relsim::simulate(p, cs(), {}, policy) == serial::simulate(p, cs(), {}, policy));
    }

    const std::vector<double> grid{0.0, 0.55, 0.7, 0.8, 0.9, 0.99};
    const auto pc = relsim::sweep_threshold(corpus, labels, cs().report_subset(), grid);
    const auto sc = serial::sweep_threshold(corpus, labels, cs().report_subset(), grid);
    CHECK(pc.to_csv() == sc.to_csv());
  }
}

TEST_CASE("serial labeler agrees with the indexed labeler on odd inputs") {
  labeler::Labeler lab(cs(), {});
  const std::vector<std::string> reports{
      "",
      "...",
      "PLEURAL EFFUSION; no pleural effusion. effusion effusion",
      "No pleural effusions or effusion but pleural fluid may be present.",
      "enlarged heart heart is enlarged picc line picc tube tubes",
      "no acute cardiopulmonary process no acute cardiopulmonary process",
      "Résumé: œdème? No edema!"};
  for (const auto& r : reports) {
    CAPTURE(r);
    CHECK(lab.label_vector(r) == serial::label_report(r, cs(), {}));
  }
}
