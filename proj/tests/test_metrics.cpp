#include <doctest.h>

#include <cmath>
#include <random>

#include "report_audit/error.hpp"
#include "report_audit/metrics.hpp"
#include "report_audit/synth.hpp"
#include "test_support.hpp"

using namespace raudit;
using namespace raudit::metrics;
using nlohmann::json;

namespace {

const ConceptSet& cs() {
  static const ConceptSet s = ConceptSet::chexpert();
  return s;
}

}  // namespace

TEST_CASE("confusion examples") {
  std::map<std::string, BinaryLabel> all1{{"a", 1}, {"b", 1}, {"c", 1}};
  CHECK(confusion(all1, all1) == Confusion{3, 0, 0, 0});
  std::map<std::string, BinaryLabel> all0{{"a", 0}, {"b", 0}, {"c", 0}};
  CHECK(confusion(all0, all1) == Confusion{0, 0, 3, 0});
  std::map<std::string, BinaryLabel> p{{"a", 1}, {"b", 1}, {"c", 0}, {"d", 1}};
  std::map<std::string, BinaryLabel> r{{"a", 1}, {"b", 0}, {"c", 1}, {"d", 1}};
  CHECK(confusion(p, r) == Confusion{2, 1, 1, 0});
  std::map<std::string, BinaryLabel> other{{"a", 1}};
  CHECK_THROWS_AS(confusion(p, other), DataError);
}

TEST_CASE("confusion against enumeration over all 4-element label vectors") {
  for (int pm = 0; pm < 16; ++pm) {
    for (int rm = 0; rm < 16; ++rm) {
      std::map<std::string, BinaryLabel> p, r;
      std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
      for (int i = 0; i < 4; ++i) {
        const int a = (pm >> i) & 1, b = (rm >> i) & 1;
        p[std::string(1, 'a' + i)] = a;
        r[std::string(1, 'a' + i)] = b;
        tp += a && b;
        fp += a && !b;
        fn += !a && b;
        tn += !a && !b;
      }
      CHECK(confusion(p, r) == Confusion{tp, fp, fn, tn});
    }
  }
}

TEST_CASE("prf examples") {
  const auto x = prf(Confusion{2, 1, 1, 0});
  CHECK(x.precision == 2.0 / 3.0);
  CHECK(x.recall == 2.0 / 3.0);
  CHECK(x.f1 == 2.0 / 3.0);
  const auto z = prf(Confusion{});
  CHECK(z.precision == 0.0);
  CHECK(z.recall == 0.0);
  CHECK(z.f1 == 0.0);
  const auto one = prf(Confusion{7, 0, 0, 3});
  CHECK(one.precision == 1.0);
  CHECK(one.recall == 1.0);
  CHECK(one.f1 == 1.0);
  // Precision defined, recall 0/0.
  CHECK(prf(Confusion{0, 3, 0, 1}).f1 == 0.0);
}

TEST_CASE("macro_avg") {
  const std::vector<std::string> five{"a", "b", "c", "d", "e"};
  std::map<std::string, double> genx{{"a", 42.2}, {"b", 66.8}, {"c", 5.6}, {"d", 55.6}, {"e", 63.8}};
  CHECK(std::abs(macro_avg(genx, five) - 46.8) <= 0.05);
  std::map<std::string, double> t0{{"a", 52.6}, {"b", 73.7}, {"c", 5.8}, {"d", 64.6}, {"e", 74.7}};
  CHECK(std::abs(macro_avg(t0, five) - 54.3) <= 0.05);
  const std::vector<std::string> single{"c"};
  CHECK(macro_avg(genx, single) == 5.6);
  CHECK_THROWS_AS(macro_avg(genx, std::vector<std::string>{}), DataError);
  CHECK_THROWS_AS(macro_avg(genx, std::vector<std::string>{"zz"}), DataError);
}

TEST_CASE("macro_avg reproduces the published averages") {
  const json doc = read_json_file(ra_test::data_path("table3_f1.json"));
  const auto subset = doc.at("subset").get<std::vector<std::string>>();
  for (const auto& [name, col] : doc.at("columns").items()) {
    const auto scores = col.get<std::map<std::string, double>>();
    const double printed = doc.at("printed_average").at(name).get<double>();
    double sum = 0;
    for (const auto& s : subset) sum += scores.at(s);
    INFO(name);
    CHECK(std::abs(macro_avg(scores, subset) - printed) <= 0.05);
    CHECK(macro_avg(scores, subset) == doctest::Approx(sum / subset.size()));
  }
}

TEST_CASE("micro_avg") {
  std::map<std::string, Confusion> two{{"x", {1, 0, 1, 0}}, {"y", {1, 2, 0, 0}}};
  const std::vector<std::string> xy{"x", "y"};
  const auto m = micro_avg(two, xy);
  CHECK(m.precision == 0.5);
  CHECK(m.recall == 2.0 / 3.0);
  CHECK(m.f1 == doctest::Approx(4.0 / 7.0).epsilon(1e-15));
  const std::vector<std::string> just_x{"x"};
  CHECK(micro_avg(two, just_x).f1 == prf(two.at("x")).f1);
  std::map<std::string, Confusion> same{{"x", {3, 1, 2, 4}}, {"y", {3, 1, 2, 4}}};
  CHECK(micro_avg(same, xy).f1 == doctest::Approx(prf(same.at("x")).f1));
  CHECK_THROWS_AS(micro_avg(two, std::vector<std::string>{}), DataError);
}

TEST_CASE("classification_report and pooling identity on random confusions") {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::map<std::string, Confusion> conf;
    std::vector<std::string> names;
    Confusion pooled;
    for (int c = 0; c < 4; ++c) {
      Confusion k{rng() % 20, rng() % 20, rng() % 20, rng() % 20};
      const std::string n = "c" + std::to_string(c);
      conf[n] = k;
      names.push_back(n);
      pooled += k;
    }
    const auto rep = classification_report(conf, names);
    CHECK(rep.micro.f1 == prf(pooled).f1);
    double mean = 0;
    for (const auto& n : names) mean += rep.per_class.at(n).prf.f1;
    CHECK(rep.macro.f1 == doctest::Approx(mean / names.size()));
    for (const auto& [n, s] : rep.per_class) {
      CHECK(s.prf.f1 >= 0.0);
      CHECK(s.prf.f1 <= 1.0);
      CHECK(s.support == conf.at(n).tp + conf.at(n).fn);
    }
  }
}

TEST_CASE("bleu examples") {
  CHECK(std::abs(bleu_n("the cat", "the cat sat", 1) - std::exp(-0.5)) <= 1e-9);
  CHECK(bleu_n("the cat sat on the mat", "the cat sat on the mat", 4) == doctest::Approx(1.0));
  CHECK(bleu_n("", "the cat", 1) == 0.0);
  CHECK(bleu_n("", "", 1) == 0.0);
  // Clipping: "the the the" vs "the cat" has unigram precision 1/3.
  CHECK(bleu_n("the the the", "the cat", 1) == doctest::Approx(1.0 / 3.0));
  // No smoothing: a missing 2-gram order zeroes the score.
  CHECK(bleu_n("cat the", "the cat", 2) == 0.0);
  // Candidate shorter than n.
  CHECK(bleu_n("cat", "cat", 2) == 0.0);
  // Hand computation: cand "the cat sat", ref "the cat sat down" n=2.
  // p1 = 1, p2 = 1, BP = exp(1 - 4/3).
  CHECK(bleu_n("The cat sat.", "the cat sat down", 2) == doctest::Approx(std::exp(1.0 - 4.0 / 3.0)));
}

TEST_CASE("rouge_l examples") {
  CHECK(std::abs(rouge_l("the cat sat", "the cat on the mat") - 0.5) <= 1e-9);
  CHECK(rouge_l("no acute process", "no acute process") == 1.0);
  CHECK(rouge_l("abc def", "ghi jkl") == 0.0);
  CHECK(rouge_l("", "") == 0.0);
  CHECK(rouge_l("", "x") == 0.0);
}

TEST_CASE("lcs against brute force on short sequences") {
  std::mt19937 rng(3);
  const std::vector<std::string> vocab{"a", "b", "c"};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> x, y;
    for (int i = 0, n = rng() % 7; i < n; ++i) x.push_back(vocab[rng() % 3]);
    for (int i = 0, n = rng() % 7; i < n; ++i) y.push_back(vocab[rng() % 3]);
    // Longest subsequence of x (by subset enumeration) that is a subsequence of y.
    std::size_t best = 0;
    for (unsigned mask = 0; mask < (1u << x.size()); ++mask) {
      std::vector<std::string> sub;
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (mask & (1u << i)) sub.push_back(x[i]);
      }
      std::size_t j = 0;
      for (const auto& tok : y) {
        if (j < sub.size() && tok == sub[j]) ++j;
      }
      if (j == sub.size()) best = std::max(best, sub.size());
    }
    CHECK(lcs_length(x, y) == best);
  }
}

TEST_CASE("text metric identity and ranges") {
  std::mt19937 rng(9);
  const std::vector<std::string> vocab{"no", "edema", "mild", "effusion", "the", "is"};
  for (int trial = 0; trial < 100; ++trial) {
    std::string a, b;
    const int na = 1 + rng() % 10, nb = rng() % 10;
    for (int i = 0; i < na; ++i) a += vocab[rng() % vocab.size()] + " ";
    for (int i = 0; i < nb; ++i) b += vocab[rng() % vocab.size()] + " ";
    CHECK(rouge_l(a, a) == doctest::Approx(1.0));
    CHECK(bleu_n(a, a, 1) == doctest::Approx(1.0));
    if (na >= 4) CHECK(bleu_n(a, a, 4) == doctest::Approx(1.0));
    for (int n = 1; n <= 4; ++n) {
      const double s = bleu_n(a, b, n);
      CHECK(s >= 0.0);
      CHECK(s <= 1.0);
    }
    const double r = rouge_l(a, b);
    CHECK(r >= 0.0);
    CHECK(r <= 1.0);
  }
}

TEST_CASE("audit_eval constructed corpora") {
  using ra_test::make_record;
  // Pass set excludes exactly the wrong-label studies.
  std::vector<StudyRecord> corpus;
  audit::LabelsByStudy labels;
  for (int i = 0; i < 10; ++i) {
    const int truth = i % 2;
    const bool wrong = i < 3;
    const int c_t = wrong ? 1 - truth : truth;
    const double q = wrong ? (c_t ? 0.1 : 0.9) : (c_t ? 0.95 : 0.05);
    const auto id = "s" + std::to_string(i);
    corpus.push_back(make_record(id, "", {{"edema", q}}, LabelMap{{"edema", truth}}));
    labels[id]["edema"] = c_t;
  }
  const auto one = cs().subset({"edema"});
  auto table = audit_eval(corpus, labels, audit::AuditPolicy{0.8, {"edema"}}, one);
  REQUIRE(table.rows.size() == 1);
  CHECK(table.rows[0].f1_pass == 1.0);
  CHECK(table.rows[0].f1_all < 1.0);
  CHECK(table.rows[0].n_pass == 7);
  CHECK(table.rows[0].pass_fraction == doctest::Approx(0.7));
  CHECK(table.macro_f1_pass == 1.0);

  const auto csv = table.to_csv();
  CHECK(csv.rfind("concept,f1_all,f1_pass,pass_pct\n", 0) == 0);
  CHECK(csv.find("edema,") != std::string::npos);
  CHECK(csv.find("macro_avg,") != std::string::npos);
  CHECK(csv.find(",100.0,70.0\n") != std::string::npos);

  corpus[0].reference_labels.reset();
  CHECK_THROWS_AS(audit_eval(corpus, labels, audit::AuditPolicy{0.8, {"edema"}}, one), DataError);
}

TEST_CASE("audit_eval on error-free and noisy synthetic corpora") {
  SynthProfile p;
  p.n_studies = 2000;
  p.e_ct = 0.0;
  p.e_ci = 0.0;
  auto corpus = synth_generate(p, cs());
  labeler::Labeler lab(cs(), {});
  auto labels = audit::binarized_labels(corpus, cs(), labeler::label_corpus(corpus, lab));
  auto table = audit_eval(corpus, labels, audit::AuditPolicy{0.0, cs().report_subset()}, cs());
  for (const auto& row : table.rows) {
    CHECK(row.f1_all == 1.0);
    CHECK(row.f1_pass == 1.0);
  }

  p.e_ct = 0.2;
  p.e_ci = 0.1;
  p.n_studies = 100000;
  const auto one = cs().subset({"edema", "atelectasis"});
  corpus = synth_generate(p, one);
  labeler::Labeler lab1(one, {});
  labels = audit::binarized_labels(corpus, one, labeler::label_corpus(corpus, lab1));
  table = audit_eval(corpus, labels, audit::AuditPolicy{0.0, one.concepts()}, one);
  CHECK(table.macro_f1_pass - table.macro_f1_all > 0.05);

  // Record order does not matter.
  std::reverse(corpus.begin(), corpus.end());
  auto again = audit_eval(corpus, labels, audit::AuditPolicy{0.0, one.concepts()}, one);
  CHECK(again.to_csv() == table.to_csv());
}

TEST_CASE("text_metrics") {
  using ra_test::make_record;
  auto a = make_record("a", "the cat", {});
  a.reference_report = "the cat sat";
  auto b = make_record("b", "the cat sat", {});
  b.reference_report = "the cat on the mat";
  std::vector<StudyRecord> corpus{a, b};
  const auto tm = text_metrics(corpus, 1);
  CHECK(tm.n == 2);
  CHECK(tm.bleu.at(1) == doctest::Approx((std::exp(-0.5) + bleu_n("the cat sat", "the cat on the mat", 1)) / 2));
  CHECK(tm.rouge_l == doctest::Approx((rouge_l("the cat", "the cat sat") + 0.5) / 2));
  corpus.push_back(make_record("c", "x", {}));
  CHECK_THROWS_AS(text_metrics(corpus, 4), DataError);
}

TEST_CASE("percent") {
  CHECK(percent(0.468) == "46.8");
  CHECK(percent(1.0) == "100.0");
  CHECK(percent(0.0) == "0.0");
}
