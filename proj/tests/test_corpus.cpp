#include <doctest.h>

#include <cmath>

#include "report_audit/corpus.hpp"
#include "report_audit/error.hpp"
#include "test_support.hpp"

using namespace raudit;
using nlohmann::json;

namespace {

const ConceptSet& cs() {
  static const ConceptSet s = ConceptSet::chexpert();
  return s;
}

std::string line(const std::string& id, double q) {
  return json{{"study_id", id},
              {"generated_report", "No edema."},
              {"ac_predictions", {{"edema", {{"q", q}}}}}}
      .dump();
}

}  // namespace

TEST_CASE("AcPrediction tie and examples") {
  auto tie = AcPrediction::from_q(0.5);
  CHECK(tie.c_i == 1);
  CHECK(tie.p_ac == 0.5);
  auto hi = AcPrediction::from_q(0.9);
  CHECK(hi.c_i == 1);
  CHECK(hi.p_ac == 0.9);
  auto lo = AcPrediction::from_q(0.25);
  CHECK(lo.c_i == 0);
  CHECK(lo.p_ac == 0.75);
}

TEST_CASE("AcPrediction derivation over the q grid") {
  // Case analysis, not the max() formula used by the library.
  for (int k = 0; k <= 10; ++k) {
    const double q = k / 10.0;
    const auto ac = parse_record(line("s", q), cs()).ac_predictions.at("edema");
    const int want_c = k >= 5 ? 1 : 0;
    const double want_p = k >= 5 ? q : 1.0 - q;
    CHECK(ac.c_i == want_c);
    CHECK(ac.p_ac == want_p);
    CHECK(ac.p_ac >= 0.5);
    CHECK(ac.p_ac <= 1.0);
  }
}

TEST_CASE("AcPrediction rejects out of range q") {
  CHECK_THROWS_AS(AcPrediction::from_q(-0.01), DataError);
  CHECK_THROWS_AS(AcPrediction::from_q(1.01), DataError);
  CHECK_THROWS_AS(AcPrediction::from_q(std::nan("")), DataError);
  CHECK_THROWS_AS(parse_record(line("s", 1.5), cs()), DataError);
}

TEST_CASE("parse_record errors") {
  CHECK_THROWS_AS(parse_record("{not json", cs()), DataError);
  CHECK_THROWS_AS(parse_record(R"({"generated_report":"x","ac_predictions":{}})", cs()), DataError);
  CHECK_THROWS_AS(parse_record(R"({"study_id":"a","ac_predictions":{}})", cs()), DataError);
  CHECK_THROWS_AS(parse_record(R"({"study_id":"a","generated_report":"x"})", cs()), DataError);
  CHECK_THROWS_AS(parse_record(R"({"study_id":"a","generated_report":"x","ac_predictions":{"bogus":{"q":0.1}}})", cs()),
                  DataError);
  CHECK_THROWS_AS(parse_record(R"({"study_id":"a","generated_report":"x","ac_predictions":{},"reference_labels":{"edema":2}})",
                               cs()),
                  DataError);
  CHECK_THROWS_AS(parse_record(R"({"study_id":"a","generated_report":"x","ac_predictions":{"edema":0.3}})", cs()),
                  DataError);
}

TEST_CASE("record round trip") {
  StudyRecord r = ra_test::make_record("id-1", "Mild  edema.\nNo effusion.", {{"edema", 0.3}, {"pneumonia", 0.77}},
                                       LabelMap{{"edema", 1}, {"pneumonia", 0}});
  r.reference_report = "Edema.";
  r.image_ref = "img/1.png";
  const auto back = parse_record(serialize_record(r), cs());
  CHECK(back == r);
  CHECK(serialize_record(back) == serialize_record(r));
}

TEST_CASE("parse_corpus order, blank lines and line numbers") {
  CHECK(parse_corpus("", cs()).empty());
  const std::string text = line("a", 0.1) + "\n\n" + line("b", 0.6) + "\n   \n" + line("c", 0.9) + "\n";
  auto corpus = parse_corpus(text, cs());
  REQUIRE(corpus.size() == 3);
  CHECK(corpus[0].study_id == "a");
  CHECK(corpus[1].study_id == "b");
  CHECK(corpus[2].study_id == "c");

  try {
    parse_corpus(line("a", 0.1) + "\n" + "{oops\n", cs());
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).rfind("line 2:", 0) == 0);
  }
  try {
    parse_corpus(line("dup", 0.1) + "\n" + line("dup", 0.2) + "\n", cs());
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("dup") != std::string::npos);
  }
}

TEST_CASE("load_corpus from disk") {
  auto dir = ra_test::scratch("corpus");
  ra_test::spit(dir / "empty.jsonl", "");
  CHECK(load_corpus(dir / "empty.jsonl", cs()).empty());
  std::vector<StudyRecord> recs{ra_test::make_record("x", "No edema.", {{"edema", 0.2}}),
                                ra_test::make_record("y", "Edema.", {{"edema", 0.8}})};
  write_corpus(dir / "c.jsonl", recs);
  CHECK(load_corpus(dir / "c.jsonl", cs()) == recs);
  CHECK_THROWS_AS(load_corpus(dir / "missing.jsonl", cs()), ConfigError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("ConceptSet validation") {
  CHECK_THROWS_AS(ConceptSet({"a", "a"}, {}), ConfigError);
  CHECK_THROWS_AS(ConceptSet({""}, {}), ConfigError);
  CHECK_THROWS_AS(ConceptSet({"a"}, {{"b", {"x"}}}), ConfigError);
  CHECK_THROWS_AS(ConceptSet({"a"}, {{"a", {"  "}}}), ConfigError);
  CHECK_THROWS_AS(ConceptSet({"a"}, {{"a", {"x"}}}, {"b"}), ConfigError);

  ConceptSet s({"a", "b"}, {{"a", {"  Big Thing "}}});
  CHECK(s.phrases("a") == std::vector<std::string>{"big thing"});
  CHECK(s.phrases("b").empty());
  CHECK(s.report_subset() == std::vector<std::string>{"a", "b"});
  CHECK_THROWS_AS(s.phrases("zzz"), DataError);

  const auto& c = cs();
  CHECK(c.size() == 14);
  CHECK(c.report_subset().size() == 5);
  auto again = ConceptSet::from_json(c.to_json());
  CHECK(again.concepts() == c.concepts());
  CHECK(again.report_subset() == c.report_subset());
  for (std::size_t i = 0; i < c.size(); ++i) CHECK(again.phrases(i) == c.phrases(i));

  CHECK_THROWS_AS(ConceptSet::from_json(json::array()), ConfigError);
  CHECK_THROWS_AS(ConceptSet::from_json(json{{"lexicon", json::object()}}), ConfigError);
}

TEST_CASE("SynthProfile json and validation") {
  SynthProfile p;
  p.prevalence["edema"] = 0.3;
  auto q = SynthProfile::from_json(p.to_json());
  CHECK(q.n_studies == p.n_studies);
  CHECK(q.e_ct == p.e_ct);
  CHECK(q.seed == p.seed);
  auto r = SynthProfile::from_json(json{{"prevalence", {{"edema", 0.25}}}, {"e_ct", 0.0}});
  CHECK(r.prevalence_for("edema") == 0.25);
  CHECK(r.prevalence_for("pneumonia") == 0.5);
  CHECK_THROWS_AS(SynthProfile::from_json(json{{"bogus", 1}}), ConfigError);
  CHECK_THROWS_AS(SynthProfile::from_json(json{{"e_ct", 1.5}}), ConfigError);
  CHECK_THROWS_AS(SynthProfile::from_json(json{{"rho", -2}}), ConfigError);
}

TEST_CASE("joint_flip_model marginals and bounds") {
  for (double e1 : {0.0, 0.1, 0.3, 0.5}) {
    for (double e2 : {0.0, 0.2, 0.4}) {
      auto f = joint_flip_model(e1, e2, 0.0);
      CHECK(f.both == doctest::Approx(e1 * e2));
      CHECK(f.both + f.text_only == doctest::Approx(e1));
      CHECK(f.both + f.image_only == doctest::Approx(e2));
      CHECK(f.both + f.text_only + f.image_only + f.neither == doctest::Approx(1.0));
    }
  }
  auto c = joint_flip_model(0.2, 0.1, 0.5);
  CHECK(c.both == doctest::Approx(0.02 + 0.5 * std::sqrt(0.2 * 0.8 * 0.1 * 0.9)));
  CHECK_THROWS_AS(joint_flip_model(0.2, 0.1, 1.0), ConfigError);
  CHECK_THROWS_AS(joint_flip_model(0.2, 0.1, -0.9), ConfigError);
}
