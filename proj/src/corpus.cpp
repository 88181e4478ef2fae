#include "report_audit/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "report_audit/error.hpp"
#include "report_audit/labeler.hpp"

namespace raudit {

using nlohmann::json;

AcPrediction AcPrediction::from_q(double q) {
  if (!std::isfinite(q) || q < 0.0 || q > 1.0) {
    throw DataError(fmt::format("q must be in [0,1], got {}", q));
  }
  AcPrediction p;
  p.q = q;
  p.c_i = q >= 0.5 ? 1 : 0;
  p.p_ac = std::max(q, 1.0 - q);
  return p;
}

// ---------------------------------------------------------------------------
// ConceptSet

namespace {

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

ConceptSet::ConceptSet(std::vector<std::string> concepts,
                       std::map<std::string, std::vector<std::string>> lexicon,
                       std::vector<std::string> report_subset)
    : concepts_(std::move(concepts)) {
  std::set<std::string> seen;
  for (const auto& c : concepts_) {
    if (c.empty()) throw ConfigError("concept names must be non-empty");
    if (!seen.insert(c).second) throw ConfigError(fmt::format("duplicate concept '{}'", c));
  }
  for (const auto& [name, _] : lexicon) {
    if (!seen.count(name)) throw ConfigError(fmt::format("lexicon entry for unknown concept '{}'", name));
  }
  lexicon_.resize(concepts_.size());
  for (std::size_t i = 0; i < concepts_.size(); ++i) {
    auto it = lexicon.find(concepts_[i]);
    if (it == lexicon.end()) continue;
    for (const auto& phrase : it->second) {
      std::string norm = lowercase(trim(phrase));
      if (norm.empty() || labeler::tokenize(norm).empty()) {
        throw ConfigError(fmt::format("empty lexicon phrase for concept '{}'", concepts_[i]));
      }
      lexicon_[i].push_back(std::move(norm));
    }
  }
  if (report_subset.empty()) {
    report_subset_ = concepts_;
  } else {
    for (const auto& c : report_subset) {
      if (!seen.count(c)) throw ConfigError(fmt::format("report_subset names unknown concept '{}'", c));
    }
    report_subset_ = std::move(report_subset);
  }
}

ConceptSet ConceptSet::from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("concept set must be a JSON object");
  if (!doc.contains("concepts") || !doc["concepts"].is_array()) {
    throw ConfigError("concept set needs a \"concepts\" array");
  }
  try {
    auto concepts = doc["concepts"].get<std::vector<std::string>>();
    std::map<std::string, std::vector<std::string>> lexicon;
    if (doc.contains("lexicon")) {
      lexicon = doc["lexicon"].get<std::map<std::string, std::vector<std::string>>>();
    }
    std::vector<std::string> subset;
    if (doc.contains("report_subset")) subset = doc["report_subset"].get<std::vector<std::string>>();
    return ConceptSet(std::move(concepts), std::move(lexicon), std::move(subset));
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("invalid concept set: {}", e.what()));
  }
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open '{}'", path.string()));
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("'{}' is not valid JSON: {}", path.string(), e.what()));
  }
}

ConceptSet ConceptSet::load(const std::filesystem::path& path) {
  return from_json(read_json_file(path));
}

ConceptSet ConceptSet::chexpert() {
  std::vector<std::string> concepts{
      "atelectasis",   "cardiomegaly", "consolidation",    "edema",
      "pleural_effusion", "enlarged_cardiomediastinum", "fracture", "lung_lesion",
      "lung_opacity",  "no_finding",   "pleural_other",    "pneumonia",
      "pneumothorax",  "support_devices"};
  std::map<std::string, std::vector<std::string>> lexicon{
      {"atelectasis", {"atelectasis", "atelectases", "atelectatic"}},
      {"cardiomegaly",
       {"cardiomegaly", "enlarged heart", "heart is enlarged", "heart is mildly enlarged",
        "heart is moderately enlarged", "heart is severely enlarged", "heart size is enlarged",
        "cardiac silhouette is enlarged", "enlargement of the cardiac silhouette"}},
      {"consolidation", {"consolidation", "consolidations", "consolidative"}},
      {"edema",
       {"edema", "pulmonary edema", "interstitial edema", "vascular congestion",
        "pulmonary vascular congestion"}},
      {"pleural_effusion",
       {"pleural effusion", "pleural effusions", "effusion", "effusions", "pleural fluid"}},
      {"enlarged_cardiomediastinum",
       {"enlarged cardiomediastinum", "widened mediastinum", "mediastinal widening",
        "mediastinum is widened", "cardiomediastinal silhouette is enlarged"}},
      {"fracture", {"fracture", "fractures"}},
      {"lung_lesion", {"nodule", "nodules", "mass", "masses", "lesion", "lesions"}},
      {"lung_opacity", {"opacity", "opacities", "opacification", "infiltrate", "infiltrates"}},
      {"no_finding",
       {"no acute cardiopulmonary process", "no acute cardiopulmonary abnormality",
        "no acute intrathoracic process"}},
      {"pleural_other", {"pleural thickening", "pleural scarring", "fibrothorax"}},
      {"pneumonia", {"pneumonia", "pneumonias"}},
      {"pneumothorax", {"pneumothorax", "pneumothoraces"}},
      {"support_devices",
       {"picc line", "picc", "endotracheal tube", "et tube", "nasogastric tube", "ng tube",
        "tube", "tubes", "pacemaker", "catheter", "sternotomy wires"}},
  };
  return ConceptSet(std::move(concepts), std::move(lexicon),
                    {"atelectasis", "cardiomegaly", "consolidation", "edema", "pleural_effusion"});
}

json ConceptSet::to_json() const {
  json lex = json::object();
  for (std::size_t i = 0; i < concepts_.size(); ++i) lex[concepts_[i]] = lexicon_[i];
  return json{{"concepts", concepts_}, {"lexicon", lex}, {"report_subset", report_subset_}};
}

std::optional<std::size_t> ConceptSet::index_of(std::string_view name) const {
  auto it = std::find(concepts_.begin(), concepts_.end(), name);
  if (it == concepts_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - concepts_.begin());
}

const std::vector<std::string>& ConceptSet::phrases(std::string_view name) const {
  auto idx = index_of(name);
  if (!idx) throw DataError(fmt::format("unknown concept '{}'", name));
  return lexicon_[*idx];
}

ConceptSet ConceptSet::subset(const std::vector<std::string>& names) const {
  std::map<std::string, std::vector<std::string>> lex;
  std::vector<std::string> report;
  for (const auto& n : names) lex[n] = phrases(n);
  for (const auto& r : report_subset_) {
    if (std::find(names.begin(), names.end(), r) != names.end()) report.push_back(r);
  }
  return ConceptSet(names, std::move(lex), std::move(report));
}

// ---------------------------------------------------------------------------
// Records

namespace {

const std::string& require_concept(const ConceptSet& cs, const std::string& name,
                                   const char* field) {
  if (!cs.contains(name)) throw DataError(fmt::format("{}: unknown concept '{}'", field, name));
  return name;
}

std::optional<std::string> optional_string(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw DataError(fmt::format("field \"{}\" must be a string", key));
  return it->get<std::string>();
}

}  // namespace

StudyRecord record_from_json(const json& obj, const ConceptSet& cs) {
  if (!obj.is_object()) throw DataError("record must be a JSON object");
  StudyRecord rec;

  auto id = optional_string(obj, "study_id");
  if (!id || id->empty()) throw DataError("missing required field \"study_id\"");
  rec.study_id = std::move(*id);

  auto report = optional_string(obj, "generated_report");
  if (!report) throw DataError("missing required field \"generated_report\"");
  rec.generated_report = std::move(*report);

  rec.reference_report = optional_string(obj, "reference_report");
  rec.image_ref = optional_string(obj, "image_ref");

  if (auto it = obj.find("reference_labels"); it != obj.end() && !it->is_null()) {
    if (!it->is_object()) throw DataError("field \"reference_labels\" must be an object");
    LabelMap labels;
    for (const auto& [name, value] : it->items()) {
      require_concept(cs, name, "reference_labels");
      if (!value.is_number_integer() || (value.get<long long>() != 0 && value.get<long long>() != 1)) {
        throw DataError(fmt::format("reference_labels.{} must be 0 or 1", name));
      }
      labels[name] = value.get<int>();
    }
    rec.reference_labels = std::move(labels);
  }

  auto ac = obj.find("ac_predictions");
  if (ac == obj.end()) throw DataError("missing required field \"ac_predictions\"");
  if (!ac->is_object()) throw DataError("field \"ac_predictions\" must be an object");
  for (const auto& [name, value] : ac->items()) {
    require_concept(cs, name, "ac_predictions");
    if (!value.is_object() || !value.contains("q")) {
      throw DataError(fmt::format("ac_predictions.{} needs a \"q\" field", name));
    }
    const auto& q = value["q"];
    if (!q.is_number()) throw DataError(fmt::format("ac_predictions.{}.q must be a number", name));
    try {
      rec.ac_predictions[name] = AcPrediction::from_q(q.get<double>());
    } catch (const DataError& e) {
      throw DataError(fmt::format("ac_predictions.{}: {}", name, e.what()));
    }
  }
  return rec;
}

StudyRecord parse_record(std::string_view line, const ConceptSet& cs) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error& e) {
    throw DataError(fmt::format("malformed JSON: {}", e.what()));
  }
  return record_from_json(obj, cs);
}

json record_to_json(const StudyRecord& rec) {
  json obj{{"study_id", rec.study_id}, {"generated_report", rec.generated_report}};
  if (rec.reference_report) obj["reference_report"] = *rec.reference_report;
  if (rec.reference_labels) obj["reference_labels"] = *rec.reference_labels;
  json ac = json::object();
  for (const auto& [name, p] : rec.ac_predictions) ac[name] = json{{"q", p.q}};
  obj["ac_predictions"] = std::move(ac);
  if (rec.image_ref) obj["image_ref"] = *rec.image_ref;
  return obj;
}

std::string serialize_record(const StudyRecord& rec) { return record_to_json(rec).dump(); }

std::vector<StudyRecord> parse_corpus(std::string_view text, const ConceptSet& cs) {
  std::vector<StudyRecord> out;
  std::set<std::string> ids;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    StudyRecord rec;
    try {
      rec = parse_record(line, cs);
    } catch (const DataError& e) {
      throw DataError(fmt::format("line {}: {}", line_no, e.what()));
    }
    if (!ids.insert(rec.study_id).second) {
      throw DataError(fmt::format("line {}: duplicate study_id '{}'", line_no, rec.study_id));
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<StudyRecord> load_corpus(const std::filesystem::path& path, const ConceptSet& cs) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(fmt::format("cannot open corpus '{}'", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw DataError(fmt::format("read error on '{}'", path.string()));
  return parse_corpus(buf.str(), cs);
}

void write_corpus(const std::filesystem::path& path, const std::vector<StudyRecord>& corpus) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError(fmt::format("cannot write '{}'", path.string()));
  for (const auto& rec : corpus) out << serialize_record(rec) << '\n';
}

// ---------------------------------------------------------------------------
// Synthetic profile

namespace {

void check_unit(double v, const char* name) {
  if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
    throw ConfigError(fmt::format("{} must be in [0,1], got {}", name, v));
  }
}

}  // namespace

double SynthProfile::prevalence_for(const std::string& concept_id) const {
  auto it = prevalence.find(concept_id);
  return it == prevalence.end() ? default_prevalence : it->second;
}

void SynthProfile::validate() const {
  check_unit(e_ct, "e_ct");
  check_unit(e_ci, "e_ci");
  if (!std::isfinite(rho) || rho < -1.0 || rho > 1.0) {
    throw ConfigError(fmt::format("rho must be in [-1,1], got {}", rho));
  }
  check_unit(default_prevalence, "prevalence");
  for (const auto& [name, p] : prevalence) check_unit(p, "prevalence");
  if (!(confidence.a > 0.0) || !(confidence.b > 0.0) || !std::isfinite(confidence.a) ||
      !std::isfinite(confidence.b)) {
    throw ConfigError("confidence model parameters a and b must be positive");
  }
  joint_flip_model(e_ct, e_ci, rho);
}

SynthProfile SynthProfile::from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("profile must be a JSON object");
  static const std::set<std::string> known{"n_studies", "e_ct", "e_ci", "rho",
                                           "prevalence", "confidence", "seed"};
  SynthProfile p;
  try {
    for (const auto& [key, value] : doc.items()) {
      if (!known.count(key)) throw ConfigError(fmt::format("unknown profile key \"{}\"", key));
    }
    if (doc.contains("n_studies")) {
      if (!doc["n_studies"].is_number_unsigned()) throw ConfigError("n_studies must be a non-negative integer");
      p.n_studies = doc["n_studies"].get<std::size_t>();
    }
    if (doc.contains("e_ct")) p.e_ct = doc["e_ct"].get<double>();
    if (doc.contains("e_ci")) p.e_ci = doc["e_ci"].get<double>();
    if (doc.contains("rho")) p.rho = doc["rho"].get<double>();
    if (doc.contains("prevalence")) {
      const auto& prev = doc["prevalence"];
      if (prev.is_number()) {
        p.default_prevalence = prev.get<double>();
      } else if (prev.is_object()) {
        p.prevalence = prev.get<std::map<std::string, double>>();
      } else {
        throw ConfigError("prevalence must be a number or an object");
      }
    }
    if (doc.contains("confidence")) {
      const auto& c = doc["confidence"];
      if (c.contains("a")) p.confidence.a = c["a"].get<double>();
      if (c.contains("b")) p.confidence.b = c["b"].get<double>();
    }
    if (doc.contains("seed")) {
      if (!doc["seed"].is_number_unsigned()) throw ConfigError("seed must be a non-negative integer");
      p.seed = doc["seed"].get<std::uint64_t>();
    }
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("invalid profile: {}", e.what()));
  }
  p.validate();
  return p;
}

json SynthProfile::to_json() const {
  json prev = prevalence.empty() ? json(default_prevalence) : json(prevalence);
  return json{{"n_studies", n_studies},
              {"e_ct", e_ct},
              {"e_ci", e_ci},
              {"rho", rho},
              {"prevalence", prev},
              {"confidence", {{"a", confidence.a}, {"b", confidence.b}}},
              {"seed", seed}};
}

FlipModel joint_flip_model(double e_ct, double e_ci, double rho) {
  const double product = e_ct * e_ci;
  const double spread = std::sqrt(e_ct * (1.0 - e_ct) * e_ci * (1.0 - e_ci));
  const double raw = product + rho * spread;
  const double lo = std::max(0.0, e_ct + e_ci - 1.0);
  const double hi = std::min(e_ct, e_ci);
  const double both = std::clamp(raw, lo, hi);
  if (std::abs(both - raw) > 1e-9) {
    throw ConfigError(fmt::format(
        "rho={} is infeasible for e_ct={}, e_ci={}; feasible interval is [{:.9g}, {:.9g}]", rho,
        e_ct, e_ci, (lo - product) / spread, (hi - product) / spread));
  }
  FlipModel m;
  m.both = both;
  m.text_only = std::max(0.0, e_ct - both);
  m.image_only = std::max(0.0, e_ci - both);
  m.neither = std::max(0.0, 1.0 - e_ct - e_ci + both);
  return m;
}

}  // namespace raudit
