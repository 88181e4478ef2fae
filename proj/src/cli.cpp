#include "report_audit/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "report_audit/audit.hpp"
#include "report_audit/error.hpp"
#include "report_audit/labeler.hpp"
#include "report_audit/metrics.hpp"
#include "report_audit/relsim.hpp"
#include "report_audit/synth.hpp"

namespace raudit::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::shared_ptr<spdlog::logger> logger() {
  static std::shared_ptr<spdlog::logger> log = [] {
    auto l = spdlog::stderr_logger_st("report-audit");
    l->set_pattern("[%l] %v");
    spdlog::level::level_enum level = spdlog::level::info;
    if (const char* env = std::getenv("REPORT_AUDIT_LOG")) {
      std::string v(env);
      if (v == "error") level = spdlog::level::err;
      else if (v == "debug") level = spdlog::level::debug;
      else if (v == "info") level = spdlog::level::info;
    }
    l->set_level(level);
    return l;
  }();
  return log;
}

const std::vector<std::string> kCommands{"label", "audit", "eval", "sweep", "simulate", "synth"};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto b = item.find_first_not_of(" \t");
    auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

OutputFormat parse_format(const std::string& f) {
  if (f == "csv") return OutputFormat::Csv;
  if (f == "json") return OutputFormat::Json;
  if (f == "both") return OutputFormat::Both;
  throw ConfigError(fmt::format("--format must be csv, json or both, got '{}'", f));
}

bool want_csv(OutputFormat f) { return f != OutputFormat::Json; }
bool want_json(OutputFormat f) { return f != OutputFormat::Csv; }

// Merge keys of a JSON profile object over `base`.
SynthProfile overlay_profile(const SynthProfile& base, const json& doc) {
  json merged = base.to_json();
  if (!base.prevalence.empty()) merged["prevalence"] = base.prevalence;
  for (const auto& [k, v] : doc.items()) merged[k] = v;
  auto p = SynthProfile::from_json(merged);
  if (!doc.contains("prevalence") && !base.prevalence.empty()) {
    p.prevalence = base.prevalence;
    p.default_prevalence = base.default_prevalence;
  }
  return p;
}

void apply_config_file(RunConfig& cfg, const json& doc) {
  if (!doc.is_object()) throw ConfigError("config file must hold a JSON object");
  try {
    for (const auto& [key, v] : doc.items()) {
      if (key == "corpus") cfg.corpus_path = v.get<std::string>();
      else if (key == "concepts") cfg.concept_set_path = v.get<std::string>();
      else if (key == "out") cfg.output_path = v.get<std::string>();
      else if (key == "f1_table") cfg.f1_table_path = v.get<std::string>();
      else if (key == "threshold") cfg.t = v.get<double>();
      else if (key == "t_grid") cfg.t_grid = v.is_string() ? relsim::parse_grid(v.get<std::string>()) : v.get<std::vector<double>>();
      else if (key == "seed") cfg.seed = v.get<std::uint64_t>();
      else if (key == "format") cfg.format = parse_format(v.get<std::string>());
      else if (key == "audit_concepts") cfg.audit_concepts = v.is_string() ? split_list(v.get<std::string>()) : v.get<std::vector<std::string>>();
      else if (key == "bleu_max_n") cfg.bleu_max_n = v.get<int>();
      else if (key == "profile") {
        cfg.profile = overlay_profile(cfg.profile, v);
        if (v.contains("seed")) cfg.seed = cfg.profile.seed;
      }
      else throw ConfigError(fmt::format("unknown config key \"{}\"", key));
    }
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("invalid config file: {}", e.what()));
  }
}

// ---------------------------------------------------------------------------
// Shared command plumbing

struct Inputs {
  json concept_doc;
  ConceptSet cs = ConceptSet::chexpert();
  labeler::LabelerRules rules;
};

Inputs load_concepts(const RunConfig& cfg) {
  Inputs in;
  if (cfg.concept_set_path) {
    in.concept_doc = read_json_file(*cfg.concept_set_path);
    in.cs = ConceptSet::from_json(in.concept_doc);
    in.rules = labeler::rules_from_json(in.concept_doc);
    logger()->debug("concept set '{}' with {} concepts", *cfg.concept_set_path, in.cs.size());
  }
  return in;
}

const std::string& require(const std::optional<std::string>& v, const char* flag, const RunConfig& cfg) {
  if (!v) throw ConfigError(fmt::format("'{}' requires {}", cfg.command, flag));
  return *v;
}

fs::path output_dir(const RunConfig& cfg) {
  fs::path dir = require(cfg.output_path, "--out", cfg);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError(fmt::format("cannot create output directory '{}': {}", dir.string(), ec.message()));
  return dir;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError(fmt::format("cannot write '{}'", path.string()));
  out << content;
  logger()->info("wrote {}", path.string());
}

std::vector<std::string> audited_concepts(const RunConfig& cfg, const ConceptSet& cs) {
  auto names = cfg.audit_concepts.empty() ? cs.report_subset() : cfg.audit_concepts;
  for (const auto& n : names) {
    if (!cs.contains(n)) throw ConfigError(fmt::format("unknown audit concept '{}'", n));
  }
  return names;
}

audit::AuditPolicy make_policy(const RunConfig& cfg, const ConceptSet& cs) {
  audit::AuditPolicy policy{cfg.t, audited_concepts(cfg, cs)};
  policy.validate(cs);
  return policy;
}

std::vector<StudyRecord> load(const RunConfig& cfg, const ConceptSet& cs) {
  auto corpus = load_corpus(require(cfg.corpus_path, "--corpus", cfg), cs);
  logger()->info("loaded {} records from {}", corpus.size(), *cfg.corpus_path);
  return corpus;
}

SynthProfile effective_profile(const RunConfig& cfg) {
  SynthProfile p = cfg.profile;
  p.seed = cfg.seed;
  p.validate();
  return p;
}

}  // namespace

// ---------------------------------------------------------------------------
// Argument parsing

std::optional<RunConfig> parse_args(int argc, const char* const* argv) {
  CLI::App app{"Audit generated radiology reports against image-based auditing components",
               "report-audit"};
  app.require_subcommand(1, 1);

  std::optional<std::string> corpus, concepts, out, profile, config, f1_table, format, grid,
      audit_list;
  std::optional<double> threshold, e_ct, e_ci, rho, prevalence;
  std::optional<std::uint64_t> seed, n_studies;
  std::optional<int> bleu_n;

  app.add_option("--corpus", corpus, "JSON Lines corpus of study records");
  app.add_option("--concepts", concepts, "concept set JSON (default: built-in 14-class set)");
  app.add_option("--threshold", threshold, "AC confidence threshold t in [0,1] (default 0.8)");
  app.add_option("--t-grid", grid, "comma separated ascending thresholds for sweep");
  app.add_option("--out", out, "output directory");
  app.add_option("--seed", seed, "seed for all randomness (default 42)");
  app.add_option("--profile", profile, "synthetic profile JSON");
  app.add_option("--format", format, "csv, json or both (default both)");
  app.add_option("--config", config, "JSON config file; flags override it");
  app.add_option("--audit-concepts", audit_list, "comma separated concepts to audit (default report_subset)");
  app.add_option("--f1-table", f1_table, "eval: JSON table of per-class F1 columns to macro-average");
  app.add_option("--bleu-n", bleu_n, "eval: highest BLEU order (default 4)");
  app.add_option("--n", n_studies, "synthetic study count");
  app.add_option("--e-ct", e_ct, "synthetic text-path error rate");
  app.add_option("--e-ci", e_ci, "synthetic image-path error rate");
  app.add_option("--rho", rho, "synthetic error correlation");
  app.add_option("--prevalence", prevalence, "synthetic positive rate for every concept");

  const std::map<std::string, std::string> help{
      {"label", "label every report in a corpus"},
      {"audit", "partition studies into pass, mismatch and low-confidence sets"},
      {"eval", "classification and text metrics, or macro averages of an F1 table"},
      {"sweep", "pass fraction and accuracy across a threshold grid"},
      {"simulate", "Monte Carlo run of the synthetic audit"},
      {"synth", "write a synthetic corpus"}};
  for (const auto& name : kCommands) app.add_subcommand(name, help.at(name))->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e);
    return std::nullopt;
  } catch (const CLI::ParseError& e) {
    throw ConfigError(e.what());
  }

  RunConfig cfg;
  cfg.command = app.get_subcommands().front()->get_name();
  if (config) apply_config_file(cfg, read_json_file(*config));
  if (profile) {
    const json doc = read_json_file(*profile);
    if (!doc.is_object()) throw ConfigError("profile must be a JSON object");
    cfg.profile = overlay_profile(cfg.profile, doc);
    if (doc.contains("seed")) cfg.seed = cfg.profile.seed;
  }

  if (corpus) cfg.corpus_path = corpus;
  if (concepts) cfg.concept_set_path = concepts;
  if (out) cfg.output_path = out;
  if (f1_table) cfg.f1_table_path = f1_table;
  if (threshold) cfg.t = *threshold;
  if (grid) cfg.t_grid = relsim::parse_grid(*grid);
  if (format) cfg.format = parse_format(*format);
  if (audit_list) cfg.audit_concepts = split_list(*audit_list);
  if (bleu_n) cfg.bleu_max_n = *bleu_n;
  if (n_studies) cfg.profile.n_studies = *n_studies;
  if (e_ct) cfg.profile.e_ct = *e_ct;
  if (e_ci) cfg.profile.e_ci = *e_ci;
  if (rho) cfg.profile.rho = *rho;
  if (prevalence) {
    cfg.profile.default_prevalence = *prevalence;
    cfg.profile.prevalence.clear();
  }
  if (seed) cfg.seed = *seed;

  if (!(cfg.t >= 0.0 && cfg.t <= 1.0)) throw ConfigError(fmt::format("--threshold must be in [0,1], got {}", cfg.t));
  if (cfg.bleu_max_n < 1) throw ConfigError("--bleu-n must be >= 1");
  return cfg;
}

// ---------------------------------------------------------------------------
// Commands

int cmd_label(const RunConfig& cfg) {
  const auto dir = output_dir(cfg);
  auto in = load_concepts(cfg);
  const auto corpus = load(cfg, in.cs);
  labeler::Labeler lab(in.cs, in.rules);
  const auto raw = labeler::label_corpus(corpus, lab);

  std::string out;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    json r = json::object(), b = json::object();
    for (std::size_t c = 0; c < in.cs.size(); ++c) {
      r[in.cs.concepts()[c]] = labeler::to_string(raw[i][c]);
      b[in.cs.concepts()[c]] = labeler::binarize(raw[i][c]);
    }
    out += json{{"study_id", corpus[i].study_id}, {"raw", r}, {"binary", b}}.dump();
    out += '\n';
  }
  write_file(dir / "labels.jsonl", out);
  return kExitOk;
}

int cmd_audit(const RunConfig& cfg) {
  const auto dir = output_dir(cfg);
  auto in = load_concepts(cfg);
  const auto policy = make_policy(cfg, in.cs);
  const auto corpus = load(cfg, in.cs);
  labeler::Labeler lab(in.cs, in.rules);
  const auto labels = audit::binarized_labels(corpus, in.cs, labeler::label_corpus(corpus, lab));

  std::string lines;
  std::vector<std::string> all_pass_ids;
  for (const auto& rec : corpus) {
    const auto& lm = labels.at(rec.study_id);
    const auto verdicts = audit::audit_study(rec, lm, policy);
    for (const auto& c : policy.concepts) {
      lines += audit::verdict_line(rec, c, lm.at(c), verdicts.at(c), policy.t).dump();
      lines += '\n';
    }
    if (audit::all_pass(verdicts)) all_pass_ids.push_back(rec.study_id);
  }
  std::sort(all_pass_ids.begin(), all_pass_ids.end());

  json parts = json::array();
  for (const auto& c : policy.concepts) {
    auto p = audit::partition(corpus, c, labels, policy);
    logger()->info("{}: pass {} / {} ({}%)", c, p.pass_ids.size(), p.total(), metrics::percent(p.pass_fraction));
    parts.push_back(p.to_json(policy.t));
  }
  json summary{{"t", policy.t},
               {"concepts", parts},
               {"all_concepts_pass", {{"extension", true},
                                      {"count", all_pass_ids.size()},
                                      {"ids", all_pass_ids}}}};
  write_file(dir / "verdicts.jsonl", lines);
  write_file(dir / "partitions.json", summary.dump(2) + "\n");
  return kExitOk;
}

namespace {

// {"columns": {"name": {"concept": f1, ...}, ...}, "subset": [...]}
int eval_f1_table(const RunConfig& cfg, const fs::path& dir) {
  const json doc = read_json_file(*cfg.f1_table_path);
  if (!doc.contains("columns") || !doc["columns"].is_object()) {
    throw DataError("f1 table needs a \"columns\" object");
  }
  std::string csv = "column,macro_avg\n";
  json out = json::object();
  for (const auto& [name, col] : doc["columns"].items()) {
    std::map<std::string, double> scores;
    try {
      scores = col.get<std::map<std::string, double>>();
    } catch (const json::exception& e) {
      throw DataError(fmt::format("column '{}': {}", name, e.what()));
    }
    std::vector<std::string> subset;
    if (doc.contains("subset")) {
      subset = doc["subset"].get<std::vector<std::string>>();
    } else {
      for (const auto& [k, _] : scores) subset.push_back(k);
    }
    const double avg = metrics::macro_avg(scores, subset);
    csv += fmt::format("{},{:.1f}\n", name, avg);
    out[name] = avg;
  }
  if (want_csv(cfg.format)) write_file(dir / "macro.csv", csv);
  if (want_json(cfg.format)) write_file(dir / "macro.json", json{{"macro_avg", out}}.dump(2) + "\n");
  return kExitOk;
}

}  // namespace

int cmd_eval(const RunConfig& cfg) {
  const auto dir = output_dir(cfg);
  if (cfg.f1_table_path) return eval_f1_table(cfg, dir);

  auto in = load_concepts(cfg);
  const auto policy = make_policy(cfg, in.cs);
  const auto corpus = load(cfg, in.cs);
  labeler::Labeler lab(in.cs, in.rules);
  const auto labels = audit::binarized_labels(corpus, in.cs, labeler::label_corpus(corpus, lab));

  const auto table = metrics::audit_eval(corpus, labels, policy, in.cs);
  json doc = table.to_json();

  // Per-class and macro/micro classification report of report labels vs
  // references over the audited concepts.
  std::map<std::string, metrics::Confusion> conf;
  for (const auto& rec : corpus) {
    for (const auto& c : policy.concepts) conf[c].add(labels.at(rec.study_id).at(c), rec.reference_labels->at(c));
  }
  if (!corpus.empty()) doc["classification"] = metrics::classification_report(conf, table.macro_subset).to_json();

  const bool have_refs = !corpus.empty() && std::all_of(corpus.begin(), corpus.end(), [](const StudyRecord& r) {
    return r.reference_report.has_value();
  });
  if (have_refs) {
    doc["text"] = metrics::text_metrics(corpus, cfg.bleu_max_n).to_json();
  } else {
    logger()->info("skipping BLEU/ROUGE-L: not every study has a reference_report");
  }

  if (want_csv(cfg.format)) write_file(dir / "eval.csv", table.to_csv());
  if (want_json(cfg.format)) write_file(dir / "eval.json", doc.dump(2) + "\n");
  return kExitOk;
}

int cmd_sweep(const RunConfig& cfg) {
  relsim::validate_grid(cfg.t_grid);
  const auto dir = output_dir(cfg);
  auto in = load_concepts(cfg);
  const auto concepts = audited_concepts(cfg, in.cs);
  relsim::SweepCurve curve;
  if (cfg.corpus_path) {
    const auto corpus = load(cfg, in.cs);
    labeler::Labeler lab(in.cs, in.rules);
    const auto labels = audit::binarized_labels(corpus, in.cs, labeler::label_corpus(corpus, lab));
    curve = relsim::sweep_threshold(corpus, labels, concepts, cfg.t_grid);
  } else {
    curve = relsim::sweep_threshold(effective_profile(cfg), in.cs, in.rules, concepts, cfg.t_grid);
  }
  if (want_csv(cfg.format)) write_file(dir / "sweep.csv", curve.to_csv());
  if (want_json(cfg.format)) write_file(dir / "sweep.json", curve.to_json().dump(2) + "\n");
  return kExitOk;
}

int cmd_simulate(const RunConfig& cfg) {
  const auto dir = output_dir(cfg);
  auto in = load_concepts(cfg);
  const auto profile = effective_profile(cfg);
  audit::AuditPolicy policy{cfg.t, cfg.audit_concepts};
  const auto result = relsim::simulate(profile, in.cs, in.rules, policy);
  const auto analytic = relsim::analytic_pass_stats(
      joint_flip_model(profile.e_ct, profile.e_ci, profile.rho), cfg.t, profile.confidence);
  logger()->info("pass_rate {} (analytic {}), residual_error {} (analytic {})", result.pass_rate,
                 analytic.pass_rate, result.residual_error, analytic.residual_error);

  if (want_json(cfg.format)) {
    json doc = result.to_json();
    doc["t"] = cfg.t;
    doc["profile"] = profile.to_json();
    doc["analytic"] = {{"pass_rate", analytic.pass_rate}, {"residual_error", analytic.residual_error}};
    write_file(dir / "simulate.json", doc.dump(2) + "\n");
  }
  if (want_csv(cfg.format)) {
    write_file(dir / "simulate.csv",
               fmt::format("t,pass_rate,residual_error,deferral_rate,mismatch_rate,joint_failure_rate,n,seed\n"
                           "{},{},{},{},{},{},{},{}\n",
                           cfg.t, result.pass_rate, result.residual_error, result.deferral_rate,
                           result.mismatch_rate, result.joint_failure_rate, result.n, result.seed));
  }
  return kExitOk;
}

int cmd_synth(const RunConfig& cfg) {
  const auto dir = output_dir(cfg);
  auto in = load_concepts(cfg);
  const auto corpus = synth_generate(effective_profile(cfg), in.cs, in.rules);
  write_corpus(dir / "corpus.jsonl", corpus);
  logger()->info("wrote {} synthetic records", corpus.size());
  return kExitOk;
}

namespace {

void validate_required(const RunConfig& cfg) {
  require(cfg.output_path, "--out", cfg);
  const bool needs_corpus = cfg.command == "label" || cfg.command == "audit" ||
                            (cfg.command == "eval" && !cfg.f1_table_path);
  if (needs_corpus) require(cfg.corpus_path, "--corpus", cfg);
  if (cfg.command == "sweep") relsim::validate_grid(cfg.t_grid);
  if (cfg.command == "sweep" || cfg.command == "simulate" || cfg.command == "synth") {
    if (!cfg.corpus_path || cfg.command != "sweep") effective_profile(cfg);
  }
}

}  // namespace

int run_command(const RunConfig& cfg) {
  try {
    validate_required(cfg);
    if (cfg.command == "label") return cmd_label(cfg);
    if (cfg.command == "audit") return cmd_audit(cfg);
    if (cfg.command == "eval") return cmd_eval(cfg);
    if (cfg.command == "sweep") return cmd_sweep(cfg);
    if (cfg.command == "simulate") return cmd_simulate(cfg);
    if (cfg.command == "synth") return cmd_synth(cfg);
    throw ConfigError(fmt::format("unknown command '{}'", cfg.command));
  } catch (const ConfigError& e) {
    logger()->error("{}", e.what());
    return kExitUsage;
  } catch (const DataError& e) {
    logger()->error("{}", e.what());
    return kExitData;
  }
}

int main(int argc, const char* const* argv) {
  std::optional<RunConfig> cfg;
  try {
    cfg = parse_args(argc, argv);
  } catch (const ConfigError& e) {
    logger()->error("{}", e.what());
    return kExitUsage;
  } catch (const DataError& e) {
    logger()->error("{}", e.what());
    return kExitUsage;
  }
  if (!cfg) return kExitOk;
  return run_command(*cfg);
}

}  // namespace raudit::cli
