// Serial reference vs OpenMP kernels. Thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include "report_audit/audit.hpp"
#include "report_audit/relsim.hpp"
#include "report_audit/serial_reference.hpp"
#include "report_audit/synth.hpp"

using namespace raudit;

namespace {

struct Fixture {
  ConceptSet cs = ConceptSet::chexpert();
  labeler::LabelerRules rules;
  std::vector<StudyRecord> corpus;
  audit::LabelsByStudy labels;
  std::vector<double> grid{0.0, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};

  explicit Fixture(std::size_t n) {
    SynthProfile p;
    p.n_studies = n;
    corpus = synth_generate(p, cs, rules);
    labeler::Labeler lab(cs, rules);
    labels = audit::binarized_labels(corpus, cs, labeler::label_corpus(corpus, lab));
  }
};

const Fixture& fixture() {
  static const Fixture f(20000);
  return f;
}

SynthProfile sim_profile(std::size_t n) {
  SynthProfile p;
  p.n_studies = n;
  return p;
}

void BM_label_parallel(benchmark::State& state) {
  const auto& f = fixture();
  labeler::Labeler lab(f.cs, f.rules);
  for (auto _ : state) benchmark::DoNotOptimize(labeler::label_corpus(f.corpus, lab));
  state.SetItemsProcessed(state.iterations() * f.corpus.size());
}

void BM_label_serial(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(serial::label_corpus(f.corpus, f.cs, f.rules));
  state.SetItemsProcessed(state.iterations() * f.corpus.size());
}

void BM_partition_parallel(benchmark::State& state) {
  const auto& f = fixture();
  const audit::AuditPolicy policy{0.8, {"edema"}};
  for (auto _ : state) benchmark::DoNotOptimize(audit::partition(f.corpus, "edema", f.labels, policy));
  state.SetItemsProcessed(state.iterations() * f.corpus.size());
}

void BM_partition_serial(benchmark::State& state) {
  const auto& f = fixture();
  const audit::AuditPolicy policy{0.8, {"edema"}};
  for (auto _ : state) benchmark::DoNotOptimize(serial::partition(f.corpus, "edema", f.labels, policy));
  state.SetItemsProcessed(state.iterations() * f.corpus.size());
}

void BM_sweep_parallel(benchmark::State& state) {
  const auto& f = fixture();
  const auto concepts = f.cs.concepts();
  for (auto _ : state) benchmark::DoNotOptimize(relsim::sweep_threshold(f.corpus, f.labels, concepts, f.grid));
}

void BM_sweep_serial(benchmark::State& state) {
  const auto& f = fixture();
  const auto concepts = f.cs.concepts();
  for (auto _ : state) benchmark::DoNotOptimize(serial::sweep_threshold(f.corpus, f.labels, concepts, f.grid));
}

void BM_simulate_parallel(benchmark::State& state) {
  const auto& f = fixture();
  const auto p = sim_profile(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(relsim::simulate(p, f.cs, f.rules, audit::AuditPolicy{0.8, {}}));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_simulate_serial(benchmark::State& state) {
  const auto& f = fixture();
  const auto p = sim_profile(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(serial::simulate(p, f.cs, f.rules, audit::AuditPolicy{0.8, {}}));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_label_parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_label_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_partition_parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_partition_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_sweep_parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_sweep_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_simulate_parallel)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_simulate_serial)->Arg(10000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
