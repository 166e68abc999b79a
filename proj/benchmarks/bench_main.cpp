#include "opskill/pipeline.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace opskill;

static void BM_SeriesStats(benchmark::State& state)
{
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> d(0, 500);
    DistanceSeries s;
    for (int i = 0; i < state.range(0); ++i) {
        s.t.push_back(i / 30.0);
        s.d.push_back(d(rng));
    }
    for (auto _ : state) benchmark::DoNotOptimize(series_stats(s, s.t.back() + 1.0));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SeriesStats)->Arg(100)->Arg(10000);

static std::vector<std::vector<int>> random_sequences(int count, int length)
{
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<int> sym(1, 12);
    std::vector<std::vector<int>> out(static_cast<std::size_t>(count));
    for (auto& s : out) {
        s.resize(static_cast<std::size_t>(length));
        for (int& x : s) x = sym(rng);
    }
    return out;
}

static void BM_AlignAndIntegrate(benchmark::State& state)
{
    const auto seqs = random_sequences(static_cast<int>(state.range(0)), 14);
    for (auto _ : state) {
        TaskModel m = build_baseline(std::span<const std::vector<int>>(seqs.data(), 1));
        for (std::size_t i = 1; i < seqs.size(); ++i) m = integrate(std::move(m), seqs[i]);
        benchmark::DoNotOptimize(m.size());
    }
}
BENCHMARK(BM_AlignAndIntegrate)->Arg(10)->Arg(50);

static void BM_SelectPrototypes(benchmark::State& state)
{
    SynthSpec spec;
    spec.users = static_cast<int>(state.range(0));
    spec.tasks = {SynthSpec::default_tasks()[0]};
    PipelineConfig cfg;
    const auto an = analyze(generate_dataset(spec), cfg);
    const auto& task = an.tasks.front();
    const auto pc = task_prototype_config(cfg, task);
    for (auto _ : state) benchmark::DoNotOptimize(select_prototypes(task.experiences, pc, task.skill_table));
}
BENCHMARK(BM_SelectPrototypes)->Arg(4)->Arg(12);

static void BM_AnalyzeDataset(benchmark::State& state)
{
    SynthSpec spec;
    spec.users = static_cast<int>(state.range(0));
    const auto set = generate_dataset(spec);
    for (auto _ : state) benchmark::DoNotOptimize(analyze(set, PipelineConfig{}).table.values.size());
}
BENCHMARK(BM_AnalyzeDataset)->Arg(12)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
