#include <benchmark/benchmark.h>

#include "evonudge/bench.hpp"
#include "evonudge/evolve.hpp"
#include "evonudge/gnn.hpp"
#include "evonudge/gradmatch.hpp"
#include "evonudge/semgraph.hpp"

using namespace evonudge;

namespace {

const Problem& problem(int arity) {
  static std::vector<Problem> cache = [] {
    std::vector<Problem> out;
    for (int a = 1; a <= 6; ++a) {
      SuiteConfig c;
      c.train = 1;
      c.validation = 0;
      c.test = 0;
      c.min_arity = a;
      c.max_arity = a;
      c.seed = 11;
      out.push_back(generate_suite(Dsl::standard(), c).train.front());
    }
    return out;
  }();
  return cache[static_cast<std::size_t>(arity - 1)];
}

SearchGraph layer_one(int arity) {
  SearchGraph g(Dsl::standard(), arity);
  g.attach_dataset(problem(arity).dataset);
  g.expand(enumerate_candidates(g, 1));
  return g;
}

void BM_EvaluateAll(benchmark::State& state) {
  Rng rng(1);
  const ExprTree t = random_tree(Dsl::standard(), 3, static_cast<int>(state.range(0)), GrowMethod::Full, rng);
  const auto& data = problem(3).dataset;
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_all(t, data));
  state.counters["nodes"] = static_cast<double>(t.size());
}
BENCHMARK(BM_EvaluateAll)->Arg(2)->Arg(4)->Arg(6);

void BM_Frontier(benchmark::State& state) {
  const SearchGraph g = layer_one(static_cast<int>(state.range(0)));
  std::size_t n = 0;
  for (auto _ : state) n = CandidateFrontier(g, 2).size();
  state.counters["candidates"] = static_cast<double>(n);
}
BENCHMARK(BM_Frontier)->Arg(1)->Arg(3)->Unit(benchmark::kMillisecond);

void BM_GnnForward(benchmark::State& state) {
  const SearchGraph g = layer_one(2);
  auto cands = enumerate_candidates(g, 2);
  cands.resize(static_cast<std::size_t>(state.range(0)));
  const ModelParams p = ModelParams::initialize(1);
  const GraphInput in = featurize(g, cands, problem(2).dataset.front());
  for (auto _ : state) benchmark::DoNotOptimize(forward_logits(p, in));
  state.counters["rows"] = in.rows();
}
BENCHMARK(BM_GnnForward)->Arg(64)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_Saliency(benchmark::State& state) {
  const SearchGraph g = layer_one(2);
  auto cands = enumerate_candidates(g, 2);
  cands.resize(static_cast<std::size_t>(state.range(0)));
  const ModelParams p = ModelParams::initialize(1);
  const auto data = std::span(problem(2).dataset).first(4);
  for (auto _ : state) benchmark::DoNotOptimize(saliency(p, g, cands, data));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Saliency)->Arg(64)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_ChooseDonor(benchmark::State& state) {
  Rng rng(2);
  const ExprTree a = random_tree(Dsl::standard(), 3, 5, GrowMethod::Full, rng);
  const ExprTree b = random_tree(Dsl::standard(), 3, 5, GrowMethod::Full, rng);
  const auto& data = problem(3).dataset;
  for (auto _ : state) benchmark::DoNotOptimize(choose_donor(a, 3, b, data));
}
BENCHMARK(BM_ChooseDonor);

void BM_GpGeneration(benchmark::State& state) {
  GpConfig c;
  c.population = 200;
  c.generations = 1;
  c.stop_on_success = false;
  c.crossover = state.range(0) ? CrossoverKind::GradientMatched : CrossoverKind::OnePoint;
  for (auto _ : state) benchmark::DoNotOptimize(run(c, problem(3), nullptr));
}
BENCHMARK(BM_GpGeneration)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
