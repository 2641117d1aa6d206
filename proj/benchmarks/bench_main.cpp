#include <random>
#include <span>
#include <vector>

#include <benchmark/benchmark.h>

#include "skillrank/annotation.hpp"
#include "skillrank/evaluator.hpp"
#include "skillrank/scorer.hpp"
#include "skillrank/synthetic.hpp"
#include "skillrank/trainer.hpp"

using namespace skillrank;

namespace {

std::vector<std::vector<float>> random_snippets(std::size_t count, std::size_t dim) {
  std::mt19937_64 rng(1);
  std::normal_distribution<float> normal;
  std::vector<std::vector<float>> out(count, std::vector<float>(dim));
  for (auto& s : out) {
    for (auto& x : s) x = normal(rng);
  }
  return out;
}

void BM_ScoreClip(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(0));
  const auto params = init_params(default_architecture(dim), 1);
  const auto snippets = random_snippets(3, dim);
  std::vector<std::span<const float>> views(snippets.begin(), snippets.end());
  for (auto _ : state) benchmark::DoNotOptimize(score_clip(params, views));
}
BENCHMARK(BM_ScoreClip)->Arg(16)->Arg(256)->Arg(1024);

void BM_TrainingBatch(benchmark::State& state) {
  SyntheticConfig cfg;
  cfg.temporal = false;
  cfg.similar_clusters = 4;
  const auto task = make_synthetic_task(cfg);
  auto tc = TrainConfig::defaults_for(Modality::kSpatial);
  const StreamTrainer trainer(task.dataset, Modality::kSpatial, task.pairs, tc);
  const auto params = init_params(trainer.architecture(), 1);
  std::vector<PairTerm> terms;
  for (std::size_t k = 0; k < tc.batch_size; ++k) {
    terms.push_back({k % task.pairs.psi.size(), k % tc.splits, false});
  }
  std::size_t it = 0;
  for (auto _ : state) benchmark::DoNotOptimize(trainer.evaluate_batch(params, terms, it++));
}
BENCHMARK(BM_TrainingBatch)->Unit(benchmark::kMillisecond);

PairGraph random_graph(int nodes, double p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution edge(p);
  PairGraph g;
  for (int a = 0; a < nodes; ++a) {
    g.add_node("n" + std::to_string(a));
    for (int b = 0; b < nodes; ++b) {
      if (a != b && edge(rng)) g.add_edge("n" + std::to_string(a), "n" + std::to_string(b));
    }
  }
  return g;
}

void BM_FindCycles(benchmark::State& state) {
  const auto g = random_graph(static_cast<int>(state.range(0)), 0.05, 3);
  for (auto _ : state) benchmark::DoNotOptimize(find_cycles(g));
}
BENCHMARK(BM_FindCycles)->Arg(20)->Arg(40);

void BM_PairwisePrecision(benchmark::State& state) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u;
  std::map<std::string, double> scores, truth_scores;
  for (int v = 0; v < state.range(0); ++v) {
    const std::string id = "v" + std::to_string(v);
    scores[id] = u(rng);
    truth_scores[id] = u(rng);
  }
  const auto ranking = make_ranking("bench", scores);
  const auto truth = pairs_from_scores(truth_scores).psi;
  for (auto _ : state) benchmark::DoNotOptimize(pairwise_precision(ranking, truth));
}
BENCHMARK(BM_PairwisePrecision)->Arg(40)->Arg(200);

}  // namespace

BENCHMARK_MAIN();
