#include <benchmark/benchmark.h>

#include <random>

#include "support/fixtures.hpp"
#include "zara/approximator.hpp"
#include "zara/evalkit.hpp"
#include "zara/mock_backend.hpp"
#include "zara/nlimap.hpp"
#include "zara/promptgen.hpp"
#include "zara/selftrain.hpp"

using namespace zara;
using namespace zara::testing;

namespace {

std::vector<approx::ScoredPrediction> synthetic_pool(std::size_t n, Task task = Task::SBIC) {
  std::mt19937_64 rng(n);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<approx::ScoredPrediction> pool;
  pool.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    pool.push_back(scored_item(task, "p" + std::to_string(i), static_cast<int>(rng() % class_count(task)), u(rng)));
  }
  return pool;
}

}  // namespace

static void BM_ScoreQuery(benchmark::State& state) {
  std::vector<std::shared_ptr<backend::NliScorer>> scorers;
  for (std::int64_t k = 0; k < state.range(0); ++k) {
    scorers.push_back(backend::mock::make_nli_scorer(
        k % 2 ? backend::mock::OverlapKind::Dice : backend::mock::OverlapKind::Jaccard, "nli-" + std::to_string(k)));
  }
  approx::Approximator approximator(scorers);
  const auto inst = sample_instance(Task::ESNLI, "e");
  const auto query = nlimap::map_to_nli(inst, parsed(inst, 0, *inst.gold_rationale));
  for (auto _ : state) benchmark::DoNotOptimize(approximator.score(query));
}
BENCHMARK(BM_ScoreQuery)->Arg(1)->Arg(3)->Arg(5);

static void BM_MapToNli(benchmark::State& state) {
  const auto inst = sample_instance(Task::ECQA, "q");
  const auto prediction = parsed(inst, 0, *inst.gold_rationale);
  for (auto _ : state) benchmark::DoNotOptimize(nlimap::map_to_nli(inst, prediction));
}
BENCHMARK(BM_MapToNli);

static void BM_ParsePrediction(benchmark::State& state) {
  const auto tmpl = promptgen::default_template(Task::ComVE);
  const auto inst = sample_instance(Task::ComVE, "c");
  const auto text = promptgen::render_target(tmpl, inst, *inst.gold_label, *inst.gold_rationale);
  for (auto _ : state) benchmark::DoNotOptimize(promptgen::parse_prediction(tmpl, text, inst));
}
BENCHMARK(BM_ParsePrediction);

static void BM_Calibrate(benchmark::State& state) {
  std::vector<std::vector<double>> episodes;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int e = 0; e < 10; ++e) {
    episodes.emplace_back(static_cast<std::size_t>(state.range(0)));
    for (auto& s : episodes.back()) s = u(rng);
  }
  const auto grid = approx::default_grid();
  for (auto _ : state) {
    benchmark::DoNotOptimize(approx::calibrate_threshold(approx::average_counts_curve(episodes, grid)));
  }
}
BENCHMARK(BM_Calibrate)->Arg(48)->Arg(350);

static void BM_Select(benchmark::State& state) {
  const auto pool = synthetic_pool(350);
  const auto strategy = static_cast<approx::Strategy>(state.range(0));
  const approx::SelectionParams params =
      strategy == approx::Strategy::Zara ? approx::SelectionParams{0.8, std::nullopt, 0}
                                         : approx::SelectionParams{std::nullopt, 70, 1};
  for (auto _ : state) benchmark::DoNotOptimize(approx::select(pool, strategy, params));
  state.SetLabel(std::string(approx::strategy_name(strategy)));
}
BENCHMARK(BM_Select)
    ->Arg(static_cast<int>(approx::Strategy::Zara))
    ->Arg(static_cast<int>(approx::Strategy::Random))
    ->Arg(static_cast<int>(approx::Strategy::Lowest));

static void BM_Balance(benchmark::State& state) {
  const auto pool = synthetic_pool(static_cast<std::size_t>(state.range(0)), Task::ECQA);
  for (auto _ : state) benchmark::DoNotOptimize(selftrain::balance(pool, 7));
}
BENCHMARK(BM_Balance)->Arg(50)->Arg(350);

static void BM_McNemar(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(eval::mcnemar_exact_p(n / 3, n - n / 3));
}
BENCHMARK(BM_McNemar)->Arg(12)->Arg(350)->Arg(5000);

static void BM_PercentileBins(benchmark::State& state) {
  std::mt19937_64 rng(9);
  std::vector<eval::BinItem> items;
  for (int i = 0; i < 350; ++i) items.push_back({"i" + std::to_string(i), (rng() % 1000) / 1000.0, 2.5});
  for (auto _ : state) benchmark::DoNotOptimize(eval::percentile_bins(items, 4));
}
BENCHMARK(BM_PercentileBins);

BENCHMARK_MAIN();
