// Serial reference vs OpenMP for each parallel kernel. The second argument of
// every benchmark selects the policy: 0 serial, 1 parallel.
#include <random>

#include <benchmark/benchmark.h>

#include "sslaw/fitter.hpp"
#include "sslaw/landscape.hpp"
#include "sslaw/perturb.hpp"

using namespace sslaw;

namespace {

ExecPolicy policy(const benchmark::State& state) {
  return state.range(1) == 0 ? ExecPolicy::kSerial : ExecPolicy::kParallel;
}

WeightVector weights(std::size_t count) {
  WeightVector w;
  w.values.reserve(count);
  std::mt19937_64 gen(1);
  std::normal_distribution<double> dist(0.0, 0.02);
  for (std::size_t i = 0; i < count; ++i) w.values.push_back(dist(gen));
  return w;
}

ObservationSet shannon_data() {
  const auto& law = law_spec(LawId::kShannonFull);
  const std::vector<double> p{0.8, 1.0, 0.01, 0.02, 0.1, 0.3, 0.4, 0.2, 0.5};
  std::vector<Observation> rows;
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 8; ++j) {
      Observation o;
      o.model_id = "m" + std::to_string(i);
      o.n_params = 1.6e8 * std::pow(75.0, i / 5.0);
      o.d_tokens = 2e10 * std::pow(15.0, j / 7.0);
      o.loss = predict_loss(law, p, o.n_params / 1e9, o.d_tokens / 1e9);
      rows.push_back(o);
    }
  }
  return ObservationSet(std::move(rows));
}

void BM_SignalPower(benchmark::State& state) {
  const auto w = weights(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(signal_power(w, policy(state)));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_Inject(benchmark::State& state) {
  const auto w = weights(static_cast<std::size_t>(state.range(0)));
  PerturbOptions opts;
  opts.exec = policy(state);
  for (auto _ : state) benchmark::DoNotOptimize(inject(w, 20.0, 7, opts));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_GridEval(benchmark::State& state) {
  const auto& law = law_spec(LawId::kShannonFull);
  const std::vector<double> p{1.0, 1.0, 0.05, 0.02, 0.01, 0.302, 0.402, 0.45, 0.745};
  GridSpec spec;
  spec.n_min = 1e6;
  spec.n_max = 1e14;
  spec.d_min = 1e7;
  spec.d_max = 1e15;
  spec.n_steps = spec.d_steps = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(grid_eval(law, p, {}, spec, std::nullopt, policy(state)));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}

void BM_MultistartFit(benchmark::State& state) {
  const auto set = shannon_data();
  FitConfig cfg;
  cfg.random_starts = static_cast<int>(state.range(0));
  cfg.objective_space = ObjectiveSpace::kLogLoss;
  cfg.exec = policy(state);
  for (auto _ : state) benchmark::DoNotOptimize(fit(law_spec(LawId::kShannonFull), set, cfg));
}

}  // namespace

BENCHMARK(BM_SignalPower)->ArgsProduct({{1 << 20, 1 << 24}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Inject)->ArgsProduct({{1 << 20, 1 << 22}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GridEval)->ArgsProduct({{200, 1000}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MultistartFit)->ArgsProduct({{0, 16}, {0, 1}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
