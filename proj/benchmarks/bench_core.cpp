#include <benchmark/benchmark.h>

#include "histoport/eoh.hpp"
#include "histoport/policy.hpp"

using namespace histoport;

namespace {

Rng& bench_rng() {
  static Rng rng(0xbe5cULL);
  return rng;
}

void BM_ConvDirect(benchmark::State& state) {
  Tensor in = Tensor::randn({4, 16, 16}, bench_rng(), 1.0);
  Tensor ker = Tensor::randn({4, 4, 3, 3}, bench_rng(), 0.3);
  for (auto _ : state) benchmark::DoNotOptimize(conv2d(in, ker, 1));
}
BENCHMARK(BM_ConvDirect);

void BM_ConvGemm(benchmark::State& state) {
  Tensor in = Tensor::randn({21, 64, 64}, bench_rng(), 1.0);
  Tensor ker = Tensor::randn({21, 21, 3, 3}, bench_rng(), 0.3);
  for (auto _ : state) benchmark::DoNotOptimize(conv2d(in, ker, 1));
}
BENCHMARK(BM_ConvGemm);

void BM_ConvFftPlaceCorrelation(benchmark::State& state) {
  int n = int(state.range(0));
  Tensor in = Tensor::randn({12, 88, 88}, bench_rng(), 1.0);
  Tensor ker = Tensor::randn({n, 12, 25, 25}, bench_rng(), 0.3);
  for (auto _ : state) benchmark::DoNotOptimize(conv2d(in, ker, 0));
}
BENCHMARK(BM_ConvFftPlaceCorrelation)->Arg(36)->Arg(180);

void BM_GenerateEoh(benchmark::State& state) {
  Tensor field = Tensor::randn({7, 88, 88}, bench_rng(), 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(generate_eoh(field, 12));
}
BENCHMARK(BM_GenerateEoh);

void BM_SubgroupAlignment(benchmark::State& state) {
  int n = int(state.range(0));
  Tensor map = Tensor::randn({n, 25, 25}, bench_rng(), 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(subgroup_alignment(map, 12));
}
BENCHMARK(BM_SubgroupAlignment)->Arg(36)->Arg(180);

void BM_RotateBilinear(benchmark::State& state) {
  Tensor map = Tensor::randn({12, 64, 64}, bench_rng(), 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(rotate_bilinear(map, 0.37));
}
BENCHMARK(BM_RotateBilinear);

void BM_FourierElu(benchmark::State& state) {
  FieldType type = FieldType::of(RepSpec::irrep_sum(3), 3);
  Tensor f = Tensor::randn({type.dim(), 64, 64}, bench_rng(), 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(fourier_elu(type, f, 16));
}
BENCHMARK(BM_FourierElu);

void BM_PickInference(benchmark::State& state) {
  PolicyConfig cfg;
  PolicyBundle policy(cfg);
  Rng rng(42);
  policy.init(rng);
  Tensor obs = Tensor::randn({1, 64, 64}, bench_rng(), 0.2);
  for (auto _ : state) benchmark::DoNotOptimize(policy.pick_position(obs));
}
BENCHMARK(BM_PickInference)->Unit(benchmark::kMillisecond);

void BM_PlaceInference(benchmark::State& state) {
  PolicyConfig cfg;
  PolicyBundle policy(cfg);
  Rng rng(42);
  policy.init(rng);
  Tensor obs = Tensor::randn({1, 64, 64}, bench_rng(), 0.2);
  Tensor crop = PolicyBundle::crop_centered(obs, 32, 32, cfg.place_crop);
  for (auto _ : state) benchmark::DoNotOptimize(policy.place_distribution(obs, crop));
}
BENCHMARK(BM_PlaceInference)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
