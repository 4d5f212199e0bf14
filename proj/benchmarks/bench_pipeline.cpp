#include <benchmark/benchmark.h>

#include "ipcv/analysis.hpp"
#include "ipcv/compressor.hpp"
#include "ipcv/cost.hpp"
#include "ipcv/encoder.hpp"

namespace {

using namespace ipcv;

struct Fixture {
  Encoder enc;
  Matrix x;

  explicit Fixture(std::size_t tokens) : enc(EncoderConfig{}), x(make_input(tokens)) {}

  static Matrix make_input(std::size_t tokens) {
    SyntheticInputSpec s;
    s.num_tokens = tokens;
    return make_synthetic_input(s, EncoderConfig{}.dim);
  }
};

CompressionConfig retain(double r) {
  CompressionConfig c;
  c.retain = RetainRatio{r};
  return c;
}

void BM_VanillaForward(benchmark::State& state) {
  const Fixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(forward_full(f.enc, f.x));
}
BENCHMARK(BM_VanillaForward)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_Ipcv(benchmark::State& state) {
  const Fixture f(static_cast<std::size_t>(state.range(0)));
  const CompressionConfig c = retain(static_cast<double>(state.range(1)) / 100.0);
  for (auto _ : state) benchmark::DoNotOptimize(run_ipcv(f.enc, f.x, c));
}
BENCHMARK(BM_Ipcv)
    ->Args({64, 50})
    ->Args({64, 35})
    ->Args({64, 20})
    ->Args({128, 50})
    ->Unit(benchmark::kMillisecond);

void BM_FindNeighbors(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  Matrix h(n, 64);
  for (double& v : h.data()) v = rng.normal();
  const PrunePartition p = select_topk(l2_norm_rows(h), n / 2);
  const Matrix keep = gather_rows(h, p.keep), rem = gather_rows(h, p.rem);
  for (auto _ : state) benchmark::DoNotOptimize(find_neighbors(rem, keep, p, 10));
}
BENCHMARK(BM_FindNeighbors)->Arg(64)->Arg(256)->Arg(1024);

void BM_Hausdorff(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  Matrix a(n, 64), b(n, 64);
  for (double& v : a.data()) v = rng.normal();
  for (double& v : b.data()) v = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(hausdorff(a, b));
}
BENCHMARK(BM_Hausdorff)->Arg(64)->Arg(256);

void BM_CountFlops(benchmark::State& state) {
  const CompressionConfig c = retain(0.5);
  for (auto _ : state)
    benchmark::DoNotOptimize(count_flops(EncoderConfig{}, 64, c, PipelineVariant::ipcv));
}
BENCHMARK(BM_CountFlops);

}  // namespace

BENCHMARK_MAIN();
