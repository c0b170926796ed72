#include <benchmark/benchmark.h>

#include <vector>

#include "qvs/matrix.hpp"
#include "qvs/nn.hpp"
#include "qvs/rng.hpp"

namespace {

using namespace qvs;

// Encoder trunk shape used by the 64-bit models: 64 -> 128 -> 64.
std::vector<DenseLayer> trunk() {
  Rng rng(3);
  std::vector<DenseLayer> layers;
  layers.push_back(make_dense_layer(128, 64, rng));
  layers.push_back(make_dense_layer(64, 128, rng));
  return layers;
}

DenseMatrix batch_input(std::size_t rows) {
  Rng rng(5);
  DenseMatrix x(rows, 64);
  for (real& v : x.data) v = real(rng.normal());
  return x;
}

void BM_LinearForwardBatch(benchmark::State& state) {
  const std::vector<DenseLayer> layers = trunk();
  const DenseMatrix x = batch_input(std::size_t(state.range(0)));
  for (auto _ : state) {
    const DenseMatrix y = linear_forward(x, layers[0]);
    benchmark::DoNotOptimize(y.data.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LinearForwardBatch)->Arg(1)->Arg(256)->Arg(1024)->Unit(benchmark::kMicrosecond);

void BM_TrunkForward(benchmark::State& state) {
  const std::vector<DenseLayer> layers = trunk();
  const DenseMatrix x = batch_input(256);
  for (auto _ : state) {
    const MlpCache cache = mlp_forward(layers, x, true);
    benchmark::DoNotOptimize(cache.output.data.data());
  }
  state.SetItemsProcessed(state.iterations() * 256);
}
BENCHMARK(BM_TrunkForward)->Unit(benchmark::kMicrosecond);

void BM_TrunkBackprop(benchmark::State& state) {
  const std::vector<DenseLayer> layers = trunk();
  const DenseMatrix x = batch_input(256);
  const MlpCache cache = mlp_forward(layers, x, true);
  DenseMatrix upstream(cache.output.rows, cache.output.cols);
  Rng rng(9);
  for (real& v : upstream.data) v = real(rng.normal());
  for (auto _ : state) {
    const MlpGrads grads = backprop(layers, cache, upstream, true);
    benchmark::DoNotOptimize(grads.input.data.data());
  }
  state.SetItemsProcessed(state.iterations() * 256);
}
BENCHMARK(BM_TrunkBackprop)->Unit(benchmark::kMicrosecond);

}  // namespace
