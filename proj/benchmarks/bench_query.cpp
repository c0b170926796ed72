#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "qvs/bench.hpp"
#include "qvs/index.hpp"
#include "qvs/matrix.hpp"
#include "qvs/rng.hpp"

namespace {

using namespace qvs;

// 100k points hashed into clustered 64-bit codes: 128 codewords with 2%
// per-bit flip noise, the bucket shape a trained model produces.
struct Corpus {
  DenseMatrix data;
  std::vector<BitString> codes;
  InvertedIndex index;

  Corpus() : data(100000, 64), codes(make_codes()), index(build_index(codes)) {
    Rng rng(11);
    for (real& v : data.data) v = real(rng.uniform(-1, 1));
  }

  static std::vector<BitString> make_codes() {
    Rng rng(7);
    std::vector<std::uint64_t> words(128);
    for (auto& w : words) w = rng.next_u64();
    std::vector<BitString> codes;
    codes.reserve(100000);
    for (std::size_t i = 0; i < 100000; ++i) {
      std::uint64_t c = words[rng.uniform_index(words.size())];
      for (std::uint32_t b = 0; b < 64; ++b)
        if (rng.uniform01() < 0.02) c ^= std::uint64_t(1) << b;
      codes.emplace_back(c, 64);
    }
    return codes;
  }
};

const Corpus& corpus() {
  static Corpus c;
  return c;
}

void BM_QueryIndex(benchmark::State& state) {
  const Corpus& c = corpus();
  QueryConfig cfg;
  cfg.k = 100;
  cfg.c_max = std::size_t(state.range(0));
  std::size_t row = 0;
  for (auto _ : state) {
    const QueryResult r =
        query_index(c.index, c.data, c.data.row(row), c.codes[row], cfg);
    benchmark::DoNotOptimize(r.ids.data());
    row = (row + 7919) % c.data.rows;
  }
  state.SetItemsProcessed(state.iterations() * std::int64_t(cfg.c_max));
}
BENCHMARK(BM_QueryIndex)->Arg(1000)->Arg(4000)->Arg(16000)->Unit(benchmark::kMicrosecond);

void BM_LinearScan(benchmark::State& state) {
  const Corpus& c = corpus();
  std::size_t row = 0;
  for (auto _ : state) {
    const TopK r = linear_search(c.data, c.data.row(row), 100);
    benchmark::DoNotOptimize(r.ids.data());
    row = (row + 7919) % c.data.rows;
  }
  state.SetItemsProcessed(state.iterations() * std::int64_t(c.data.rows));
}
BENCHMARK(BM_LinearScan)->Unit(benchmark::kMillisecond);

void BM_HammingBucketOrder(benchmark::State& state) {
  const Corpus& c = corpus();
  std::size_t row = 0;
  for (auto _ : state) {
    const std::vector<std::uint32_t> order =
        hamming_sorted_buckets(c.index, c.codes[row]);
    benchmark::DoNotOptimize(order.data());
    row = (row + 7919) % c.data.rows;
  }
  state.SetItemsProcessed(state.iterations() * std::int64_t(c.index.m()));
}
BENCHMARK(BM_HammingBucketOrder)->Unit(benchmark::kMicrosecond);

void BM_BuildIndex(benchmark::State& state) {
  const Corpus& c = corpus();
  const std::size_t n = std::size_t(state.range(0));
  const std::span<const BitString> slice(c.codes.data(), n);
  for (auto _ : state) {
    const InvertedIndex idx = build_index(slice);
    benchmark::DoNotOptimize(idx.m());
  }
  state.SetItemsProcessed(state.iterations() * std::int64_t(n));
}
BENCHMARK(BM_BuildIndex)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
