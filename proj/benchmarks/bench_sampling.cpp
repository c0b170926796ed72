#include <benchmark/benchmark.h>

#include "qvs/ising.hpp"
#include "qvs/piqmc.hpp"
#include "qvs/rbm.hpp"
#include "qvs/rng.hpp"

namespace {

using namespace qvs;

RbmParams random_rbm(std::uint32_t d_left, std::uint32_t d_right, std::uint64_t seed) {
  Rng rng(seed);
  RbmParams p = make_rbm(d_left, d_right);
  for (real& v : p.omega.data) v = real(rng.uniform(-0.2, 0.2));
  for (real& v : p.bias) v = real(rng.uniform(-0.2, 0.2));
  return p;
}

// One block sweep over all chains; chains stay warm across iterations.
void BM_BlockGibbsSweep(benchmark::State& state) {
  const RbmParams p = random_rbm(32, 32, 21);
  Rng rng(22);
  GibbsChains chains(std::size_t(state.range(0)), 64, rng);
  for (auto _ : state) {
    block_gibbs_sweeps(p, chains.state, 1, rng);
    benchmark::DoNotOptimize(chains.state.data.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * 64);
}
BENCHMARK(BM_BlockGibbsSweep)->Arg(64)->Arg(256)->Unit(benchmark::kMicrosecond);

// One quantum sweep: raster over slices * spins plus worldline proposals.
void BM_PiqmcSweep(benchmark::State& state) {
  const IsingModel m = bm_to_ising(random_rbm(8, 8, 31));
  TrotterConfig cfg;
  cfg.beta = 1.0;
  cfg.gamma = 2.0;
  cfg.slices = effective_slices(cfg.beta, cfg.gamma, 64);
  Rng rng(32);
  PiqmcChains chains(std::size_t(state.range(0)), m.n_spins(), cfg.slices, rng);
  for (auto _ : state) {
    piqmc_sweep(m, cfg, chains, rng);
    benchmark::DoNotOptimize(chains.spins.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * cfg.slices * m.n_spins());
}
BENCHMARK(BM_PiqmcSweep)->Arg(32)->Arg(128)->Unit(benchmark::kMicrosecond);

}  // namespace
