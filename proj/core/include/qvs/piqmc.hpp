#ifndef QVS_PIQMC_HPP
#define QVS_PIQMC_HPP

#include <cstdint>
#include <vector>

#include "qvs/ising.hpp"
#include "qvs/matrix.hpp"
#include "qvs/rng.hpp"

namespace qvs {

struct TrotterConfig {
  double beta = 1.0;
  double gamma = 0.0;
  std::uint32_t slices = 64;   // requested P; see effective_slices
  std::uint32_t burn_in = 200; // sweeps before the first readout
  std::uint32_t thin = 1;      // sweeps between readouts
};

// Doubles P until beta * gamma / P <= 0.5 so the Trotter error stays small.
std::uint32_t effective_slices(double beta, double gamma, std::uint32_t requested);

// Inter-slice ferromagnetic coupling 0.5 * log coth(beta gamma / P).
double transverse_coupling(double beta, double gamma, std::uint32_t slices);

// Replicated worldline state, one row of slices * n_spins spins per chain,
// laid out slice-major: spins[chain][slice * n_spins + spin].
struct PiqmcChains {
  std::size_t n_chains = 0;
  std::uint32_t n_spins = 0;
  std::uint32_t slices = 0;
  std::vector<std::vector<std::int8_t>> spins;

  PiqmcChains(std::size_t n_chains, std::uint32_t n_spins, std::uint32_t slices, Rng& rng);
};

// One classical single-spin Metropolis raster sweep at inverse temperature
// beta. Shared by the gamma = 0 path of the quantum sweep.
void classical_metropolis_sweep(const IsingModel& m, double beta,
                                std::vector<std::int8_t>& spins, Rng& rng);

// One quantum sweep: raster over every (slice, spin) with single-spin
// Metropolis, then one whole-worldline flip proposal per spin. With
// gamma = 0 this is exactly one classical sweep of slice 0.
void piqmc_sweep(const IsingModel& m, const TrotterConfig& cfg, PiqmcChains& chains,
                 Rng& rng);

// Runs `sweeps` sweeps, then reads slice 0 of every chain as {0,1} rows
// (set bit = spin +1).
DenseMatrix piqmc_run(const IsingModel& m, const TrotterConfig& cfg, PiqmcChains& chains,
                      std::size_t sweeps, Rng& rng);

// Fresh chains, burn-in, then one readout row per chain per retained sweep
// until n_samples rows are collected.
DenseMatrix piqmc_sample(const IsingModel& m, const TrotterConfig& cfg,
                         std::size_t n_samples, std::size_t n_chains, Rng& rng);

}  // namespace qvs

#endif
