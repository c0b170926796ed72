#include "qvs/piqmc.hpp"

#include <cmath>

#include "qvs/error.hpp"

namespace qvs {

std::uint32_t effective_slices(double beta, double gamma, std::uint32_t requested) {
  QVS_REQUIRE(requested >= 1, "effective_slices: requested slices must be >= 1");
  if (gamma <= 0.0) return requested;
  std::uint32_t p = requested;
  while (beta * gamma / double(p) > 0.5) p *= 2;
  return p;
}

double transverse_coupling(double beta, double gamma, std::uint32_t slices) {
  QVS_REQUIRE(gamma > 0.0, "transverse_coupling: gamma must be positive");
  const double x = beta * gamma / double(slices);
  return 0.5 * std::log(1.0 / std::tanh(x));
}

PiqmcChains::PiqmcChains(std::size_t n_chains_, std::uint32_t n_spins_,
                         std::uint32_t slices_, Rng& rng)
    : n_chains(n_chains_), n_spins(n_spins_), slices(slices_) {
  QVS_REQUIRE(n_chains > 0 && n_spins > 0 && slices > 0, "PiqmcChains: empty dimensions");
  spins.resize(n_chains);
  for (auto& chain : spins) {
    chain.resize(std::size_t(slices) * n_spins);
    for (auto& s : chain) s = rng.bernoulli(0.5) ? std::int8_t(1) : std::int8_t(-1);
  }
}

namespace {

// h_i + sum over bipartite neighbors of J * lambda within one slice.
double local_field(const IsingModel& m, const std::int8_t* slice, std::uint32_t i) {
  double f = m.field[i];
  if (i < m.d_left) {
    const double* row = m.coupling.data() + std::size_t(i) * m.d_right;
    for (std::uint32_t j = 0; j < m.d_right; ++j)
      f += row[j] * double(slice[m.d_left + j]);
  } else {
    const std::uint32_t j = i - m.d_left;
    for (std::uint32_t l = 0; l < m.d_left; ++l)
      f += m.coupling[std::size_t(l) * m.d_right + j] * double(slice[l]);
  }
  return f;
}

void quantum_sweep_chain(const IsingModel& m, double beta, std::uint32_t p,
                         double j_perp, std::vector<std::int8_t>& chain, Rng& rng) {
  const std::uint32_t n = m.n_spins();
  const double intra_scale = beta / double(p);
  for (std::uint32_t k = 0; k < p; ++k) {
    std::int8_t* slice = chain.data() + std::size_t(k) * n;
    const std::int8_t* up = chain.data() + std::size_t((k + 1) % p) * n;
    const std::int8_t* down = chain.data() + std::size_t((k + p - 1) % p) * n;
    for (std::uint32_t i = 0; i < n; ++i) {
      const double lam = double(slice[i]);
      const double delta = 2.0 * intra_scale * lam * local_field(m, slice, i) +
                           2.0 * j_perp * lam * (double(up[i]) + double(down[i]));
      if (delta <= 0.0 || rng.uniform01() < std::exp(-delta)) slice[i] = -slice[i];
    }
  }
  // Whole-worldline flips restore ergodicity across the strong inter-slice
  // coupling; inter-slice terms cancel because both endpoints flip.
  for (std::uint32_t i = 0; i < n; ++i) {
    double delta = 0.0;
    for (std::uint32_t k = 0; k < p; ++k) {
      const std::int8_t* slice = chain.data() + std::size_t(k) * n;
      delta += 2.0 * intra_scale * double(slice[i]) * local_field(m, slice, i);
    }
    if (delta <= 0.0 || rng.uniform01() < std::exp(-delta)) {
      for (std::uint32_t k = 0; k < p; ++k) {
        std::int8_t& s = chain[std::size_t(k) * n + i];
        s = std::int8_t(-s);
      }
    }
  }
}

}  // namespace

void classical_metropolis_sweep(const IsingModel& m, double beta,
                                std::vector<std::int8_t>& spins, Rng& rng) {
  QVS_REQUIRE(spins.size() >= m.n_spins(), "classical_metropolis_sweep: state too small");
  for (std::uint32_t i = 0; i < m.n_spins(); ++i) {
    const double lam = double(spins[i]);
    const double delta = 2.0 * beta * lam * local_field(m, spins.data(), i);
    if (delta <= 0.0 || rng.uniform01() < std::exp(-delta)) spins[i] = -spins[i];
  }
}

void piqmc_sweep(const IsingModel& m, const TrotterConfig& cfg, PiqmcChains& chains,
                 Rng& rng) {
  QVS_REQUIRE(chains.n_spins == m.n_spins(), "piqmc_sweep: spin count mismatch");
  if (cfg.gamma <= 0.0) {
    for (auto& chain : chains.spins) classical_metropolis_sweep(m, cfg.beta, chain, rng);
    return;
  }
  QVS_REQUIRE(chains.slices >= 2, "piqmc_sweep: quantum sweeps need at least 2 slices");
  const double j_perp = transverse_coupling(cfg.beta, cfg.gamma, chains.slices);
  for (auto& chain : chains.spins)
    quantum_sweep_chain(m, cfg.beta, chains.slices, j_perp, chain, rng);
}

DenseMatrix piqmc_run(const IsingModel& m, const TrotterConfig& cfg, PiqmcChains& chains,
                      std::size_t sweeps, Rng& rng) {
  for (std::size_t s = 0; s < sweeps; ++s) piqmc_sweep(m, cfg, chains, rng);
  DenseMatrix out(chains.n_chains, chains.n_spins);
  for (std::size_t c = 0; c < chains.n_chains; ++c) {
    const std::int8_t* slice0 = chains.spins[c].data();
    real* row = out.row_ptr(c);
    for (std::uint32_t i = 0; i < chains.n_spins; ++i)
      row[i] = slice0[i] > 0 ? real(1) : real(0);
  }
  return out;
}

DenseMatrix piqmc_sample(const IsingModel& m, const TrotterConfig& cfg,
                         std::size_t n_samples, std::size_t n_chains, Rng& rng) {
  QVS_REQUIRE(n_samples > 0 && n_chains > 0, "piqmc_sample: empty request");
  const std::uint32_t p = effective_slices(cfg.beta, cfg.gamma, cfg.slices);
  PiqmcChains chains(n_chains, m.n_spins(), p, rng);
  for (std::uint32_t s = 0; s < cfg.burn_in; ++s) piqmc_sweep(m, cfg, chains, rng);

  DenseMatrix samples(n_samples, m.n_spins());
  std::size_t filled = 0;
  const std::uint32_t thin = cfg.thin == 0 ? 1 : cfg.thin;
  while (filled < n_samples) {
    DenseMatrix batch = piqmc_run(m, cfg, chains, thin, rng);
    for (std::size_t c = 0; c < batch.rows && filled < n_samples; ++c, ++filled) {
      const real* src = batch.row_ptr(c);
      real* dst = samples.row_ptr(filled);
      for (std::size_t i = 0; i < samples.cols; ++i) dst[i] = src[i];
    }
  }
  return samples;
}

}  // namespace qvs
