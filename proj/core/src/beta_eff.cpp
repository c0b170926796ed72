#include "qvs/beta_eff.hpp"

#include <algorithm>
#include <cmath>

#include "qvs/error.hpp"

namespace qvs {

namespace {

RbmParams scaled(const RbmParams& base, double beta_eff) {
  RbmParams p = base;
  p.beta = 1.0;
  for (auto& w : p.omega.data) w = real(double(w) * beta_eff);
  for (auto& b : p.bias) b = real(double(b) * beta_eff);
  return p;
}

double mean_energy(const RbmParams& base, const DenseMatrix& states) {
  double acc = 0.0;
  for (std::size_t r = 0; r < states.rows; ++r) acc += rbm_energy(base, states.row(r));
  return acc / double(states.rows);
}

}  // namespace

BetaEffResult estimate_beta_eff(const RbmParams& prior, const DenseMatrix& samples,
                                const BetaEffConfig& cfg, Rng& rng) {
  QVS_REQUIRE(samples.rows > 0, "estimate_beta_eff: no samples");
  QVS_REQUIRE(samples.cols == prior.d_latent(), "estimate_beta_eff: width mismatch");
  QVS_REQUIRE(cfg.iterations > 0 && cfg.n_chains > 0, "estimate_beta_eff: empty budget");

  RbmParams base = prior;
  base.beta = 1.0;

  double max_abs = 0.0;
  for (const real w : base.omega.data) max_abs = std::max(max_abs, std::abs(double(w)));
  for (const real b : base.bias) max_abs = std::max(max_abs, std::abs(double(b)));
  if (max_abs < 1e-12) return {cfg.initial, false};

  const double data_energy = mean_energy(base, samples);

  double beta = std::max(cfg.initial, cfg.min_beta);
  GibbsChains chains(cfg.n_chains, prior.d_latent(), rng);
  {
    RbmParams model = scaled(base, beta);
    block_gibbs_sweeps(model, chains.state, cfg.burn_in, rng);
  }

  const std::uint32_t tail_start =
      std::uint32_t(double(cfg.iterations) * (1.0 - std::clamp(cfg.tail_fraction, 0.0, 1.0)));
  double tail_sum = 0.0;
  std::uint32_t tail_count = 0;
  for (std::uint32_t t = 0; t < cfg.iterations; ++t) {
    RbmParams model = scaled(base, beta);
    block_gibbs_sweeps(model, chains.state, cfg.sweeps_per_iteration, rng);
    const double model_energy = mean_energy(base, chains.state);
    const double lr = cfg.lr / (1.0 + 10.0 * double(t) / double(cfg.iterations));
    beta = std::max(cfg.min_beta, beta + lr * (model_energy - data_energy));
    if (t >= tail_start) {
      tail_sum += beta;
      tail_count += 1;
    }
  }
  if (tail_count > 0) beta = tail_sum / double(tail_count);
  return {beta, true};
}

}  // namespace qvs
