#ifndef QVS_BETA_EFF_HPP
#define QVS_BETA_EFF_HPP

#include <cstdint>

#include "qvs/rbm.hpp"

namespace qvs {

struct BetaEffConfig {
  double initial = 1.0;
  double lr = 0.1;
  std::uint32_t iterations = 400;
  std::uint32_t sweeps_per_iteration = 3;
  std::size_t n_chains = 128;
  std::uint32_t burn_in = 100;
  double tail_fraction = 0.5;  // averaged to form the estimate
  double min_beta = 1e-3;
};

struct BetaEffResult {
  double beta_eff = 1.0;
  bool identifiable = true;
};

// Fits the inverse temperature of p(z) proportional to exp(-beta E(z)) to a
// sample set by stochastic ascent on the likelihood: the gradient in beta is
// E_model[E] - E_data[E], with model expectations from persistent Gibbs
// chains at the scaled parameters (beta * omega, beta * bias). The step size
// decays and the returned value averages the trailing iterates. When the
// energy is identically zero beta is not identifiable and the initial value
// is returned with the flag cleared.
BetaEffResult estimate_beta_eff(const RbmParams& prior, const DenseMatrix& samples,
                                const BetaEffConfig& cfg, Rng& rng);

}  // namespace qvs

#endif
