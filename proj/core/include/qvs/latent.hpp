#ifndef QVS_LATENT_HPP
#define QVS_LATENT_HPP

#include <span>

#include "qvs/bitstring.hpp"
#include "qvs/matrix.hpp"

namespace qvs {

// Sharpness of the smoothed-Bernoulli relaxation.
inline constexpr real kReparamAlpha = real(7);

double sigmoid(double x);
double softplus(double x);
double log_sigmoid(double x);  // -softplus(-x)

// z~ = sigmoid((zeta + log rho - log(1 - rho)) * alpha), rho clamped away
// from {0, 1}. Values land strictly inside (0, 1).
real reparam_sample(real zeta, real rho, real alpha = kReparamAlpha);

// d z~ / d zeta at a previously produced relaxed value.
real reparam_grad(real z_tilde, real alpha = kReparamAlpha);

// Elementwise over a batch; zeta and rho share shape.
DenseMatrix reparam_sample(const DenseMatrix& zeta, const DenseMatrix& rho,
                           real alpha = kReparamAlpha);

// Deterministic code: bit i set iff zeta[i] >= 0.
BitString binarize(std::span<const real> zeta);

// sum_i [ z~_i log sigma(zeta_i) + (1 - z~_i) log(1 - sigma(zeta_i)) ],
// the log-mass the factorized posterior assigns at the relaxed sample.
double posterior_log_mass(std::span<const real> zeta, std::span<const real> z_tilde);

// d/d zeta_i = z~_i - sigma(zeta_i); d/d z~_i = zeta_i.
void posterior_log_mass_grads(std::span<const real> zeta, std::span<const real> z_tilde,
                              std::span<real> d_zeta, std::span<real> d_ztilde);

}  // namespace qvs

#endif
