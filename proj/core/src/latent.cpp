#include "qvs/latent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qvs/error.hpp"

namespace qvs {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double log_sigmoid(double x) { return -softplus(-x); }

real reparam_sample(real zeta, real rho, real alpha) {
  const double r = std::clamp(double(rho), 1e-7, 1.0 - 1e-7);
  const double logit = std::log(r) - std::log1p(-r);
  real z = real(sigmoid((double(zeta) + logit) * double(alpha)));
  // Keep the contract strict under storage rounding at extreme logits.
  if (z <= real(0)) z = std::numeric_limits<real>::min();
  if (z >= real(1)) z = std::nextafter(real(1), real(0));
  return z;
}

real reparam_grad(real z_tilde, real alpha) {
  return real(double(alpha) * double(z_tilde) * (1.0 - double(z_tilde)));
}

DenseMatrix reparam_sample(const DenseMatrix& zeta, const DenseMatrix& rho, real alpha) {
  QVS_REQUIRE(zeta.same_shape(rho), "reparam_sample: shape mismatch");
  DenseMatrix z(zeta.rows, zeta.cols);
  for (std::size_t i = 0; i < z.data.size(); ++i)
    z.data[i] = reparam_sample(zeta.data[i], rho.data[i], alpha);
  return z;
}

BitString binarize(std::span<const real> zeta) {
  QVS_REQUIRE(zeta.size() >= 1 && zeta.size() <= 64, "binarize: width out of range");
  BitString code(0, uint32_t(zeta.size()));
  for (std::size_t i = 0; i < zeta.size(); ++i)
    if (zeta[i] >= real(0)) code.set(uint32_t(i), true);
  return code;
}

double posterior_log_mass(std::span<const real> zeta, std::span<const real> z_tilde) {
  QVS_REQUIRE(zeta.size() == z_tilde.size(), "posterior_log_mass: size mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < zeta.size(); ++i) {
    const double z = double(z_tilde[i]);
    const double x = double(zeta[i]);
    total += z * log_sigmoid(x) + (1.0 - z) * log_sigmoid(-x);
  }
  return total;
}

void posterior_log_mass_grads(std::span<const real> zeta, std::span<const real> z_tilde,
                              std::span<real> d_zeta, std::span<real> d_ztilde) {
  QVS_REQUIRE(zeta.size() == z_tilde.size() && zeta.size() == d_zeta.size() &&
                  zeta.size() == d_ztilde.size(),
              "posterior_log_mass_grads: size mismatch");
  for (std::size_t i = 0; i < zeta.size(); ++i) {
    d_zeta[i] = real(double(z_tilde[i]) - sigmoid(double(zeta[i])));
    d_ztilde[i] = zeta[i];
  }
}

}  // namespace qvs
