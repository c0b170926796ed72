#ifndef QVS_RBM_HPP
#define QVS_RBM_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "qvs/matrix.hpp"
#include "qvs/rng.hpp"

namespace qvs {

// Restricted Boltzmann machine over {0,1} units, bipartite left/right split.
// E(z) = -sum_i b_i z_i - sum_ij omega_ij z_Li z_Rj, p(z) = exp(-beta E)/Z.
// Unit order everywhere: left block first, then right block.
struct RbmParams {
  std::uint32_t d_left = 0;
  std::uint32_t d_right = 0;
  DenseMatrix omega;        // d_left x d_right
  std::vector<real> bias;   // d_left + d_right
  double beta = 1.0;

  std::uint32_t d_latent() const { return d_left + d_right; }

  bool operator==(const RbmParams&) const = default;
};

RbmParams make_rbm(std::uint32_t d_left, std::uint32_t d_right, double beta = 1.0);

// Accepts relaxed unit values; bits need not be integral.
double rbm_energy(const RbmParams& p, std::span<const real> z);

// dE/dz into dz (same length as z).
void rbm_energy_grad_z(const RbmParams& p, std::span<const real> z, std::span<real> dz);

// log Z by summing the right block analytically and enumerating the left
// block. Requires d_left <= 24.
double exact_log_partition(const RbmParams& p);

// Probability of every configuration, indexed by code bits (bit i = unit i).
// Requires d_latent <= 20.
std::vector<double> exact_pmf(const RbmParams& p);

// One block sweep in place: right given left, then left given right.
void block_gibbs_sweep(const RbmParams& p, std::span<real> z, Rng& rng);

// Persistent chains for PCD negatives. Rows are chains.
struct GibbsChains {
  DenseMatrix state;
  GibbsChains(std::size_t n_chains, std::uint32_t d_latent, Rng& rng);
};

void block_gibbs_sweeps(const RbmParams& p, DenseMatrix& states, std::size_t sweeps,
                        Rng& rng);

// Fresh random chains, n_steps sweeps each, final state per chain as rows.
DenseMatrix block_gibbs(const RbmParams& p, std::size_t n_chains, std::size_t n_steps,
                        Rng& rng);

// First and bipartite second moments, double precision.
struct Moments {
  std::uint32_t d_left = 0;
  std::uint32_t d_right = 0;
  std::vector<double> mean;    // d_left + d_right
  std::vector<double> second;  // [i * d_right + j] = E[z_Li z_Rj]

  Moments() = default;
  Moments(std::uint32_t dl, std::uint32_t dr)
      : d_left(dl), d_right(dr), mean(std::size_t(dl) + dr, 0.0),
        second(std::size_t(dl) * dr, 0.0) {}
};

// Rows of `samples` are unit vectors; relaxed values are fine.
Moments moments_from_samples(const DenseMatrix& samples, std::uint32_t d_left);

// Exact moments from a full pmf (index convention of exact_pmf).
Moments moments_from_pmf(std::span<const double> pmf, std::uint32_t d_left,
                         std::uint32_t d_right);

struct RbmGrads {
  DenseMatrix omega;
  std::vector<real> bias;
};

// Contrastive-divergence estimate of the log-likelihood gradient (ascend it;
// the training loop negates it to form the loss gradient):
//   d_bias = beta (E_pos[z] - E_neg[z]), d_omega = beta (E_pos[zz] - E_neg[zz]).
// With exact negative moments this is the exact gradient.
RbmGrads cd_gradients(const Moments& positive, const Moments& negative, double beta);

// grads += lambda * params, the derivative of (lambda/2) |theta|^2.
void add_l2_gradient(const RbmParams& p, double lambda, RbmGrads& grads);

// Clamp omega and bias to [-1, 1].
void project_unit_box(RbmParams& p);

}  // namespace qvs

#endif
