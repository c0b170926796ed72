#ifndef QVS_ISING_HPP
#define QVS_ISING_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "qvs/rbm.hpp"

namespace qvs {

// Bipartite Ising model over spins in {-1, +1}.
// E(lambda) = -sum_i h_i lambda_i - sum_ij J_ij lambda_Li lambda_Rj.
// Spin order matches the RBM unit order: left block first.
struct IsingModel {
  std::uint32_t d_left = 0;
  std::uint32_t d_right = 0;
  std::vector<double> coupling;  // [i * d_right + j]
  std::vector<double> field;     // d_left + d_right
  double offset = 0.0;           // E_bm(z) = E_ising(2z - 1) + offset

  std::uint32_t n_spins() const { return d_left + d_right; }
};

// Change of variables z = (lambda + 1) / 2:
//   J_ij = omega_ij / 4
//   h_i  = b_i / 2 + sum_j omega_ij / 4   (row or column sum per side)
//   offset = -sum_i b_i / 2 - sum_ij omega_ij / 4
IsingModel bm_to_ising(const RbmParams& p);

double ising_energy(const IsingModel& m, std::span<const std::int8_t> spins);

// Diagonal of the thermal state of H = -sum h sz - sum J sz sz - gamma sum sx
// at inverse temperature beta, computed by dense eigendecomposition.
// Index convention: bit i of the code is spin i, set bit = lambda +1.
// Requires n_spins <= 12.
std::vector<double> exact_qbm_pmf(const IsingModel& m, double gamma, double beta);

}  // namespace qvs

#endif
