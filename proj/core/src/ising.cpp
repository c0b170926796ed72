#include "qvs/ising.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "qvs/error.hpp"

namespace qvs {

IsingModel bm_to_ising(const RbmParams& p) {
  IsingModel m;
  m.d_left = p.d_left;
  m.d_right = p.d_right;
  m.coupling.resize(std::size_t(p.d_left) * p.d_right);
  m.field.assign(p.d_latent(), 0.0);
  double coupling_sum = 0.0;
  for (std::uint32_t i = 0; i < p.d_left; ++i) {
    for (std::uint32_t j = 0; j < p.d_right; ++j) {
      const double w = double(p.omega.at(i, j));
      m.coupling[std::size_t(i) * p.d_right + j] = w / 4.0;
      m.field[i] += w / 4.0;
      m.field[p.d_left + j] += w / 4.0;
      coupling_sum += w;
    }
  }
  double bias_sum = 0.0;
  for (std::uint32_t i = 0; i < p.d_latent(); ++i) {
    m.field[i] += double(p.bias[i]) / 2.0;
    bias_sum += double(p.bias[i]);
  }
  m.offset = -bias_sum / 2.0 - coupling_sum / 4.0;
  return m;
}

double ising_energy(const IsingModel& m, std::span<const std::int8_t> spins) {
  QVS_REQUIRE(spins.size() == m.n_spins(), "ising_energy: size mismatch");
  double e = 0.0;
  for (std::size_t i = 0; i < spins.size(); ++i) e -= m.field[i] * double(spins[i]);
  for (std::uint32_t i = 0; i < m.d_left; ++i)
    for (std::uint32_t j = 0; j < m.d_right; ++j)
      e -= m.coupling[std::size_t(i) * m.d_right + j] * double(spins[i]) *
           double(spins[m.d_left + j]);
  return e;
}

std::vector<double> exact_qbm_pmf(const IsingModel& m, double gamma, double beta) {
  const std::uint32_t n = m.n_spins();
  if (n > 12) throw CapabilityError("exact_qbm_pmf: too many spins for a dense solve");
  QVS_REQUIRE(beta > 0.0, "exact_qbm_pmf: beta must be positive");
  const std::uint64_t dim = std::uint64_t(1) << n;

  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(Eigen::Index(dim), Eigen::Index(dim));
  std::vector<std::int8_t> spins(n);
  for (std::uint64_t code = 0; code < dim; ++code) {
    for (std::uint32_t i = 0; i < n; ++i)
      spins[i] = ((code >> i) & 1) ? std::int8_t(1) : std::int8_t(-1);
    h(Eigen::Index(code), Eigen::Index(code)) = ising_energy(m, spins);
    for (std::uint32_t i = 0; i < n; ++i) {
      const std::uint64_t flipped = code ^ (std::uint64_t(1) << i);
      h(Eigen::Index(code), Eigen::Index(flipped)) = -gamma;
    }
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h);
  QVS_REQUIRE(solver.info() == Eigen::Success, "exact_qbm_pmf: eigensolve failed");
  const Eigen::VectorXd& eps = solver.eigenvalues();
  const Eigen::MatrixXd& vecs = solver.eigenvectors();

  // Shift by the ground energy; the shift cancels in the normalization.
  const double e0 = eps.minCoeff();
  Eigen::VectorXd weights(eps.size());
  double trace = 0.0;
  for (Eigen::Index k = 0; k < eps.size(); ++k) {
    weights(k) = std::exp(-beta * (eps(k) - e0));
    trace += weights(k);
  }

  std::vector<double> pmf(dim);
  for (std::uint64_t code = 0; code < dim; ++code) {
    double diag = 0.0;
    for (Eigen::Index k = 0; k < eps.size(); ++k) {
      const double v = vecs(Eigen::Index(code), k);
      diag += v * v * weights(k);
    }
    pmf[code] = diag / trace;
  }
  return pmf;
}

}  // namespace qvs
