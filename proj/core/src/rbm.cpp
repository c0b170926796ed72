#include "qvs/rbm.hpp"

#include <algorithm>
#include <cmath>

#include "qvs/error.hpp"
#include "qvs/latent.hpp"

namespace qvs {

RbmParams make_rbm(std::uint32_t d_left, std::uint32_t d_right, double beta) {
  QVS_REQUIRE(d_left > 0 && d_right > 0, "make_rbm: both blocks must be non-empty");
  QVS_REQUIRE(beta > 0.0, "make_rbm: beta must be positive");
  RbmParams p;
  p.d_left = d_left;
  p.d_right = d_right;
  p.omega = DenseMatrix(d_left, d_right);
  p.bias.assign(std::size_t(d_left) + d_right, real(0));
  p.beta = beta;
  return p;
}

double rbm_energy(const RbmParams& p, std::span<const real> z) {
  QVS_REQUIRE(z.size() == p.d_latent(), "rbm_energy: size mismatch");
  double e = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) e -= double(p.bias[i]) * double(z[i]);
  const real* z_right = z.data() + p.d_left;
  for (std::uint32_t i = 0; i < p.d_left; ++i) {
    const double zi = double(z[i]);
    if (zi == 0.0) continue;
    e -= zi * detail::dot(p.omega.row_ptr(i), z_right, p.d_right);
  }
  return e;
}

void rbm_energy_grad_z(const RbmParams& p, std::span<const real> z, std::span<real> dz) {
  QVS_REQUIRE(z.size() == p.d_latent() && dz.size() == z.size(),
              "rbm_energy_grad_z: size mismatch");
  const real* z_right = z.data() + p.d_left;
  for (std::uint32_t i = 0; i < p.d_left; ++i)
    dz[i] = real(-double(p.bias[i]) - detail::dot(p.omega.row_ptr(i), z_right, p.d_right));
  for (std::uint32_t j = 0; j < p.d_right; ++j) {
    double acc = -double(p.bias[p.d_left + j]);
    for (std::uint32_t i = 0; i < p.d_left; ++i)
      acc -= double(p.omega.at(i, j)) * double(z[i]);
    dz[p.d_left + j] = real(acc);
  }
}

namespace {

double logsumexp(std::span<const double> xs) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : xs) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

double exact_log_partition(const RbmParams& p) {
  if (p.d_left > 24)
    throw CapabilityError("exact_log_partition: d_left too large to enumerate");
  const std::uint64_t n_left = std::uint64_t(1) << p.d_left;
  std::vector<double> terms(n_left);
  std::vector<double> field(p.d_right);
  for (std::uint64_t mask = 0; mask < n_left; ++mask) {
    double t = 0.0;
    std::fill(field.begin(), field.end(), 0.0);
    for (std::uint32_t i = 0; i < p.d_left; ++i) {
      if (!((mask >> i) & 1)) continue;
      t += p.beta * double(p.bias[i]);
      const real* row = p.omega.row_ptr(i);
      for (std::uint32_t j = 0; j < p.d_right; ++j) field[j] += double(row[j]);
    }
    for (std::uint32_t j = 0; j < p.d_right; ++j)
      t += softplus(p.beta * (double(p.bias[p.d_left + j]) + field[j]));
    terms[mask] = t;
  }
  return logsumexp(terms);
}

std::vector<double> exact_pmf(const RbmParams& p) {
  if (p.d_latent() > 20)
    throw CapabilityError("exact_pmf: d_latent too large to enumerate");
  const std::uint64_t n = std::uint64_t(1) << p.d_latent();
  std::vector<double> logp(n);
  std::vector<real> z(p.d_latent());
  for (std::uint64_t code = 0; code < n; ++code) {
    for (std::uint32_t i = 0; i < p.d_latent(); ++i) z[i] = real((code >> i) & 1);
    logp[code] = -p.beta * rbm_energy(p, z);
  }
  const double lz = logsumexp(logp);
  std::vector<double> pmf(n);
  for (std::uint64_t code = 0; code < n; ++code) pmf[code] = std::exp(logp[code] - lz);
  return pmf;
}

void block_gibbs_sweep(const RbmParams& p, std::span<real> z, Rng& rng) {
  QVS_REQUIRE(z.size() == p.d_latent(), "block_gibbs_sweep: size mismatch");
  real* z_left = z.data();
  real* z_right = z.data() + p.d_left;
  for (std::uint32_t j = 0; j < p.d_right; ++j) {
    double field = double(p.bias[p.d_left + j]);
    for (std::uint32_t i = 0; i < p.d_left; ++i)
      field += double(p.omega.at(i, j)) * double(z_left[i]);
    z_right[j] = rng.bernoulli(sigmoid(p.beta * field)) ? real(1) : real(0);
  }
  for (std::uint32_t i = 0; i < p.d_left; ++i) {
    const double field =
        double(p.bias[i]) + detail::dot(p.omega.row_ptr(i), z_right, p.d_right);
    z_left[i] = rng.bernoulli(sigmoid(p.beta * field)) ? real(1) : real(0);
  }
}

GibbsChains::GibbsChains(std::size_t n_chains, std::uint32_t d_latent, Rng& rng)
    : state(n_chains, d_latent) {
  for (auto& v : state.data) v = rng.bernoulli(0.5) ? real(1) : real(0);
}

void block_gibbs_sweeps(const RbmParams& p, DenseMatrix& states, std::size_t sweeps,
                        Rng& rng) {
  QVS_REQUIRE(states.cols == p.d_latent(), "block_gibbs_sweeps: state width mismatch");
  for (std::size_t s = 0; s < sweeps; ++s)
    for (std::size_t r = 0; r < states.rows; ++r)
      block_gibbs_sweep(p, states.row(r), rng);
}

DenseMatrix block_gibbs(const RbmParams& p, std::size_t n_chains, std::size_t n_steps,
                        Rng& rng) {
  QVS_REQUIRE(n_steps >= 1, "block_gibbs: n_steps must be >= 1");
  GibbsChains chains(n_chains, p.d_latent(), rng);
  block_gibbs_sweeps(p, chains.state, n_steps, rng);
  return std::move(chains.state);
}

Moments moments_from_samples(const DenseMatrix& samples, std::uint32_t d_left) {
  QVS_REQUIRE(samples.rows > 0, "moments_from_samples: no samples");
  QVS_REQUIRE(d_left < samples.cols, "moments_from_samples: d_left out of range");
  const std::uint32_t d_right = std::uint32_t(samples.cols) - d_left;
  Moments m(d_left, d_right);
  for (std::size_t r = 0; r < samples.rows; ++r) {
    const real* z = samples.row_ptr(r);
    for (std::size_t i = 0; i < samples.cols; ++i) m.mean[i] += double(z[i]);
    for (std::uint32_t i = 0; i < d_left; ++i) {
      const double zi = double(z[i]);
      if (zi == 0.0) continue;
      double* row = m.second.data() + std::size_t(i) * d_right;
      for (std::uint32_t j = 0; j < d_right; ++j) row[j] += zi * double(z[d_left + j]);
    }
  }
  const double inv = 1.0 / double(samples.rows);
  for (auto& v : m.mean) v *= inv;
  for (auto& v : m.second) v *= inv;
  return m;
}

Moments moments_from_pmf(std::span<const double> pmf, std::uint32_t d_left,
                         std::uint32_t d_right) {
  const std::uint32_t d = d_left + d_right;
  QVS_REQUIRE(pmf.size() == (std::uint64_t(1) << d), "moments_from_pmf: pmf size mismatch");
  Moments m(d_left, d_right);
  for (std::uint64_t code = 0; code < pmf.size(); ++code) {
    const double w = pmf[code];
    if (w == 0.0) continue;
    for (std::uint32_t i = 0; i < d; ++i)
      if ((code >> i) & 1) m.mean[i] += w;
    for (std::uint32_t i = 0; i < d_left; ++i) {
      if (!((code >> i) & 1)) continue;
      for (std::uint32_t j = 0; j < d_right; ++j)
        if ((code >> (d_left + j)) & 1) m.second[std::size_t(i) * d_right + j] += w;
    }
  }
  return m;
}

RbmGrads cd_gradients(const Moments& positive, const Moments& negative, double beta) {
  QVS_REQUIRE(positive.d_left == negative.d_left && positive.d_right == negative.d_right,
              "cd_gradients: moment shape mismatch");
  RbmGrads g;
  g.omega = DenseMatrix(positive.d_left, positive.d_right);
  g.bias.resize(positive.mean.size());
  for (std::size_t i = 0; i < g.bias.size(); ++i)
    g.bias[i] = real(beta * (positive.mean[i] - negative.mean[i]));
  for (std::size_t i = 0; i < g.omega.data.size(); ++i)
    g.omega.data[i] = real(beta * (positive.second[i] - negative.second[i]));
  return g;
}

void add_l2_gradient(const RbmParams& p, double lambda, RbmGrads& grads) {
  QVS_REQUIRE(grads.omega.same_shape(p.omega) && grads.bias.size() == p.bias.size(),
              "add_l2_gradient: shape mismatch");
  for (std::size_t i = 0; i < p.omega.data.size(); ++i)
    grads.omega.data[i] += real(lambda * double(p.omega.data[i]));
  for (std::size_t i = 0; i < p.bias.size(); ++i)
    grads.bias[i] += real(lambda * double(p.bias[i]));
}

void project_unit_box(RbmParams& p) {
  for (auto& w : p.omega.data) w = std::clamp(w, real(-1), real(1));
  for (auto& b : p.bias) b = std::clamp(b, real(-1), real(1));
}

}  // namespace qvs
