#include "doctest.h"

#include <cmath>
#include <vector>

#include "qvs/bitstring.hpp"
#include "qvs/rbm.hpp"

using namespace qvs;

namespace {

RbmParams random_rbm(std::uint32_t dl, std::uint32_t dr, Rng& rng, double scale = 1.0) {
  RbmParams p = make_rbm(dl, dr);
  for (real& v : p.omega.data) v = real(rng.uniform(-scale, scale));
  for (real& v : p.bias) v = real(rng.uniform(-scale, scale));
  return p;
}

std::vector<real> bits_of(std::uint64_t code, std::uint32_t d) {
  std::vector<real> z(d);
  for (std::uint32_t i = 0; i < d; ++i) z[i] = real((code >> i) & 1u);
  return z;
}

// Independent re-implementation: explicit double loop over bipartite pairs.
double brute_energy(const RbmParams& p, std::span<const real> z) {
  double e = 0;
  for (std::uint32_t i = 0; i < p.d_latent(); ++i) e -= double(p.bias[i]) * double(z[i]);
  for (std::uint32_t i = 0; i < p.d_left; ++i)
    for (std::uint32_t j = 0; j < p.d_right; ++j)
      e -= double(p.omega.at(i, j)) * double(z[i]) * double(z[p.d_left + j]);
  return e;
}

double total_variation(std::span<const double> a, std::span<const double> b) {
  double tv = 0;
  for (std::size_t i = 0; i < a.size(); ++i) tv += std::abs(a[i] - b[i]);
  return tv / 2;
}

std::vector<double> histogram(const DenseMatrix& samples, std::uint32_t d) {
  std::vector<double> h(std::size_t(1) << d, 0.0);
  for (std::size_t r = 0; r < samples.rows; ++r) {
    std::uint64_t code = 0;
    for (std::uint32_t i = 0; i < d; ++i)
      if (samples.at(r, i) >= real(0.5)) code |= std::uint64_t(1) << i;
    h[code] += 1.0;
  }
  for (double& v : h) v /= double(samples.rows);
  return h;
}

}  // namespace

TEST_CASE("rbm_energy zeros") {
  Rng rng(1);
  const RbmParams p = random_rbm(2, 2, rng);
  const std::vector<real> z(4, 0);
  CHECK(rbm_energy(p, z) == doctest::Approx(0));
}

TEST_CASE("rbm_energy single pair term") {
  RbmParams p = make_rbm(1, 1);
  p.omega.at(0, 0) = real(std::log(2.0));
  const std::vector<real> z = {1, 1};
  CHECK(rbm_energy(p, z) == doctest::Approx(-std::log(2.0)));
}

TEST_CASE("rbm_energy matches brute force on random instances") {
  Rng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const RbmParams p = random_rbm(3, 3, rng);
    for (std::uint64_t code = 0; code < 64; ++code) {
      const std::vector<real> z = bits_of(code, 6);
      CHECK(rbm_energy(p, z) == doctest::Approx(brute_energy(p, z)).epsilon(1e-6));
    }
    // Relaxed values are accepted too.
    std::vector<real> soft(6);
    for (real& v : soft) v = real(rng.uniform01());
    CHECK(rbm_energy(p, soft) == doctest::Approx(brute_energy(p, soft)).epsilon(1e-6));
  }
}

TEST_CASE("rbm_energy_grad_z matches the bilinear form") {
  Rng rng(12);
  const RbmParams p = random_rbm(2, 3, rng);
  std::vector<real> z(5);
  for (real& v : z) v = real(rng.uniform01());
  std::vector<real> dz(5);
  rbm_energy_grad_z(p, z, dz);
  for (std::uint32_t u = 0; u < 5; ++u) {
    // dE/dz_u = -b_u - coupling terms.
    double want = -double(p.bias[u]);
    if (u < p.d_left) {
      for (std::uint32_t j = 0; j < p.d_right; ++j)
        want -= double(p.omega.at(u, j)) * double(z[p.d_left + j]);
    } else {
      for (std::uint32_t i = 0; i < p.d_left; ++i)
        want -= double(p.omega.at(i, u - p.d_left)) * double(z[i]);
    }
    CHECK(double(dz[u]) == doctest::Approx(want).epsilon(1e-5));
  }
}

TEST_CASE("exact_log_partition zero params") {
  const RbmParams p = make_rbm(2, 2);
  CHECK(exact_log_partition(p) == doctest::Approx(4 * std::log(2.0)).epsilon(1e-10));
}

TEST_CASE("exact_log_partition 1+1 instance") {
  RbmParams p = make_rbm(1, 1);
  p.omega.at(0, 0) = real(std::log(2.0));
  CHECK(exact_log_partition(p) == doctest::Approx(std::log(5.0)).epsilon(1e-7));
}

TEST_CASE("exact_log_partition equals full enumeration") {
  Rng rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    RbmParams p = random_rbm(3, 3, rng);
    p.beta = rng.uniform(0.5, 1.5);
    double z = 0;
    for (std::uint64_t code = 0; code < 64; ++code)
      z += std::exp(-p.beta * brute_energy(p, bits_of(code, 6)));
    CHECK(exact_log_partition(p) == doctest::Approx(std::log(z)).epsilon(1e-10));
  }
}

TEST_CASE("exact_log_partition refuses large left side") {
  const RbmParams p = make_rbm(25, 2);
  CHECK_THROWS_AS(exact_log_partition(p), CapabilityError);
}

TEST_CASE("exact_pmf uniform at zero params") {
  const RbmParams p = make_rbm(2, 1);
  const std::vector<double> pmf = exact_pmf(p);
  REQUIRE(pmf.size() == 8);
  for (const double q : pmf) CHECK(q == doctest::Approx(0.125).epsilon(1e-10));
}

TEST_CASE("exact_pmf 1+1 instance") {
  RbmParams p = make_rbm(1, 1);
  p.omega.at(0, 0) = real(std::log(2.0));
  const std::vector<double> pmf = exact_pmf(p);
  CHECK(pmf[0b11] == doctest::Approx(0.4).epsilon(1e-6));
  CHECK(pmf[0b00] == doctest::Approx(0.2).epsilon(1e-6));
}

TEST_CASE("exact_pmf normalizes and tracks the energy ordering") {
  Rng rng(4);
  const RbmParams p = random_rbm(3, 2, rng);
  const std::vector<double> pmf = exact_pmf(p);
  double sum = 0;
  std::size_t argmax = 0;
  double best_e = 1e300;
  std::size_t argmin_e = 0;
  for (std::size_t code = 0; code < pmf.size(); ++code) {
    sum += pmf[code];
    if (pmf[code] > pmf[argmax]) argmax = code;
    const double e = rbm_energy(p, bits_of(std::uint64_t(code), 5));
    if (e < best_e) {
      best_e = e;
      argmin_e = code;
    }
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(argmax == argmin_e);
}

TEST_CASE("exact_pmf refuses large instances") {
  const RbmParams p = make_rbm(11, 11);
  CHECK_THROWS_AS(exact_pmf(p), CapabilityError);
}

TEST_CASE("block_gibbs factorized case is exact after one sweep") {
  RbmParams p = make_rbm(1, 1);
  p.bias = {real(0.4), real(-0.3)};
  Rng rng(5);
  const std::size_t n = 100000;
  const DenseMatrix s = block_gibbs(p, n, 1, rng);
  double m0 = 0, m1 = 0;
  for (std::size_t r = 0; r < n; ++r) {
    m0 += double(s.at(r, 0));
    m1 += double(s.at(r, 1));
  }
  m0 /= double(n);
  m1 /= double(n);
  const double p0 = 1 / (1 + std::exp(-0.4)), p1 = 1 / (1 + std::exp(0.3));
  CHECK(std::abs(m0 - p0) < 3 * std::sqrt(p0 * (1 - p0) / double(n)));
  CHECK(std::abs(m1 - p1) < 3 * std::sqrt(p1 * (1 - p1) / double(n)));
}

TEST_CASE("block_gibbs is deterministic per seed") {
  Rng a(7), b(7);
  const RbmParams p = random_rbm(2, 2, a);
  Rng a2(9), b2(9);
  const DenseMatrix s1 = block_gibbs(p, 50, 10, a2);
  const DenseMatrix s2 = block_gibbs(p, 50, 10, b2);
  CHECK(s1 == s2);
}

TEST_CASE("block_gibbs matches the exact distribution") {
  Rng rng(8);
  const RbmParams p = random_rbm(2, 2, rng, 0.8);
  const std::vector<double> pmf = exact_pmf(p);
  Rng srng(31);
  const DenseMatrix s = block_gibbs(p, 200000, 50, srng);
  const std::vector<double> h = histogram(s, 4);
  CHECK(total_variation(h, pmf) < 0.02);
}

TEST_CASE("gibbs moments match pmf moments") {
  Rng rng(10);
  const RbmParams p = random_rbm(2, 2, rng, 0.7);
  const Moments exact = moments_from_pmf(exact_pmf(p), 2, 2);
  Rng srng(11);
  const DenseMatrix s = block_gibbs(p, 200000, 40, srng);
  const Moments mc = moments_from_samples(s, 2);
  for (std::size_t i = 0; i < exact.mean.size(); ++i)
    CHECK(std::abs(mc.mean[i] - exact.mean[i]) < 0.01);
  for (std::size_t i = 0; i < exact.second.size(); ++i)
    CHECK(std::abs(mc.second[i] - exact.second[i]) < 0.01);
}

TEST_CASE("cd_gradients zero when phases match") {
  Rng rng(13);
  const DenseMatrix s = block_gibbs(random_rbm(2, 2, rng), 100, 5, rng);
  const Moments m = moments_from_samples(s, 2);
  const RbmGrads g = cd_gradients(m, m, 1.0);
  for (const real v : g.omega.data) CHECK(v == real(0));
  for (const real v : g.bias) CHECK(v == real(0));
}

TEST_CASE("cd_gradients with exact negatives is the log-likelihood gradient") {
  Rng rng(14);
  const RbmParams p = random_rbm(2, 2, rng, 0.9);
  const Moments exact = moments_from_pmf(exact_pmf(p), 2, 2);

  // One observed configuration as the positive phase.
  const std::vector<real> zp = bits_of(0b0110, 4);
  DenseMatrix pos_l(1, 4);
  for (std::size_t i = 0; i < 4; ++i) pos_l.at(0, i) = zp[i];
  const Moments pos = moments_from_samples(pos_l, 2);

  // The library computes in double and rounds once to storage width, so the
  // analytic value is rounded the same way before the comparison.
  const RbmGrads g = cd_gradients(pos, exact, p.beta);
  for (std::uint32_t i = 0; i < 4; ++i) {
    const double want = p.beta * (double(zp[i]) - exact.mean[i]);
    CHECK(std::abs(double(g.bias[i]) - double(real(want))) < 1e-12);
  }
  for (std::uint32_t i = 0; i < 2; ++i) {
    for (std::uint32_t j = 0; j < 2; ++j) {
      const double want = p.beta * (double(zp[i]) * double(zp[2 + j]) - exact.second[i * 2 + j]);
      CHECK(std::abs(double(g.omega.at(i, j)) - double(real(want))) < 1e-12);
    }
  }
}

TEST_CASE("add_l2_gradient adds lambda theta") {
  Rng rng(15);
  const RbmParams p = random_rbm(2, 2, rng);
  RbmGrads g;
  g.omega = DenseMatrix(2, 2);
  g.bias.assign(4, real(0));
  add_l2_gradient(p, 0.1, g);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(double(g.omega.data[i]) == doctest::Approx(0.1 * double(p.omega.data[i])));
    CHECK(double(g.bias[i]) == doctest::Approx(0.1 * double(p.bias[i])));
  }
}

TEST_CASE("project_unit_box") {
  RbmParams p = make_rbm(1, 1);
  p.omega.at(0, 0) = real(1.7);
  p.bias = {real(-2.5), real(0.3)};
  project_unit_box(p);
  CHECK(p.omega.at(0, 0) == real(1));
  CHECK(p.bias[0] == real(-1));
  CHECK(p.bias[1] == real(0.3));

  const RbmParams once = p;
  project_unit_box(p);
  CHECK(p == once);
}
