#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "qvs/qvae.hpp"

using namespace qvs;

namespace {

QvaeConfig tiny_config(std::uint32_t d_data) {
  QvaeConfig cfg;
  cfg.d_data = d_data;
  cfg.d_latent = 8;
  cfg.hidden1 = 32;
  cfg.hidden2 = 16;
  cfg.batch_size = 256;
  cfg.epochs = 10;
  cfg.cd_chains = 16;
  cfg.cd_sweeps = 5;
  cfg.seed = 1;
  return cfg;
}

DenseMatrix uniform_noise(std::size_t rows, std::size_t cols, Rng& rng) {
  DenseMatrix m(rows, cols);
  for (real& v : m.data) v = real(rng.uniform01());
  return m;
}

DenseMatrix standardized_batch(std::size_t n, std::uint32_t d, std::uint64_t seed) {
  const SyntheticData syn = generate_synthetic(n, d, 3, 0.3, seed);
  return standardize(syn.points, fit_scaler(syn.points));
}

void zero_layer(DenseLayer& l) {
  for (real& v : l.weights.data) v = 0;
  for (real& v : l.bias) v = 0;
}

}  // namespace

TEST_CASE("validate rejects out-of-contract configurations") {
  QvaeConfig ok = tiny_config(6);
  validate(ok);

  QvaeConfig c = ok;
  c.d_data = 0;
  CHECK_THROWS_AS(validate(c), ContractViolation);
  c = ok;
  c.d_latent = 7;
  CHECK_THROWS_AS(validate(c), ContractViolation);
  c = ok;
  c.d_latent = 66;
  CHECK_THROWS_AS(validate(c), ContractViolation);
  c = ok;
  c.d_latent = 0;
  CHECK_THROWS_AS(validate(c), ContractViolation);
  c = ok;
  c.hidden2 = 0;
  CHECK_THROWS_AS(validate(c), ContractViolation);
  c = ok;
  c.alpha = 0;
  CHECK_THROWS_AS(validate(c), ContractViolation);
  c = ok;
  c.beta = 0;
  CHECK_THROWS_AS(validate(c), ContractViolation);
  c = ok;
  c.lr = 0;
  CHECK_THROWS_AS(validate(c), ContractViolation);
  c = ok;
  c.l2 = -0.1;
  CHECK_THROWS_AS(validate(c), ContractViolation);
  c = ok;
  c.batch_size = 0;
  CHECK_THROWS_AS(validate(c), ContractViolation);
  c = ok;
  c.gamma = -1;
  CHECK_THROWS_AS(validate(c), ContractViolation);
  c = ok;
  c.trotter_slices = 1;
  CHECK_THROWS_AS(validate(c), ContractViolation);
}

TEST_CASE("init_model wires the declared shapes and a silent prior") {
  const QvaeConfig cfg = tiny_config(6);
  Rng rng(3);
  const QvaeModel m = init_model(cfg, rng);
  CHECK(m.trunk1.in_dim() == 6);
  CHECK(m.trunk1.out_dim() == 32);
  CHECK(m.trunk2.in_dim() == 32);
  CHECK(m.trunk2.out_dim() == 16);
  CHECK(m.head1.in_dim() == 16);
  CHECK(m.head1.out_dim() == 4);
  CHECK(m.head2.in_dim() == 20);
  CHECK(m.head2.out_dim() == 4);
  CHECK(m.dec1.in_dim() == 8);
  CHECK(m.dec1.out_dim() == 32);
  CHECK(m.dec2.in_dim() == 32);
  CHECK(m.dec2.out_dim() == 6);
  CHECK(m.prior.d_left == 4);
  CHECK(m.prior.d_right == 4);
  for (const real v : m.prior.omega.data) CHECK(v == real(0));
  for (const real v : m.prior.bias) CHECK(v == real(0));
}

TEST_CASE("zeroed heads emit the midpoint relaxation") {
  const QvaeConfig cfg = tiny_config(5);
  Rng rng(4);
  QvaeModel m = init_model(cfg, rng);
  zero_layer(m.head1);
  zero_layer(m.head2);

  const DenseMatrix x = standardized_batch(16, 5, 11);
  DenseMatrix noise(16, 8, real(0.5));
  const EncodeResult enc = encode(m, x, noise);
  for (const real z : enc.zeta.data) CHECK(z == real(0));
  for (const real z : enc.z_tilde.data) CHECK(double(z) == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("encode is deterministic") {
  const QvaeConfig cfg = tiny_config(5);
  Rng rng(5);
  const QvaeModel m = init_model(cfg, rng);
  const DenseMatrix x = standardized_batch(8, 5, 12);
  Rng nrng(6);
  const DenseMatrix noise = uniform_noise(8, 8, nrng);
  const EncodeResult a = encode(m, x, noise);
  const EncodeResult b = encode(m, x, noise);
  CHECK(a.zeta == b.zeta);
  CHECK(a.z_tilde == b.z_tilde);
}

TEST_CASE("the second head conditions on the first group's sample") {
  const QvaeConfig cfg = tiny_config(5);
  Rng rng(7);
  const QvaeModel m = init_model(cfg, rng);
  const DenseMatrix x = standardized_batch(4, 5, 13);

  Rng nrng(8);
  DenseMatrix noise_a = uniform_noise(4, 8, nrng);
  DenseMatrix noise_b = noise_a;
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 4; ++c) noise_b.at(r, c) = real(1) - noise_b.at(r, c);

  const EncodeResult a = encode(m, x, noise_a);
  const EncodeResult b = encode(m, x, noise_b);

  // Group 1 logits ignore the noise entirely.
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 4; ++c) CHECK(a.zeta.at(r, c) == b.zeta.at(r, c));

  // Group 2 logits see the changed group 1 sample.
  bool differs = false;
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 4; c < 8; ++c)
      if (a.zeta.at(r, c) != b.zeta.at(r, c)) differs = true;
  CHECK(differs);
}

TEST_CASE("zeroed decoder emits its output bias") {
  const QvaeConfig cfg = tiny_config(3);
  Rng rng(9);
  QvaeModel m = init_model(cfg, rng);
  zero_layer(m.dec1);
  zero_layer(m.dec2);
  m.dec2.bias = {real(0.25), real(-1.5), real(2)};

  DenseMatrix z(2, 8, real(0.5));
  const DenseMatrix xhat = decode(m, z);
  REQUIRE(xhat.rows == 2);
  REQUIRE(xhat.cols == 3);
  for (std::size_t r = 0; r < 2; ++r) {
    CHECK(xhat.at(r, 0) == real(0.25));
    CHECK(xhat.at(r, 1) == real(-1.5));
    CHECK(xhat.at(r, 2) == real(2));
  }
}

TEST_CASE("zeroed decoder reconstruction cost is half the mean squared norm") {
  const QvaeConfig cfg = tiny_config(6);
  Rng rng(10);
  QvaeModel m = init_model(cfg, rng);
  zero_layer(m.dec1);
  zero_layer(m.dec2);

  const DenseMatrix x = standardized_batch(512, 6, 14);
  Rng nrng(11);
  const DenseMatrix noise = uniform_noise(512, 8, nrng);

  double half_sqnorm = 0;
  for (std::size_t r = 0; r < x.rows; ++r)
    for (std::size_t c = 0; c < x.cols; ++c)
      half_sqnorm += 0.5 * double(x.at(r, c)) * double(x.at(r, c));
  half_sqnorm /= double(x.rows);

  ModelGrads grads;
  const Moments neg = moments_from_pmf(exact_pmf(m.prior), 4, 4);
  const ElboReport rep = elbo_and_grads(m, x, noise, neg, grads);
  CHECK(rep.reconstruction == doctest::Approx(half_sqnorm).epsilon(1e-4));
  // Standardized data: squared norm concentrates near d_data.
  CHECK(rep.reconstruction == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("matching negative moments silence the prior gradient") {
  const QvaeConfig cfg = tiny_config(4);
  Rng rng(12);
  const QvaeModel m = init_model(cfg, rng);
  const DenseMatrix x = standardized_batch(32, 4, 15);
  Rng nrng(13);
  const DenseMatrix noise = uniform_noise(32, 8, nrng);

  const EncodeResult enc = encode(m, x, noise);
  const Moments negative = moments_from_samples(enc.z_tilde, 4);

  ModelGrads grads;
  elbo_and_grads(m, x, noise, negative, grads);
  for (const real v : grads.prior.omega.data) CHECK(v == real(0));
  for (const real v : grads.prior.bias) CHECK(v == real(0));
}

TEST_CASE("surrogate_loss equals the report total") {
  const QvaeConfig cfg = tiny_config(4);
  Rng rng(14);
  const QvaeModel m = init_model(cfg, rng);
  const DenseMatrix x = standardized_batch(16, 4, 16);
  Rng nrng(15);
  const DenseMatrix noise = uniform_noise(16, 8, nrng);

  ModelGrads grads;
  const Moments neg = moments_from_pmf(exact_pmf(m.prior), 4, 4);
  const ElboReport rep = elbo_and_grads(m, x, noise, neg, grads);
  CHECK(rep.log_z_exact);
  CHECK(rep.total ==
        doctest::Approx(rep.reconstruction + rep.posterior_logq - rep.prior_energy + rep.log_z)
            .epsilon(1e-12));
  CHECK(surrogate_loss(m, x, noise) == doctest::Approx(rep.total).epsilon(1e-10));
}

TEST_CASE("training compresses a clustered cloud") {
  const SyntheticData syn = generate_synthetic(2000, 8, 2, 0.05, 21);
  QvaeConfig cfg = tiny_config(8);
  const TrainResult r = train(syn.points, cfg);

  REQUIRE(r.log.size() == cfg.epochs);
  CHECK(r.log.back().reconstruction < 3.6);

  const std::vector<BitString> codes = hash_dataset(r.model, syn.points);
  bool distinct = false;
  for (const BitString& c : codes)
    if (!(c == codes.front())) distinct = true;
  CHECK(distinct);

  for (const real v : r.model.prior.omega.data) {
    CHECK(v >= real(-1));
    CHECK(v <= real(1));
  }
  for (const real v : r.model.prior.bias) {
    CHECK(v >= real(-1));
    CHECK(v <= real(1));
  }
}

TEST_CASE("training lowers the loss for most seeds") {
  const SyntheticData syn = generate_synthetic(2000, 8, 2, 0.05, 22);
  int improved = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    QvaeConfig cfg = tiny_config(8);
    cfg.epochs = 10;
    cfg.seed = seed;
    const TrainResult r = train(syn.points, cfg);
    if (r.log.back().loss < r.log.front().loss) ++improved;
  }
  CHECK(improved >= 3);
}

TEST_CASE("training is deterministic per seed") {
  const SyntheticData syn = generate_synthetic(600, 6, 2, 0.05, 23);
  QvaeConfig cfg = tiny_config(6);
  cfg.epochs = 3;
  const TrainResult a = train(syn.points, cfg);
  const TrainResult b = train(syn.points, cfg);
  CHECK(a.model == b.model);
  REQUIRE(a.log.size() == b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i)
    CHECK(a.log[i].loss == doctest::Approx(b.log[i].loss).epsilon(1e-14));
}

TEST_CASE("an injected negative sampler trains and reports its temperature") {
  const SyntheticData syn = generate_synthetic(500, 6, 2, 0.1, 24);
  QvaeConfig cfg = tiny_config(6);
  cfg.epochs = 2;
  cfg.prior = PriorKind::external_sampler;
  const ExternalSampler sampler = [](const RbmParams& prior, std::size_t n) {
    Rng rng(77);
    return block_gibbs(prior, n, 10, rng);
  };
  const TrainResult r = train(syn.points, cfg, sampler);
  REQUIRE(r.log.size() == 2);
  for (const EpochStats& e : r.log) CHECK(e.beta_eff > 0);
}

TEST_CASE("the external prior requires a sampler") {
  const SyntheticData syn = generate_synthetic(100, 4, 2, 0.1, 25);
  QvaeConfig cfg = tiny_config(4);
  cfg.prior = PriorKind::external_sampler;
  CHECK_THROWS_AS(train(syn.points, cfg), ContractViolation);
}

TEST_CASE("hashing is stable and matches the batch helper") {
  const QvaeConfig cfg = tiny_config(5);
  Rng rng(26);
  const QvaeModel m = init_model(cfg, rng);
  const SyntheticData syn = generate_synthetic(40, 5, 3, 0.2, 27);

  const std::vector<BitString> batch = hash_dataset(m, syn.points);
  REQUIRE(batch.size() == 40);
  for (std::size_t r = 0; r < 40; ++r) {
    const BitString one = hash_point(m, syn.points.row(r));
    CHECK(one == batch[r]);
    CHECK(one == hash_point(m, syn.points.row(r)));
    CHECK(one.width == 8);
  }
}

TEST_CASE("model file round trip is exact") {
  const SyntheticData syn = generate_synthetic(300, 6, 2, 0.1, 28);
  QvaeConfig cfg = tiny_config(6);
  cfg.epochs = 2;
  const TrainResult r = train(syn.points, cfg);

  const std::string path = "/tmp/qvs_model_roundtrip.qvae";
  write_model(path, r.model);
  const QvaeModel back = read_model(path);
  CHECK(back == r.model);
}

TEST_CASE("model reader rejects garbage") {
  const std::string path = "/tmp/qvs_model_garbage.qvae";
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  const std::string bytes = "not a model file at all";
  out.write(bytes.data(), std::streamsize(bytes.size()));
  out.close();
  CHECK_THROWS_AS(read_model(path), ParseError);
}
