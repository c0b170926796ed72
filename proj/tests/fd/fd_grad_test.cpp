#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <vector>

#include "qvs/latent.hpp"
#include "qvs/nn.hpp"
#include "qvs/qvae.hpp"
#include "qvs/rbm.hpp"

using namespace qvs;

static_assert(sizeof(real) == sizeof(double), "this suite runs on double storage");

namespace {

double rel_err(double fd, double g) {
  return std::abs(fd - g) / std::max({std::abs(fd), std::abs(g), 1e-6});
}

DenseMatrix random_batch(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0) {
  DenseMatrix m(rows, cols);
  for (real& v : m.data) v = real(rng.uniform(-scale, scale));
  return m;
}

// 0.5 sum of squared errors against a fixed target; a well-conditioned probe
// loss whose upstream gradient is simply (y - t).
double probe_loss(std::span<const DenseLayer> layers, const DenseMatrix& x,
                  const DenseMatrix& target, bool relu_on_last) {
  const MlpCache cache = mlp_forward(layers, x, relu_on_last);
  double loss = 0;
  for (std::size_t i = 0; i < cache.output.size(); ++i) {
    const double d = double(cache.output.data[i]) - double(target.data[i]);
    loss += 0.5 * d * d;
  }
  return loss;
}

void check_mlp_grads(std::vector<DenseLayer> layers, const DenseMatrix& x,
                     const DenseMatrix& target, bool relu_on_last, double h, double tol) {
  const MlpCache cache = mlp_forward(layers, x, relu_on_last);
  DenseMatrix upstream(cache.output.rows, cache.output.cols);
  for (std::size_t i = 0; i < upstream.size(); ++i)
    upstream.data[i] = cache.output.data[i] - target.data[i];
  const MlpGrads grads = backprop(layers, cache, upstream, relu_on_last);

  double worst = 0;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    for (std::size_t i = 0; i < layers[l].weights.data.size(); ++i) {
      const real keep = layers[l].weights.data[i];
      layers[l].weights.data[i] = keep + real(h);
      const double up = probe_loss(layers, x, target, relu_on_last);
      layers[l].weights.data[i] = keep - real(h);
      const double dn = probe_loss(layers, x, target, relu_on_last);
      layers[l].weights.data[i] = keep;
      worst = std::max(worst, rel_err((up - dn) / (2 * h), double(grads.layers[l].weights.data[i])));
    }
    for (std::size_t i = 0; i < layers[l].bias.size(); ++i) {
      const real keep = layers[l].bias[i];
      layers[l].bias[i] = keep + real(h);
      const double up = probe_loss(layers, x, target, relu_on_last);
      layers[l].bias[i] = keep - real(h);
      const double dn = probe_loss(layers, x, target, relu_on_last);
      layers[l].bias[i] = keep;
      worst = std::max(worst, rel_err((up - dn) / (2 * h), double(grads.layers[l].bias[i])));
    }
  }

  // Input gradient through the whole stack.
  DenseMatrix xp = x;
  for (std::size_t i = 0; i < xp.size(); ++i) {
    const real keep = xp.data[i];
    xp.data[i] = keep + real(h);
    const double up = probe_loss(layers, xp, target, relu_on_last);
    xp.data[i] = keep - real(h);
    const double dn = probe_loss(layers, xp, target, relu_on_last);
    xp.data[i] = keep;
    worst = std::max(worst, rel_err((up - dn) / (2 * h), double(grads.input.data[i])));
  }
  CHECK(worst <= tol);
}

}  // namespace

TEST_CASE("backprop matches central differences on random stacks") {
  Rng rng(401);
  for (int trial = 0; trial < 6; ++trial) {
    const std::size_t depth = 1 + rng.uniform_index(3);
    std::vector<std::size_t> dims(depth + 1);
    for (std::size_t& d : dims) d = 2 + rng.uniform_index(7);

    std::vector<DenseLayer> layers;
    for (std::size_t l = 0; l < depth; ++l) layers.push_back(make_dense_layer(dims[l + 1], dims[l], rng));

    const std::size_t batch = 1 + rng.uniform_index(4);
    const DenseMatrix x = random_batch(batch, dims[0], rng);
    const DenseMatrix target = random_batch(batch, dims[depth], rng);
    check_mlp_grads(layers, x, target, trial % 2 == 0, 1e-4, 1e-3);
  }
}

TEST_CASE("backprop matches central differences on a two-layer relu net") {
  Rng rng(402);
  std::vector<DenseLayer> layers;
  layers.push_back(make_dense_layer(4, 4, rng));
  layers.push_back(make_dense_layer(4, 4, rng));
  const DenseMatrix x = random_batch(3, 4, rng);
  const DenseMatrix target = random_batch(3, 4, rng);
  check_mlp_grads(layers, x, target, false, 1e-4, 1e-3);
  check_mlp_grads(layers, x, target, true, 1e-4, 1e-3);
}

TEST_CASE("posterior_log_mass gradients match central differences") {
  Rng rng(403);
  const std::size_t d = 6;
  std::vector<real> zeta(d), ztilde(d);
  for (real& v : zeta) v = real(rng.uniform(-2, 2));
  for (real& v : ztilde) v = real(rng.uniform(0.05, 0.95));

  std::vector<real> d_zeta(d), d_ztilde(d);
  posterior_log_mass_grads(zeta, ztilde, d_zeta, d_ztilde);

  const double h = 1e-5;
  for (std::size_t i = 0; i < d; ++i) {
    std::vector<real> zp = zeta;
    zp[i] = zeta[i] + real(h);
    const double up = posterior_log_mass(zp, ztilde);
    zp[i] = zeta[i] - real(h);
    const double dn = posterior_log_mass(zp, ztilde);
    CHECK(rel_err((up - dn) / (2 * h), double(d_zeta[i])) < 1e-4);

    std::vector<real> tp = ztilde;
    tp[i] = ztilde[i] + real(h);
    const double up2 = posterior_log_mass(zeta, tp);
    tp[i] = ztilde[i] - real(h);
    const double dn2 = posterior_log_mass(zeta, tp);
    CHECK(rel_err((up2 - dn2) / (2 * h), double(d_ztilde[i])) < 1e-4);
  }
}

TEST_CASE("reparam_grad matches central differences") {
  Rng rng(404);
  for (int trial = 0; trial < 40; ++trial) {
    const real zeta = real(rng.uniform(-3, 3));
    const real rho = real(rng.uniform(0.05, 0.95));
    const real alpha = real(rng.uniform(1, 10));
    const double h = 1e-6;
    const double fd =
        (double(reparam_sample(zeta + real(h), rho, alpha)) -
         double(reparam_sample(zeta - real(h), rho, alpha))) /
        (2 * h);
    const real z_tilde = reparam_sample(zeta, rho, alpha);
    CHECK(rel_err(fd, double(reparam_grad(z_tilde, alpha))) < 1e-4);
  }
}

TEST_CASE("log-partition derivatives are the model moments") {
  Rng rng(405);
  RbmParams p = make_rbm(2, 2);
  for (real& v : p.omega.data) v = real(rng.uniform(-0.8, 0.8));
  for (real& v : p.bias) v = real(rng.uniform(-0.8, 0.8));
  p.beta = 1.3;

  const Moments m = moments_from_pmf(exact_pmf(p), 2, 2);
  const double h = 1e-5;

  for (std::size_t i = 0; i < 4; ++i) {
    RbmParams q = p;
    q.bias[i] = p.bias[i] + real(h);
    const double up = exact_log_partition(q);
    q.bias[i] = p.bias[i] - real(h);
    const double dn = exact_log_partition(q);
    CHECK(std::abs((up - dn) / (2 * h) - p.beta * m.mean[i]) < 1e-6);
  }
  for (std::uint32_t i = 0; i < 2; ++i) {
    for (std::uint32_t j = 0; j < 2; ++j) {
      RbmParams q = p;
      q.omega.at(i, j) = p.omega.at(i, j) + real(h);
      const double up = exact_log_partition(q);
      q.omega.at(i, j) = p.omega.at(i, j) - real(h);
      const double dn = exact_log_partition(q);
      CHECK(std::abs((up - dn) / (2 * h) - p.beta * m.second[i * 2 + j]) < 1e-6);
    }
  }
}

namespace {

struct ParamBlock {
  const char* name;
  real* data;
  std::size_t size;
  const real* grad;
};

// Every trainable scalar of the model against a central difference of the
// surrogate loss under frozen noise and exact negative moments.
void check_model_grads(QvaeModel& model, const DenseMatrix& x, const DenseMatrix& noise) {
  const Moments negative = moments_from_pmf(exact_pmf(model.prior), model.prior.d_left,
                                            model.prior.d_right);
  ModelGrads g;
  elbo_and_grads(model, x, noise, negative, g);

  const auto layer_blocks = [](const char* name, DenseLayer& l, LayerGrads& lg) {
    return std::vector<ParamBlock>{
        {name, l.weights.data.data(), l.weights.data.size(), lg.weights.data.data()},
        {name, l.bias.data(), l.bias.size(), lg.bias.data()}};
  };

  std::vector<ParamBlock> blocks;
  for (ParamBlock b : layer_blocks("trunk1", model.trunk1, g.trunk1)) blocks.push_back(b);
  for (ParamBlock b : layer_blocks("trunk2", model.trunk2, g.trunk2)) blocks.push_back(b);
  for (ParamBlock b : layer_blocks("head1", model.head1, g.head1)) blocks.push_back(b);
  for (ParamBlock b : layer_blocks("head2", model.head2, g.head2)) blocks.push_back(b);
  for (ParamBlock b : layer_blocks("dec1", model.dec1, g.dec1)) blocks.push_back(b);
  for (ParamBlock b : layer_blocks("dec2", model.dec2, g.dec2)) blocks.push_back(b);
  blocks.push_back({"prior_omega", model.prior.omega.data.data(),
                    model.prior.omega.data.size(), g.prior.omega.data.data()});
  blocks.push_back({"prior_bias", model.prior.bias.data(), model.prior.bias.size(),
                    g.prior.bias.data()});

  const double h = 1e-4;
  double worst = 0;
  const char* worst_block = "";
  for (const ParamBlock& b : blocks) {
    for (std::size_t i = 0; i < b.size; ++i) {
      const real keep = b.data[i];
      b.data[i] = keep + real(h);
      const double up = surrogate_loss(model, x, noise);
      b.data[i] = keep - real(h);
      const double dn = surrogate_loss(model, x, noise);
      b.data[i] = keep;
      const double e = rel_err((up - dn) / (2 * h), double(b.grad[i]));
      if (e > worst) {
        worst = e;
        worst_block = b.name;
      }
    }
  }
  INFO("worst block: ", worst_block);
  CHECK(worst <= 1e-3);
}

}  // namespace

TEST_CASE("every parameter block of the surrogate loss differentiates correctly") {
  QvaeConfig cfg;
  cfg.d_data = 4;
  cfg.d_latent = 4;
  cfg.hidden1 = 6;
  cfg.hidden2 = 5;

  Rng rng(406);
  QvaeModel model = init_model(cfg, rng);
  for (real& v : model.prior.omega.data) v = real(rng.uniform(-0.5, 0.5));
  for (real& v : model.prior.bias) v = real(rng.uniform(-0.5, 0.5));
  for (std::size_t c = 0; c < 4; ++c) {
    model.scaler.mean[c] = real(0);
    model.scaler.scale[c] = real(1);
  }

  const DenseMatrix x = random_batch(3, 4, rng, 1.5);
  DenseMatrix noise(3, 4);
  for (real& v : noise.data) v = real(rng.uniform(0.02, 0.98));

  check_model_grads(model, x, noise);
}

TEST_CASE("prior gradients flow for a second random draw") {
  QvaeConfig cfg;
  cfg.d_data = 3;
  cfg.d_latent = 6;
  cfg.hidden1 = 5;
  cfg.hidden2 = 4;

  Rng rng(407);
  QvaeModel model = init_model(cfg, rng);
  for (real& v : model.prior.omega.data) v = real(rng.uniform(-0.7, 0.7));
  for (real& v : model.prior.bias) v = real(rng.uniform(-0.7, 0.7));
  for (std::size_t c = 0; c < 3; ++c) {
    model.scaler.mean[c] = real(0);
    model.scaler.scale[c] = real(1);
  }

  const DenseMatrix x = random_batch(2, 3, rng, 1.0);
  DenseMatrix noise(2, 6);
  for (real& v : noise.data) v = real(rng.uniform(0.05, 0.95));

  check_model_grads(model, x, noise);
}
