#include "qvs/qvae.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <numeric>

#include "qvs/adam.hpp"
#include "qvs/beta_eff.hpp"
#include "qvs/error.hpp"
#include "qvs/io_util.hpp"
#include "qvs/piqmc.hpp"

namespace qvs {

void validate(const QvaeConfig& cfg) {
  QVS_REQUIRE(cfg.d_data >= 1, "config: d_data must be >= 1");
  QVS_REQUIRE(cfg.d_latent >= 2 && cfg.d_latent <= 64 && cfg.d_latent % 2 == 0,
              "config: d_latent must be even and in [2, 64]");
  QVS_REQUIRE(cfg.hidden1 >= 1 && cfg.hidden2 >= 1, "config: hidden sizes must be >= 1");
  QVS_REQUIRE(double(cfg.alpha) > 0.0, "config: alpha must be positive");
  QVS_REQUIRE(cfg.gamma >= 0.0, "config: gamma must be non-negative");
  QVS_REQUIRE(cfg.beta > 0.0, "config: beta must be positive");
  QVS_REQUIRE(cfg.lr > 0.0, "config: learning rate must be positive");
  QVS_REQUIRE(cfg.l2 >= 0.0, "config: l2 must be non-negative");
  QVS_REQUIRE(cfg.batch_size >= 1, "config: batch_size must be >= 1");
  QVS_REQUIRE(cfg.cd_chains >= 1 && cfg.cd_sweeps >= 1, "config: CD settings must be >= 1");
  QVS_REQUIRE(cfg.trotter_slices >= 2, "config: trotter_slices must be >= 2");
}

QvaeModel init_model(const QvaeConfig& cfg, Rng& rng) {
  validate(cfg);
  QvaeModel m;
  m.cfg = cfg;
  const std::uint32_t half = cfg.d_latent / 2;
  m.trunk1 = make_dense_layer(cfg.hidden1, cfg.d_data, rng);
  m.trunk2 = make_dense_layer(cfg.hidden2, cfg.hidden1, rng);
  m.head1 = make_dense_layer(half, cfg.hidden2, rng);
  m.head2 = make_dense_layer(half, cfg.hidden2 + half, rng);
  m.dec1 = make_dense_layer(cfg.hidden1, cfg.d_latent, rng);
  m.dec2 = make_dense_layer(cfg.d_data, cfg.hidden1, rng);
  m.prior = make_rbm(half, half, cfg.beta);
  m.scaler.mean.assign(cfg.d_data, real(0));
  m.scaler.scale.assign(cfg.d_data, real(1));
  return m;
}

namespace {

DenseMatrix hconcat(const DenseMatrix& a, const DenseMatrix& b) {
  QVS_REQUIRE(a.rows == b.rows, "hconcat: row mismatch");
  DenseMatrix out(a.rows, a.cols + b.cols);
  for (std::size_t r = 0; r < a.rows; ++r) {
    real* dst = out.row_ptr(r);
    const real* pa = a.row_ptr(r);
    const real* pb = b.row_ptr(r);
    std::copy(pa, pa + a.cols, dst);
    std::copy(pb, pb + b.cols, dst + a.cols);
  }
  return out;
}


struct ForwardCache {
  DenseMatrix t1_pre, t1, t2_pre, f;
  DenseMatrix zeta1, z1, h2in, zeta2, z2;
  DenseMatrix zeta, z_tilde;
  DenseMatrix d1_pre, a1, xhat;
};

void forward_full(const QvaeModel& m, const DenseMatrix& x, const DenseMatrix& noise,
                  ForwardCache& c) {
  const std::uint32_t half = m.cfg.d_latent / 2;
  QVS_REQUIRE(x.cols == m.cfg.d_data, "forward: data width mismatch");
  QVS_REQUIRE(noise.rows == x.rows && noise.cols == m.cfg.d_latent,
              "forward: noise shape mismatch");
  c.t1_pre = linear_forward(x, m.trunk1);
  c.t1 = relu(c.t1_pre);
  c.t2_pre = linear_forward(c.t1, m.trunk2);
  c.f = relu(c.t2_pre);
  c.zeta1 = linear_forward(c.f, m.head1);
  c.z1 = DenseMatrix(x.rows, half);
  for (std::size_t r = 0; r < x.rows; ++r)
    for (std::uint32_t i = 0; i < half; ++i)
      c.z1.at(r, i) = reparam_sample(c.zeta1.at(r, i), noise.at(r, i), m.cfg.alpha);
  c.h2in = hconcat(c.f, c.z1);
  c.zeta2 = linear_forward(c.h2in, m.head2);
  c.z2 = DenseMatrix(x.rows, half);
  for (std::size_t r = 0; r < x.rows; ++r)
    for (std::uint32_t i = 0; i < half; ++i)
      c.z2.at(r, i) = reparam_sample(c.zeta2.at(r, i), noise.at(r, half + i), m.cfg.alpha);
  c.zeta = hconcat(c.zeta1, c.zeta2);
  c.z_tilde = hconcat(c.z1, c.z2);
  c.d1_pre = linear_forward(c.z_tilde, m.dec1);
  c.a1 = relu(c.d1_pre);
  c.xhat = linear_forward(c.a1, m.dec2);
}

struct LossTerms {
  double reconstruction = 0;
  double posterior_logq = 0;
  double mean_energy = 0;  // mean E(z~), without beta
};

LossTerms loss_terms(const QvaeModel& m, const DenseMatrix& x, const ForwardCache& c) {
  LossTerms t;
  const double inv_b = 1.0 / double(x.rows);
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    const double d = double(c.xhat.data[i]) - double(x.data[i]);
    t.reconstruction += d * d;
  }
  t.reconstruction *= 0.5 * inv_b;
  for (std::size_t r = 0; r < x.rows; ++r) {
    t.posterior_logq += posterior_log_mass(c.zeta.row(r), c.z_tilde.row(r));
    t.mean_energy += rbm_energy(m.prior, c.z_tilde.row(r));
  }
  t.posterior_logq *= inv_b;
  t.mean_energy *= inv_b;
  return t;
}

ElboReport assemble_report(const QvaeModel& m, const LossTerms& t) {
  ElboReport rep;
  rep.reconstruction = t.reconstruction;
  rep.posterior_logq = t.posterior_logq;
  rep.prior_energy = -m.cfg.beta * t.mean_energy;
  if (m.cfg.d_latent <= 20) {
    rep.log_z = exact_log_partition(m.prior);
    rep.log_z_exact = true;
  }
  rep.total = rep.reconstruction + rep.posterior_logq - rep.prior_energy + rep.log_z;
  return rep;
}

}  // namespace

EncodeResult encode(const QvaeModel& model, const DenseMatrix& x_std,
                    const DenseMatrix& noise) {
  ForwardCache c;
  forward_full(model, x_std, noise, c);
  return {std::move(c.zeta), std::move(c.z_tilde)};
}

DenseMatrix decode(const QvaeModel& model, const DenseMatrix& z) {
  QVS_REQUIRE(z.cols == model.cfg.d_latent, "decode: latent width mismatch");
  return linear_forward(relu(linear_forward(z, model.dec1)), model.dec2);
}

double surrogate_loss(const QvaeModel& model, const DenseMatrix& x_std,
                      const DenseMatrix& noise) {
  ForwardCache c;
  forward_full(model, x_std, noise, c);
  return assemble_report(model, loss_terms(model, x_std, c)).total;
}

ElboReport elbo_and_grads(const QvaeModel& model, const DenseMatrix& x_std,
                          const DenseMatrix& noise, const Moments& negative,
                          ModelGrads& grads) {
  const std::uint32_t half = model.cfg.d_latent / 2;
  ForwardCache c;
  forward_full(model, x_std, noise, c);
  const LossTerms terms = loss_terms(model, x_std, c);
  const ElboReport report = assemble_report(model, terms);

  const std::size_t b = x_std.rows;
  const double inv_b = 1.0 / double(b);
  const double beta = model.cfg.beta;

  // Reconstruction path back to the relaxed code.
  DenseMatrix g_xhat(b, model.cfg.d_data);
  for (std::size_t i = 0; i < g_xhat.data.size(); ++i)
    g_xhat.data[i] = real((double(c.xhat.data[i]) - double(x_std.data[i])) * inv_b);
  DenseMatrix g_a1 = linear_backward(c.a1, model.dec2, g_xhat, grads.dec2);
  DenseMatrix g_d1pre = relu_backward(c.d1_pre, g_a1);
  DenseMatrix g_ztilde = linear_backward(c.z_tilde, model.dec1, g_d1pre, grads.dec1);

  // Posterior log-mass and prior energy, both through z~; the log-mass also
  // hits the logits directly.
  DenseMatrix g_zeta_direct(b, model.cfg.d_latent);
  std::vector<real> d_zeta(model.cfg.d_latent), d_zt(model.cfg.d_latent);
  std::vector<real> d_energy(model.cfg.d_latent);
  for (std::size_t r = 0; r < b; ++r) {
    posterior_log_mass_grads(c.zeta.row(r), c.z_tilde.row(r), d_zeta, d_zt);
    rbm_energy_grad_z(model.prior, c.z_tilde.row(r), d_energy);
    real* gz = g_ztilde.row_ptr(r);
    real* gzd = g_zeta_direct.row_ptr(r);
    for (std::uint32_t i = 0; i < model.cfg.d_latent; ++i) {
      gz[i] += real((double(d_zt[i]) + beta * double(d_energy[i])) * inv_b);
      gzd[i] = real(double(d_zeta[i]) * inv_b);
    }
  }

  // Group 2: logits get the direct term plus the relaxation chain rule.
  DenseMatrix g_zeta2(b, half);
  for (std::size_t r = 0; r < b; ++r) {
    for (std::uint32_t i = 0; i < half; ++i) {
      const double chain =
          double(g_ztilde.at(r, half + i)) * double(reparam_grad(c.z2.at(r, i), model.cfg.alpha));
      g_zeta2.at(r, i) = real(double(g_zeta_direct.at(r, half + i)) + chain);
    }
  }
  DenseMatrix g_h2in = linear_backward(c.h2in, model.head2, g_zeta2, grads.head2);

  // Group 1 grads accumulate from three sources: decoder/energy/log-mass
  // through z~1, head2's input, and the direct logit term.
  DenseMatrix g_zeta1(b, half);
  for (std::size_t r = 0; r < b; ++r) {
    for (std::uint32_t i = 0; i < half; ++i) {
      const double gz1 =
          double(g_ztilde.at(r, i)) + double(g_h2in.at(r, model.cfg.hidden2 + i));
      const double chain = gz1 * double(reparam_grad(c.z1.at(r, i), model.cfg.alpha));
      g_zeta1.at(r, i) = real(double(g_zeta_direct.at(r, i)) + chain);
    }
  }
  DenseMatrix g_f = linear_backward(c.f, model.head1, g_zeta1, grads.head1);
  for (std::size_t r = 0; r < b; ++r) {
    real* gf = g_f.row_ptr(r);
    const real* gh = g_h2in.row_ptr(r);
    for (std::uint32_t i = 0; i < model.cfg.hidden2; ++i) gf[i] += gh[i];
  }

  DenseMatrix g_t2pre = relu_backward(c.t2_pre, g_f);
  DenseMatrix g_t1 = linear_backward(c.t1, model.trunk2, g_t2pre, grads.trunk2);
  DenseMatrix g_t1pre = relu_backward(c.t1_pre, g_t1);
  linear_backward(x_std, model.trunk1, g_t1pre, grads.trunk1);

  // Prior: descend the negated likelihood-ascent direction.
  const Moments positive = moments_from_samples(c.z_tilde, half);
  RbmGrads ascent = cd_gradients(positive, negative, beta);
  grads.prior.omega = DenseMatrix(model.prior.d_left, model.prior.d_right);
  grads.prior.bias.assign(model.prior.bias.size(), real(0));
  for (std::size_t i = 0; i < ascent.omega.data.size(); ++i)
    grads.prior.omega.data[i] = -ascent.omega.data[i];
  for (std::size_t i = 0; i < ascent.bias.size(); ++i)
    grads.prior.bias[i] = -ascent.bias[i];
  return report;
}

BitString hash_point(const QvaeModel& model, std::span<const real> x_raw) {
  const std::uint32_t half = model.cfg.d_latent / 2;
  std::vector<real> x(model.cfg.d_data);
  standardize_row(model.scaler, x_raw, x);
  const std::vector<real> t1 = relu(linear_forward(x, model.trunk1));
  const std::vector<real> f = relu(linear_forward(t1, model.trunk2));
  const std::vector<real> zeta1 = linear_forward(f, model.head1);
  const BitString z1 = binarize(zeta1);
  std::vector<real> h2in(model.cfg.hidden2 + half);
  std::copy(f.begin(), f.end(), h2in.begin());
  for (std::uint32_t i = 0; i < half; ++i)
    h2in[model.cfg.hidden2 + i] = z1.get(i) ? real(1) : real(0);
  const std::vector<real> zeta2 = linear_forward(h2in, model.head2);
  const BitString z2 = binarize(zeta2);
  return BitString(z1.bits | (z2.bits << half), model.cfg.d_latent);
}

std::vector<BitString> hash_dataset(const QvaeModel& model, const DenseMatrix& raw) {
  std::vector<BitString> codes;
  codes.reserve(raw.rows);
  for (std::size_t r = 0; r < raw.rows; ++r) codes.push_back(hash_point(model, raw.row(r)));
  return codes;
}

namespace {

struct ParamBlock {
  std::span<real> params;
  std::span<const real> grads;
};

// Fixed block order shared by the optimizer and the model file.
template <typename Model, typename Fn>
void for_each_layer(Model& m, Fn&& fn) {
  fn(m.trunk1);
  fn(m.trunk2);
  fn(m.head1);
  fn(m.head2);
  fn(m.dec1);
  fn(m.dec2);
}

Moments draw_negatives(QvaeModel& model, const QvaeConfig& cfg, GibbsChains& gibbs,
                       PiqmcChains* piqmc, const TrotterConfig& tcfg,
                       const ExternalSampler& external, Rng& rng) {
  const std::uint32_t half = cfg.d_latent / 2;
  switch (cfg.prior) {
    case PriorKind::rbm:
      block_gibbs_sweeps(model.prior, gibbs.state, cfg.cd_sweeps, rng);
      return moments_from_samples(gibbs.state, half);
    case PriorKind::simulated_qbm: {
      const IsingModel ising = bm_to_ising(model.prior);
      const DenseMatrix states = piqmc_run(ising, tcfg, *piqmc, cfg.cd_sweeps, rng);
      return moments_from_samples(states, half);
    }
    case PriorKind::external_sampler: {
      const DenseMatrix states = external(model.prior, cfg.cd_chains);
      return moments_from_samples(states, half);
    }
  }
  throw ContractViolation("draw_negatives: unknown prior kind");
}

}  // namespace

TrainResult train(const DenseMatrix& raw_data, const QvaeConfig& cfg,
                  const ExternalSampler& external) {
  validate(cfg);
  QVS_REQUIRE(raw_data.cols == cfg.d_data, "train: data width mismatch");
  QVS_REQUIRE(raw_data.rows >= 1, "train: empty dataset");
  QVS_REQUIRE(cfg.prior != PriorKind::external_sampler || external,
              "train: external prior needs a sampler");

  Rng root(cfg.seed);
  Rng init_rng = root.derive(1);
  Rng noise_rng = root.derive(2);
  Rng shuffle_rng = root.derive(3);
  Rng sampler_rng = root.derive(4);

  TrainResult result;
  QvaeModel& model = result.model;
  model = init_model(cfg, init_rng);
  model.scaler = fit_scaler(raw_data);
  const DenseMatrix data = standardize(raw_data, model.scaler);

  AdamConfig adam{cfg.lr, 0.9, 0.999, 1e-8};
  std::vector<AdamState> states;
  for_each_layer(model, [&](DenseLayer& layer) {
    states.emplace_back(layer.weights.data.size());
    states.emplace_back(layer.bias.size());
  });
  states.emplace_back(model.prior.omega.data.size());
  states.emplace_back(model.prior.bias.size());

  GibbsChains gibbs(cfg.cd_chains, cfg.d_latent, sampler_rng);
  TrotterConfig tcfg;
  tcfg.beta = cfg.beta;
  tcfg.gamma = cfg.gamma;
  tcfg.slices = effective_slices(cfg.beta, cfg.gamma, cfg.trotter_slices);
  std::unique_ptr<PiqmcChains> piqmc;
  if (cfg.prior == PriorKind::simulated_qbm)
    piqmc = std::make_unique<PiqmcChains>(cfg.cd_chains, cfg.d_latent, tcfg.slices,
                                          sampler_rng);
  double beta_eff = 1.0;

  std::vector<std::size_t> order(data.rows);
  std::iota(order.begin(), order.end(), std::size_t(0));

  for (std::uint32_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.prior == PriorKind::external_sampler) {
      const DenseMatrix probe =
          external(model.prior, std::max<std::size_t>(cfg.cd_chains, 256));
      BetaEffConfig bcfg;
      bcfg.initial = beta_eff;
      const BetaEffResult est = estimate_beta_eff(model.prior, probe, bcfg, sampler_rng);
      if (est.identifiable) beta_eff = est.beta_eff;
    }

    shuffle_rng.shuffle(order);
    EpochStats stats;
    stats.epoch = epoch;
    stats.beta_eff = beta_eff;
    double weight = 0;

    for (std::size_t start = 0; start < data.rows; start += cfg.batch_size) {
      const std::size_t rows = std::min<std::size_t>(cfg.batch_size, data.rows - start);
      DenseMatrix batch(rows, data.cols);
      for (std::size_t r = 0; r < rows; ++r) {
        const real* src = data.row_ptr(order[start + r]);
        std::copy(src, src + data.cols, batch.row_ptr(r));
      }
      DenseMatrix noise(rows, cfg.d_latent);
      for (auto& v : noise.data) v = real(noise_rng.uniform01());

      const Moments negative =
          draw_negatives(model, cfg, gibbs, piqmc.get(), tcfg, external, sampler_rng);

      ModelGrads grads;
      const ElboReport report = elbo_and_grads(model, batch, noise, negative, grads);
      if (!std::isfinite(report.total))
        throw NumericFailure("train: non-finite loss at epoch " + std::to_string(epoch));

      // External samplers run at an unknown temperature; rescale the CD
      // direction by the estimated effective inverse temperature.
      if (cfg.prior == PriorKind::external_sampler && beta_eff != 1.0) {
        for (auto& g : grads.prior.omega.data) g = real(double(g) * beta_eff);
        for (auto& g : grads.prior.bias) g = real(double(g) * beta_eff);
      }
      add_l2_gradient(model.prior, cfg.l2, grads.prior);

      std::size_t block = 0;
      std::uint32_t rejected = 0;
      const auto step = [&](std::span<real> params, std::span<const real> gspan) {
        if (!adam_step(params, gspan, states[block], adam)) rejected += 1;
        block += 1;
      };
      LayerGrads* layer_grads[] = {&grads.trunk1, &grads.trunk2, &grads.head1,
                                   &grads.head2,  &grads.dec1,   &grads.dec2};
      std::size_t li = 0;
      for_each_layer(model, [&](DenseLayer& layer) {
        step(layer.weights.data, layer_grads[li]->weights.data);
        step(layer.bias, layer_grads[li]->bias);
        li += 1;
      });
      step(model.prior.omega.data, grads.prior.omega.data);
      step(model.prior.bias, grads.prior.bias);
      project_unit_box(model.prior);

      const double w = double(rows);
      stats.loss += report.total * w;
      stats.reconstruction += report.reconstruction * w;
      stats.posterior_logq += report.posterior_logq * w;
      stats.prior_energy += report.prior_energy * w;
      stats.rejected_steps += rejected;
      weight += w;
    }

    stats.loss /= weight;
    stats.reconstruction /= weight;
    stats.posterior_logq /= weight;
    stats.prior_energy /= weight;
    result.log.push_back(stats);
  }
  return result;
}

namespace {

constexpr std::uint32_t kQvaeVersion = 1;

void write_tensor(std::ostream& f, const DenseMatrix& m) {
  io::write_u32(f, std::uint32_t(m.rows));
  io::write_u32(f, std::uint32_t(m.cols));
  for (const real v : m.data) io::write_f32(f, float(v));
}

void write_tensor(std::ostream& f, const std::vector<real>& v) {
  io::write_u32(f, std::uint32_t(v.size()));
  io::write_u32(f, 1);
  for (const real x : v) io::write_f32(f, float(x));
}

void read_tensor(std::istream& f, DenseMatrix& m) {
  const std::uint32_t rows = io::read_u32(f);
  const std::uint32_t cols = io::read_u32(f);
  if (rows != m.rows || cols != m.cols)
    throw ParseError("model tensor shape does not match the config");
  for (auto& v : m.data) v = real(io::read_f32(f));
}

void read_tensor(std::istream& f, std::vector<real>& v) {
  const std::uint32_t rows = io::read_u32(f);
  const std::uint32_t cols = io::read_u32(f);
  if (rows != v.size() || cols != 1)
    throw ParseError("model tensor shape does not match the config");
  for (auto& x : v) x = real(io::read_f32(f));
}

}  // namespace

void write_model(const std::string& path, const QvaeModel& model) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ParseError("write_model: cannot open " + path);
  io::write_magic(f, "QVAE");
  io::write_u32(f, kQvaeVersion);
  const QvaeConfig& c = model.cfg;
  io::write_u32(f, c.d_data);
  io::write_u32(f, c.d_latent);
  io::write_u32(f, c.hidden1);
  io::write_u32(f, c.hidden2);
  io::write_f32(f, float(c.alpha));
  io::write_u32(f, std::uint32_t(c.prior));
  io::write_f64(f, c.gamma);
  io::write_f64(f, c.beta);
  io::write_f64(f, c.lr);
  io::write_u32(f, c.batch_size);
  io::write_u32(f, c.epochs);
  io::write_f64(f, c.l2);
  io::write_u32(f, c.cd_chains);
  io::write_u32(f, c.cd_sweeps);
  io::write_u32(f, c.trotter_slices);
  io::write_u64(f, c.seed);
  write_tensor(f, model.scaler.mean);
  write_tensor(f, model.scaler.scale);
  for_each_layer(model, [&](const DenseLayer& layer) {
    write_tensor(f, layer.weights);
    write_tensor(f, layer.bias);
  });
  write_tensor(f, model.prior.omega);
  write_tensor(f, model.prior.bias);
  if (!f) throw ParseError("write_model: write failed for " + path);
}

QvaeModel read_model(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ParseError("read_model: cannot open " + path);
  io::expect_magic(f, "QVAE", "model file");
  const std::uint32_t version = io::read_u32(f);
  if (version != kQvaeVersion)
    throw ParseError("read_model: unsupported version " + std::to_string(version));
  QvaeConfig c;
  c.d_data = io::read_u32(f);
  c.d_latent = io::read_u32(f);
  c.hidden1 = io::read_u32(f);
  c.hidden2 = io::read_u32(f);
  c.alpha = real(io::read_f32(f));
  const std::uint32_t kind = io::read_u32(f);
  if (kind > 2) throw ParseError("read_model: unknown prior kind");
  c.prior = PriorKind(kind);
  c.gamma = io::read_f64(f);
  c.beta = io::read_f64(f);
  c.lr = io::read_f64(f);
  c.batch_size = io::read_u32(f);
  c.epochs = io::read_u32(f);
  c.l2 = io::read_f64(f);
  c.cd_chains = io::read_u32(f);
  c.cd_sweeps = io::read_u32(f);
  c.trotter_slices = io::read_u32(f);
  c.seed = io::read_u64(f);
  validate(c);
  Rng dummy(0);
  QvaeModel model = init_model(c, dummy);
  read_tensor(f, model.scaler.mean);
  read_tensor(f, model.scaler.scale);
  for_each_layer(model, [&](DenseLayer& layer) {
    read_tensor(f, layer.weights);
    read_tensor(f, layer.bias);
  });
  read_tensor(f, model.prior.omega);
  read_tensor(f, model.prior.bias);
  return model;
}

}  // namespace qvs
