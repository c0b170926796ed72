#ifndef QVS_QVAE_HPP
#define QVS_QVAE_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qvs/dataset.hpp"
#include "qvs/latent.hpp"
#include "qvs/nn.hpp"
#include "qvs/rbm.hpp"

namespace qvs {

enum class PriorKind : std::uint32_t { rbm = 0, simulated_qbm = 1, external_sampler = 2 };

struct QvaeConfig {
  std::uint32_t d_data = 0;
  std::uint32_t d_latent = 64;   // even, <= 64
  std::uint32_t hidden1 = 128;
  std::uint32_t hidden2 = 64;
  real alpha = kReparamAlpha;
  PriorKind prior = PriorKind::rbm;
  double gamma = 0.0;            // transverse field, simulated_qbm only
  double beta = 1.0;
  double lr = 1e-3;
  std::uint32_t batch_size = 256;
  std::uint32_t epochs = 30;
  double l2 = 1e-4;              // prior parameters only
  std::uint32_t cd_chains = 64;
  std::uint32_t cd_sweeps = 5;
  std::uint32_t trotter_slices = 64;
  std::uint64_t seed = 1;

  bool operator==(const QvaeConfig&) const = default;
};

void validate(const QvaeConfig& cfg);

// Encoder trunk, two posterior heads over equal halves of the latent code
// (the second conditioned on the first group's sample), decoder, RBM prior
// over the code, and the standardization fitted on the training data.
struct QvaeModel {
  QvaeConfig cfg;
  DenseLayer trunk1, trunk2;   // d_data -> hidden1 -> hidden2
  DenseLayer head1;            // hidden2 -> d_latent/2
  DenseLayer head2;            // hidden2 + d_latent/2 -> d_latent/2
  DenseLayer dec1, dec2;       // d_latent -> hidden1 -> d_data
  RbmParams prior;             // split: first half left, second half right
  Scaler scaler;

  bool operator==(const QvaeModel&) const = default;
};

// Layers initialized from the rng, prior parameters zero.
QvaeModel init_model(const QvaeConfig& cfg, Rng& rng);

struct EncodeResult {
  DenseMatrix zeta;     // logits, batch x d_latent
  DenseMatrix z_tilde;  // relaxed samples, batch x d_latent
};

// Batch of standardized rows; noise has one uniform per latent per row.
EncodeResult encode(const QvaeModel& model, const DenseMatrix& x_std,
                    const DenseMatrix& noise);

DenseMatrix decode(const QvaeModel& model, const DenseMatrix& z);

struct ElboReport {
  double reconstruction = 0;  // 0.5 * mean squared reconstruction error
  double posterior_logq = 0;  // mean log-mass the posterior puts on z~
  double prior_energy = 0;    // mean of -beta * E(z~) (positive phase)
  double log_z = 0;           // exact when d_latent <= 20, else omitted as 0
  bool log_z_exact = false;
  // Surrogate loss: reconstruction + posterior_logq - prior_energy + log_z.
  double total = 0;
};

struct ModelGrads {
  LayerGrads trunk1, trunk2, head1, head2, dec1, dec2;
  RbmGrads prior;  // gradient of the loss (descend), without l2
};

// One relaxed sample per row; negative moments are supplied by the caller's
// sampler (exact moments make the prior gradient exact). The log-partition
// constant carries no encoder gradient.
ElboReport elbo_and_grads(const QvaeModel& model, const DenseMatrix& x_std,
                          const DenseMatrix& noise, const Moments& negative,
                          ModelGrads& grads);

// Loss value alone, same terms as elbo_and_grads (finite-difference probes).
double surrogate_loss(const QvaeModel& model, const DenseMatrix& x_std,
                      const DenseMatrix& noise);

struct EpochStats {
  std::uint32_t epoch = 0;
  double loss = 0;
  double reconstruction = 0;
  double posterior_logq = 0;
  double prior_energy = 0;
  double beta_eff = 1.0;       // external-sampler prior only
  std::uint32_t rejected_steps = 0;
};

// Draws negatives for one update at the current prior parameters.
using ExternalSampler =
    std::function<DenseMatrix(const RbmParams& prior, std::size_t n_samples)>;

struct TrainResult {
  QvaeModel model;
  std::vector<EpochStats> log;
};

// Minibatch training: forward, elbo_and_grads, Adam on every block, l2 on
// the prior gradient, then box projection of the prior. Negatives come from
// persistent block-Gibbs chains (rbm), a persistent Trotter lattice
// (simulated_qbm), or the injected sampler whose effective inverse
// temperature is re-estimated each epoch (external_sampler).
TrainResult train(const DenseMatrix& raw_data, const QvaeConfig& cfg,
                  const ExternalSampler& external = nullptr);

// Deterministic code for a raw vector: standardize, binarize group 1, feed
// the binarized bits (not a relaxed sample) to head 2, binarize group 2.
BitString hash_point(const QvaeModel& model, std::span<const real> x_raw);

// Codes for every row of a raw dataset.
std::vector<BitString> hash_dataset(const QvaeModel& model, const DenseMatrix& raw);

// Model file: magic "QVAE", u32 version, config block, scaler, parameter
// tensors as little-endian f32 with declared shapes, fixed order.
void write_model(const std::string& path, const QvaeModel& model);
QvaeModel read_model(const std::string& path);

}  // namespace qvs

#endif
