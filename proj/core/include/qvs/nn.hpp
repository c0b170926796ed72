#ifndef QVS_NN_HPP
#define QVS_NN_HPP

#include <span>
#include <vector>

#include "qvs/matrix.hpp"
#include "qvs/rng.hpp"

namespace qvs {

// Fully-connected layer, weights stored out x in.
struct DenseLayer {
  DenseMatrix weights;
  std::vector<real> bias;

  std::size_t in_dim() const { return weights.cols; }
  std::size_t out_dim() const { return weights.rows; }

  bool operator==(const DenseLayer&) const = default;
};

// Uniform init in +-sqrt(6 / (fan_in + fan_out)), zero bias.
DenseLayer make_dense_layer(std::size_t out_dim, std::size_t in_dim, Rng& rng);

// y = W x + b, 64-bit accumulation per output.
std::vector<real> linear_forward(std::span<const real> x, const DenseLayer& layer);

// Batch variant: rows of X are samples.
DenseMatrix linear_forward(const DenseMatrix& x, const DenseLayer& layer);

std::vector<real> relu(std::span<const real> x);
DenseMatrix relu(const DenseMatrix& x);

// Gradients shaped exactly like the layer they belong to.
struct LayerGrads {
  DenseMatrix weights;
  std::vector<real> bias;
};

// Given upstream dL/dy, produces dL/dW, dL/db and returns dL/dx.
// x must be the cached input of the forward pass.
DenseMatrix linear_backward(const DenseMatrix& x, const DenseLayer& layer,
                            const DenseMatrix& upstream, LayerGrads& grads);

// Subgradient 0 at pre-activation exactly 0.
DenseMatrix relu_backward(const DenseMatrix& pre_activation, const DenseMatrix& upstream);

// Forward activations cached for the chain rule.
struct MlpCache {
  std::vector<DenseMatrix> inputs;  // input to each layer
  std::vector<DenseMatrix> pre;     // pre-activation output of each layer
  DenseMatrix output;               // post-activation output of the stack
};

struct MlpGrads {
  std::vector<LayerGrads> layers;
  DenseMatrix input;  // dL/dx of the stack input
};

// ReLU after every layer; relu_on_last toggles the activation of the final
// layer (linear output when false).
MlpCache mlp_forward(std::span<const DenseLayer> layers, const DenseMatrix& batch,
                     bool relu_on_last);

MlpGrads backprop(std::span<const DenseLayer> layers, const MlpCache& cache,
                  const DenseMatrix& upstream, bool relu_on_last);

}  // namespace qvs

#endif
