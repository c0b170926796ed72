#include "qvs/nn.hpp"

#include <cmath>

#include "qvs/error.hpp"

namespace qvs {

DenseLayer make_dense_layer(std::size_t out_dim, std::size_t in_dim, Rng& rng) {
  QVS_REQUIRE(out_dim > 0 && in_dim > 0, "dense layer dims must be positive");
  DenseLayer layer;
  layer.weights = DenseMatrix(out_dim, in_dim);
  layer.bias.assign(out_dim, real(0));
  const double bound = std::sqrt(6.0 / double(in_dim + out_dim));
  for (auto& w : layer.weights.data) w = real(rng.uniform(-bound, bound));
  return layer;
}

std::vector<real> linear_forward(std::span<const real> x, const DenseLayer& layer) {
  QVS_REQUIRE(x.size() == layer.in_dim(), "linear_forward: input size mismatch");
  std::vector<real> y(layer.out_dim());
  for (std::size_t o = 0; o < layer.out_dim(); ++o) {
    y[o] = real(double(layer.bias[o]) +
                detail::dot(layer.weights.row_ptr(o), x.data(), layer.in_dim()));
  }
  return y;
}

DenseMatrix linear_forward(const DenseMatrix& x, const DenseLayer& layer) {
  QVS_REQUIRE(x.cols == layer.in_dim(), "linear_forward: input cols mismatch");
  DenseMatrix y(x.rows, layer.out_dim());
  for (std::size_t r = 0; r < x.rows; ++r) {
    const real* xr = x.row_ptr(r);
    real* yr = y.row_ptr(r);
    for (std::size_t o = 0; o < layer.out_dim(); ++o) {
      yr[o] = real(double(layer.bias[o]) +
                   detail::dot(layer.weights.row_ptr(o), xr, layer.in_dim()));
    }
  }
  return y;
}

std::vector<real> relu(std::span<const real> x) {
  std::vector<real> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > real(0) ? x[i] : real(0);
  return y;
}

DenseMatrix relu(const DenseMatrix& x) {
  DenseMatrix y(x.rows, x.cols);
  for (std::size_t i = 0; i < x.data.size(); ++i)
    y.data[i] = x.data[i] > real(0) ? x.data[i] : real(0);
  return y;
}

DenseMatrix linear_backward(const DenseMatrix& x, const DenseLayer& layer,
                            const DenseMatrix& upstream, LayerGrads& grads) {
  QVS_REQUIRE(x.cols == layer.in_dim(), "linear_backward: input cols mismatch");
  QVS_REQUIRE(upstream.rows == x.rows && upstream.cols == layer.out_dim(),
              "linear_backward: upstream shape mismatch");
  grads.weights = DenseMatrix(layer.out_dim(), layer.in_dim());
  grads.bias.assign(layer.out_dim(), real(0));

  // dW[o][i] = sum_r g[r][o] x[r][i]; db[o] = sum_r g[r][o].
  std::vector<double> bias_acc(layer.out_dim(), 0.0);
  std::vector<double> w_acc(layer.out_dim() * layer.in_dim(), 0.0);
  for (std::size_t r = 0; r < x.rows; ++r) {
    const real* xr = x.row_ptr(r);
    const real* gr = upstream.row_ptr(r);
    for (std::size_t o = 0; o < layer.out_dim(); ++o) {
      const double g = double(gr[o]);
      bias_acc[o] += g;
      detail::axpy(g, xr, w_acc.data() + o * layer.in_dim(), layer.in_dim());
    }
  }
  for (std::size_t o = 0; o < layer.out_dim(); ++o) grads.bias[o] = real(bias_acc[o]);
  for (std::size_t i = 0; i < w_acc.size(); ++i) grads.weights.data[i] = real(w_acc[i]);

  // dx[r][i] = sum_o g[r][o] W[o][i].
  DenseMatrix dx(x.rows, x.cols);
  std::vector<double> dx_acc(x.cols);
  for (std::size_t r = 0; r < x.rows; ++r) {
    std::fill(dx_acc.begin(), dx_acc.end(), 0.0);
    const real* gr = upstream.row_ptr(r);
    for (std::size_t o = 0; o < layer.out_dim(); ++o)
      detail::axpy(double(gr[o]), layer.weights.row_ptr(o), dx_acc.data(), x.cols);
    real* dxr = dx.row_ptr(r);
    for (std::size_t i = 0; i < x.cols; ++i) dxr[i] = real(dx_acc[i]);
  }
  return dx;
}

DenseMatrix relu_backward(const DenseMatrix& pre_activation, const DenseMatrix& upstream) {
  QVS_REQUIRE(pre_activation.same_shape(upstream), "relu_backward: shape mismatch");
  DenseMatrix g(upstream.rows, upstream.cols);
  for (std::size_t i = 0; i < g.data.size(); ++i)
    g.data[i] = pre_activation.data[i] > real(0) ? upstream.data[i] : real(0);
  return g;
}

MlpCache mlp_forward(std::span<const DenseLayer> layers, const DenseMatrix& batch,
                     bool relu_on_last) {
  QVS_REQUIRE(!layers.empty(), "mlp_forward: empty layer stack");
  MlpCache cache;
  cache.inputs.reserve(layers.size());
  cache.pre.reserve(layers.size());
  DenseMatrix current = batch;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    cache.inputs.push_back(current);
    DenseMatrix pre = linear_forward(current, layers[l]);
    const bool activate = relu_on_last || l + 1 < layers.size();
    current = activate ? relu(pre) : pre;
    cache.pre.push_back(std::move(pre));
  }
  cache.output = std::move(current);
  return cache;
}

MlpGrads backprop(std::span<const DenseLayer> layers, const MlpCache& cache,
                  const DenseMatrix& upstream, bool relu_on_last) {
  QVS_REQUIRE(cache.inputs.size() == layers.size() && cache.pre.size() == layers.size(),
              "backprop: cache does not match layer stack");
  MlpGrads grads;
  grads.layers.resize(layers.size());
  DenseMatrix g = upstream;
  for (std::size_t l = layers.size(); l-- > 0;) {
    const bool activate = relu_on_last || l + 1 < layers.size();
    if (activate) g = relu_backward(cache.pre[l], g);
    g = linear_backward(cache.inputs[l], layers[l], g, grads.layers[l]);
  }
  grads.input = std::move(g);
  return grads;
}

}  // namespace qvs
