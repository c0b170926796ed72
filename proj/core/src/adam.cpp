#include "qvs/adam.hpp"

#include <cmath>

#include "qvs/error.hpp"

namespace qvs {

bool adam_step(std::span<real> params, std::span<const real> grads, AdamState& state,
               const AdamConfig& cfg) {
  QVS_REQUIRE(params.size() == grads.size(), "adam_step: size mismatch");
  QVS_REQUIRE(state.m.size() == params.size() && state.v.size() == params.size(),
              "adam_step: state size mismatch");
  for (const real g : grads)
    if (!std::isfinite(double(g))) return false;

  state.t += 1;
  const double c1 = 1.0 - std::pow(cfg.beta1, double(state.t));
  const double c2 = 1.0 - std::pow(cfg.beta2, double(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = double(grads[i]);
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] = real(double(params[i]) - cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps));
  }
  return true;
}

}  // namespace qvs
