#ifndef QVS_ADAM_HPP
#define QVS_ADAM_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "qvs/real.hpp"

namespace qvs {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second moment accumulators for one parameter block.
// Moments are kept in double regardless of the parameter storage type.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;

  explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

// In-place bias-corrected update. Returns false and leaves params and state
// untouched when any gradient entry is non-finite.
bool adam_step(std::span<real> params, std::span<const real> grads, AdamState& state,
               const AdamConfig& cfg);

}  // namespace qvs

#endif
