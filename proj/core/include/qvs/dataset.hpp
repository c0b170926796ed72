#ifndef QVS_DATASET_HPP
#define QVS_DATASET_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "qvs/matrix.hpp"
#include "qvs/rng.hpp"

namespace qvs {

// Per-feature standardization: y = (x - mean) / scale.
// Columns with (near) zero variance get scale 1, so they map to zeros.
struct Scaler {
  std::vector<real> mean;
  std::vector<real> scale;

  bool operator==(const Scaler&) const = default;
};

Scaler fit_scaler(const DenseMatrix& data);
DenseMatrix standardize(const DenseMatrix& data, const Scaler& s);
DenseMatrix unstandardize(const DenseMatrix& data, const Scaler& s);
void standardize_row(const Scaler& s, std::span<const real> in, std::span<real> out);

struct SyntheticData {
  DenseMatrix points;
  std::vector<std::uint32_t> labels;  // cluster of each row
  DenseMatrix centers;                // n_clusters x d
};

// Gaussian mixture: centers uniform in [-1,1]^d, isotropic noise of the
// given spread. Deterministic per seed.
SyntheticData generate_synthetic(std::size_t n, std::size_t d, std::size_t n_clusters,
                                 double spread, std::uint64_t seed);

// Binary dataset file: magic "QVDS", u32 version, u64 n, u32 d, then
// row-major little-endian f32. Bit-exact round trip.
void write_qvds(const std::string& path, const DenseMatrix& data);
DenseMatrix read_qvds(const std::string& path);

// Headerless numeric rows, comma-separated, uniform column count.
DenseMatrix read_csv(const std::string& path);

}  // namespace qvs

#endif
