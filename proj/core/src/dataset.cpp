#include "qvs/dataset.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "qvs/error.hpp"
#include "qvs/io_util.hpp"

namespace qvs {

namespace {
constexpr std::uint32_t kQvdsVersion = 1;
}

Scaler fit_scaler(const DenseMatrix& data) {
  QVS_REQUIRE(data.rows >= 1, "fit_scaler: empty dataset");
  Scaler s;
  s.mean.resize(data.cols);
  s.scale.resize(data.cols);
  std::vector<double> mean(data.cols, 0.0);
  for (std::size_t r = 0; r < data.rows; ++r) {
    const real* row = data.row_ptr(r);
    for (std::size_t c = 0; c < data.cols; ++c) mean[c] += double(row[c]);
  }
  for (auto& v : mean) v /= double(data.rows);
  std::vector<double> var(data.cols, 0.0);
  for (std::size_t r = 0; r < data.rows; ++r) {
    const real* row = data.row_ptr(r);
    for (std::size_t c = 0; c < data.cols; ++c) {
      const double d = double(row[c]) - mean[c];
      var[c] += d * d;
    }
  }
  for (std::size_t c = 0; c < data.cols; ++c) {
    const double sd = std::sqrt(var[c] / double(data.rows));
    s.mean[c] = real(mean[c]);
    s.scale[c] = sd > 1e-12 ? real(sd) : real(1);
  }
  return s;
}

DenseMatrix standardize(const DenseMatrix& data, const Scaler& s) {
  QVS_REQUIRE(data.cols == s.mean.size(), "standardize: width mismatch");
  DenseMatrix out(data.rows, data.cols);
  for (std::size_t r = 0; r < data.rows; ++r)
    standardize_row(s, data.row(r), out.row(r));
  return out;
}

DenseMatrix unstandardize(const DenseMatrix& data, const Scaler& s) {
  QVS_REQUIRE(data.cols == s.mean.size(), "unstandardize: width mismatch");
  DenseMatrix out(data.rows, data.cols);
  for (std::size_t r = 0; r < data.rows; ++r) {
    const real* in = data.row_ptr(r);
    real* o = out.row_ptr(r);
    for (std::size_t c = 0; c < data.cols; ++c)
      o[c] = real(double(in[c]) * double(s.scale[c]) + double(s.mean[c]));
  }
  return out;
}

void standardize_row(const Scaler& s, std::span<const real> in, std::span<real> out) {
  QVS_REQUIRE(in.size() == s.mean.size() && out.size() == in.size(),
              "standardize_row: width mismatch");
  for (std::size_t c = 0; c < in.size(); ++c)
    out[c] = real((double(in[c]) - double(s.mean[c])) / double(s.scale[c]));
}

SyntheticData generate_synthetic(std::size_t n, std::size_t d, std::size_t n_clusters,
                                 double spread, std::uint64_t seed) {
  QVS_REQUIRE(n >= 1 && d >= 1 && n_clusters >= 1, "generate_synthetic: empty request");
  QVS_REQUIRE(spread >= 0.0, "generate_synthetic: negative spread");
  Rng rng(seed);
  SyntheticData out;
  out.centers = DenseMatrix(n_clusters, d);
  for (auto& v : out.centers.data) v = real(rng.uniform(-1.0, 1.0));
  out.points = DenseMatrix(n, d);
  out.labels.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t c = rng.uniform_index(n_clusters);
    out.labels[r] = std::uint32_t(c);
    const real* center = out.centers.row_ptr(c);
    real* row = out.points.row_ptr(r);
    for (std::size_t j = 0; j < d; ++j)
      row[j] = real(double(center[j]) + spread * rng.normal());
  }
  return out;
}

void write_qvds(const std::string& path, const DenseMatrix& data) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ParseError("write_qvds: cannot open " + path);
  io::write_magic(f, "QVDS");
  io::write_u32(f, kQvdsVersion);
  io::write_u64(f, data.rows);
  io::write_u32(f, std::uint32_t(data.cols));
  for (const real v : data.data) io::write_f32(f, float(v));
  if (!f) throw ParseError("write_qvds: write failed for " + path);
}

DenseMatrix read_qvds(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ParseError("read_qvds: cannot open " + path);
  io::expect_magic(f, "QVDS", "dataset file");
  const std::uint32_t version = io::read_u32(f);
  if (version != kQvdsVersion)
    throw ParseError("read_qvds: unsupported version " + std::to_string(version));
  const std::uint64_t n = io::read_u64(f);
  const std::uint32_t d = io::read_u32(f);
  QVS_REQUIRE(n >= 1 && d >= 1, "read_qvds: empty dataset");
  DenseMatrix data(n, d);
  for (auto& v : data.data) v = real(io::read_f32(f));
  return data;
}

DenseMatrix read_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("read_csv: cannot open " + path);
  std::vector<real> values;
  std::size_t cols = 0, rows = 0;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::size_t row_cols = 0;
    const char* p = line.c_str();
    while (true) {
      char* end = nullptr;
      const double v = std::strtod(p, &end);
      if (end == p) throw ParseError("read_csv: bad number in " + path);
      values.push_back(real(v));
      row_cols += 1;
      while (*end == ' ' || *end == '\t') ++end;
      if (*end == ',') {
        p = end + 1;
      } else if (*end == '\0' || *end == '\r') {
        break;
      } else {
        throw ParseError("read_csv: unexpected character in " + path);
      }
    }
    if (rows == 0) {
      cols = row_cols;
    } else if (row_cols != cols) {
      throw ParseError("read_csv: ragged row in " + path);
    }
    rows += 1;
  }
  QVS_REQUIRE(rows >= 1, "read_csv: no rows");
  DenseMatrix data(rows, cols);
  data.data = std::move(values);
  return data;
}

}  // namespace qvs
