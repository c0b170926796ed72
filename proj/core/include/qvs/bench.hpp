#ifndef QVS_BENCH_HPP
#define QVS_BENCH_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "qvs/index.hpp"
#include "qvs/qvae.hpp"

namespace qvs {

struct TopK {
  std::vector<std::uint64_t> ids;
  std::vector<double> distances;
};

// Full scan, k smallest squared Euclidean distances, ties by smaller id.
// The tie rule is shared with query_index so the two agree exactly.
TopK linear_search(const DenseMatrix& data, std::span<const real> q, std::size_t k);

// Intersection size divided by k.
double recall(std::span<const std::uint64_t> approx, std::span<const std::uint64_t> exact,
              std::size_t k);

// Budget of min(c_max, n) uniformly sampled candidates, no Hamming guidance.
// Expected recall equals the budget fraction.
TopK random_iteration_control(const DenseMatrix& data, std::span<const real> q,
                              std::size_t k, std::size_t c_max, Rng& rng);

// One row of the pinned CSV schema:
// budget_fraction,query_id,recall,t_linear_ns,t_qvae_ns
struct SweepRow {
  double budget_fraction = 0;
  std::uint64_t query_id = 0;
  double recall = 0;
  std::uint64_t t_linear_ns = 0;
  std::uint64_t t_qvae_ns = 0;
};

struct RecallSweepConfig {
  std::vector<double> budgets;   // fractions of n, in (0, 1]
  std::size_t k = 100;
  std::size_t n_queries = 100;
  std::uint64_t seed = 1;
};

struct RecallSweepResult {
  std::vector<SweepRow> rows;
  std::vector<std::uint64_t> query_ids;
  std::vector<double> control_recall;  // random-iteration control, same order as rows
};

// Queries are dataset rows sampled without replacement (the query point
// stays in the index). c_max = clamp(round(f * n), k, n) per budget f.
RecallSweepResult run_recall_sweep(const DenseMatrix& raw_data, const QvaeModel& model,
                                   const InvertedIndex& index,
                                   const RecallSweepConfig& cfg);

void write_sweep_csv(const std::string& path, std::span<const SweepRow> rows);

struct SpeedupConfig {
  std::size_t k = 100;
  std::size_t c_max = 0;
  std::size_t n_queries = 50;
  std::uint32_t repetitions = 3;
  bool latency_mode = true;  // strictly sequential per-query timing
  std::uint64_t seed = 1;
};

struct SpeedupResult {
  double t_linear_ns = 0;  // median per query
  double t_qvae_ns = 0;
  double speedup = 0;      // t_linear / t_qvae
  double median_recall = 0;
};

// Query timing only; hashing is part of the timed query, index build is not.
SpeedupResult measure_speedup(const DenseMatrix& raw_data, const QvaeModel& model,
                              const InvertedIndex& index, const SpeedupConfig& cfg);

struct TransverseSweepConfig {
  std::vector<double> gammas;
  std::vector<std::uint64_t> seeds;
  double recall_target = 0.8;
  double recall_tolerance = 0.02;
  std::size_t k = 10;
  std::size_t n_queries = 50;
  QvaeConfig base;  // prior/gamma/seed overridden per run
};

struct TransverseRow {
  double gamma = 0;
  std::uint64_t seed = 0;
  std::uint64_t m = 0;      // occupied-code count
  std::size_t c_max = 0;    // budget found for the recall target
  double recall = 0;
  double speedup = 0;
};

// Trains one model per (gamma, seed) with the simulated transverse-field
// prior, builds the index, bisects c_max to the recall target, and measures
// the speedup there.
std::vector<TransverseRow> run_transverse_sweep(const DenseMatrix& raw_data,
                                                const TransverseSweepConfig& cfg);

void write_transverse_csv(const std::string& path, std::span<const TransverseRow> rows);

}  // namespace qvs

#endif
