#include "qvs/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_set>

#include "qvs/error.hpp"

namespace qvs {

namespace {

struct Candidate {
  double dist;
  std::uint64_t id;
};

bool better(const Candidate& a, const Candidate& b) {
  return a.dist != b.dist ? a.dist < b.dist : a.id < b.id;
}

TopK select_k(std::vector<Candidate>& cands, std::size_t k) {
  const std::size_t keep = std::min(k, cands.size());
  std::nth_element(cands.begin(), cands.begin() + keep, cands.end(), better);
  std::sort(cands.begin(), cands.begin() + keep, better);
  TopK out;
  out.ids.resize(keep);
  out.distances.resize(keep);
  for (std::size_t i = 0; i < keep; ++i) {
    out.ids[i] = cands[i].id;
    out.distances[i] = cands[i].dist;
  }
  return out;
}

std::uint64_t now_ns() {
  return std::uint64_t(std::chrono::duration_cast<std::chrono::nanoseconds>(
                           std::chrono::steady_clock::now().time_since_epoch())
                           .count());
}

double median(std::vector<double> v) {
  QVS_REQUIRE(!v.empty(), "median: empty");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  if (v.size() % 2 == 1) return v[mid];
  const double hi = v[mid];
  const double lo = *std::max_element(v.begin(), v.begin() + mid);
  return 0.5 * (lo + hi);
}

// Dataset rows sampled without replacement, deterministic per seed.
std::vector<std::uint64_t> sample_queries(std::size_t n, std::size_t n_queries,
                                          std::uint64_t seed) {
  QVS_REQUIRE(n_queries >= 1 && n_queries <= n, "sample_queries: bad count");
  Rng rng(seed);
  std::vector<std::uint64_t> all(n);
  std::iota(all.begin(), all.end(), std::uint64_t(0));
  for (std::size_t i = 0; i < n_queries; ++i) {
    const std::size_t j = i + rng.uniform_index(n - i);
    std::swap(all[i], all[j]);
  }
  all.resize(n_queries);
  return all;
}

}  // namespace

TopK linear_search(const DenseMatrix& data, std::span<const real> q, std::size_t k) {
  QVS_REQUIRE(k >= 1 && k <= data.rows, "linear_search: need 1 <= k <= n");
  std::vector<Candidate> cands(data.rows);
  for (std::size_t r = 0; r < data.rows; ++r)
    cands[r] = {squared_distance(q, data.row(r)), r};
  return select_k(cands, k);
}

double recall(std::span<const std::uint64_t> approx, std::span<const std::uint64_t> exact,
              std::size_t k) {
  QVS_REQUIRE(k >= 1, "recall: k must be >= 1");
  QVS_REQUIRE(approx.size() <= k && exact.size() <= k, "recall: lists longer than k");
  std::unordered_set<std::uint64_t> truth(exact.begin(), exact.end());
  std::size_t hits = 0;
  for (const std::uint64_t id : approx) hits += truth.count(id);
  return double(hits) / double(k);
}

TopK random_iteration_control(const DenseMatrix& data, std::span<const real> q,
                              std::size_t k, std::size_t c_max, Rng& rng) {
  const std::size_t budget = std::min(c_max, data.rows);
  QVS_REQUIRE(k >= 1 && k <= c_max, "random_iteration_control: need 1 <= k <= c_max");
  std::vector<std::uint64_t> rows(data.rows);
  std::iota(rows.begin(), rows.end(), std::uint64_t(0));
  std::vector<Candidate> cands(budget);
  for (std::size_t i = 0; i < budget; ++i) {
    const std::size_t j = i + rng.uniform_index(data.rows - i);
    std::swap(rows[i], rows[j]);
    cands[i] = {squared_distance(q, data.row(rows[i])), rows[i]};
  }
  return select_k(cands, k);
}

RecallSweepResult run_recall_sweep(const DenseMatrix& raw_data, const QvaeModel& model,
                                   const InvertedIndex& index,
                                   const RecallSweepConfig& cfg) {
  QVS_REQUIRE(!cfg.budgets.empty(), "run_recall_sweep: no budgets");
  for (const double f : cfg.budgets)
    QVS_REQUIRE(f > 0.0 && f <= 1.0, "run_recall_sweep: budget outside (0, 1]");
  RecallSweepResult out;
  out.query_ids = sample_queries(raw_data.rows, cfg.n_queries, cfg.seed);
  Rng control_rng = Rng(cfg.seed).derive(1);

  for (const std::uint64_t qid : out.query_ids) {
    const auto q = raw_data.row(qid);
    const std::uint64_t t0 = now_ns();
    const TopK exact = linear_search(raw_data, q, cfg.k);
    const std::uint64_t t_linear = now_ns() - t0;

    for (const double f : cfg.budgets) {
      QueryConfig qcfg;
      qcfg.k = cfg.k;
      qcfg.c_max = std::min<std::size_t>(
          raw_data.rows,
          std::max<std::size_t>(cfg.k, std::size_t(std::llround(f * double(raw_data.rows)))));
      const std::uint64_t t1 = now_ns();
      const BitString code = hash_point(model, q);
      const QueryResult approx = query_index(index, raw_data, q, code, qcfg);
      const std::uint64_t t_qvae = now_ns() - t1;

      SweepRow row;
      row.budget_fraction = f;
      row.query_id = qid;
      row.recall = recall(approx.ids, exact.ids, cfg.k);
      row.t_linear_ns = t_linear;
      row.t_qvae_ns = t_qvae;
      out.rows.push_back(row);

      const TopK control = random_iteration_control(raw_data, q, cfg.k, qcfg.c_max,
                                                    control_rng);
      out.control_recall.push_back(recall(control.ids, exact.ids, cfg.k));
    }
  }
  return out;
}

void write_sweep_csv(const std::string& path, std::span<const SweepRow> rows) {
  std::ofstream f(path);
  if (!f) throw ParseError("write_sweep_csv: cannot open " + path);
  f << "budget_fraction,query_id,recall,t_linear_ns,t_qvae_ns\n";
  for (const SweepRow& r : rows)
    f << r.budget_fraction << ',' << r.query_id << ',' << r.recall << ','
      << r.t_linear_ns << ',' << r.t_qvae_ns << '\n';
  if (!f) throw ParseError("write_sweep_csv: write failed for " + path);
}

SpeedupResult measure_speedup(const DenseMatrix& raw_data, const QvaeModel& model,
                              const InvertedIndex& index, const SpeedupConfig& cfg) {
  QVS_REQUIRE(cfg.repetitions >= 1, "measure_speedup: repetitions must be >= 1");
  const std::vector<std::uint64_t> queries =
      sample_queries(raw_data.rows, cfg.n_queries, cfg.seed);

  QueryConfig qcfg;
  qcfg.k = cfg.k;
  qcfg.c_max = cfg.c_max;

  std::vector<double> recalls;
  SpeedupResult out;
  if (cfg.latency_mode) {
    // Strictly sequential, per-query medians.
    std::vector<double> linear_times, qvae_times;
    for (const std::uint64_t qid : queries) {
      const auto q = raw_data.row(qid);
      TopK exact;
      std::vector<double> reps;
      for (std::uint32_t rep = 0; rep < cfg.repetitions; ++rep) {
        const std::uint64_t t0 = now_ns();
        exact = linear_search(raw_data, q, cfg.k);
        reps.push_back(double(now_ns() - t0));
      }
      linear_times.push_back(median(reps));

      QueryResult approx;
      reps.clear();
      for (std::uint32_t rep = 0; rep < cfg.repetitions; ++rep) {
        const std::uint64_t t0 = now_ns();
        const BitString code = hash_point(model, q);
        approx = query_index(index, raw_data, q, code, qcfg);
        reps.push_back(double(now_ns() - t0));
      }
      qvae_times.push_back(median(reps));
      recalls.push_back(recall(approx.ids, exact.ids, cfg.k));
    }
    out.t_linear_ns = median(linear_times);
    out.t_qvae_ns = median(qvae_times);
  } else {
    // Throughput: whole batch timed, average per query, median over reps.
    std::vector<double> linear_batch, qvae_batch;
    std::vector<TopK> exact(queries.size());
    for (std::uint32_t rep = 0; rep < cfg.repetitions; ++rep) {
      const std::uint64_t t0 = now_ns();
      for (std::size_t i = 0; i < queries.size(); ++i)
        exact[i] = linear_search(raw_data, raw_data.row(queries[i]), cfg.k);
      linear_batch.push_back(double(now_ns() - t0) / double(queries.size()));
    }
    std::vector<QueryResult> approx(queries.size());
    for (std::uint32_t rep = 0; rep < cfg.repetitions; ++rep) {
      const std::uint64_t t0 = now_ns();
      for (std::size_t i = 0; i < queries.size(); ++i) {
        const auto q = raw_data.row(queries[i]);
        approx[i] = query_index(index, raw_data, q, hash_point(model, q), qcfg);
      }
      qvae_batch.push_back(double(now_ns() - t0) / double(queries.size()));
    }
    for (std::size_t i = 0; i < queries.size(); ++i)
      recalls.push_back(recall(approx[i].ids, exact[i].ids, cfg.k));
    out.t_linear_ns = median(linear_batch);
    out.t_qvae_ns = median(qvae_batch);
  }
  out.speedup = out.t_linear_ns / out.t_qvae_ns;
  out.median_recall = median(recalls);
  return out;
}

namespace {

// Median recall over the query set at one budget.
double recall_at(const DenseMatrix& raw, const QvaeModel& model, const InvertedIndex& index,
                 std::span<const std::uint64_t> queries, std::size_t k, std::size_t c_max) {
  std::vector<double> recalls;
  QueryConfig qcfg{k, c_max};
  for (const std::uint64_t qid : queries) {
    const auto q = raw.row(qid);
    const TopK exact = linear_search(raw, q, k);
    const QueryResult approx = query_index(index, raw, q, hash_point(model, q), qcfg);
    recalls.push_back(recall(approx.ids, exact.ids, k));
  }
  return median(recalls);
}

}  // namespace

std::vector<TransverseRow> run_transverse_sweep(const DenseMatrix& raw_data,
                                                const TransverseSweepConfig& cfg) {
  QVS_REQUIRE(!cfg.gammas.empty() && !cfg.seeds.empty(), "run_transverse_sweep: empty grid");
  std::vector<TransverseRow> rows;
  for (const double gamma : cfg.gammas) {
    for (const std::uint64_t seed : cfg.seeds) {
      QvaeConfig qcfg = cfg.base;
      qcfg.prior = PriorKind::simulated_qbm;
      qcfg.gamma = gamma;
      qcfg.seed = seed;
      const TrainResult trained = train(raw_data, qcfg);
      const std::vector<BitString> codes = hash_dataset(trained.model, raw_data);
      const InvertedIndex index = build_index(codes);

      const std::vector<std::uint64_t> queries =
          sample_queries(raw_data.rows, cfg.n_queries, seed);

      // Recall is monotone in the budget, so bisect to the target.
      std::size_t lo = cfg.k, hi = raw_data.rows;
      double lo_recall =
          recall_at(raw_data, trained.model, index, queries, cfg.k, lo);
      std::size_t chosen = hi;
      double chosen_recall =
          lo_recall >= cfg.recall_target
              ? lo_recall
              : recall_at(raw_data, trained.model, index, queries, cfg.k, hi);
      if (lo_recall >= cfg.recall_target) {
        chosen = lo;
      } else {
        while (hi - lo > 1) {
          const std::size_t mid = lo + (hi - lo) / 2;
          const double r =
              recall_at(raw_data, trained.model, index, queries, cfg.k, mid);
          if (std::abs(r - cfg.recall_target) <= cfg.recall_tolerance) {
            chosen = mid;
            chosen_recall = r;
            break;
          }
          if (r < cfg.recall_target) {
            lo = mid;
          } else {
            hi = mid;
            chosen = mid;
            chosen_recall = r;
          }
        }
      }

      SpeedupConfig scfg;
      scfg.k = cfg.k;
      scfg.c_max = chosen;
      scfg.n_queries = cfg.n_queries;
      scfg.seed = seed;
      const SpeedupResult speed = measure_speedup(raw_data, trained.model, index, scfg);

      TransverseRow row;
      row.gamma = gamma;
      row.seed = seed;
      row.m = index.m();
      row.c_max = chosen;
      row.recall = chosen_recall;
      row.speedup = speed.speedup;
      rows.push_back(row);
    }
  }
  return rows;
}

void write_transverse_csv(const std::string& path, std::span<const TransverseRow> rows) {
  std::ofstream f(path);
  if (!f) throw ParseError("write_transverse_csv: cannot open " + path);
  f << "gamma,seed,m,c_max,recall,speedup\n";
  for (const TransverseRow& r : rows)
    f << r.gamma << ',' << r.seed << ',' << r.m << ',' << r.c_max << ',' << r.recall
      << ',' << r.speedup << '\n';
  if (!f) throw ParseError("write_transverse_csv: write failed for " + path);
}

}  // namespace qvs
