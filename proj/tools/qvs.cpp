// qvs: learned binary-hash vector search over synthetic or user data.
// Subcommands cover the full pipeline: data generation, model training,
// index construction, single queries, benchmarking, and the two sweeps.
//
// Exit codes: 0 success, 1 runtime or I/O failure, 2 usage error.

#include <algorithm>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "qvs/bench.hpp"
#include "qvs/dataset.hpp"
#include "qvs/error.hpp"
#include "qvs/index.hpp"
#include "qvs/qvae.hpp"

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

qvs::DenseMatrix load_dataset(const std::string& path) {
  if (ends_with(path, ".csv")) return qvs::read_csv(path);
  return qvs::read_qvds(path);
}

std::vector<double> parse_double_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    const std::string item = text.substr(pos, comma - pos);
    if (!item.empty()) {
      char* end = nullptr;
      const double v = std::strtod(item.c_str(), &end);
      if (end == item.c_str() || *end != '\0')
        throw qvs::ContractViolation(std::string(what) + ": bad number '" + item + "'");
      out.push_back(v);
    }
    pos = comma + 1;
  }
  if (out.empty()) throw qvs::ContractViolation(std::string(what) + ": empty list");
  return out;
}

std::vector<std::uint64_t> parse_u64_list(const std::string& text, const char* what) {
  std::vector<std::uint64_t> out;
  for (const double v : parse_double_list(text, what)) {
    if (v < 0 || v != double(std::uint64_t(v)))
      throw qvs::ContractViolation(std::string(what) + ": expected nonnegative integers");
    out.push_back(std::uint64_t(v));
  }
  return out;
}

// Reproducibility: every run prints the post-merge value of every option of
// the active subcommand, defaults included.
void echo_config(const CLI::App* sub) {
  std::cerr << "# effective configuration [" << sub->get_name() << "]\n";
  std::cerr << sub->config_to_str(true, false);
}

std::string trim(const std::string& s) {
  const std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

// Expands `--config FILE` into ordinary flags inserted after the subcommand
// name. Keys already present on the command line are dropped, so explicit
// flags always win. Unknown keys surface as normal usage errors.
std::vector<std::string> merge_config_args(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  std::string path;
  std::size_t sub_pos = 0;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (sub_pos == 0 && !args[i].empty() && args[i][0] != '-') sub_pos = i;
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty() || sub_pos == 0) return args;

  std::ifstream f(path);
  if (!f) throw qvs::ParseError("cannot open config file " + path);
  std::vector<std::string> injected;
  std::string line;
  while (std::getline(f, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw qvs::ContractViolation("config file: expected key=value, got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
      value = value.substr(1, value.size() - 2);
    if (key.empty()) throw qvs::ContractViolation("config file: empty key in '" + line + "'");
    if (key == "config") throw qvs::ContractViolation("config file: recursive config key");
    const std::string flag = "--" + key;
    bool on_cli = false;
    for (std::size_t i = sub_pos + 1; i < args.size(); ++i) {
      if (args[i] == flag || args[i].rfind(flag + "=", 0) == 0) on_cli = true;
    }
    if (!on_cli) injected.push_back(flag + "=" + value);
  }
  args.insert(args.begin() + std::ptrdiff_t(sub_pos) + 1, injected.begin(), injected.end());
  return args;
}

qvs::PriorKind prior_from_name(const std::string& name) {
  if (name == "rbm") return qvs::PriorKind::rbm;
  if (name == "simulated-qbm") return qvs::PriorKind::simulated_qbm;
  throw qvs::ContractViolation("unknown prior '" + name + "'");
}

// Shared training knobs; each subcommand that trains registers the same set.
struct TrainFlags {
  std::uint32_t d_latent = 64;
  std::uint32_t hidden1 = 128;
  std::uint32_t hidden2 = 64;
  double alpha = double(qvs::kReparamAlpha);
  std::string prior = "rbm";
  double gamma = 0.0;
  double beta = 1.0;
  double lr = 1e-3;
  std::uint32_t batch = 256;
  std::uint32_t epochs = 30;
  double l2 = 1e-4;
  std::uint32_t cd_chains = 64;
  std::uint32_t cd_sweeps = 5;
  std::uint32_t slices = 64;
  std::uint64_t seed = 1;

  void add_to(CLI::App* sub) {
    sub->add_option("--d-latent", d_latent, "code width in bits (even, 2..64)");
    sub->add_option("--hidden1", hidden1, "first trunk width");
    sub->add_option("--hidden2", hidden2, "second trunk width");
    sub->add_option("--alpha", alpha, "relaxation sharpness");
    sub->add_option("--prior", prior, "prior family")
        ->check(CLI::IsMember({"rbm", "simulated-qbm"}));
    sub->add_option("--gamma", gamma, "transverse field (simulated-qbm only)");
    sub->add_option("--beta", beta, "prior inverse temperature");
    sub->add_option("--lr", lr, "Adam learning rate");
    sub->add_option("--batch", batch, "minibatch size");
    sub->add_option("--epochs", epochs, "training epochs");
    sub->add_option("--l2", l2, "l2 strength on prior parameters");
    sub->add_option("--cd-chains", cd_chains, "persistent negative chains");
    sub->add_option("--cd-sweeps", cd_sweeps, "sweeps per update");
    sub->add_option("--slices", slices, "Trotter slices (simulated-qbm only)");
    sub->add_option("--seed", seed, "rng seed");
  }

  qvs::QvaeConfig to_config(std::uint32_t d_data) const {
    qvs::QvaeConfig cfg;
    cfg.d_data = d_data;
    cfg.d_latent = d_latent;
    cfg.hidden1 = hidden1;
    cfg.hidden2 = hidden2;
    cfg.alpha = qvs::real(alpha);
    cfg.prior = prior_from_name(prior);
    cfg.gamma = gamma;
    cfg.beta = beta;
    cfg.lr = lr;
    cfg.batch_size = batch;
    cfg.epochs = epochs;
    cfg.l2 = l2;
    cfg.cd_chains = cd_chains;
    cfg.cd_sweeps = cd_sweeps;
    cfg.trotter_slices = slices;
    cfg.seed = seed;
    return cfg;
  }
};

void print_epoch_log(const std::vector<qvs::EpochStats>& log) {
  for (const qvs::EpochStats& e : log) {
    std::fprintf(stderr,
                 "epoch %u loss=%.6f recon=%.6f logq=%.6f prior=%.6f"
                 " beta_eff=%.4f rejected=%u\n",
                 e.epoch, e.loss, e.reconstruction, e.posterior_logq, e.prior_energy,
                 e.beta_eff, e.rejected_steps);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"learned binary-hash vector search", "qvs"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  std::string config_path;  // consumed by merge_config_args before the parse

  // ---- gen-data ----
  auto* gen = app.add_subcommand("gen-data", "generate a clustered synthetic dataset");
  struct {
    std::uint64_t n = 100000;
    std::uint32_t d = 64;
    std::uint32_t clusters = 50;
    double spread = 0.05;
    std::uint64_t seed = 1;
    std::string out;
  } g;
  gen->add_option("--n", g.n, "number of points");
  gen->add_option("--d", g.d, "dimensionality");
  gen->add_option("--clusters", g.clusters, "number of cluster centers");
  gen->add_option("--spread", g.spread, "per-coordinate cluster stddev");
  gen->add_option("--seed", g.seed, "rng seed");
  gen->add_option("--out", g.out, "output dataset path")->required();
  gen->add_option("--config", config_path, "key=value file; command line wins");
  gen->callback([&] {
    echo_config(gen);
    const qvs::SyntheticData data =
        qvs::generate_synthetic(g.n, g.d, g.clusters, g.spread, g.seed);
    qvs::write_qvds(g.out, data.points);
    std::fprintf(stderr, "wrote %s (n=%llu d=%u)\n", g.out.c_str(),
                 (unsigned long long)g.n, g.d);
  });

  // ---- train ----
  auto* tr = app.add_subcommand("train", "train a hashing model on a dataset");
  struct {
    std::string data;
    std::string out;
    TrainFlags flags;
  } t;
  tr->add_option("--data", t.data, "input dataset (.qvds or .csv)")->required();
  tr->add_option("--out", t.out, "output model path")->required();
  t.flags.add_to(tr);
  tr->add_option("--config", config_path, "key=value file; command line wins");
  tr->callback([&] {
    echo_config(tr);
    const qvs::DenseMatrix data = load_dataset(t.data);
    const qvs::QvaeConfig cfg = t.flags.to_config(std::uint32_t(data.cols));
    qvs::validate(cfg);
    const qvs::TrainResult result = qvs::train(data, cfg);
    print_epoch_log(result.log);
    qvs::write_model(t.out, result.model);
    std::fprintf(stderr, "wrote %s\n", t.out.c_str());
  });

  // ---- build-index ----
  auto* bi = app.add_subcommand("build-index", "hash a dataset and build the inverted index");
  struct {
    std::string model;
    std::string data;
    std::string out;
  } b;
  bi->add_option("--model", b.model, "trained model path")->required();
  bi->add_option("--data", b.data, "dataset to index")->required();
  bi->add_option("--out", b.out, "output index path")->required();
  bi->add_option("--config", config_path, "key=value file; command line wins");
  bi->callback([&] {
    echo_config(bi);
    const qvs::QvaeModel model = qvs::read_model(b.model);
    const qvs::DenseMatrix data = load_dataset(b.data);
    const std::vector<qvs::BitString> codes = qvs::hash_dataset(model, data);
    const qvs::InvertedIndex index = qvs::build_index(codes);
    qvs::write_qvix(b.out, index);
    std::fprintf(stderr, "wrote %s (n=%llu m=%llu bytes=%llu)\n", b.out.c_str(),
                 (unsigned long long)index.n, (unsigned long long)index.m(),
                 (unsigned long long)qvs::memory_report(index));
  });

  // ---- query ----
  auto* qu = app.add_subcommand("query", "run one query against an index");
  struct {
    std::string index;
    std::string model;
    std::string data;
    std::size_t k = 10;
    std::size_t cmax = 0;
    std::int64_t vector_row = -1;
    std::string vector_csv;
  } q;
  qu->add_option("--index", q.index, "index path")->required();
  qu->add_option("--model", q.model, "model path")->required();
  qu->add_option("--data", q.data, "raw vectors backing the index")->required();
  qu->add_option("--k", q.k, "neighbors to return");
  qu->add_option("--cmax", q.cmax, "comparison budget (0 = 1% of n, at least k)");
  qu->add_option("--vector-row", q.vector_row, "use this dataset row as the query");
  qu->add_option("--vector", q.vector_csv, "query vector as comma-separated values");
  qu->add_option("--config", config_path, "key=value file; command line wins");
  qu->callback([&] {
    echo_config(qu);
    const qvs::InvertedIndex index = qvs::read_qvix(q.index);
    const qvs::QvaeModel model = qvs::read_model(q.model);
    const qvs::DenseMatrix data = load_dataset(q.data);

    std::vector<qvs::real> vec;
    if (!q.vector_csv.empty()) {
      for (const double v : parse_double_list(q.vector_csv, "--vector"))
        vec.push_back(qvs::real(v));
    } else if (q.vector_row >= 0) {
      if (std::uint64_t(q.vector_row) >= data.rows)
        throw qvs::ContractViolation("--vector-row out of range");
      const auto r = data.row(std::uint64_t(q.vector_row));
      vec.assign(r.begin(), r.end());
    } else {
      throw qvs::ContractViolation("query needs --vector-row or --vector");
    }
    if (vec.size() != data.cols)
      throw qvs::ContractViolation("query vector length does not match dataset");

    qvs::QueryConfig qcfg;
    qcfg.k = q.k;
    qcfg.c_max = q.cmax ? q.cmax
                        : std::max<std::size_t>(q.k, std::size_t(double(data.rows) * 0.01));
    const qvs::BitString code = qvs::hash_point(model, vec);
    const qvs::QueryResult result = qvs::query_index(index, data, vec, code, qcfg);

    std::printf("id,dist2\n");
    for (std::size_t i = 0; i < result.ids.size(); ++i)
      std::printf("%llu,%.9g\n", (unsigned long long)result.ids[i], result.distances[i]);
    std::fprintf(stderr, "comparisons=%zu\n", result.comparisons);
  });

  // ---- bench ----
  auto* be = app.add_subcommand("bench", "measure recall and speedup vs a linear scan");
  struct {
    std::string index;
    std::string model;
    std::string data;
    std::size_t k = 100;
    std::size_t cmax = 0;
    double cmax_frac = 0.01;
    std::size_t queries = 50;
    std::uint32_t reps = 3;
    std::string mode = "latency";
    std::uint64_t seed = 1;
  } e;
  be->add_option("--index", e.index, "index path")->required();
  be->add_option("--model", e.model, "model path")->required();
  be->add_option("--data", e.data, "raw vectors backing the index")->required();
  be->add_option("--k", e.k, "neighbors per query");
  be->add_option("--cmax", e.cmax, "comparison budget (overrides --cmax-frac)");
  be->add_option("--cmax-frac", e.cmax_frac, "budget as a fraction of n");
  be->add_option("--queries", e.queries, "number of query points");
  be->add_option("--reps", e.reps, "timing repetitions per measurement");
  be->add_option("--mode", e.mode, "latency (per query) or throughput (batch)")
      ->check(CLI::IsMember({"latency", "throughput"}));
  be->add_option("--seed", e.seed, "query sampling seed");
  be->add_option("--config", config_path, "key=value file; command line wins");
  be->callback([&] {
    echo_config(be);
    const qvs::InvertedIndex index = qvs::read_qvix(e.index);
    const qvs::QvaeModel model = qvs::read_model(e.model);
    const qvs::DenseMatrix data = load_dataset(e.data);

    qvs::SpeedupConfig cfg;
    cfg.k = e.k;
    cfg.c_max = e.cmax ? e.cmax
                       : std::clamp<std::size_t>(
                             std::size_t(double(data.rows) * e.cmax_frac), e.k, data.rows);
    cfg.n_queries = e.queries;
    cfg.repetitions = e.reps;
    cfg.latency_mode = (e.mode == "latency");
    cfg.seed = e.seed;
    const qvs::SpeedupResult r = qvs::measure_speedup(data, model, index, cfg);
    std::printf("mode=%s k=%zu c_max=%zu queries=%zu\n", e.mode.c_str(), cfg.k, cfg.c_max,
                cfg.n_queries);
    std::printf("t_linear_ns=%.0f t_qvae_ns=%.0f speedup=%.3f median_recall=%.4f\n",
                r.t_linear_ns, r.t_qvae_ns, r.speedup, r.median_recall);
  });

  // ---- sweep-recall ----
  auto* sr = app.add_subcommand("sweep-recall", "recall vs budget sweep, CSV output");
  struct {
    std::string data;
    std::string model;
    std::string index;
    std::string budgets = "0.0001,0.0002,0.0004,0.0008,0.0016,0.0032,0.0064,0.0128,0.0256";
    std::size_t k = 100;
    std::size_t queries = 100;
    std::uint64_t seed = 1;
    std::string out;
  } s;
  sr->add_option("--data", s.data, "raw dataset")->required();
  sr->add_option("--model", s.model, "trained model")->required();
  sr->add_option("--index", s.index, "prebuilt index (default: build from model)");
  sr->add_option("--budgets", s.budgets, "comma-separated budget fractions");
  sr->add_option("--k", s.k, "neighbors per query");
  sr->add_option("--queries", s.queries, "number of query points");
  sr->add_option("--seed", s.seed, "query sampling seed");
  sr->add_option("--out", s.out, "output CSV path")->required();
  sr->add_option("--config", config_path, "key=value file; command line wins");
  sr->callback([&] {
    echo_config(sr);
    const qvs::DenseMatrix data = load_dataset(s.data);
    const qvs::QvaeModel model = qvs::read_model(s.model);
    qvs::InvertedIndex index;
    if (!s.index.empty()) {
      index = qvs::read_qvix(s.index);
    } else {
      index = qvs::build_index(qvs::hash_dataset(model, data));
    }
    qvs::RecallSweepConfig cfg;
    cfg.budgets = parse_double_list(s.budgets, "--budgets");
    cfg.k = s.k;
    cfg.n_queries = s.queries;
    cfg.seed = s.seed;
    const qvs::RecallSweepResult result = qvs::run_recall_sweep(data, model, index, cfg);
    qvs::write_sweep_csv(s.out, result.rows);

    // Per-budget medians to stderr for a quick read.
    for (std::size_t bi_ = 0; bi_ < cfg.budgets.size(); ++bi_) {
      std::vector<double> rec, ctl;
      for (std::size_t r = 0; r < result.rows.size(); ++r) {
        if (result.rows[r].budget_fraction == cfg.budgets[bi_]) {
          rec.push_back(result.rows[r].recall);
          ctl.push_back(result.control_recall[r]);
        }
      }
      std::sort(rec.begin(), rec.end());
      std::sort(ctl.begin(), ctl.end());
      if (!rec.empty())
        std::fprintf(stderr, "budget=%g median_recall=%.4f control=%.4f\n", cfg.budgets[bi_],
                     rec[rec.size() / 2], ctl[ctl.size() / 2]);
    }
    std::fprintf(stderr, "wrote %s\n", s.out.c_str());
  });

  // ---- sweep-transverse ----
  auto* st = app.add_subcommand("sweep-transverse",
                                "occupied-code and speedup sweep over the transverse field");
  struct {
    std::string data;
    std::string gammas = "0,1,2,4";
    std::string seeds = "1,2,3,4,5";
    double recall_target = 0.8;
    double recall_tol = 0.02;
    std::size_t k = 10;
    std::size_t queries = 50;
    std::string out;
    TrainFlags flags;
  } v;
  st->add_option("--data", v.data, "raw dataset")->required();
  st->add_option("--gammas", v.gammas, "comma-separated transverse-field values");
  st->add_option("--seeds", v.seeds, "comma-separated training seeds");
  st->add_option("--recall-target", v.recall_target, "budget is bisected to this recall");
  st->add_option("--recall-tol", v.recall_tol, "acceptable recall distance to the target");
  st->add_option("--k", v.k, "neighbors per query");
  st->add_option("--queries", v.queries, "number of query points");
  st->add_option("--out", v.out, "output CSV path")->required();
  v.flags.add_to(st);
  st->add_option("--config", config_path, "key=value file; command line wins");
  st->callback([&] {
    echo_config(st);
    const qvs::DenseMatrix data = load_dataset(v.data);
    qvs::TransverseSweepConfig cfg;
    cfg.gammas = parse_double_list(v.gammas, "--gammas");
    cfg.seeds = parse_u64_list(v.seeds, "--seeds");
    cfg.recall_target = v.recall_target;
    cfg.recall_tolerance = v.recall_tol;
    cfg.k = v.k;
    cfg.n_queries = v.queries;
    cfg.base = v.flags.to_config(std::uint32_t(data.cols));
    const std::vector<qvs::TransverseRow> rows = qvs::run_transverse_sweep(data, cfg);
    qvs::write_transverse_csv(v.out, rows);
    for (const qvs::TransverseRow& r : rows)
      std::fprintf(stderr, "gamma=%g seed=%llu m=%llu c_max=%zu recall=%.4f speedup=%.3f\n",
                   r.gamma, (unsigned long long)r.seed, (unsigned long long)r.m, r.c_max,
                   r.recall, r.speedup);
    std::fprintf(stderr, "wrote %s\n", v.out.c_str());
  });

  try {
    std::vector<std::string> merged = merge_config_args(argc, argv);
    merged.erase(merged.begin());
    std::reverse(merged.begin(), merged.end());
    app.parse(std::move(merged));
  } catch (const CLI::ParseError& err) {
    if (err.get_exit_code() == 0) return app.exit(err);  // --help and friends
    app.exit(err);
    return 2;
  } catch (const qvs::ContractViolation& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 2;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 1;
  }
  return 0;
}
