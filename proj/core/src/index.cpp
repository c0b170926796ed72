#include "qvs/index.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <unordered_set>

#include "qvs/error.hpp"
#include "qvs/io_util.hpp"

namespace qvs {

namespace {

constexpr std::uint32_t kQvixVersion = 1;

// Duplicate-id detector: dense bitmap for small ids, hash set for the rest.
class IdSeen {
 public:
  explicit IdSeen(std::uint64_t dense_limit) : limit_(dense_limit) {
    bitmap_.assign((limit_ + 63) / 64, 0);
  }

  bool insert(std::uint64_t id) {
    if (id < limit_) {
      std::uint64_t& word = bitmap_[id >> 6];
      const std::uint64_t bit = std::uint64_t(1) << (id & 63);
      if (word & bit) return false;
      word |= bit;
      return true;
    }
    return rest_.insert(id).second;
  }

 private:
  std::uint64_t limit_;
  std::vector<std::uint64_t> bitmap_;
  std::unordered_set<std::uint64_t> rest_;
};

void insert_sorted(std::vector<std::uint64_t>& ids, std::uint64_t id) {
  if (ids.empty() || id > ids.back()) {
    ids.push_back(id);
    return;
  }
  const auto it = std::lower_bound(ids.begin(), ids.end(), id);
  ids.insert(it, id);
}

}  // namespace

InvertedIndex build_index(std::uint32_t d_latent, std::span<const CodePair> stream) {
  QVS_REQUIRE(d_latent >= 1 && d_latent <= 64, "build_index: width out of range");
  InvertedIndex index;
  index.d_latent = d_latent;
  IdSeen seen(std::max<std::uint64_t>(2 * stream.size(), 1u << 22));
  for (const CodePair& pair : stream) {
    QVS_REQUIRE(pair.code.width == d_latent, "build_index: code width mismatch");
    if (!seen.insert(pair.id)) throw ContractViolation("build_index: duplicate id");
    const auto [it, fresh] = index.lookup.try_emplace(pair.code.bits, index.codes.size());
    if (fresh) {
      index.codes.push_back(pair.code.bits);
      index.ids.emplace_back();
    }
    insert_sorted(index.ids[it->second], pair.id);
    index.n += 1;
  }
  return index;
}

InvertedIndex build_index(std::span<const BitString> codes) {
  QVS_REQUIRE(!codes.empty(), "build_index: empty code list");
  std::vector<CodePair> stream(codes.size());
  for (std::size_t i = 0; i < codes.size(); ++i) stream[i] = {i, codes[i]};
  return build_index(codes.front().width, stream);
}

std::vector<std::uint32_t> hamming_sorted_buckets(const InvertedIndex& index,
                                                  BitString q) {
  QVS_REQUIRE(q.width == index.d_latent, "hamming_sorted_buckets: width mismatch");
  const std::size_t m = index.m();
  std::vector<std::uint32_t> counts(index.d_latent + 2, 0);
  std::vector<std::uint32_t> dist(m);
  for (std::size_t b = 0; b < m; ++b) {
    dist[b] = std::uint32_t(std::popcount(index.codes[b] ^ q.bits));
    counts[dist[b] + 1] += 1;
  }
  for (std::size_t d = 1; d < counts.size(); ++d) counts[d] += counts[d - 1];
  std::vector<std::uint32_t> order(m);
  for (std::size_t b = 0; b < m; ++b) order[counts[dist[b]]++] = std::uint32_t(b);
  return order;
}

QueryResult query_index(const InvertedIndex& index, const DenseMatrix& raw_data,
                        std::span<const real> q_raw, BitString q_code,
                        const QueryConfig& cfg) {
  QVS_REQUIRE(cfg.k >= 1 && cfg.k <= cfg.c_max, "query_index: need 1 <= k <= c_max");
  QVS_REQUIRE(raw_data.rows == index.n, "query_index: dataset size mismatch");
  const std::size_t budget = std::min<std::size_t>(cfg.c_max, index.n);

  struct Candidate {
    double dist;
    std::uint64_t id;
  };
  std::vector<Candidate> cands;
  cands.reserve(budget);

  QueryResult result;
  for (const std::uint32_t b : hamming_sorted_buckets(index, q_code)) {
    if (result.comparisons == budget) break;
    for (const std::uint64_t id : index.ids[b]) {
      QVS_REQUIRE(id < raw_data.rows, "query_index: id outside dataset");
      cands.push_back({squared_distance(q_raw, raw_data.row(id)), id});
      result.comparisons += 1;
      if (result.comparisons == budget) break;
    }
  }
  const auto better = [](const Candidate& a, const Candidate& b) {
    return a.dist != b.dist ? a.dist < b.dist : a.id < b.id;
  };
  const std::size_t keep = std::min(cfg.k, cands.size());
  std::nth_element(cands.begin(), cands.begin() + keep, cands.end(), better);
  std::sort(cands.begin(), cands.begin() + keep, better);
  result.ids.resize(keep);
  result.distances.resize(keep);
  for (std::size_t i = 0; i < keep; ++i) {
    result.ids[i] = cands[i].id;
    result.distances[i] = cands[i].dist;
  }
  return result;
}

void write_qvix(const std::string& path, const InvertedIndex& index) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ParseError("write_qvix: cannot open " + path);
  io::write_magic(f, "QVIX");
  io::write_u32(f, kQvixVersion);
  io::write_u32(f, index.d_latent);
  io::write_u64(f, index.m());
  io::write_u64(f, index.n);
  for (std::size_t b = 0; b < index.m(); ++b) {
    io::write_u64(f, index.codes[b]);
    io::write_u64(f, index.ids[b].size());
    for (const std::uint64_t id : index.ids[b]) io::write_u64(f, id);
  }
  if (!f) throw ParseError("write_qvix: write failed for " + path);
}

InvertedIndex read_qvix(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ParseError("read_qvix: cannot open " + path);
  io::expect_magic(f, "QVIX", "index file");
  const std::uint32_t version = io::read_u32(f);
  if (version != kQvixVersion)
    throw ParseError("read_qvix: unsupported version " + std::to_string(version));
  InvertedIndex index;
  index.d_latent = io::read_u32(f);
  QVS_REQUIRE(index.d_latent >= 1 && index.d_latent <= 64, "read_qvix: bad width");
  const std::uint64_t m = io::read_u64(f);
  const std::uint64_t n = io::read_u64(f);
  index.codes.resize(m);
  index.ids.resize(m);
  std::uint64_t total = 0;
  for (std::uint64_t b = 0; b < m; ++b) {
    index.codes[b] = io::read_u64(f);
    const auto [it, fresh] = index.lookup.try_emplace(index.codes[b], b);
    if (!fresh) throw ParseError("read_qvix: repeated code");
    const std::uint64_t count = io::read_u64(f);
    index.ids[b].resize(count);
    for (std::uint64_t i = 0; i < count; ++i) index.ids[b][i] = io::read_u64(f);
    total += count;
  }
  if (total != n) throw ParseError("read_qvix: id count does not match n");
  index.n = n;
  return index;
}

std::uint64_t memory_report(const InvertedIndex& index) {
  return 28 + 16 * std::uint64_t(index.m()) + 8 * index.n;
}

}  // namespace qvs
