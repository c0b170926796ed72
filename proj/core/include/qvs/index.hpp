#ifndef QVS_INDEX_HPP
#define QVS_INDEX_HPP

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "qvs/bitstring.hpp"
#include "qvs/matrix.hpp"

namespace qvs {

// Inverted index from binary code to the row ids hashed to it.
// Buckets keep first-occurrence order; ids within a bucket are strictly
// increasing. Content is therefore invariant to input permutation up to
// bucket order.
struct InvertedIndex {
  std::uint32_t d_latent = 0;
  std::vector<std::uint64_t> codes;               // one per bucket
  std::vector<std::vector<std::uint64_t>> ids;    // one list per bucket
  std::unordered_map<std::uint64_t, std::size_t> lookup;  // code -> bucket
  std::uint64_t n = 0;

  std::size_t m() const { return codes.size(); }

  bool operator==(const InvertedIndex& o) const {
    return d_latent == o.d_latent && n == o.n && codes == o.codes && ids == o.ids;
  }
};

struct CodePair {
  std::uint64_t id;
  BitString code;
};

// Single pass over the stream. Duplicate ids are rejected.
InvertedIndex build_index(std::uint32_t d_latent, std::span<const CodePair> stream);

// Convenience: row position is the id.
InvertedIndex build_index(std::span<const BitString> codes);

// Permutation of all bucket positions, non-decreasing in Hamming distance
// to q; equal distances keep bucket insertion order. Counting sort, O(m).
std::vector<std::uint32_t> hamming_sorted_buckets(const InvertedIndex& index,
                                                  BitString q);

struct QueryConfig {
  std::size_t k = 100;
  std::size_t c_max = 0;  // comparison budget, must be >= k
};

struct QueryResult {
  std::vector<std::uint64_t> ids;   // ascending (distance, id)
  std::vector<double> distances;    // squared Euclidean
  std::size_t comparisons = 0;      // exactly min(c_max, n)
};

// Walks buckets in hamming_sorted_buckets order, refines candidates against
// the raw vectors, stops after exactly min(c_max, n) distance computations,
// and returns the k closest under the (distance, id) order. Fewer than k
// survive only when fewer candidates were visited.
QueryResult query_index(const InvertedIndex& index, const DenseMatrix& raw_data,
                        std::span<const real> q_raw, BitString q_code,
                        const QueryConfig& cfg);

// Index file: magic "QVIX", u32 version, u32 d_latent, u64 m, u64 n, then
// per bucket: u64 code, u64 count, count u64 ids. All little-endian.
void write_qvix(const std::string& path, const InvertedIndex& index);
InvertedIndex read_qvix(const std::string& path);

// Exact serialized byte count: 28-byte header + 16 m + 8 n.
std::uint64_t memory_report(const InvertedIndex& index);

}  // namespace qvs

#endif
