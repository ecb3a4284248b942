#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "agmh/errors.hpp"
#include "agmh/tensor.hpp"

namespace agmh {

/// Bit-packed ±1 code: bit j of word j/64 is set iff coordinate j is +1;
/// bits at or beyond nbits stay zero.
struct PackedCode {
  std::vector<std::uint64_t> words;
  std::uint32_t nbits = 0;
};

PackedCode pack(std::span<const std::int8_t> u);
std::vector<std::int8_t> unpack(const PackedCode& c);

/// Differing-bit count via word-wise XOR and popcount.
int hamming(const PackedCode& a, const PackedCode& b);

struct CodeDatabase {
  std::uint32_t nbits = 0;
  std::vector<PackedCode> codes;
  std::vector<std::uint64_t> ids;
  std::vector<std::uint32_t> labels;

  std::size_t size() const { return codes.size(); }
  void validate() const;
};

/// Database indices by ascending Hamming distance; ties broken by
/// ascending index.
std::vector<std::size_t> rank(const PackedCode& query, const CodeDatabase& db);

struct QueryCode {
  PackedCode code;
  std::uint64_t id = 0;
  std::uint32_t label = 0;
};

/// Full-ranking mAP with same-label relevance. Database entries whose id
/// equals the query id are dropped from the ranking; every query must keep
/// at least one relevant item.
double mean_average_precision(std::span<const QueryCode> queries, const CodeDatabase& db);

struct BenchRow {
  int batch_size = 0;
  double ms_per_image = 0.0;
};

/// Encode-and-rank wall time per image at batch sizes {1, 4, 16, 64}.
/// Numbers are machine-dependent and informational.
std::vector<BenchRow> bench(const CodeDatabase& db, std::span<const Tensor> queries,
                            const std::function<PackedCode(const Tensor&)>& encoder,
                            int repeats);

}  // namespace agmh
