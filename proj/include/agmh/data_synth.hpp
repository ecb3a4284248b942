#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "agmh/rng.hpp"
#include "agmh/tensor.hpp"

namespace agmh {

enum class Split : std::uint8_t { Retrieval = 0, Query = 1 };

/// Recipe for a synthetic fine-grained feature set. Each class plants
/// channel-pattern vectors at `num_attributes` spatial sites; a `subtlety`
/// fraction of the sites share one pattern across all classes, so only the
/// rest discriminate. Items are the class signature plus Gaussian noise.
struct SyntheticSpec {
  int num_classes = 8;
  int retrieval_per_class = 32;
  int query_per_class = 8;
  int channels = 16, height = 8, width = 8;
  int num_attributes = 8;
  double subtlety = 0.5;
  double noise_sigma = 0.3;
  std::uint64_t seed = 1;

  int per_class() const { return retrieval_per_class + query_per_class; }
  void validate() const;
};

struct FeatureSet {
  int channels = 0, height = 0, width = 0;
  std::vector<Tensor> features;
  std::vector<std::uint32_t> labels;
  std::vector<std::uint64_t> ids;
  std::vector<Split> splits;

  std::size_t size() const { return features.size(); }
  std::vector<std::size_t> indices_of(Split s) const;
  std::size_t index_of_id(std::uint64_t id) const;  // throws ArgumentError when absent
  void validate() const;
};

/// Pure function of the spec (seed included).
FeatureSet generate(const SyntheticSpec& spec);

/// +1 where labels match, -1 otherwise.
struct SimilarityMatrix {
  std::size_t rows = 0, cols = 0;
  std::vector<std::int8_t> data;

  std::int8_t at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const std::int8_t> row(std::size_t r) const {
    return {data.data() + r * cols, cols};
  }
};

SimilarityMatrix similarity_matrix(std::span<const std::uint32_t> labels_q,
                                   std::span<const std::uint32_t> labels_db);

}  // namespace agmh
