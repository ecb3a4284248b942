#include "agmh/data_synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace agmh {

void SyntheticSpec::validate() const {
  if (num_classes < 1) throw ArgumentError("synthetic spec: num_classes must be positive");
  if (retrieval_per_class < 1 || query_per_class < 1) {
    throw ArgumentError("synthetic spec: per-class retrieval/query counts must be positive");
  }
  if (channels < 1 || height < 1 || width < 1) {
    throw ArgumentError("synthetic spec: feature extents must be positive");
  }
  if (num_attributes < 1 || num_attributes > height * width) {
    throw ArgumentError("synthetic spec: num_attributes must be in [1, H*W], got " +
                        std::to_string(num_attributes) + " for " + std::to_string(height) +
                        "x" + std::to_string(width));
  }
  if (!(subtlety > 0.0 && subtlety <= 1.0)) {
    throw ArgumentError("synthetic spec: subtlety must be in (0, 1]");
  }
  if (noise_sigma < 0.0) throw ArgumentError("synthetic spec: noise_sigma must be >= 0");
}

std::vector<std::size_t> FeatureSet::indices_of(Split s) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < splits.size(); ++i) {
    if (splits[i] == s) out.push_back(i);
  }
  return out;
}

std::size_t FeatureSet::index_of_id(std::uint64_t id) const {
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] == id) return i;
  }
  throw ArgumentError("item id " + std::to_string(id) + " not found");
}

void FeatureSet::validate() const {
  const std::size_t n = features.size();
  if (labels.size() != n || ids.size() != n || splits.size() != n) {
    throw ArgumentError("feature set: parallel arrays of unequal length");
  }
  for (const Tensor& f : features) {
    if (f.shape != std::vector<int>{channels, height, width}) {
      throw DimensionError("feature set: item shape " + shape_str(f.shape) +
                           " disagrees with header " +
                           shape_str({channels, height, width}));
    }
  }
}

FeatureSet generate(const SyntheticSpec& spec) {
  spec.validate();
  const Rng root(spec.seed);
  const int hw = spec.height * spec.width;

  // attribute sites, shared by all classes
  std::vector<int> positions(static_cast<std::size_t>(hw));
  std::iota(positions.begin(), positions.end(), 0);
  Rng site_rng = root.stream(1);
  for (int i = 0; i < spec.num_attributes; ++i) {
    const std::size_t j = static_cast<std::size_t>(i) +
                          site_rng.next_below(static_cast<std::uint64_t>(hw - i));
    std::swap(positions[static_cast<std::size_t>(i)], positions[j]);
  }
  const int n_shared =
      static_cast<int>(std::floor(spec.subtlety * spec.num_attributes + 0.5));

  // channel patterns: the first n_shared sites carry one pattern for every
  // class, the rest are class-specific
  auto draw_pattern = [&](Rng& rng) {
    std::vector<double> p(static_cast<std::size_t>(spec.channels));
    for (double& v : p) v = rng.next_gaussian();
    return p;
  };
  Rng shared_rng = root.stream(2);
  std::vector<std::vector<double>> shared_patterns;
  for (int s = 0; s < n_shared; ++s) shared_patterns.push_back(draw_pattern(shared_rng));

  FeatureSet fs;
  fs.channels = spec.channels;
  fs.height = spec.height;
  fs.width = spec.width;
  std::uint64_t next_id = 0;
  for (int c = 0; c < spec.num_classes; ++c) {
    Rng class_rng = root.stream(3, static_cast<std::uint64_t>(c));
    Tensor signature({spec.channels, spec.height, spec.width});
    for (int s = 0; s < spec.num_attributes; ++s) {
      const std::vector<double> pattern =
          s < n_shared ? shared_patterns[static_cast<std::size_t>(s)] : draw_pattern(class_rng);
      const int pos = positions[static_cast<std::size_t>(s)];
      for (int ch = 0; ch < spec.channels; ++ch) {
        signature.data[static_cast<std::size_t>(ch) * static_cast<std::size_t>(hw) +
                       static_cast<std::size_t>(pos)] = pattern[static_cast<std::size_t>(ch)];
      }
    }
    for (int j = 0; j < spec.per_class(); ++j) {
      Rng item_rng = root.stream(4, static_cast<std::uint64_t>(c), static_cast<std::uint64_t>(j));
      Tensor item = signature;
      for (double& v : item.data) v += spec.noise_sigma * item_rng.next_gaussian();
      fs.features.push_back(std::move(item));
      fs.labels.push_back(static_cast<std::uint32_t>(c));
      fs.ids.push_back(next_id++);
      fs.splits.push_back(j < spec.query_per_class ? Split::Query : Split::Retrieval);
    }
  }
  return fs;
}

SimilarityMatrix similarity_matrix(std::span<const std::uint32_t> labels_q,
                                   std::span<const std::uint32_t> labels_db) {
  if (labels_q.empty() || labels_db.empty()) {
    throw ArgumentError("similarity_matrix: empty label list");
  }
  SimilarityMatrix s;
  s.rows = labels_q.size();
  s.cols = labels_db.size();
  s.data.resize(s.rows * s.cols);
  for (std::size_t r = 0; r < s.rows; ++r) {
    for (std::size_t c = 0; c < s.cols; ++c) {
      s.data[r * s.cols + c] = labels_q[r] == labels_db[c] ? 1 : -1;
    }
  }
  return s;
}

}  // namespace agmh
