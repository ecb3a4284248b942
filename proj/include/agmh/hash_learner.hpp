#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "agmh/attribute_head.hpp"
#include "agmh/data_synth.hpp"
#include "agmh/retrieval.hpp"

namespace agmh {

/// Linear hash encoder: l x kC' projection followed by sign (binary) or
/// tanh (relaxed, used during optimization).
struct HashModel {
  Tensor weight;
  int bits = 0;

  static HashModel init(int bits, int dim, Rng& rng);
};

Tensor encode_logits(const Tensor& x, const HashModel& m);   // Wx
Tensor encode_relaxed(const Tensor& x, const HashModel& m);  // tanh(Wx)

/// sign(Wx) with sign(0) = +1.
std::vector<std::int8_t> encode_binary(const Tensor& x, const HashModel& m);

Tape::NodeId encode_relaxed(Tape& t, Tape::NodeId x, Tape::NodeId w);

/// Pairwise loss of one relaxed code against the whole database:
/// sum_t (<u~, z_t> - l*S_t)^2 + alpha*|u~ - sign(u~)|^2, with sign(u~)
/// held constant during differentiation. `z` is the m x l ±1 code matrix.
Tape::NodeId hash_loss(Tape& t, Tape::NodeId u_relaxed, Tape::NodeId z,
                       std::span<const std::int8_t> s_row, double alpha);

struct LossSettings {
  double alpha = 1.0;
  double beta = 0.5;
  bool adl_enabled = true;
  bool siea_enabled = true;
  AdlDenominator adl_denominator = AdlDenominator::Paper;
};

/// hash_loss(r) + beta*adl_loss(r) for one query feature map.
Tape::NodeId query_loss(Tape& t, Tape::NodeId input, const HeadNodes& head,
                        Tape::NodeId w, Tape::NodeId z,
                        std::span<const std::int8_t> s_row, const LossSettings& s);

/// Sum of query_loss over the batch.
Tape::NodeId total_loss(Tape& t, std::span<const Tensor> batch, const HeadNodes& head,
                        Tape::NodeId w, Tape::NodeId z,
                        std::span<const std::span<const std::int8_t>> s_rows,
                        const LossSettings& s);

/// sign(W x_t) for every database item.
std::vector<std::vector<std::int8_t>> update_database_codes(std::span<const Tensor> pooled,
                                                            const HashModel& m);

/// ±1 rows of `codes` as an m x l tensor for use on a tape.
Tensor codes_to_tensor(const std::vector<std::vector<std::int8_t>>& codes);

struct TrainConfig {
  int descriptors = 3;   // k
  int channels = 16;     // C'
  int memory_units = 2;  // d
  int slots = 8;         // S
  int bits = 24;         // l
  double alpha = 1.0;
  double beta = 0.5;
  int outer_iterations = 10;
  int epochs_per_iteration = 10;
  int batch_size = 64;
  int query_sample_size = 128;
  double lr = 2e-5;
  int lr_drop_at = 40;
  double lr_drop_factor = 10.0;
  std::uint64_t seed = 1;
  bool adl_enabled = true;
  bool siea_enabled = true;
  AdlDenominator adl_denominator = AdlDenominator::Paper;

  static TrainConfig desk();
  static TrainConfig paper();
  void validate(std::size_t database_size) const;
  LossSettings loss_settings() const;
};

struct TrainResult {
  AttributeHeadParams head;
  HashModel model;
  CodeDatabase codes;  // over the retrieval split

  struct TracePoint {
    int iteration = 0;
    int epoch = 0;
    double mean_loss = 0.0;
  };
  std::vector<TracePoint> loss_trace;
};

/// Alternating optimization: per outer iteration, sample a query set from
/// the retrieval split, build the pairwise similarity, run mini-batch SGD
/// epochs on total_loss with the database codes fixed, then recompute all
/// database codes from the updated model.
TrainResult train(const FeatureSet& data, const TrainConfig& cfg);

}  // namespace agmh
