#pragma once

#include <span>
#include <vector>

#include "agmh/rng.hpp"
#include "agmh/tape.hpp"
#include "agmh/tensor.hpp"

namespace agmh {

/// Parameters of one attribute-descriptor branch: the two-layer 1x1-conv
/// transform, the attention query projection, the external key/interaction/
/// value memories, and the skip-alignment conv. Only the transform is on
/// the encoding path; everything else serves attention learning.
struct DescriptorParams {
  Tensor transform_w1, transform_b1;  // C'xC, C'
  Tensor transform_w2, transform_b2;  // C'xC', C'
  Tensor query_w, query_b;            // C'xC', C'
  std::vector<Tensor> mem_keys;       // d of SxC'
  std::vector<Tensor> interact;       // d-1 of Sx2S
  Tensor mem_value;                   // SxC'
  Tensor align_w, align_b;            // C'xC', C'
};

struct AttributeHeadParams {
  int input_channels = 0;  // C
  int channels = 0;        // C'
  int memory_units = 0;    // d
  int slots = 0;           // S
  std::vector<DescriptorParams> descriptors;

  int k() const { return static_cast<int>(descriptors.size()); }

  /// Conv weights and memories from N(0, 2/fan_in); biases zero. Requires
  /// k >= 2, d >= 1, S >= 1, C' >= 1.
  static AttributeHeadParams init(int k, int input_channels, int channels,
                                  int memory_units, int slots, Rng& rng);
  void validate() const;
};

/// Resamples every attention-side parameter (query projection, key/value/
/// interaction memories, skip alignment, and their biases). The encoding
/// path must be unaffected.
void randomize_attention_params(AttributeHeadParams& p, Rng& rng);

/// Field order shared by tape insertion, SGD updates and checkpoint
/// serialization. Works for DescriptorParams and DescriptorNodes alike.
template <class D, class Fn>
void visit_descriptor_fields(D& d, Fn&& fn) {
  fn(d.transform_w1);
  fn(d.transform_b1);
  fn(d.transform_w2);
  fn(d.transform_b2);
  fn(d.query_w);
  fn(d.query_b);
  for (auto& m : d.mem_keys) fn(m);
  for (auto& m : d.interact) fn(m);
  fn(d.mem_value);
  fn(d.align_w);
  fn(d.align_b);
}

struct DescriptorNodes {
  Tape::NodeId transform_w1{}, transform_b1{}, transform_w2{}, transform_b2{};
  Tape::NodeId query_w{}, query_b{};
  std::vector<Tape::NodeId> mem_keys, interact;
  Tape::NodeId mem_value{}, align_w{}, align_b{};
};

struct HeadNodes {
  std::vector<DescriptorNodes> descriptors;
};

HeadNodes insert_head_params(Tape& t, const AttributeHeadParams& p);

enum class AdlDenominator { Paper, Pairs };

/// F_i = conv1x1(relu(conv1x1(input))) for one descriptor.
Tape::NodeId forward_descriptor(Tape& t, Tape::NodeId input, const DescriptorNodes& d);
std::vector<Tape::NodeId> forward_descriptors(Tape& t, Tape::NodeId input,
                                              const HeadNodes& head);

struct SieaNodeTrace {
  Tape::NodeId stacked{};     // P^d, NxS
  Tape::NodeId softmaxed{};   // softmax over N per slot
  Tape::NodeId normalized{};  // L1 over slots per position
};

/// Stepwise interactive external attention over one descriptor map:
/// query projection, d key-memory maps fused pairwise through interaction
/// units, double normalization, value-memory readout.
Tape::NodeId siea_forward(Tape& t, Tape::NodeId f, const DescriptorNodes& d,
                          SieaNodeTrace* trace = nullptr);

/// relu(f + align(f_hat))
Tape::NodeId fuse_skip(Tape& t, Tape::NodeId f, Tape::NodeId f_hat,
                       const DescriptorNodes& d);

/// Softmax over all spatial positions of the per-position channel maximum.
Tape::NodeId attention_distribution(Tape& t, Tape::NodeId fused);

/// Mean inner product of the attention distributions over descriptor pairs
/// i < j, divided by k(k+1)/2 (Paper) or by the pair count (Pairs).
Tape::NodeId adl_loss(Tape& t, std::span<const Tape::NodeId> fused,
                      AdlDenominator denominator);

/// Concatenated spatial means of the descriptors; the encoding path.
Tape::NodeId pool_concat(Tape& t, std::span<const Tape::NodeId> descriptors);

// Plain (no-tape) forward path, sharing the same kernels bit for bit.
Tensor descriptor_forward(const Tensor& input, const DescriptorParams& d);

struct SieaTrace {
  Tensor stacked, softmaxed, normalized;
};

Tensor siea_forward(const Tensor& f, const DescriptorParams& d, SieaTrace* trace = nullptr);
Tensor fuse_skip(const Tensor& f, const Tensor& f_hat, const DescriptorParams& d);
Tensor attention_distribution(const Tensor& fused);
Tensor pooled_features(const Tensor& input, const AttributeHeadParams& p);

struct HeadOutputs {
  std::vector<Tensor> descriptors;        // F_i
  std::vector<Tensor> attentive;          // fused maps (F_i itself when SIEA is off)
  std::vector<Tensor> aggregation_dists;  // HxW distributions, each sums to 1
  Tensor pooled;                          // x, length k*C'
};

HeadOutputs head_forward(const Tensor& input, const AttributeHeadParams& p, bool use_siea);

}  // namespace agmh
