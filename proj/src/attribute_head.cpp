#include "agmh/attribute_head.hpp"

#include <array>
#include <cmath>

#include "agmh/tensor_ops.hpp"

namespace agmh {

namespace {

Tensor gaussian_tensor(std::vector<int> shape, double sd, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.data) v = sd * rng.next_gaussian();
  return t;
}

double fan_in_sd(int fan_in) { return std::sqrt(2.0 / static_cast<double>(fan_in)); }

}  // namespace

AttributeHeadParams AttributeHeadParams::init(int k, int input_channels, int channels,
                                              int memory_units, int slots, Rng& rng) {
  AttributeHeadParams p;
  p.input_channels = input_channels;
  p.channels = channels;
  p.memory_units = memory_units;
  p.slots = slots;
  if (k < 2) throw ArgumentError("attribute head requires k >= 2 descriptors, got " + std::to_string(k));
  p.descriptors.resize(static_cast<std::size_t>(k));
  for (DescriptorParams& d : p.descriptors) {
    d.transform_w1 = gaussian_tensor({channels, input_channels}, fan_in_sd(input_channels), rng);
    d.transform_b1 = Tensor({channels});
    d.transform_w2 = gaussian_tensor({channels, channels}, fan_in_sd(channels), rng);
    d.transform_b2 = Tensor({channels});
    d.query_w = gaussian_tensor({channels, channels}, fan_in_sd(channels), rng);
    d.query_b = Tensor({channels});
    d.mem_keys.clear();
    for (int j = 0; j < memory_units; ++j) {
      d.mem_keys.push_back(gaussian_tensor({slots, channels}, fan_in_sd(channels), rng));
    }
    d.interact.clear();
    for (int j = 1; j < memory_units; ++j) {
      d.interact.push_back(gaussian_tensor({slots, 2 * slots}, fan_in_sd(2 * slots), rng));
    }
    d.mem_value = gaussian_tensor({slots, channels}, fan_in_sd(slots), rng);
    d.align_w = gaussian_tensor({channels, channels}, fan_in_sd(channels), rng);
    d.align_b = Tensor({channels});
  }
  p.validate();
  return p;
}

void AttributeHeadParams::validate() const {
  if (k() < 2) throw ArgumentError("attribute head requires k >= 2 descriptors, got " + std::to_string(k()));
  if (memory_units < 1) throw ArgumentError("attribute head requires d >= 1 memory units");
  if (slots < 1) throw ArgumentError("attribute head requires S >= 1 slots");
  if (channels < 1 || input_channels < 1) throw ArgumentError("attribute head requires positive channel extents");
  for (const DescriptorParams& d : descriptors) {
    if (d.mem_keys.size() != static_cast<std::size_t>(memory_units) ||
        d.interact.size() != static_cast<std::size_t>(memory_units - 1)) {
      throw ArgumentError("descriptor memory list sizes disagree with d = " +
                          std::to_string(memory_units));
    }
    bool finite = true;
    visit_descriptor_fields(d, [&](const Tensor& t) { finite = finite && t.all_finite(); });
    if (!finite) throw ArgumentError("non-finite descriptor parameter");
  }
}

void randomize_attention_params(AttributeHeadParams& p, Rng& rng) {
  for (DescriptorParams& d : p.descriptors) {
    d.query_w = gaussian_tensor({p.channels, p.channels}, fan_in_sd(p.channels), rng);
    d.query_b = gaussian_tensor({p.channels}, 1.0, rng);
    for (Tensor& m : d.mem_keys) m = gaussian_tensor({p.slots, p.channels}, fan_in_sd(p.channels), rng);
    for (Tensor& m : d.interact) m = gaussian_tensor({p.slots, 2 * p.slots}, fan_in_sd(2 * p.slots), rng);
    d.mem_value = gaussian_tensor({p.slots, p.channels}, fan_in_sd(p.slots), rng);
    d.align_w = gaussian_tensor({p.channels, p.channels}, fan_in_sd(p.channels), rng);
    d.align_b = gaussian_tensor({p.channels}, 1.0, rng);
  }
}

HeadNodes insert_head_params(Tape& t, const AttributeHeadParams& p) {
  HeadNodes nodes;
  nodes.descriptors.resize(p.descriptors.size());
  for (std::size_t i = 0; i < p.descriptors.size(); ++i) {
    DescriptorNodes& dn = nodes.descriptors[i];
    const DescriptorParams& dp = p.descriptors[i];
    dn.mem_keys.resize(dp.mem_keys.size());
    dn.interact.resize(dp.interact.size());
    std::vector<const Tensor*> tensors;
    visit_descriptor_fields(dp, [&](const Tensor& v) { tensors.push_back(&v); });
    std::vector<Tape::NodeId*> slots;
    visit_descriptor_fields(dn, [&](Tape::NodeId& id) { slots.push_back(&id); });
    for (std::size_t f = 0; f < tensors.size(); ++f) *slots[f] = t.leaf(*tensors[f]);
  }
  return nodes;
}

Tape::NodeId forward_descriptor(Tape& t, Tape::NodeId input, const DescriptorNodes& d) {
  auto h = t.relu(t.conv1x1(input, d.transform_w1, d.transform_b1));
  return t.conv1x1(h, d.transform_w2, d.transform_b2);
}

std::vector<Tape::NodeId> forward_descriptors(Tape& t, Tape::NodeId input,
                                              const HeadNodes& head) {
  std::vector<Tape::NodeId> out;
  out.reserve(head.descriptors.size());
  for (const DescriptorNodes& d : head.descriptors) out.push_back(forward_descriptor(t, input, d));
  return out;
}

Tape::NodeId siea_forward(Tape& t, Tape::NodeId f, const DescriptorNodes& d,
                          SieaNodeTrace* trace) {
  const Tensor& fv = t.value(f);
  if (fv.rank() != 3) throw DimensionError("siea_forward: descriptor must be C'xHxW, got " + shape_str(fv.shape));
  const int c = fv.extent(0), h = fv.extent(1), w = fv.extent(2);
  const int n = h * w;
  auto q = t.transpose2d(t.reshape(t.conv1x1(f, d.query_w, d.query_b), {c, n}));  // NxC'
  Tape::NodeId stacked = 0;
  for (std::size_t j = 0; j < d.mem_keys.size(); ++j) {
    auto g = t.matmul(q, t.transpose2d(d.mem_keys[j]));  // NxS
    if (j == 0) {
      stacked = g;
    } else {
      const std::array<Tape::NodeId, 2> parts{stacked, g};
      stacked = t.matmul(t.concat_channels(parts), t.transpose2d(d.interact[j - 1]));
    }
  }
  auto softmaxed = t.softmax_axis(stacked, 0);
  auto normalized = t.l1_normalize_axis(softmaxed, 1);
  if (trace) *trace = {stacked, softmaxed, normalized};
  return t.reshape(t.transpose2d(t.matmul(normalized, d.mem_value)), {c, h, w});
}

Tape::NodeId fuse_skip(Tape& t, Tape::NodeId f, Tape::NodeId f_hat,
                       const DescriptorNodes& d) {
  return t.relu(t.add(f, t.conv1x1(f_hat, d.align_w, d.align_b)));
}

Tape::NodeId attention_distribution(Tape& t, Tape::NodeId fused) {
  const Tensor& v = t.value(fused);
  const int h = v.extent(1), w = v.extent(2);
  auto flat = t.reshape(t.max_channel(fused), {h * w});
  return t.reshape(t.softmax_axis(flat, 0), {h, w});
}

Tape::NodeId adl_loss(Tape& t, std::span<const Tape::NodeId> fused,
                      AdlDenominator denominator) {
  const int k = static_cast<int>(fused.size());
  if (k < 2) throw ArgumentError("adl_loss requires k >= 2 maps, got " + std::to_string(k));
  std::vector<Tape::NodeId> dists;
  dists.reserve(fused.size());
  for (Tape::NodeId f : fused) dists.push_back(attention_distribution(t, f));
  Tape::NodeId acc = 0;
  bool first = true;
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      auto ip = t.inner_product(dists[static_cast<std::size_t>(i)],
                                dists[static_cast<std::size_t>(j)]);
      acc = first ? ip : t.add(acc, ip);
      first = false;
    }
  }
  const double denom = denominator == AdlDenominator::Paper
                           ? static_cast<double>(k) * (k + 1) / 2.0
                           : static_cast<double>(k) * (k - 1) / 2.0;
  return t.scale(acc, 1.0 / denom);
}

Tape::NodeId pool_concat(Tape& t, std::span<const Tape::NodeId> descriptors) {
  std::vector<Tape::NodeId> means;
  means.reserve(descriptors.size());
  for (Tape::NodeId f : descriptors) means.push_back(t.mean_spatial(f));
  return t.concat_channels(means);
}

Tensor descriptor_forward(const Tensor& input, const DescriptorParams& d) {
  return conv1x1(relu(conv1x1(input, d.transform_w1, d.transform_b1)), d.transform_w2,
                 d.transform_b2);
}

Tensor siea_forward(const Tensor& f, const DescriptorParams& d, SieaTrace* trace) {
  if (f.rank() != 3) throw DimensionError("siea_forward: descriptor must be C'xHxW, got " + shape_str(f.shape));
  const int c = f.extent(0), h = f.extent(1), w = f.extent(2);
  const int n = h * w;
  Tensor q = transpose2d(reshape(conv1x1(f, d.query_w, d.query_b), {c, n}));
  Tensor stacked;
  for (std::size_t j = 0; j < d.mem_keys.size(); ++j) {
    Tensor g = matmul(q, transpose2d(d.mem_keys[j]));
    if (j == 0) {
      stacked = std::move(g);
    } else {
      stacked = matmul(concat_channels({&stacked, &g}), transpose2d(d.interact[j - 1]));
    }
  }
  Tensor softmaxed = softmax_axis(stacked, 0);
  Tensor normalized = l1_normalize_axis(softmaxed, 1);
  Tensor out = reshape(transpose2d(matmul(normalized, d.mem_value)), {c, h, w});
  if (trace) *trace = {std::move(stacked), std::move(softmaxed), std::move(normalized)};
  return out;
}

Tensor fuse_skip(const Tensor& f, const Tensor& f_hat, const DescriptorParams& d) {
  return relu(add(f, conv1x1(f_hat, d.align_w, d.align_b)));
}

Tensor attention_distribution(const Tensor& fused) {
  const int h = fused.extent(1), w = fused.extent(2);
  return reshape(softmax_axis(reshape(max_channel(fused), {h * w}), 0), {h, w});
}

Tensor pooled_features(const Tensor& input, const AttributeHeadParams& p) {
  std::vector<Tensor> means;
  means.reserve(p.descriptors.size());
  for (const DescriptorParams& d : p.descriptors) {
    means.push_back(mean_spatial(descriptor_forward(input, d)));
  }
  std::vector<const Tensor*> views;
  views.reserve(means.size());
  for (const Tensor& m : means) views.push_back(&m);
  return concat_channels(views);
}

HeadOutputs head_forward(const Tensor& input, const AttributeHeadParams& p, bool use_siea) {
  HeadOutputs out;
  for (const DescriptorParams& d : p.descriptors) {
    Tensor f = descriptor_forward(input, d);
    Tensor fused = use_siea ? fuse_skip(f, siea_forward(f, d), d) : f;
    out.aggregation_dists.push_back(attention_distribution(fused));
    out.attentive.push_back(std::move(fused));
    out.descriptors.push_back(std::move(f));
  }
  std::vector<const Tensor*> means_views;
  std::vector<Tensor> means;
  means.reserve(out.descriptors.size());
  for (const Tensor& f : out.descriptors) means.push_back(mean_spatial(f));
  for (const Tensor& m : means) means_views.push_back(&m);
  out.pooled = concat_channels(means_views);
  return out;
}

}  // namespace agmh
