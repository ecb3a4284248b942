#include "agmh/hash_learner.hpp"

#include <cmath>
#include <numeric>
#include <utility>

#include "agmh/tensor_ops.hpp"

namespace agmh {

HashModel HashModel::init(int bits, int dim, Rng& rng) {
  if (bits < 1) throw ArgumentError("hash model: bits must be >= 1");
  if (dim < 1) throw ArgumentError("hash model: feature dimension must be >= 1");
  HashModel m;
  m.bits = bits;
  m.weight = Tensor({bits, dim});
  const double sd = std::sqrt(2.0 / static_cast<double>(dim));
  for (double& v : m.weight.data) v = sd * rng.next_gaussian();
  return m;
}

Tensor encode_logits(const Tensor& x, const HashModel& m) { return matmul(m.weight, x); }

Tensor encode_relaxed(const Tensor& x, const HashModel& m) {
  return tanh(matmul(m.weight, x));
}

std::vector<std::int8_t> encode_binary(const Tensor& x, const HashModel& m) {
  const Tensor v = matmul(m.weight, x);
  std::vector<std::int8_t> u(v.size());
  for (std::size_t j = 0; j < v.size(); ++j) u[j] = v[j] >= 0.0 ? 1 : -1;
  return u;
}

Tape::NodeId encode_relaxed(Tape& t, Tape::NodeId x, Tape::NodeId w) {
  return t.tanh(t.matmul(w, x));
}

Tape::NodeId hash_loss(Tape& t, Tape::NodeId u_relaxed, Tape::NodeId z,
                       std::span<const std::int8_t> s_row, double alpha) {
  const Tensor& zv = t.value(z);
  if (zv.rank() != 2) {
    throw DimensionError("hash_loss: database codes must be m x l, got " + shape_str(zv.shape));
  }
  const int m = zv.extent(0), l = zv.extent(1);
  const Tensor& uv = t.value(u_relaxed);
  if (uv.rank() != 1 || uv.extent(0) != l) {
    throw DimensionError("hash_loss: relaxed code shape " + shape_str(uv.shape) +
                         " vs database codes " + shape_str(zv.shape));
  }
  if (static_cast<int>(s_row.size()) != m) {
    throw DimensionError("hash_loss: similarity row length " + std::to_string(s_row.size()) +
                         " vs database size " + std::to_string(m));
  }
  // sign(u~) enters as a constant leaf so the quantization penalty pulls u~
  // toward its own binarization
  Tensor u_sign({l});
  for (int j = 0; j < l; ++j) {
    u_sign[static_cast<std::size_t>(j)] = uv[static_cast<std::size_t>(j)] >= 0.0 ? 1.0 : -1.0;
  }
  Tensor target({m});
  for (int i = 0; i < m; ++i) {
    target[static_cast<std::size_t>(i)] = static_cast<double>(l) * s_row[static_cast<std::size_t>(i)];
  }
  auto diff = t.subtract(t.matmul(z, u_relaxed), t.leaf(std::move(target)));
  auto similarity_term = t.inner_product(diff, diff);
  auto q = t.subtract(u_relaxed, t.leaf(std::move(u_sign)));
  return t.add(similarity_term, t.scale(t.inner_product(q, q), alpha));
}

Tape::NodeId query_loss(Tape& t, Tape::NodeId input, const HeadNodes& head,
                        Tape::NodeId w, Tape::NodeId z,
                        std::span<const std::int8_t> s_row, const LossSettings& s) {
  const std::vector<Tape::NodeId> fs = forward_descriptors(t, input, head);
  auto x = pool_concat(t, fs);
  auto u = encode_relaxed(t, x, w);
  auto loss = hash_loss(t, u, z, s_row, s.alpha);
  if (s.adl_enabled && s.beta != 0.0) {
    std::vector<Tape::NodeId> fused;
    fused.reserve(fs.size());
    for (std::size_t i = 0; i < fs.size(); ++i) {
      const DescriptorNodes& d = head.descriptors[i];
      fused.push_back(s.siea_enabled ? fuse_skip(t, fs[i], siea_forward(t, fs[i], d), d)
                                     : fs[i]);
    }
    loss = t.add(loss, t.scale(adl_loss(t, fused, s.adl_denominator), s.beta));
  }
  return loss;
}

Tape::NodeId total_loss(Tape& t, std::span<const Tensor> batch, const HeadNodes& head,
                        Tape::NodeId w, Tape::NodeId z,
                        std::span<const std::span<const std::int8_t>> s_rows,
                        const LossSettings& s) {
  if (batch.empty()) throw ArgumentError("total_loss: empty batch");
  if (batch.size() != s_rows.size()) {
    throw DimensionError("total_loss: batch size " + std::to_string(batch.size()) +
                         " vs similarity rows " + std::to_string(s_rows.size()));
  }
  Tape::NodeId acc = 0;
  for (std::size_t r = 0; r < batch.size(); ++r) {
    auto lr = query_loss(t, t.leaf(batch[r]), head, w, z, s_rows[r], s);
    acc = r == 0 ? lr : t.add(acc, lr);
  }
  return acc;
}

std::vector<std::vector<std::int8_t>> update_database_codes(std::span<const Tensor> pooled,
                                                            const HashModel& m) {
  std::vector<std::vector<std::int8_t>> z;
  z.reserve(pooled.size());
  for (const Tensor& x : pooled) z.push_back(encode_binary(x, m));
  return z;
}

Tensor codes_to_tensor(const std::vector<std::vector<std::int8_t>>& codes) {
  if (codes.empty()) throw ArgumentError("codes_to_tensor: empty code list");
  const int m = static_cast<int>(codes.size());
  const int l = static_cast<int>(codes[0].size());
  Tensor z({m, l});
  for (int i = 0; i < m; ++i) {
    if (static_cast<int>(codes[static_cast<std::size_t>(i)].size()) != l) {
      throw DimensionError("codes_to_tensor: ragged code lengths");
    }
    for (int j = 0; j < l; ++j) {
      z(i, j) = static_cast<double>(codes[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
    }
  }
  return z;
}

TrainConfig TrainConfig::desk() { return TrainConfig{}; }

TrainConfig TrainConfig::paper() {
  TrainConfig c;
  c.descriptors = 6;
  c.channels = 512;
  c.memory_units = 4;
  c.slots = 128;
  c.bits = 48;
  c.alpha = 1.0;
  c.beta = 0.5;
  c.outer_iterations = 40;
  c.epochs_per_iteration = 30;
  c.batch_size = 64;
  c.query_sample_size = 2000;
  c.lr = 0.001;
  c.lr_drop_at = 40;
  c.lr_drop_factor = 10.0;
  return c;
}

void TrainConfig::validate(std::size_t database_size) const {
  if (descriptors < 2) throw ArgumentError("train config: k must be >= 2");
  if (channels < 1 || memory_units < 1 || slots < 1) {
    throw ArgumentError("train config: architecture sizes must be positive");
  }
  if (bits < 1) throw ArgumentError("train config: bits must be positive");
  if (alpha < 0.0 || beta < 0.0) throw ArgumentError("train config: alpha and beta must be >= 0");
  if (outer_iterations < 1 || epochs_per_iteration < 1 || batch_size < 1 ||
      query_sample_size < 1) {
    throw ArgumentError("train config: schedule fields must be positive");
  }
  if (static_cast<std::size_t>(query_sample_size) > database_size) {
    throw ArgumentError("train config: query_sample_size " + std::to_string(query_sample_size) +
                        " exceeds database size " + std::to_string(database_size));
  }
  if (lr <= 0.0 || lr_drop_at < 1 || lr_drop_factor <= 0.0) {
    throw ArgumentError("train config: learning-rate schedule fields must be positive");
  }
}

LossSettings TrainConfig::loss_settings() const {
  return {alpha, beta, adl_enabled, siea_enabled, adl_denominator};
}

namespace {

std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, Rng rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.next_below(n - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

void shuffle(std::vector<std::size_t>& v, Rng rng) {
  for (std::size_t i = 0; i + 1 < v.size(); ++i) {
    const std::size_t j = i + rng.next_below(v.size() - i);
    std::swap(v[i], v[j]);
  }
}

void sgd_step(Tape& t, const HeadNodes& hn, Tape::NodeId w_node,
              AttributeHeadParams& head, HashModel& model, double lr) {
  for (std::size_t i = 0; i < head.descriptors.size(); ++i) {
    std::vector<Tensor*> tensors;
    visit_descriptor_fields(head.descriptors[i], [&](Tensor& v) { tensors.push_back(&v); });
    std::vector<Tape::NodeId> ids;
    visit_descriptor_fields(hn.descriptors[i], [&](const Tape::NodeId& id) { ids.push_back(id); });
    for (std::size_t f = 0; f < tensors.size(); ++f) {
      const Tensor& g = t.grad(ids[f]);
      for (std::size_t e = 0; e < g.size(); ++e) tensors[f]->data[e] -= lr * g[e];
    }
  }
  const Tensor& gw = t.grad(w_node);
  for (std::size_t e = 0; e < gw.size(); ++e) model.weight[e] -= lr * gw[e];
}

}  // namespace

TrainResult train(const FeatureSet& data, const TrainConfig& cfg) {
  data.validate();
  if (data.size() == 0) throw ArgumentError("train: empty dataset");
  const std::vector<std::size_t> gamma = data.indices_of(Split::Retrieval);
  if (gamma.empty()) throw ArgumentError("train: dataset has no retrieval items");
  cfg.validate(gamma.size());

  const Rng root(cfg.seed);
  Rng init_rng = root.stream(0);
  AttributeHeadParams head = AttributeHeadParams::init(
      cfg.descriptors, data.channels, cfg.channels, cfg.memory_units, cfg.slots, init_rng);
  HashModel model = HashModel::init(cfg.bits, cfg.descriptors * cfg.channels, init_rng);

  std::vector<std::uint32_t> gamma_labels;
  gamma_labels.reserve(gamma.size());
  for (std::size_t idx : gamma) gamma_labels.push_back(data.labels[idx]);

  const auto pool_database = [&]() {
    std::vector<Tensor> xs;
    xs.reserve(gamma.size());
    for (std::size_t idx : gamma) xs.push_back(pooled_features(data.features[idx], head));
    return xs;
  };

  // database codes start as balanced random ±1; a sign(Wx) start inherits
  // the common mode of the pooled features and collapses the pairwise loss
  std::vector<std::vector<std::int8_t>> z(gamma.size(),
                                          std::vector<std::int8_t>(static_cast<std::size_t>(cfg.bits)));
  {
    Rng code_rng = root.stream(3);
    for (auto& row : z) {
      for (auto& bit : row) bit = code_rng.next_u64() >> 63 ? 1 : -1;
    }
  }

  const LossSettings settings = cfg.loss_settings();
  TrainResult result;
  for (int it = 1; it <= cfg.outer_iterations; ++it) {
    const double lr = it >= cfg.lr_drop_at ? cfg.lr / cfg.lr_drop_factor : cfg.lr;
    const std::vector<std::size_t> omega = sample_without_replacement(
        gamma.size(), static_cast<std::size_t>(cfg.query_sample_size),
        root.stream(1, static_cast<std::uint64_t>(it)));
    std::vector<std::uint32_t> omega_labels;
    omega_labels.reserve(omega.size());
    for (std::size_t o : omega) omega_labels.push_back(gamma_labels[o]);
    const SimilarityMatrix sim = similarity_matrix(omega_labels, gamma_labels);
    const Tensor z_tensor = codes_to_tensor(z);

    for (int epoch = 1; epoch <= cfg.epochs_per_iteration; ++epoch) {
      std::vector<std::size_t> order(omega.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      shuffle(order, root.stream(2, static_cast<std::uint64_t>(it),
                                 static_cast<std::uint64_t>(epoch)));
      double loss_sum = 0.0;
      for (std::size_t start = 0; start < order.size();
           start += static_cast<std::size_t>(cfg.batch_size)) {
        const std::size_t stop =
            std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
        std::vector<Tensor> batch;
        std::vector<std::span<const std::int8_t>> rows;
        batch.reserve(stop - start);
        rows.reserve(stop - start);
        for (std::size_t b = start; b < stop; ++b) {
          const std::size_t omega_pos = order[b];
          batch.push_back(data.features[gamma[omega[omega_pos]]]);
          rows.push_back(sim.row(omega_pos));
        }
        Tape tape;
        const HeadNodes hn = insert_head_params(tape, head);
        const Tape::NodeId w_node = tape.leaf(model.weight);
        const Tape::NodeId z_node = tape.leaf(z_tensor);
        const Tape::NodeId loss = total_loss(tape, batch, hn, w_node, z_node, rows, settings);
        const double batch_loss = tape.value(loss)[0];
        if (!std::isfinite(batch_loss)) {
          throw TrainingDivergedError("training diverged at iteration " + std::to_string(it) +
                                      ", epoch " + std::to_string(epoch));
        }
        loss_sum += batch_loss;
        // mean over the batch so lr is batch-size independent
        const Tape::NodeId objective =
            tape.scale(loss, 1.0 / static_cast<double>(stop - start));
        tape.backward(objective);
        sgd_step(tape, hn, w_node, head, model, lr);
      }
      result.loss_trace.push_back(
          {it, epoch, loss_sum / static_cast<double>(omega.size())});
    }
    const std::vector<Tensor> xs = pool_database();
    z = update_database_codes(xs, model);
  }

  CodeDatabase db;
  db.nbits = static_cast<std::uint32_t>(cfg.bits);
  db.codes.reserve(gamma.size());
  for (std::size_t i = 0; i < gamma.size(); ++i) {
    db.codes.push_back(pack(z[i]));
    db.ids.push_back(data.ids[gamma[i]]);
    db.labels.push_back(data.labels[gamma[i]]);
  }
  result.head = std::move(head);
  result.model = std::move(model);
  result.codes = std::move(db);
  return result;
}

}  // namespace agmh
