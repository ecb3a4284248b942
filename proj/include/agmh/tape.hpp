#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "agmh/tensor.hpp"

namespace agmh {

enum class OpKind {
  Leaf,
  Add,
  Subtract,
  Scale,
  Relu,
  Tanh,
  Matmul,
  Conv1x1,
  SoftmaxAxis,
  L1NormalizeAxis,
  MeanSpatial,
  MaxChannel,
  SumAll,
  InnerProduct,
  ConcatChannels,
  Transpose2d,
  Reshape,
};

/// Reverse-mode tape. Each operation records the data its backward rule
/// needs; backward() replays the records in reverse execution order exactly
/// once, summing contributions into the gradient of every consumed node.
/// Single-threaded; values are immutable once produced.
class Tape {
 public:
  using NodeId = std::uint32_t;

  NodeId leaf(Tensor value);

  NodeId add(NodeId a, NodeId b);
  NodeId subtract(NodeId a, NodeId b);
  NodeId scale(NodeId a, double c);
  NodeId relu(NodeId a);
  NodeId tanh(NodeId a);
  NodeId matmul(NodeId a, NodeId b);
  NodeId conv1x1(NodeId x, NodeId w, NodeId b);
  NodeId softmax_axis(NodeId x, int axis);
  NodeId l1_normalize_axis(NodeId x, int axis);
  NodeId mean_spatial(NodeId x);
  NodeId max_channel(NodeId x);
  NodeId sum_all(NodeId x);
  NodeId inner_product(NodeId a, NodeId b);
  NodeId concat_channels(std::span<const NodeId> parts);
  NodeId transpose2d(NodeId a);
  NodeId reshape(NodeId a, std::vector<int> shape);

  const Tensor& value(NodeId id) const { return nodes_[id].value; }
  const Tensor& grad(NodeId id) const { return nodes_[id].grad; }
  OpKind kind(NodeId id) const { return nodes_[id].kind; }
  const std::vector<NodeId>& inputs(NodeId id) const { return nodes_[id].inputs; }
  std::size_t size() const { return nodes_.size(); }

  /// Zeroes all gradients, seeds d(root)/d(root) = 1, then accumulates
  /// d(root)/d(node) for every node. `root` must be scalar.
  void backward(NodeId root);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    OpKind kind;
    std::vector<NodeId> inputs;
    std::function<void(Tape&, NodeId)> back;
  };

  NodeId push(Tensor value, OpKind kind, std::vector<NodeId> inputs,
              std::function<void(Tape&, NodeId)> back);

  // deque keeps value()/grad() references stable while new nodes are pushed
  std::deque<Node> nodes_;
};

/// Smallest distance to a subgradient kink recorded on the tape: |input| for
/// relu nodes and the top-two channel gap for max_channel nodes. Returns
/// +inf when no such node exists. Finite-difference checks resample inputs
/// until this clears the step size.
double kink_clearance(const Tape& t);

}  // namespace agmh
