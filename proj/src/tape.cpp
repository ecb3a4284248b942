#include "agmh/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "agmh/tensor_ops.hpp"

namespace agmh {

Tape::NodeId Tape::push(Tensor value, OpKind kind, std::vector<NodeId> inputs,
                        std::function<void(Tape&, NodeId)> back) {
  Node n;
  n.grad = Tensor(value.shape);
  n.value = std::move(value);
  n.kind = kind;
  n.inputs = std::move(inputs);
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size() - 1);
}

Tape::NodeId Tape::leaf(Tensor value) {
  return push(std::move(value), OpKind::Leaf, {}, nullptr);
}

Tape::NodeId Tape::add(NodeId a, NodeId b) {
  Tensor out = agmh::add(nodes_[a].value, nodes_[b].value);
  return push(std::move(out), OpKind::Add, {a, b}, [](Tape& t, NodeId self) {
    const Node& n = t.nodes_[self];
    Tensor& da = t.nodes_[n.inputs[0]].grad;
    Tensor& db = t.nodes_[n.inputs[1]].grad;
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      da[i] += n.grad[i];
      db[i] += n.grad[i];
    }
  });
}

Tape::NodeId Tape::subtract(NodeId a, NodeId b) {
  Tensor out = agmh::subtract(nodes_[a].value, nodes_[b].value);
  return push(std::move(out), OpKind::Subtract, {a, b}, [](Tape& t, NodeId self) {
    const Node& n = t.nodes_[self];
    Tensor& da = t.nodes_[n.inputs[0]].grad;
    Tensor& db = t.nodes_[n.inputs[1]].grad;
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      da[i] += n.grad[i];
      db[i] -= n.grad[i];
    }
  });
}

Tape::NodeId Tape::scale(NodeId a, double c) {
  Tensor out = agmh::scale(nodes_[a].value, c);
  return push(std::move(out), OpKind::Scale, {a}, [c](Tape& t, NodeId self) {
    const Node& n = t.nodes_[self];
    Tensor& da = t.nodes_[n.inputs[0]].grad;
    for (std::size_t i = 0; i < n.grad.size(); ++i) da[i] += c * n.grad[i];
  });
}

Tape::NodeId Tape::relu(NodeId a) {
  Tensor out = agmh::relu(nodes_[a].value);
  // subgradient at exactly 0 is 0
  return push(std::move(out), OpKind::Relu, {a}, [](Tape& t, NodeId self) {
    const Node& n = t.nodes_[self];
    const Tensor& x = t.nodes_[n.inputs[0]].value;
    Tensor& da = t.nodes_[n.inputs[0]].grad;
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      if (x[i] > 0.0) da[i] += n.grad[i];
    }
  });
}

Tape::NodeId Tape::tanh(NodeId a) {
  Tensor out = agmh::tanh(nodes_[a].value);
  return push(std::move(out), OpKind::Tanh, {a}, [](Tape& t, NodeId self) {
    const Node& n = t.nodes_[self];
    Tensor& da = t.nodes_[n.inputs[0]].grad;
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      da[i] += n.grad[i] * (1.0 - n.value[i] * n.value[i]);
    }
  });
}

Tape::NodeId Tape::matmul(NodeId a, NodeId b) {
  Tensor out = agmh::matmul(nodes_[a].value, nodes_[b].value);
  return push(std::move(out), OpKind::Matmul, {a, b}, [](Tape& t, NodeId self) {
    const Node& n = t.nodes_[self];
    const Tensor& av = t.nodes_[n.inputs[0]].value;
    const Tensor& bv = t.nodes_[n.inputs[1]].value;
    Tensor& da = t.nodes_[n.inputs[0]].grad;
    Tensor& db = t.nodes_[n.inputs[1]].grad;
    const int m = av.extent(0), k = av.extent(1);
    if (bv.rank() == 1) {
      // y = A·b: dA += g⊗b, db += Aᵀ·g
      for (int i = 0; i < m; ++i) {
        const double g = n.grad[static_cast<std::size_t>(i)];
        for (int j = 0; j < k; ++j) {
          da(i, j) += g * bv[static_cast<std::size_t>(j)];
          db[static_cast<std::size_t>(j)] += av(i, j) * g;
        }
      }
      return;
    }
    const int p = bv.extent(1);
    // dA = g·Bᵀ, dB = Aᵀ·g
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < p; ++j) {
        const double g = n.grad[static_cast<std::size_t>(i) * static_cast<std::size_t>(p) +
                                static_cast<std::size_t>(j)];
        for (int kk = 0; kk < k; ++kk) {
          da(i, kk) += g * bv(kk, j);
          db(kk, j) += av(i, kk) * g;
        }
      }
    }
  });
}

Tape::NodeId Tape::conv1x1(NodeId x, NodeId w, NodeId b) {
  Tensor out = agmh::conv1x1(nodes_[x].value, nodes_[w].value, nodes_[b].value);
  return push(std::move(out), OpKind::Conv1x1, {x, w, b}, [](Tape& t, NodeId self) {
    const Node& n = t.nodes_[self];
    const Tensor& xv = t.nodes_[n.inputs[0]].value;
    const Tensor& wv = t.nodes_[n.inputs[1]].value;
    Tensor& dx = t.nodes_[n.inputs[0]].grad;
    Tensor& dw = t.nodes_[n.inputs[1]].grad;
    Tensor& db = t.nodes_[n.inputs[2]].grad;
    const int cout = wv.extent(0), cin = wv.extent(1);
    const std::size_t np = static_cast<std::size_t>(xv.extent(1)) *
                           static_cast<std::size_t>(xv.extent(2));
    for (int o = 0; o < cout; ++o) {
      const double* g = n.grad.data.data() + static_cast<std::size_t>(o) * np;
      double gsum = 0.0;
      for (std::size_t p = 0; p < np; ++p) gsum += g[p];
      db[static_cast<std::size_t>(o)] += gsum;
      for (int i = 0; i < cin; ++i) {
        const double* xi = xv.data.data() + static_cast<std::size_t>(i) * np;
        double* dxi = dx.data.data() + static_cast<std::size_t>(i) * np;
        const double wv_oi = wv(o, i);
        double acc = 0.0;
        for (std::size_t p = 0; p < np; ++p) {
          acc += g[p] * xi[p];
          dxi[p] += wv_oi * g[p];
        }
        dw(o, i) += acc;
      }
    }
  });
}

namespace {
struct AxisSpan {
  std::size_t outer = 1, len = 1, inner = 1;
};
AxisSpan axis_span_of(const std::vector<int>& shape, int axis) {
  AxisSpan s;
  for (int a = 0; a < axis; ++a) s.outer *= static_cast<std::size_t>(shape[a]);
  s.len = static_cast<std::size_t>(shape[axis]);
  for (std::size_t a = static_cast<std::size_t>(axis) + 1; a < shape.size(); ++a) {
    s.inner *= static_cast<std::size_t>(shape[a]);
  }
  return s;
}
}  // namespace

Tape::NodeId Tape::softmax_axis(NodeId x, int axis) {
  Tensor out = agmh::softmax_axis(nodes_[x].value, axis);
  return push(std::move(out), OpKind::SoftmaxAxis, {x}, [axis](Tape& t, NodeId self) {
    const Node& n = t.nodes_[self];
    Tensor& dx = t.nodes_[n.inputs[0]].grad;
    const AxisSpan s = axis_span_of(n.value.shape, axis);
    // dx = y ⊙ (g − <g, y>) per slice
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t i = 0; i < s.inner; ++i) {
        const std::size_t base = o * s.len * s.inner + i;
        double dot = 0.0;
        for (std::size_t j = 0; j < s.len; ++j) {
          const std::size_t at = base + j * s.inner;
          dot += n.grad[at] * n.value[at];
        }
        for (std::size_t j = 0; j < s.len; ++j) {
          const std::size_t at = base + j * s.inner;
          dx[at] += n.value[at] * (n.grad[at] - dot);
        }
      }
    }
  });
}

Tape::NodeId Tape::l1_normalize_axis(NodeId x, int axis) {
  Tensor out = agmh::l1_normalize_axis(nodes_[x].value, axis);
  return push(std::move(out), OpKind::L1NormalizeAxis, {x}, [axis](Tape& t, NodeId self) {
    const Node& n = t.nodes_[self];
    const Tensor& xv = t.nodes_[n.inputs[0]].value;
    Tensor& dx = t.nodes_[n.inputs[0]].grad;
    const AxisSpan s = axis_span_of(n.value.shape, axis);
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t i = 0; i < s.inner; ++i) {
        const std::size_t base = o * s.len * s.inner + i;
        double sum = 0.0;
        for (std::size_t j = 0; j < s.len; ++j) sum += xv[base + j * s.inner];
        if (sum < kL1DegenerateEps) continue;  // uniform output is constant
        double dot = 0.0;
        for (std::size_t j = 0; j < s.len; ++j) {
          const std::size_t at = base + j * s.inner;
          dot += n.grad[at] * n.value[at];
        }
        for (std::size_t j = 0; j < s.len; ++j) {
          const std::size_t at = base + j * s.inner;
          dx[at] += (n.grad[at] - dot) / sum;
        }
      }
    }
  });
}

Tape::NodeId Tape::mean_spatial(NodeId x) {
  Tensor out = agmh::mean_spatial(nodes_[x].value);
  return push(std::move(out), OpKind::MeanSpatial, {x}, [](Tape& t, NodeId self) {
    const Node& n = t.nodes_[self];
    Tensor& dx = t.nodes_[n.inputs[0]].grad;
    const std::size_t np = dx.size() / n.grad.size();
    const double inv = 1.0 / static_cast<double>(np);
    for (std::size_t c = 0; c < n.grad.size(); ++c) {
      const double g = n.grad[c] * inv;
      double* d = dx.data.data() + c * np;
      for (std::size_t p = 0; p < np; ++p) d[p] += g;
    }
  });
}

Tape::NodeId Tape::max_channel(NodeId x) {
  std::vector<int> argmax;
  Tensor out = agmh::max_channel(nodes_[x].value, &argmax);
  return push(std::move(out), OpKind::MaxChannel, {x},
              [argmax = std::move(argmax)](Tape& t, NodeId self) {
                const Node& n = t.nodes_[self];
                Tensor& dx = t.nodes_[n.inputs[0]].grad;
                const std::size_t np = n.grad.size();
                for (std::size_t p = 0; p < np; ++p) {
                  dx[static_cast<std::size_t>(argmax[p]) * np + p] += n.grad[p];
                }
              });
}

Tape::NodeId Tape::sum_all(NodeId x) {
  Tensor out = agmh::sum_all(nodes_[x].value);
  return push(std::move(out), OpKind::SumAll, {x}, [](Tape& t, NodeId self) {
    const Node& n = t.nodes_[self];
    Tensor& dx = t.nodes_[n.inputs[0]].grad;
    const double g = n.grad[0];
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += g;
  });
}

Tape::NodeId Tape::inner_product(NodeId a, NodeId b) {
  Tensor out = agmh::inner_product(nodes_[a].value, nodes_[b].value);
  return push(std::move(out), OpKind::InnerProduct, {a, b}, [](Tape& t, NodeId self) {
    const Node& n = t.nodes_[self];
    const Tensor& av = t.nodes_[n.inputs[0]].value;
    const Tensor& bv = t.nodes_[n.inputs[1]].value;
    Tensor& da = t.nodes_[n.inputs[0]].grad;
    Tensor& db = t.nodes_[n.inputs[1]].grad;
    const double g = n.grad[0];
    for (std::size_t i = 0; i < av.size(); ++i) {
      da[i] += g * bv[i];
      db[i] += g * av[i];
    }
  });
}

Tape::NodeId Tape::concat_channels(std::span<const NodeId> parts) {
  if (parts.empty()) throw ArgumentError("concat_channels: empty part list");
  std::vector<const Tensor*> views;
  views.reserve(parts.size());
  for (NodeId id : parts) views.push_back(&nodes_[id].value);
  Tensor out = agmh::concat_channels(views);
  std::vector<int> extents;
  extents.reserve(parts.size());
  for (NodeId id : parts) {
    const Tensor& v = nodes_[id].value;
    extents.push_back(v.extent(v.rank() - 1));
  }
  std::vector<NodeId> inputs(parts.begin(), parts.end());
  return push(std::move(out), OpKind::ConcatChannels, std::move(inputs),
              [extents = std::move(extents)](Tape& t, NodeId self) {
                const Node& n = t.nodes_[self];
                const int rank = n.value.rank();
                const std::size_t total = static_cast<std::size_t>(n.value.extent(rank - 1));
                std::size_t rows = n.value.size() / total;
                std::size_t offset = 0;
                for (std::size_t pi = 0; pi < n.inputs.size(); ++pi) {
                  Tensor& dp = t.nodes_[n.inputs[pi]].grad;
                  const std::size_t len = static_cast<std::size_t>(extents[pi]);
                  for (std::size_t r = 0; r < rows; ++r) {
                    for (std::size_t j = 0; j < len; ++j) {
                      dp[r * len + j] += n.grad[r * total + offset + j];
                    }
                  }
                  offset += len;
                }
              });
}

Tape::NodeId Tape::transpose2d(NodeId a) {
  Tensor out = agmh::transpose2d(nodes_[a].value);
  return push(std::move(out), OpKind::Transpose2d, {a}, [](Tape& t, NodeId self) {
    const Node& n = t.nodes_[self];
    Tensor& da = t.nodes_[n.inputs[0]].grad;
    const int m = n.value.extent(0), k = n.value.extent(1);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < k; ++j) da(j, i) += n.grad(i, j);
    }
  });
}

Tape::NodeId Tape::reshape(NodeId a, std::vector<int> shape) {
  Tensor out = agmh::reshape(nodes_[a].value, std::move(shape));
  return push(std::move(out), OpKind::Reshape, {a}, [](Tape& t, NodeId self) {
    const Node& n = t.nodes_[self];
    Tensor& da = t.nodes_[n.inputs[0]].grad;
    for (std::size_t i = 0; i < n.grad.size(); ++i) da[i] += n.grad[i];
  });
}

void Tape::backward(NodeId root) {
  if (nodes_[root].value.size() != 1) {
    throw ArgumentError("backward: root must be scalar, got shape " +
                        shape_str(nodes_[root].value.shape));
  }
  for (Node& n : nodes_) {
    std::fill(n.grad.data.begin(), n.grad.data.end(), 0.0);
  }
  nodes_[root].grad[0] = 1.0;
  for (NodeId id = root + 1; id-- > 0;) {
    if (nodes_[id].back) nodes_[id].back(*this, id);
  }
}

double kink_clearance(const Tape& t) {
  double clearance = std::numeric_limits<double>::infinity();
  for (std::size_t id = 0; id < t.size(); ++id) {
    const OpKind k = t.kind(static_cast<Tape::NodeId>(id));
    if (k == OpKind::Relu) {
      const Tensor& x = t.value(t.inputs(static_cast<Tape::NodeId>(id))[0]);
      for (double v : x.data) clearance = std::min(clearance, std::abs(v));
    } else if (k == OpKind::MaxChannel) {
      const Tensor& x = t.value(t.inputs(static_cast<Tape::NodeId>(id))[0]);
      const int c = x.extent(0);
      if (c < 2) continue;
      const std::size_t np = static_cast<std::size_t>(x.extent(1)) *
                             static_cast<std::size_t>(x.extent(2));
      for (std::size_t p = 0; p < np; ++p) {
        double top = -std::numeric_limits<double>::infinity();
        double second = top;
        for (int i = 0; i < c; ++i) {
          const double v = x[static_cast<std::size_t>(i) * np + p];
          if (v > top) {
            second = top;
            top = v;
          } else if (v > second) {
            second = v;
          }
        }
        clearance = std::min(clearance, top - second);
      }
    }
  }
  return clearance;
}

}  // namespace agmh
