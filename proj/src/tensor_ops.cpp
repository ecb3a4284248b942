#include "agmh/tensor_ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace agmh {

namespace {

// Decomposes a shape around `axis` into outer/len/inner so element
// (o, j, i) sits at flat index (o*len + j)*inner + i.
struct AxisSpan {
  std::size_t outer = 1, len = 1, inner = 1;
};

AxisSpan axis_span(const std::vector<int>& shape, int axis) {
  if (axis < 0 || axis >= static_cast<int>(shape.size())) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for shape " +
                         shape_str(shape));
  }
  AxisSpan s;
  for (int a = 0; a < axis; ++a) s.outer *= static_cast<std::size_t>(shape[a]);
  s.len = static_cast<std::size_t>(shape[axis]);
  for (std::size_t a = static_cast<std::size_t>(axis) + 1; a < shape.size(); ++a) {
    s.inner *= static_cast<std::size_t>(shape[a]);
  }
  return s;
}

void require_equal_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape) +
                         " vs " + shape_str(b.shape));
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || (b.rank() != 2 && b.rank() != 1)) {
    throw DimensionError("matmul: expected [MxK]·[KxP] or [MxK]·[K], got " +
                         shape_str(a.shape) + " vs " + shape_str(b.shape));
  }
  const int m = a.extent(0), k = a.extent(1);
  if (b.extent(0) != k) {
    throw DimensionError("matmul: inner extents disagree " + shape_str(a.shape) + " vs " +
                         shape_str(b.shape));
  }
  if (b.rank() == 1) {
    Tensor out({m});
    for (int i = 0; i < m; ++i) {
      double acc = 0.0;
      for (int j = 0; j < k; ++j) acc += a(i, j) * b[static_cast<std::size_t>(j)];
      out[static_cast<std::size_t>(i)] = acc;
    }
    return out;
  }
  const int p = b.extent(1);
  Tensor out({m, p});
  for (int i = 0; i < m; ++i) {
    for (int kk = 0; kk < k; ++kk) {
      const double av = a(i, kk);
      for (int j = 0; j < p; ++j) out(i, j) += av * b(kk, j);
    }
  }
  return out;
}

Tensor conv1x1(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (x.rank() != 3) throw DimensionError("conv1x1: input must be CxHxW, got " + shape_str(x.shape));
  if (w.rank() != 2) throw DimensionError("conv1x1: weight must be CoutxCin, got " + shape_str(w.shape));
  const int cin = x.extent(0), h = x.extent(1), wd = x.extent(2);
  const int cout = w.extent(0);
  if (w.extent(1) != cin) {
    throw DimensionError("conv1x1: channel mismatch, input " + shape_str(x.shape) +
                         " vs weight " + shape_str(w.shape));
  }
  if (b.rank() != 1 || b.extent(0) != cout) {
    throw DimensionError("conv1x1: bias shape " + shape_str(b.shape) + " vs weight " +
                         shape_str(w.shape));
  }
  const std::size_t n = static_cast<std::size_t>(h) * static_cast<std::size_t>(wd);
  Tensor out({cout, h, wd});
  for (int o = 0; o < cout; ++o) {
    const double bias = b[static_cast<std::size_t>(o)];
    double* dst = out.data.data() + static_cast<std::size_t>(o) * n;
    for (std::size_t p = 0; p < n; ++p) dst[p] = bias;
    for (int i = 0; i < cin; ++i) {
      const double wv = w(o, i);
      const double* src = x.data.data() + static_cast<std::size_t>(i) * n;
      for (std::size_t p = 0; p < n; ++p) dst[p] += wv * src[p];
    }
  }
  return out;
}

Tensor softmax_axis(const Tensor& x, int axis) {
  const AxisSpan s = axis_span(x.shape, axis);
  Tensor out(x.shape);
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t i = 0; i < s.inner; ++i) {
      const std::size_t base = o * s.len * s.inner + i;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < s.len; ++j) mx = std::max(mx, x[base + j * s.inner]);
      double denom = 0.0;
      for (std::size_t j = 0; j < s.len; ++j) {
        const double e = std::exp(x[base + j * s.inner] - mx);
        out[base + j * s.inner] = e;
        denom += e;
      }
      for (std::size_t j = 0; j < s.len; ++j) out[base + j * s.inner] /= denom;
    }
  }
  return out;
}

Tensor l1_normalize_axis(const Tensor& x, int axis) {
  const AxisSpan s = axis_span(x.shape, axis);
  Tensor out(x.shape);
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t i = 0; i < s.inner; ++i) {
      const std::size_t base = o * s.len * s.inner + i;
      double sum = 0.0;
      for (std::size_t j = 0; j < s.len; ++j) sum += x[base + j * s.inner];
      if (sum < kL1DegenerateEps) {
        const double u = 1.0 / static_cast<double>(s.len);
        for (std::size_t j = 0; j < s.len; ++j) out[base + j * s.inner] = u;
      } else {
        for (std::size_t j = 0; j < s.len; ++j) out[base + j * s.inner] = x[base + j * s.inner] / sum;
      }
    }
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_equal_shape(a, b, "add");
  Tensor out(a.shape);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

Tensor subtract(const Tensor& a, const Tensor& b) {
  require_equal_shape(a, b, "subtract");
  Tensor out(a.shape);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

Tensor scale(const Tensor& a, double c) {
  Tensor out(a.shape);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = c * a[i];
  return out;
}

Tensor relu(const Tensor& a) {
  Tensor out(a.shape);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] > 0.0 ? a[i] : 0.0;
  return out;
}

Tensor tanh(const Tensor& a) {
  Tensor out(a.shape);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = std::tanh(a[i]);
  return out;
}

Tensor mean_spatial(const Tensor& x) {
  if (x.rank() != 3) throw DimensionError("mean_spatial: input must be CxHxW, got " + shape_str(x.shape));
  const int c = x.extent(0);
  const std::size_t n = static_cast<std::size_t>(x.extent(1)) * static_cast<std::size_t>(x.extent(2));
  Tensor out({c});
  for (int i = 0; i < c; ++i) {
    const double* src = x.data.data() + static_cast<std::size_t>(i) * n;
    double acc = 0.0;
    for (std::size_t p = 0; p < n; ++p) acc += src[p];
    out[static_cast<std::size_t>(i)] = acc / static_cast<double>(n);
  }
  return out;
}

Tensor max_channel(const Tensor& x, std::vector<int>* argmax) {
  if (x.rank() != 3) throw DimensionError("max_channel: input must be CxHxW, got " + shape_str(x.shape));
  const int c = x.extent(0), h = x.extent(1), w = x.extent(2);
  const std::size_t n = static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
  Tensor out({h, w});
  if (argmax) argmax->assign(n, 0);
  for (std::size_t p = 0; p < n; ++p) {
    double best = x[p];
    int best_c = 0;
    for (int i = 1; i < c; ++i) {
      const double v = x[static_cast<std::size_t>(i) * n + p];
      if (v > best) {
        best = v;
        best_c = i;
      }
    }
    out[p] = best;
    if (argmax) (*argmax)[p] = best_c;
  }
  return out;
}

Tensor sum_all(const Tensor& x) {
  double acc = 0.0;
  for (double v : x.data) acc += v;
  return Tensor::scalar(acc);
}

Tensor inner_product(const Tensor& a, const Tensor& b) {
  require_equal_shape(a, b, "inner_product");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return Tensor::scalar(acc);
}

Tensor concat_channels(const std::vector<const Tensor*>& parts) {
  if (parts.empty()) throw ArgumentError("concat_channels: empty part list");
  const Tensor& first = *parts[0];
  const int rank = first.rank();
  int total = 0;
  for (const Tensor* p : parts) {
    if (p->rank() != rank) {
      throw DimensionError("concat_channels: rank mismatch " + shape_str(first.shape) +
                           " vs " + shape_str(p->shape));
    }
    for (int a = 0; a + 1 < rank; ++a) {
      if (p->extent(a) != first.extent(a)) {
        throw DimensionError("concat_channels: leading extents disagree " +
                             shape_str(first.shape) + " vs " + shape_str(p->shape));
      }
    }
    total += p->extent(rank - 1);
  }
  std::vector<int> shape = first.shape;
  shape[static_cast<std::size_t>(rank - 1)] = total;
  Tensor out(std::move(shape));
  std::size_t rows = 1;
  for (int a = 0; a + 1 < rank; ++a) rows *= static_cast<std::size_t>(first.extent(a));
  std::size_t offset = 0;
  for (const Tensor* p : parts) {
    const std::size_t len = static_cast<std::size_t>(p->extent(rank - 1));
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t j = 0; j < len; ++j) {
        out[r * static_cast<std::size_t>(total) + offset + j] = (*p)[r * len + j];
      }
    }
    offset += len;
  }
  return out;
}

std::vector<Tensor> split_channels(const Tensor& x, const std::vector<int>& extents) {
  const int rank = x.rank();
  int total = 0;
  for (int e : extents) total += e;
  if (total != x.extent(rank - 1)) {
    throw DimensionError("split_channels: extents sum to " + std::to_string(total) +
                         ", last axis is " + std::to_string(x.extent(rank - 1)));
  }
  std::size_t rows = 1;
  for (int a = 0; a + 1 < rank; ++a) rows *= static_cast<std::size_t>(x.extent(a));
  std::vector<Tensor> parts;
  std::size_t offset = 0;
  for (int e : extents) {
    std::vector<int> shape = x.shape;
    shape[static_cast<std::size_t>(rank - 1)] = e;
    Tensor part(std::move(shape));
    const std::size_t len = static_cast<std::size_t>(e);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t j = 0; j < len; ++j) {
        part[r * len + j] = x[r * static_cast<std::size_t>(x.extent(rank - 1)) + offset + j];
      }
    }
    offset += len;
    parts.push_back(std::move(part));
  }
  return parts;
}

Tensor transpose2d(const Tensor& a) {
  if (a.rank() != 2) throw DimensionError("transpose2d: input must be 2-D, got " + shape_str(a.shape));
  const int m = a.extent(0), n = a.extent(1);
  Tensor out({n, m});
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) out(j, i) = a(i, j);
  }
  return out;
}

Tensor reshape(const Tensor& a, std::vector<int> shape) {
  if (shape_numel(shape) != a.size()) {
    throw DimensionError("reshape: " + shape_str(a.shape) + " has " + std::to_string(a.size()) +
                         " elements, target " + shape_str(shape) + " needs " +
                         std::to_string(shape_numel(shape)));
  }
  return Tensor(std::move(shape), a.data);
}

}  // namespace agmh
