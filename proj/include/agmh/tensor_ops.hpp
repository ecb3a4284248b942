#pragma once

#include <vector>

#include "agmh/tensor.hpp"

namespace agmh {

// Forward kernels. The autodiff tape and the plain encoding path both call
// these, so the two paths are bitwise identical for the same inputs.

inline constexpr double kL1DegenerateEps = 1e-30;

/// [MxK]·[KxP] -> [MxP], or [MxK]·[K] -> [M].
Tensor matmul(const Tensor& a, const Tensor& b);

/// Pointwise 1x1 convolution: x [CinxHxW], w [CoutxCin], b [Cout] -> [CoutxHxW].
Tensor conv1x1(const Tensor& x, const Tensor& w, const Tensor& b);

/// Exponentials normalized along `axis`, max-subtracted for stability.
Tensor softmax_axis(const Tensor& x, int axis);

/// Each slice along `axis` divided by its sum; slices summing below
/// kL1DegenerateEps become the uniform distribution.
Tensor l1_normalize_axis(const Tensor& x, int axis);

Tensor add(const Tensor& a, const Tensor& b);
Tensor subtract(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor relu(const Tensor& a);
Tensor tanh(const Tensor& a);

/// CxHxW -> C, mean over spatial positions.
Tensor mean_spatial(const Tensor& x);

/// CxHxW -> HxW, per-position channel maximum. Ties take the lowest channel
/// index; `argmax`, when given, receives that index per position.
Tensor max_channel(const Tensor& x, std::vector<int>* argmax = nullptr);

Tensor sum_all(const Tensor& x);
Tensor inner_product(const Tensor& a, const Tensor& b);

/// Concatenation along the last axis; all leading extents must agree.
Tensor concat_channels(const std::vector<const Tensor*>& parts);

/// Inverse of concat_channels for the given last-axis extents.
std::vector<Tensor> split_channels(const Tensor& x, const std::vector<int>& extents);

Tensor transpose2d(const Tensor& a);
Tensor reshape(const Tensor& a, std::vector<int> shape);

}  // namespace agmh
