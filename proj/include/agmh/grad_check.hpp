#pragma once

#include <functional>
#include <vector>

#include "agmh/tape.hpp"

namespace agmh {

/// Builds a scalar node from leaves created in the order of `point`.
using GraphBuilder =
    std::function<Tape::NodeId(Tape&, const std::vector<Tape::NodeId>&)>;

/// Max over all leaf coordinates of the relative error between the tape
/// gradient and the central difference (f(x+h) - f(x-h)) / 2h, with
/// denominator max(|analytic|, |numeric|, 1e-8).
double grad_check(const GraphBuilder& f, const std::vector<Tensor>& point,
                  double step = 1e-4);

}  // namespace agmh
