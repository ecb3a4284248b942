#include "agmh/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace agmh {

namespace {

double evaluate(const GraphBuilder& f, const std::vector<Tensor>& point) {
  Tape tape;
  std::vector<Tape::NodeId> leaves;
  leaves.reserve(point.size());
  for (const Tensor& t : point) leaves.push_back(tape.leaf(t));
  const Tape::NodeId root = f(tape, leaves);
  const Tensor& v = tape.value(root);
  if (v.size() != 1) {
    throw ArgumentError("grad_check: f must be scalar-valued, got shape " +
                        shape_str(v.shape));
  }
  return v[0];
}

}  // namespace

double grad_check(const GraphBuilder& f, const std::vector<Tensor>& point, double step) {
  Tape tape;
  std::vector<Tape::NodeId> leaves;
  leaves.reserve(point.size());
  for (const Tensor& t : point) leaves.push_back(tape.leaf(t));
  const Tape::NodeId root = f(tape, leaves);
  const Tensor& v = tape.value(root);
  if (v.size() != 1) {
    throw ArgumentError("grad_check: f must be scalar-valued, got shape " +
                        shape_str(v.shape));
  }
  if (!std::isfinite(v[0])) throw ArgumentError("grad_check: f is not finite at point");
  tape.backward(root);

  std::vector<Tensor> analytic;
  analytic.reserve(point.size());
  for (const Tape::NodeId id : leaves) analytic.push_back(tape.grad(id));

  double max_rel = 0.0;
  std::vector<Tensor> probe = point;
  for (std::size_t li = 0; li < point.size(); ++li) {
    for (std::size_t c = 0; c < point[li].size(); ++c) {
      const double saved = probe[li][c];
      probe[li][c] = saved + step;
      const double fp = evaluate(f, probe);
      probe[li][c] = saved - step;
      const double fm = evaluate(f, probe);
      probe[li][c] = saved;
      const double numeric = (fp - fm) / (2.0 * step);
      const double a = analytic[li][c];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      max_rel = std::max(max_rel, std::abs(a - numeric) / denom);
    }
  }
  return max_rel;
}

}  // namespace agmh
