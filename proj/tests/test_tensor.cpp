#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>

#include "agmh/grad_check.hpp"
#include "agmh/tape.hpp"
#include "agmh/tensor_ops.hpp"
#include "oracles.hpp"

using agmh::Rng;
using agmh::Tape;
using agmh::Tensor;

namespace {

// Runs grad_check at `points` random inputs, resampling whenever a relu or
// max kink sits closer than 1e-3 to the evaluation point.
void check_gradients(const agmh::GraphBuilder& f,
                     const std::function<std::vector<Tensor>(Rng&)>& sample,
                     double tol = 1e-5, int points = 10, std::uint64_t seed0 = 7000) {
  int accepted = 0;
  std::uint64_t seed = seed0;
  while (accepted < points) {
    Rng rng(seed++);
    const std::vector<Tensor> pt = sample(rng);
    Tape probe;
    std::vector<Tape::NodeId> leaves;
    for (const Tensor& t : pt) leaves.push_back(probe.leaf(t));
    (void)f(probe, leaves);
    if (agmh::kink_clearance(probe) < 1e-3) continue;
    CAPTURE(seed);
    CHECK(agmh::grad_check(f, pt) < tol);
    ++accepted;
  }
}

}  // namespace

TEST_CASE("matmul identity and zero cases") {
  const Tensor eye({2, 2}, {1, 0, 0, 1});
  const Tensor a({2, 2}, {1, 2, 3, 4});
  const Tensor prod = agmh::matmul(eye, a);
  for (std::size_t i = 0; i < 4; ++i) CHECK(prod[i] == a[i]);

  const Tensor row({1, 2}, {1, 2});
  const Tensor zeros({2, 1}, {0, 0});
  CHECK(agmh::matmul(row, zeros)[0] == 0.0);
}

TEST_CASE("matmul matches triple-loop oracle") {
  Rng rng(11);
  for (int trial = 0; trial < 60; ++trial) {
    const int m = 1 + static_cast<int>(rng.next_below(16));
    const int k = 1 + static_cast<int>(rng.next_below(16));
    const int p = 1 + static_cast<int>(rng.next_below(16));
    const Tensor a = oracle::random_tensor({m, k}, rng);
    const Tensor b = oracle::random_tensor({k, p}, rng);
    const Tensor got = agmh::matmul(a, b);
    const Tensor want = oracle::matmul_triple_loop(a, b);
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - want[i]) < 1e-12);
  }
}

TEST_CASE("matmul shape mismatch names both shapes") {
  const Tensor a({2, 3});
  const Tensor b({4, 2});
  CHECK_THROWS_WITH_AS(agmh::matmul(a, b), doctest::Contains("(2x3)"), agmh::DimensionError);
  try {
    agmh::matmul(a, b);
  } catch (const agmh::DimensionError& e) {
    CHECK(std::string(e.what()).find("(4x2)") != std::string::npos);
  }
}

TEST_CASE("conv1x1 identity, zero, and per-pixel oracle") {
  Rng rng(13);
  const Tensor x = oracle::random_tensor({3, 2, 2}, rng);
  Tensor eye({3, 3});
  for (int i = 0; i < 3; ++i) eye(i, i) = 1.0;
  const Tensor b0({3});
  const Tensor same = agmh::conv1x1(x, eye, b0);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(same[i] == x[i]);

  const Tensor wz({2, 3});
  const Tensor bz({2});
  for (double v : agmh::conv1x1(x, wz, bz).data) CHECK(v == 0.0);

  for (int trial = 0; trial < 60; ++trial) {
    const int cin = 1 + static_cast<int>(rng.next_below(6));
    const int cout = 1 + static_cast<int>(rng.next_below(6));
    const int h = 1 + static_cast<int>(rng.next_below(4));
    const int w = 1 + static_cast<int>(rng.next_below(4));
    const Tensor xi = oracle::random_tensor({cin, h, w}, rng);
    const Tensor wi = oracle::random_tensor({cout, cin}, rng);
    const Tensor bi = oracle::random_tensor({cout}, rng);
    const Tensor got = agmh::conv1x1(xi, wi, bi);
    const Tensor want = oracle::conv1x1_per_pixel(xi, wi, bi);
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - want[i]) < 1e-12);
  }

  CHECK_THROWS_AS(agmh::conv1x1(x, Tensor({2, 4}), Tensor({2})), agmh::DimensionError);
}

TEST_CASE("softmax forced values and naive oracle") {
  const Tensor sym = agmh::softmax_axis(Tensor({2}, {0.0, 0.0}), 0);
  CHECK(sym[0] == doctest::Approx(0.5).epsilon(1e-14));
  const Tensor forced = agmh::softmax_axis(Tensor({2}, {0.0, std::log(3.0)}), 0);
  CHECK(forced[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(forced[1] == doctest::Approx(0.75).epsilon(1e-12));

  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor x = oracle::random_tensor({5}, rng, 2.0);
    const Tensor y = agmh::softmax_axis(x, 0);
    double sum = 0.0;
    for (double v : y.data) {
      CHECK(v > 0.0);
      CHECK(v < 1.0);
      sum += v;
    }
    CHECK(std::abs(sum - 1.0) < 1e-12);
    const std::vector<double> want = oracle::softmax_naive(x.data);
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(std::abs(y[i] - want[i]) < 1e-12);
  }
}

TEST_CASE("softmax slices sum to 1 along either axis of a matrix") {
  Rng rng(19);
  const Tensor x = oracle::random_tensor({6, 7}, rng, 3.0);
  const Tensor rows = agmh::softmax_axis(x, 1);
  for (int i = 0; i < 6; ++i) {
    double s = 0.0;
    for (int j = 0; j < 7; ++j) s += rows(i, j);
    CHECK(std::abs(s - 1.0) < 1e-12);
  }
  const Tensor cols = agmh::softmax_axis(x, 0);
  for (int j = 0; j < 7; ++j) {
    double s = 0.0;
    for (int i = 0; i < 6; ++i) s += cols(i, j);
    CHECK(std::abs(s - 1.0) < 1e-12);
  }
}

TEST_CASE("l1 normalization forced values, row sums, degenerate slice") {
  const Tensor a = agmh::l1_normalize_axis(Tensor({2}, {0.2, 0.2}), 0);
  CHECK(a[0] == doctest::Approx(0.5).epsilon(1e-14));
  const Tensor b = agmh::l1_normalize_axis(Tensor({2}, {1.0, 3.0}), 0);
  CHECK(b[0] == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(b[1] == doctest::Approx(0.75).epsilon(1e-14));

  Rng rng(23);
  Tensor m({5, 4});
  for (double& v : m.data) v = rng.next_double() + 0.01;
  const Tensor norm = agmh::l1_normalize_axis(m, 1);
  for (int i = 0; i < 5; ++i) {
    double s = 0.0;
    for (int j = 0; j < 4; ++j) s += norm(i, j);
    CHECK(std::abs(s - 1.0) < 1e-12);
  }

  const Tensor deg = agmh::l1_normalize_axis(Tensor({4}), 0);
  for (double v : deg.data) CHECK(v == doctest::Approx(0.25));
}

TEST_CASE("elementwise forced values and scalar-loop agreement") {
  const Tensor r = agmh::relu(Tensor({3}, {-1.0, 0.0, 2.0}));
  CHECK(r[0] == 0.0);
  CHECK(r[1] == 0.0);
  CHECK(r[2] == 2.0);
  CHECK(agmh::tanh(Tensor({1}, {0.0}))[0] == 0.0);

  Rng rng(29);
  const Tensor a = oracle::random_tensor({3, 4}, rng);
  const Tensor b = oracle::random_tensor({3, 4}, rng);
  const Tensor sum = agmh::add(a, b);
  const Tensor diff = agmh::subtract(a, b);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(sum[i] == a[i] + b[i]);
    CHECK(diff[i] == a[i] - b[i]);
  }
  CHECK_THROWS_AS(agmh::add(a, Tensor({4, 3})), agmh::DimensionError);
}

TEST_CASE("reductions: mean_spatial, max_channel, sum_all, inner_product") {
  const Tensor constant = Tensor::full({3, 2, 2}, 4.5);
  const Tensor mean = agmh::mean_spatial(constant);
  for (double v : mean.data) CHECK(v == doctest::Approx(4.5));

  // channel vectors (1,3) and (2,0) at two positions
  const Tensor maps({2, 1, 2}, {1.0, 2.0, 3.0, 0.0});
  const Tensor mx = agmh::max_channel(maps);
  CHECK(mx[0] == 3.0);
  CHECK(mx[1] == 2.0);

  Rng rng(31);
  const Tensor u = oracle::random_tensor({7}, rng);
  double want = 0.0;
  for (double v : u.data) want += v * v;
  CHECK(agmh::inner_product(u, u)[0] == doctest::Approx(want).epsilon(1e-14));
  CHECK(agmh::sum_all(Tensor({2, 2}, {1, 2, 3, 4}))[0] == 10.0);
}

TEST_CASE("max_channel breaks ties toward the lowest channel") {
  const Tensor tied({2, 1, 1}, {5.0, 5.0});
  std::vector<int> argmax;
  agmh::max_channel(tied, &argmax);
  CHECK(argmax[0] == 0);
}

TEST_CASE("concat: single part, forced layout, split round trip") {
  const Tensor a({2}, {1.0, 2.0});
  const Tensor b({1}, {3.0});
  const Tensor single = agmh::concat_channels({&a});
  CHECK(single.size() == 2);
  CHECK(single[0] == 1.0);
  const Tensor joined = agmh::concat_channels({&a, &b});
  CHECK(joined.shape == std::vector<int>{3});
  CHECK(joined[2] == 3.0);

  Rng rng(37);
  for (int trial = 0; trial < 20; ++trial) {
    const int parts = 1 + static_cast<int>(rng.next_below(4));
    std::vector<Tensor> ts;
    std::vector<int> extents;
    for (int i = 0; i < parts; ++i) {
      extents.push_back(1 + static_cast<int>(rng.next_below(5)));
      ts.push_back(oracle::random_tensor({3, extents.back()}, rng));
    }
    std::vector<const Tensor*> views;
    for (const Tensor& t : ts) views.push_back(&t);
    const std::vector<Tensor> back = agmh::split_channels(agmh::concat_channels(views), extents);
    REQUIRE(back.size() == ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) {
      CHECK(back[i].shape == ts[i].shape);
      for (std::size_t e = 0; e < ts[i].size(); ++e) CHECK(back[i][e] == ts[i][e]);
    }
  }

  CHECK_THROWS_AS(agmh::concat_channels({}), agmh::ArgumentError);
}

TEST_CASE("grad_check on a linear function is near-exact") {
  Rng rng(41);
  const Tensor x = oracle::random_tensor({3, 3}, rng);
  const agmh::GraphBuilder f = [](Tape& t, const std::vector<Tape::NodeId>& leaves) {
    return t.sum_all(leaves[0]);
  };
  CHECK(agmh::grad_check(f, {x}) < 1e-10);
  Tape t;
  const auto leaf = t.leaf(x);
  t.backward(t.sum_all(leaf));
  for (double g : t.grad(leaf).data) CHECK(g == 1.0);
}

TEST_CASE("grad_check on inner_product(tanh(Wx), c)") {
  Rng rng(43);
  const Tensor w = oracle::random_tensor({4, 5}, rng);
  const Tensor x = oracle::random_tensor({5}, rng);
  const Tensor c = oracle::random_tensor({4}, rng);
  const agmh::GraphBuilder f = [](Tape& t, const std::vector<Tape::NodeId>& leaves) {
    return t.inner_product(t.tanh(t.matmul(leaves[0], leaves[1])), leaves[2]);
  };
  CHECK(agmh::grad_check(f, {w, x, c}) < 1e-6);
}

TEST_CASE("grad_check rejects non-scalar objectives") {
  const agmh::GraphBuilder f = [](Tape&, const std::vector<Tape::NodeId>& leaves) {
    return leaves[0];
  };
  CHECK_THROWS_AS(agmh::grad_check(f, {Tensor({3})}), agmh::ArgumentError);
}

TEST_CASE("every differentiable op passes grad_check at 10 random points") {
  Rng shape_rng(47);
  const auto vec = [](int n) {
    return [n](Rng& rng) { return std::vector<Tensor>{oracle::random_tensor({n}, rng)}; };
  };

  SUBCASE("add") {
    check_gradients(
        [](Tape& t, const std::vector<Tape::NodeId>& l) {
          return t.sum_all(t.add(l[0], l[1]));
        },
        [](Rng& rng) {
          return std::vector<Tensor>{oracle::random_tensor({3, 4}, rng),
                                     oracle::random_tensor({3, 4}, rng)};
        });
  }
  SUBCASE("subtract and scale") {
    check_gradients(
        [](Tape& t, const std::vector<Tape::NodeId>& l) {
          return t.sum_all(t.scale(t.subtract(l[0], l[1]), 0.7));
        },
        [](Rng& rng) {
          return std::vector<Tensor>{oracle::random_tensor({2, 5}, rng),
                                     oracle::random_tensor({2, 5}, rng)};
        });
  }
  SUBCASE("relu") {
    check_gradients(
        [](Tape& t, const std::vector<Tape::NodeId>& l) {
          return t.inner_product(t.relu(l[0]), t.relu(l[1]));
        },
        [](Rng& rng) {
          return std::vector<Tensor>{oracle::random_tensor({6}, rng),
                                     oracle::random_tensor({6}, rng)};
        });
  }
  SUBCASE("tanh") {
    check_gradients(
        [](Tape& t, const std::vector<Tape::NodeId>& l) { return t.sum_all(t.tanh(l[0])); },
        vec(8));
  }
  SUBCASE("matmul") {
    check_gradients(
        [](Tape& t, const std::vector<Tape::NodeId>& l) {
          return t.sum_all(t.tanh(t.matmul(l[0], l[1])));
        },
        [](Rng& rng) {
          return std::vector<Tensor>{oracle::random_tensor({3, 4}, rng),
                                     oracle::random_tensor({4, 2}, rng)};
        });
  }
  SUBCASE("matmul vector rhs") {
    check_gradients(
        [](Tape& t, const std::vector<Tape::NodeId>& l) {
          return t.sum_all(t.tanh(t.matmul(l[0], l[1])));
        },
        [](Rng& rng) {
          return std::vector<Tensor>{oracle::random_tensor({3, 4}, rng),
                                     oracle::random_tensor({4}, rng)};
        });
  }
  SUBCASE("conv1x1") {
    check_gradients(
        [](Tape& t, const std::vector<Tape::NodeId>& l) {
          return t.sum_all(t.tanh(t.conv1x1(l[0], l[1], l[2])));
        },
        [](Rng& rng) {
          return std::vector<Tensor>{oracle::random_tensor({3, 2, 2}, rng),
                                     oracle::random_tensor({2, 3}, rng),
                                     oracle::random_tensor({2}, rng)};
        });
  }
  SUBCASE("softmax_axis") {
    check_gradients(
        [](Tape& t, const std::vector<Tape::NodeId>& l) {
          return t.inner_product(t.softmax_axis(l[0], 0), l[1]);
        },
        [](Rng& rng) {
          return std::vector<Tensor>{oracle::random_tensor({4, 3}, rng),
                                     oracle::random_tensor({4, 3}, rng)};
        });
  }
  SUBCASE("l1_normalize_axis") {
    check_gradients(
        [](Tape& t, const std::vector<Tape::NodeId>& l) {
          return t.inner_product(t.l1_normalize_axis(t.softmax_axis(l[0], 0), 1), l[1]);
        },
        [](Rng& rng) {
          return std::vector<Tensor>{oracle::random_tensor({4, 3}, rng),
                                     oracle::random_tensor({4, 3}, rng)};
        });
  }
  SUBCASE("mean_spatial") {
    check_gradients(
        [](Tape& t, const std::vector<Tape::NodeId>& l) {
          return t.inner_product(t.mean_spatial(l[0]), l[1]);
        },
        [](Rng& rng) {
          return std::vector<Tensor>{oracle::random_tensor({3, 2, 2}, rng),
                                     oracle::random_tensor({3}, rng)};
        });
  }
  SUBCASE("max_channel") {
    check_gradients(
        [](Tape& t, const std::vector<Tape::NodeId>& l) {
          return t.inner_product(t.max_channel(l[0]), l[1]);
        },
        [](Rng& rng) {
          return std::vector<Tensor>{oracle::random_tensor({3, 2, 2}, rng),
                                     oracle::random_tensor({2, 2}, rng)};
        });
  }
  SUBCASE("inner_product and sum_all") {
    check_gradients(
        [](Tape& t, const std::vector<Tape::NodeId>& l) {
          return t.inner_product(l[0], l[1]);
        },
        [](Rng& rng) {
          return std::vector<Tensor>{oracle::random_tensor({9}, rng),
                                     oracle::random_tensor({9}, rng)};
        });
  }
  SUBCASE("concat_channels") {
    check_gradients(
        [](Tape& t, const std::vector<Tape::NodeId>& l) {
          const std::array<Tape::NodeId, 2> parts{l[0], l[1]};
          return t.sum_all(t.tanh(t.concat_channels(parts)));
        },
        [](Rng& rng) {
          return std::vector<Tensor>{oracle::random_tensor({3, 2}, rng),
                                     oracle::random_tensor({3, 4}, rng)};
        });
  }
  SUBCASE("transpose2d and reshape") {
    check_gradients(
        [](Tape& t, const std::vector<Tape::NodeId>& l) {
          return t.sum_all(t.tanh(t.reshape(t.transpose2d(l[0]), {8})));
        },
        [](Rng& rng) { return std::vector<Tensor>{oracle::random_tensor({2, 4}, rng)}; });
  }
  (void)shape_rng;
}

TEST_CASE("tape backward of a sum of losses is the sum of backwards") {
  Rng rng(53);
  const Tensor x = oracle::random_tensor({5}, rng);
  const Tensor c1 = oracle::random_tensor({5}, rng);
  const Tensor c2 = oracle::random_tensor({5}, rng);

  Tape t;
  const auto leaf = t.leaf(x);
  const auto l1 = t.inner_product(t.tanh(leaf), t.leaf(c1));
  const auto l2 = t.inner_product(t.relu(leaf), t.leaf(c2));
  const auto both = t.add(l1, l2);

  t.backward(l1);
  const Tensor g1 = t.grad(leaf);
  t.backward(l2);
  const Tensor g2 = t.grad(leaf);
  t.backward(both);
  const Tensor gsum = t.grad(leaf);
  for (std::size_t i = 0; i < gsum.size(); ++i) {
    CHECK(std::abs(gsum[i] - (g1[i] + g2[i])) < 1e-12);
  }
}

TEST_CASE("backward visits reused nodes once and sums fan-out contributions") {
  Tape t;
  const auto x = t.leaf(Tensor({2}, {1.5, -0.5}));
  const auto y = t.add(x, x);  // dy/dx = 2
  t.backward(t.sum_all(y));
  CHECK(t.grad(x)[0] == 2.0);
  CHECK(t.grad(x)[1] == 2.0);
}

TEST_CASE("kernel outputs stay finite on finite inputs") {
  Rng rng(59);
  const Tensor big = oracle::random_tensor({4, 4}, rng, 300.0);
  CHECK(agmh::softmax_axis(big, 0).all_finite());
  CHECK(agmh::softmax_axis(big, 1).all_finite());
  CHECK(agmh::tanh(big).all_finite());
}
