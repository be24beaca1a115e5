// Copyright (c) 2026 The ssvt Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <functional>
#include <vector>

#include "ssvt/gradcheck.hpp"
#include "ssvt/ops.hpp"
#include "ssvt/rng.hpp"
#include "ssvt/tensor.hpp"

using namespace ssvt;
namespace op = ssvt::ops;

namespace {

bool bitwise_equal(const Array& a, const Array& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
}

Tensor random_tensor(Shape shape, Rng& rng, double lo = -2.0, double hi = 2.0,
                     bool requires_grad = false) {
  Tensor t = Tensor::zeros(std::move(shape), requires_grad);
  for (Index i = 0; i < t.size(); ++i) {
    t.array()[i] = rng.uniform(lo, hi);
  }
  return t;
}

// Values on a 2^-20 grid in [-8, 8): sums with same-grid constants are exact
// in double, which makes shift invariance a bitwise property.
Tensor random_dyadic(Shape shape, Rng& rng) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (Index i = 0; i < t.size(); ++i) {
    const double ticks = static_cast<double>(rng.below(1u << 24)) - double(1u << 23);
    t.array()[i] = ticks * 0x1.0p-20;
  }
  return t;
}

// Random row-stochastic tensor.
Tensor random_probs(Index rows, Index cols, Rng& rng, bool requires_grad = false) {
  Tensor t = Tensor::zeros({rows, cols}, requires_grad);
  for (Index r = 0; r < rows; ++r) {
    double total = 0.0;
    for (Index c = 0; c < cols; ++c) {
      const double v = rng.uniform(0.05, 1.0);
      t.array()[r * cols + c] = v;
      total += v;
    }
    for (Index c = 0; c < cols; ++c) {
      t.array()[r * cols + c] /= total;
    }
  }
  return t;
}

// Weighted-sum head so finite differences see a non-uniform output gradient.
Tensor weighted_sum(const Tensor& t, const Tensor& w) { return op::sum(op::mul(t, w)); }

}  // namespace

TEST_CASE("matmul: identity leaves a matrix unchanged") {
  Rng rng(7);
  Tensor a = random_tensor({3, 4}, rng);
  Tensor out = op::matmul(Tensor::identity(3), a);
  for (Index i = 0; i < a.size(); ++i) {
    CHECK(out.array()[i] == a.array()[i]);
  }
}

TEST_CASE("matmul: 2x2 case matches the naive triple-loop oracle") {
  Tensor a = Tensor::from_data({2, 2}, {1, 2, 3, 4});
  Tensor b = Tensor::from_data({2, 2}, {5, 6, 7, 8});
  Tensor out = op::matmul(a, b);
  CHECK(out.at({0, 0}) == doctest::Approx(19).epsilon(1e-12));
  CHECK(out.at({0, 1}) == doctest::Approx(22).epsilon(1e-12));
  CHECK(out.at({1, 0}) == doctest::Approx(43).epsilon(1e-12));
  CHECK(out.at({1, 1}) == doctest::Approx(50).epsilon(1e-12));

  // Larger random instance against the same oracle.
  Rng rng(11);
  const Index m = 5, k = 7, n = 4;
  Tensor x = random_tensor({m, k}, rng);
  Tensor y = random_tensor({k, n}, rng);
  Tensor z = op::matmul(x, y);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < n; ++j) {
      double acc = 0.0;
      for (Index l = 0; l < k; ++l) {
        acc += x.at({i, l}) * y.at({l, j});
      }
      CHECK(z.at({i, j}) == doctest::Approx(acc).epsilon(1e-12));
    }
  }
}

TEST_CASE("matmul: mismatched inner dimensions raise a shape error naming both shapes") {
  Tensor a = Tensor::zeros({2, 3});
  Tensor b = Tensor::zeros({2, 3});
  CHECK_THROWS_AS(op::matmul(a, b), ShapeError);
  try {
    op::matmul(a, b);
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[2x3]") != std::string::npos);
  }
}

TEST_CASE("layernorm: constant row maps to zeros via eps") {
  Tensor x = Tensor::full({1, 5}, 3.25);
  Tensor gamma = Tensor::full({5}, 1.0);
  Tensor beta = Tensor::zeros({5});
  Tensor out = op::layernorm(x, gamma, beta, 1e-5);
  for (Index i = 0; i < 5; ++i) {
    CHECK(out.array()[i] == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("layernorm: already-normalized row is (almost) fixed") {
  Tensor x = Tensor::from_data({1, 2}, {1.0, -1.0});
  Tensor gamma = Tensor::full({2}, 1.0);
  Tensor beta = Tensor::zeros({2});
  Tensor out = op::layernorm(x, gamma, beta, 1e-12);
  CHECK(out.at({0, 0}) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(out.at({0, 1}) == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("layernorm: output rows have zero mean and unit variance") {
  // Output variance is sigma^2/(sigma^2+eps); rows need sigma^2 >= ~10 for the
  // 1e-6 bound at eps=1e-5.
  Rng rng(21);
  Tensor x = random_tensor({6, 32}, rng, -7.0, 7.0);
  Tensor gamma = Tensor::full({32}, 1.0);
  Tensor beta = Tensor::zeros({32});
  Tensor out = op::layernorm(x, gamma, beta, 1e-5);
  for (Index r = 0; r < 6; ++r) {
    double mean = 0.0, var = 0.0;
    for (Index c = 0; c < 32; ++c) {
      mean += out.at({r, c});
    }
    mean /= 32;
    for (Index c = 0; c < 32; ++c) {
      var += (out.at({r, c}) - mean) * (out.at({r, c}) - mean);
    }
    var /= 32;
    CHECK(std::abs(mean) <= 1e-9);
    CHECK(std::abs(var - 1.0) <= 1e-6);
  }
}

TEST_CASE("layernorm: dimension mismatch raises a shape error") {
  Tensor x = Tensor::zeros({2, 4});
  CHECK_THROWS_AS(op::layernorm(x, Tensor::zeros({5}), Tensor::zeros({5})), ShapeError);
}

TEST_CASE("softmax_rows: uniform row gives 1/d each") {
  Tensor x = Tensor::full({1, 8}, 0.7);
  Tensor out = op::softmax_rows(x);
  for (Index i = 0; i < 8; ++i) {
    CHECK(out.array()[i] == doctest::Approx(1.0 / 8).epsilon(1e-12));
  }
}

TEST_CASE("softmax_rows: closed form for [1, 2]") {
  Tensor x = Tensor::from_data({1, 2}, {1.0, 2.0});
  Tensor out = op::softmax_rows(x);
  CHECK(out.at({0, 0}) == doctest::Approx(0.26894).epsilon(1e-5));
  CHECK(out.at({0, 1}) == doctest::Approx(0.73106).epsilon(1e-5));
}

TEST_CASE("softmax_rows: constant shifts leave the output bitwise unchanged") {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    Tensor x = random_dyadic({3, 16}, rng);
    const double c = (static_cast<double>(rng.below(1u << 24)) - double(1u << 23)) * 0x1.0p-20;
    Tensor shifted = Tensor::from_array(x.shape(), x.array() + c);
    Tensor a = op::softmax_rows(x);
    Tensor b = op::softmax_rows(shifted);
    CHECK(bitwise_equal(a.array(), b.array()));
  }
}

TEST_CASE("softmax_rows: rows sum to one") {
  Rng rng(37);
  Tensor x = random_tensor({10, 33}, rng, -50.0, 50.0);
  Tensor out = op::softmax_rows(x);
  for (Index r = 0; r < 10; ++r) {
    double s = 0.0;
    for (Index c = 0; c < 33; ++c) {
      const double v = out.at({r, c});
      CHECK(v >= 0.0);
      s += v;
    }
    CHECK(std::abs(s - 1.0) <= 1e-6);
  }
}

TEST_CASE("softmax_rows: NaN input raises a numeric error") {
  Tensor x = Tensor::from_data({1, 3}, {1.0, std::nan(""), 2.0});
  CHECK_THROWS_AS(op::softmax_rows(x), NumericError);
}

TEST_CASE("backward: sum of squares gives 2x") {
  Rng rng(41);
  Tensor x = random_tensor({3, 4}, rng, -2.0, 2.0, true);
  ComputeGraph graph;
  Tensor loss;
  {
    ComputeGraph::Scope scope(graph);
    loss = op::sum(op::mul(x, x));
  }
  graph.backward(loss);
  for (Index i = 0; i < x.size(); ++i) {
    CHECK(x.grad()[i] == doctest::Approx(2.0 * x.array()[i]).epsilon(1e-12));
  }
}

TEST_CASE("backward: constant loss leaves gradients at zero") {
  Tensor x = Tensor::full({4}, 1.5, true);
  Tensor c = Tensor::scalar(3.0);
  ComputeGraph graph;
  Tensor loss;
  {
    ComputeGraph::Scope scope(graph);
    loss = op::mul_scalar(c, 2.0);  // no dependence on x
  }
  graph.backward(loss);
  Array g = x.grad_or_zero();
  for (Index i = 0; i < g.size(); ++i) {
    CHECK(g[i] == 0.0);
  }
}

TEST_CASE("backward: non-scalar loss raises a contract error") {
  Tensor x = Tensor::full({3}, 1.0, true);
  ComputeGraph graph;
  Tensor y;
  {
    ComputeGraph::Scope scope(graph);
    y = op::mul_scalar(x, 2.0);
  }
  CHECK_THROWS_AS(graph.backward(y), ContractError);
}

TEST_CASE("backward: repeated calls accumulate, zero_grad resets") {
  Tensor x = Tensor::from_data({2}, {1.0, -3.0}, true);
  ComputeGraph graph;
  Tensor loss;
  {
    ComputeGraph::Scope scope(graph);
    loss = op::sum(op::mul(x, x));
  }
  graph.backward(loss);
  graph.backward(loss);
  CHECK(x.grad()[0] == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(x.grad()[1] == doctest::Approx(-12.0).epsilon(1e-12));
  x.zero_grad();
  CHECK(x.grad()[0] == 0.0);
  CHECK(x.grad()[1] == 0.0);
}

TEST_CASE("backward: an input used on two paths receives the sum of both gradients") {
  Tensor x = Tensor::from_data({3}, {0.5, 1.5, -0.25}, true);
  ComputeGraph graph;
  Tensor loss;
  {
    ComputeGraph::Scope scope(graph);
    // f = sum(exp(x) + 3x): two distinct paths into x.
    loss = op::sum(op::add(op::exp(x), op::mul_scalar(x, 3.0)));
  }
  graph.backward(loss);
  for (Index i = 0; i < 3; ++i) {
    CHECK(x.grad()[i] == doctest::Approx(std::exp(x.array()[i]) + 3.0).epsilon(1e-12));
  }
}

TEST_CASE("reshape and transpose round-trips are bitwise exact") {
  Rng rng(53);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor x = random_tensor({4, 6}, rng, -10.0, 10.0);
    Tensor r = op::reshape(op::reshape(x, {3, 8}), {4, 6});
    CHECK(bitwise_equal(x.array(), r.array()));
    Tensor t = op::transpose(op::transpose(x));
    CHECK(bitwise_equal(x.array(), t.array()));
  }
}

TEST_CASE("gradcheck: sum of squares passes at tight tolerance") {
  Rng rng(61);
  Tensor x = random_tensor({5}, rng, -1.0, 1.0, true);
  GradCheckOptions opt;
  opt.tol = 1e-6;
  auto res = gradcheck([&] { return op::sum(op::mul(x, x)); },
                       std::span<const Tensor>(&x, 1), opt);
  INFO(res.worst);
  CHECK(res.pass);
}

TEST_CASE("gradcheck: a corrupted backward rule is detected") {
  // Forward computes 2a but the recorded rule claims d/da = 3.
  auto bad_double = [](const Tensor& a) {
    Tensor out = Tensor::from_array(a.shape(), a.array() * 2.0);
    if (ComputeGraph* g = ComputeGraph::current()) {
      g->record({a}, out, [a, out] {
        TensorAccess::grad_buffer(a) += out.grad() * 3.0;
      });
    }
    return out;
  };
  Tensor x = Tensor::from_data({3}, {1.0, 2.0, 3.0}, true);
  auto res = gradcheck([&] { return op::sum(bad_double(x)); },
                       std::span<const Tensor>(&x, 1));
  CHECK_FALSE(res.pass);
  CHECK(res.max_error >= 1e-4);
}

TEST_CASE("finite differences hold for every operation on random shapes") {
  struct OpCase {
    const char* name;
    std::function<GradCheckResult(std::uint64_t)> run;
  };

  auto check_unary = [](std::uint64_t seed, double lo, double hi,
                        const std::function<Tensor(const Tensor&)>& fn) {
    Rng rng(seed);
    const Index r = 2 + static_cast<Index>(rng.below(3));
    const Index c = 2 + static_cast<Index>(rng.below(4));
    Tensor x = random_tensor({r, c}, rng, lo, hi, true);
    Tensor w = random_tensor({r, c}, rng);
    return gradcheck([&] { return weighted_sum(fn(x), w); },
                     std::span<const Tensor>(&x, 1));
  };

  std::vector<OpCase> cases;
  cases.push_back({"add", [](std::uint64_t seed) {
    Rng rng(seed);
    const Index r = 2 + static_cast<Index>(rng.below(3)), c = 2 + static_cast<Index>(rng.below(4));
    std::vector<Tensor> in{random_tensor({r, c}, rng, -2, 2, true),
                           random_tensor({r, c}, rng, -2, 2, true)};
    Tensor w = random_tensor({r, c}, rng);
    return gradcheck([&] { return weighted_sum(op::add(in[0], in[1]), w); }, in);
  }});
  cases.push_back({"sub", [](std::uint64_t seed) {
    Rng rng(seed ^ 0x101);
    const Index r = 2 + static_cast<Index>(rng.below(3)), c = 2 + static_cast<Index>(rng.below(4));
    std::vector<Tensor> in{random_tensor({r, c}, rng, -2, 2, true),
                           random_tensor({r, c}, rng, -2, 2, true)};
    Tensor w = random_tensor({r, c}, rng);
    return gradcheck([&] { return weighted_sum(op::sub(in[0], in[1]), w); }, in);
  }});
  cases.push_back({"mul", [](std::uint64_t seed) {
    Rng rng(seed ^ 0x202);
    const Index r = 2 + static_cast<Index>(rng.below(3)), c = 2 + static_cast<Index>(rng.below(4));
    std::vector<Tensor> in{random_tensor({r, c}, rng, -2, 2, true),
                           random_tensor({r, c}, rng, -2, 2, true)};
    Tensor w = random_tensor({r, c}, rng);
    return gradcheck([&] { return weighted_sum(op::mul(in[0], in[1]), w); }, in);
  }});
  cases.push_back({"add_scalar", [&](std::uint64_t seed) {
    return check_unary(seed ^ 0x303, -2, 2, [](const Tensor& x) { return op::add_scalar(x, 1.7); });
  }});
  cases.push_back({"mul_scalar", [&](std::uint64_t seed) {
    return check_unary(seed ^ 0x404, -2, 2, [](const Tensor& x) { return op::mul_scalar(x, -0.6); });
  }});
  cases.push_back({"exp", [&](std::uint64_t seed) {
    return check_unary(seed ^ 0x505, -1.5, 1.5, [](const Tensor& x) { return op::exp(x); });
  }});
  cases.push_back({"log", [&](std::uint64_t seed) {
    return check_unary(seed ^ 0x606, 0.4, 3.0, [](const Tensor& x) { return op::log(x); });
  }});
  cases.push_back({"gelu", [&](std::uint64_t seed) {
    return check_unary(seed ^ 0x707, -3.0, 3.0, [](const Tensor& x) { return op::gelu(x); });
  }});
  cases.push_back({"matmul", [](std::uint64_t seed) {
    Rng rng(seed ^ 0x808);
    const Index m = 2 + static_cast<Index>(rng.below(3));
    const Index k = 2 + static_cast<Index>(rng.below(3));
    const Index n = 2 + static_cast<Index>(rng.below(3));
    std::vector<Tensor> in{random_tensor({m, k}, rng, -1, 1, true),
                           random_tensor({k, n}, rng, -1, 1, true)};
    Tensor w = random_tensor({m, n}, rng);
    return gradcheck([&] { return weighted_sum(op::matmul(in[0], in[1]), w); }, in);
  }});
  cases.push_back({"bmm", [](std::uint64_t seed) {
    Rng rng(seed ^ 0x909);
    const Index n = 1 + static_cast<Index>(rng.below(3));
    const Index m = 2 + static_cast<Index>(rng.below(2));
    const Index k = 2 + static_cast<Index>(rng.below(2));
    const Index p = 2 + static_cast<Index>(rng.below(2));
    std::vector<Tensor> in{random_tensor({n, m, k}, rng, -1, 1, true),
                           random_tensor({n, k, p}, rng, -1, 1, true)};
    Tensor w = random_tensor({n, m, p}, rng);
    return gradcheck([&] { return weighted_sum(op::bmm(in[0], in[1]), w); }, in);
  }});
  cases.push_back({"bmm_nt", [](std::uint64_t seed) {
    Rng rng(seed ^ 0xa0a);
    const Index n = 1 + static_cast<Index>(rng.below(3));
    const Index m = 2 + static_cast<Index>(rng.below(2));
    const Index k = 2 + static_cast<Index>(rng.below(2));
    const Index p = 2 + static_cast<Index>(rng.below(2));
    std::vector<Tensor> in{random_tensor({n, m, k}, rng, -1, 1, true),
                           random_tensor({n, p, k}, rng, -1, 1, true)};
    Tensor w = random_tensor({n, m, p}, rng);
    return gradcheck([&] { return weighted_sum(op::bmm_nt(in[0], in[1]), w); }, in);
  }});
  cases.push_back({"reshape", [&](std::uint64_t seed) {
    Rng rng(seed ^ 0xb0b);
    const Index r = 2 + static_cast<Index>(rng.below(3));
    Tensor x = random_tensor({r, 6}, rng, -2, 2, true);
    Tensor w = random_tensor({r * 2, 3}, rng);
    return gradcheck([&] { return weighted_sum(op::reshape(x, {r * 2, 3}), w); },
                     std::span<const Tensor>(&x, 1));
  }});
  cases.push_back({"transpose", [](std::uint64_t seed) {
    Rng rng(seed ^ 0xc0c);
    const Index r = 2 + static_cast<Index>(rng.below(3)), c = 2 + static_cast<Index>(rng.below(4));
    Tensor x = random_tensor({r, c}, rng, -2, 2, true);
    Tensor w = random_tensor({c, r}, rng);
    return gradcheck([&] { return weighted_sum(op::transpose(x), w); },
                     std::span<const Tensor>(&x, 1));
  }});
  cases.push_back({"concat_rows", [](std::uint64_t seed) {
    Rng rng(seed ^ 0xd0d);
    const Index c = 2 + static_cast<Index>(rng.below(3));
    const Index ra = 1 + static_cast<Index>(rng.below(3)), rb = 1 + static_cast<Index>(rng.below(3));
    std::vector<Tensor> in{random_tensor({ra, c}, rng, -2, 2, true),
                           random_tensor({rb, c}, rng, -2, 2, true)};
    Tensor w = random_tensor({ra + rb, c}, rng);
    return gradcheck([&] { return weighted_sum(op::concat_rows(in[0], in[1]), w); }, in);
  }});
  cases.push_back({"take_rows", [](std::uint64_t seed) {
    Rng rng(seed ^ 0xe0e);
    const Index r = 3 + static_cast<Index>(rng.below(3)), c = 2 + static_cast<Index>(rng.below(3));
    Tensor x = random_tensor({r, c}, rng, -2, 2, true);
    // Duplicates on purpose: the backward rule must accumulate.
    std::vector<Index> rows{0, static_cast<Index>(rng.below(static_cast<std::uint64_t>(r))), 0,
                            r - 1};
    Tensor w = random_tensor({static_cast<Index>(rows.size()), c}, rng);
    return gradcheck([&] { return weighted_sum(op::take_rows(x, rows), w); },
                     std::span<const Tensor>(&x, 1));
  }});
  cases.push_back({"swap_axes12", [](std::uint64_t seed) {
    Rng rng(seed ^ 0xf0f);
    const Index a = 1 + static_cast<Index>(rng.below(2)), b = 2 + static_cast<Index>(rng.below(2));
    const Index c = 2 + static_cast<Index>(rng.below(2)), d = 2 + static_cast<Index>(rng.below(2));
    Tensor x = random_tensor({a, b, c, d}, rng, -2, 2, true);
    Tensor w = random_tensor({a, c, b, d}, rng);
    return gradcheck([&] { return weighted_sum(op::swap_axes12(x), w); },
                     std::span<const Tensor>(&x, 1));
  }});
  cases.push_back({"add_row_bias", [](std::uint64_t seed) {
    Rng rng(seed ^ 0x111);
    const Index r = 2 + static_cast<Index>(rng.below(3)), c = 2 + static_cast<Index>(rng.below(4));
    std::vector<Tensor> in{random_tensor({r, c}, rng, -2, 2, true),
                           random_tensor({c}, rng, -2, 2, true)};
    Tensor w = random_tensor({r, c}, rng);
    return gradcheck([&] { return weighted_sum(op::add_row_bias(in[0], in[1]), w); }, in);
  }});
  cases.push_back({"add_tiled_rows", [](std::uint64_t seed) {
    Rng rng(seed ^ 0x222);
    const Index t = 2 + static_cast<Index>(rng.below(2));
    const Index reps = 1 + static_cast<Index>(rng.below(3));
    const Index c = 2 + static_cast<Index>(rng.below(3));
    std::vector<Tensor> in{random_tensor({reps * t, c}, rng, -2, 2, true),
                           random_tensor({t, c}, rng, -2, 2, true)};
    Tensor w = random_tensor({reps * t, c}, rng);
    return gradcheck([&] { return weighted_sum(op::add_tiled_rows(in[0], in[1]), w); }, in);
  }});
  cases.push_back({"layernorm", [](std::uint64_t seed) {
    Rng rng(seed ^ 0x333);
    const Index r = 2 + static_cast<Index>(rng.below(3)), c = 3 + static_cast<Index>(rng.below(4));
    std::vector<Tensor> in{random_tensor({r, c}, rng, -2, 2, true),
                           random_tensor({c}, rng, 0.5, 1.5, true),
                           random_tensor({c}, rng, -0.5, 0.5, true)};
    Tensor w = random_tensor({r, c}, rng);
    return gradcheck([&] { return weighted_sum(op::layernorm(in[0], in[1], in[2]), w); }, in);
  }});
  cases.push_back({"softmax_rows", [](std::uint64_t seed) {
    Rng rng(seed ^ 0x444);
    const Index r = 2 + static_cast<Index>(rng.below(3)), c = 3 + static_cast<Index>(rng.below(4));
    Tensor x = random_tensor({r, c}, rng, -2, 2, true);
    Tensor w = random_tensor({r, c}, rng);
    return gradcheck([&] { return weighted_sum(op::softmax_rows(x), w); },
                     std::span<const Tensor>(&x, 1));
  }});
  cases.push_back({"sum", [](std::uint64_t seed) {
    Rng rng(seed ^ 0x555);
    Tensor x = random_tensor({3, 3}, rng, -2, 2, true);
    return gradcheck([&] { return op::sum(x); }, std::span<const Tensor>(&x, 1));
  }});
  cases.push_back({"mean", [](std::uint64_t seed) {
    Rng rng(seed ^ 0x666);
    Tensor x = random_tensor({4, 2}, rng, -2, 2, true);
    return gradcheck([&] { return op::mean(x); }, std::span<const Tensor>(&x, 1));
  }});
  cases.push_back({"cross_entropy", [](std::uint64_t seed) {
    Rng rng(seed ^ 0x777);
    const Index b = 2 + static_cast<Index>(rng.below(3)), k = 3 + static_cast<Index>(rng.below(4));
    std::vector<Tensor> in{random_probs(b, k, rng, true), random_probs(b, k, rng, true)};
    return gradcheck([&] { return op::cross_entropy(in[0], in[1]); }, in);
  }});

  for (const auto& c : cases) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      auto res = c.run(seed);
      INFO(c.name << " seed " << seed << ": max_error=" << res.max_error
                  << " worst=" << res.worst);
      CHECK(res.pass);
    }
  }
}

TEST_CASE("random multi-op graph matches finite differences") {
  Rng rng(71);
  Tensor x = random_tensor({3, 4}, rng, -1.0, 1.0, true);
  Tensor w1 = random_tensor({4, 5}, rng, -1.0, 1.0, true);
  Tensor w2 = random_tensor({3, 5}, rng);
  std::vector<Tensor> inputs{x, w1};
  auto res = gradcheck(
      [&] { return op::sum(op::mul(op::gelu(op::matmul(x, w1)), w2)); }, inputs);
  INFO(res.worst);
  CHECK(res.pass);
  CHECK(res.max_error <= 1e-4);
}
