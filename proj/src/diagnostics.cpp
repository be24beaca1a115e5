// Copyright (c) 2026 The ssvt Authors
// SPDX-License-Identifier: Apache-2.0

#include "ssvt/diagnostics.hpp"

#include <functional>

#include "ssvt/augment.hpp"
#include "ssvt/distill.hpp"
#include "ssvt/ops.hpp"
#include "ssvt/rng.hpp"
#include "ssvt/vit.hpp"

namespace ssvt::diag {

namespace {

namespace op = ssvt::ops;

Tensor random_tensor(Shape shape, Rng& rng, double lo = -2.0, double hi = 2.0,
                     bool requires_grad = false) {
  Tensor t = Tensor::zeros(std::move(shape), requires_grad);
  for (Index i = 0; i < t.size(); ++i) {
    t.array()[i] = rng.uniform(lo, hi);
  }
  return t;
}

Tensor random_probs(Index rows, Index cols, Rng& rng, bool requires_grad) {
  Tensor t = random_tensor({rows, cols}, rng, 0.05, 1.0, requires_grad);
  for (Index r = 0; r < rows; ++r) {
    auto seg = t.array().segment(r * cols, cols);
    seg /= seg.sum();
  }
  return t;
}

Tensor weighted(const Tensor& x, const Tensor& w) { return op::sum(op::mul(x, w)); }

OpCheckReport run_case(const std::string& name,
                       const std::function<GradCheckResult(std::uint64_t)>& fn,
                       int seeds = 3, double tol = 1e-4) {
  OpCheckReport report;
  report.name = name;
  report.tol = tol;
  report.pass = true;
  for (std::uint64_t seed = 0; seed < static_cast<std::uint64_t>(seeds); ++seed) {
    GradCheckResult res = fn(seed);
    report.checked += res.checked;
    if (res.max_error > report.max_error) {
      report.max_error = res.max_error;
      report.worst = res.worst;
    }
    report.pass = report.pass && res.max_error <= tol;
  }
  return report;
}

GradCheckResult unary_case(std::uint64_t seed, double lo, double hi,
                           const std::function<Tensor(const Tensor&)>& fn) {
  Rng rng(seed * 7919 + 17);
  const Index r = 2 + static_cast<Index>(rng.below(3));
  const Index c = 2 + static_cast<Index>(rng.below(4));
  Tensor x = random_tensor({r, c}, rng, lo, hi, true);
  Tensor w = random_tensor({r, c}, rng);
  return gradcheck([&, x, w] { return weighted(fn(x), w); },
                   std::span<const Tensor>(&x, 1));
}

GradCheckResult binary_case(std::uint64_t seed,
                            const std::function<Tensor(const Tensor&, const Tensor&)>& fn) {
  Rng rng(seed * 104729 + 31);
  const Index r = 2 + static_cast<Index>(rng.below(3));
  const Index c = 2 + static_cast<Index>(rng.below(4));
  std::vector<Tensor> in{random_tensor({r, c}, rng, -2, 2, true),
                         random_tensor({r, c}, rng, -2, 2, true)};
  Tensor w = random_tensor({r, c}, rng);
  return gradcheck([&, w] { return weighted(fn(in[0], in[1]), w); }, in);
}

GradCheckResult full_model_case(std::uint64_t seed) {
  const auto model_cfg = vit::ModelConfig::micro();
  augment::CropConfig crop_cfg;
  crop_cfg.n_global = 1;
  crop_cfg.n_local = 2;
  crop_cfg.out_size = model_cfg.image_size;
  crop_cfg.seed = seed;

  Rng rng(seed + 555);
  Tensor image = random_tensor({3, 40, 40}, rng, 0.0, 1.0);
  augment::CropSet crops = augment::build_crop_set(image, crop_cfg, 0);

  distill::DistillState state;
  state.teacher = vit::init_params(model_cfg, seed + 1);
  state.student = vit::init_params(model_cfg, seed + 2);
  state.student.set_requires_grad(true);
  distill::DistillConfig dcfg;
  dcfg.proj_dim = model_cfg.proj_dim;

  std::vector<Tensor> inputs;
  for (auto& [name, t] : state.student.entries) {
    inputs.push_back(t);
  }
  GradCheckOptions opt;
  opt.max_elements_per_tensor = 5;
  opt.sample_seed = seed;
  return gradcheck([&] { return distill::pair_loss(state, crops, dcfg); }, inputs, opt);
}

}  // namespace

std::vector<OpCheckReport> gradcheck_suite() {
  std::vector<OpCheckReport> reports;

  reports.push_back(run_case("add", [](std::uint64_t s) {
    return binary_case(s, [](const Tensor& a, const Tensor& b) { return op::add(a, b); });
  }));
  reports.push_back(run_case("sub", [](std::uint64_t s) {
    return binary_case(s + 100, [](const Tensor& a, const Tensor& b) { return op::sub(a, b); });
  }));
  reports.push_back(run_case("mul", [](std::uint64_t s) {
    return binary_case(s + 200, [](const Tensor& a, const Tensor& b) { return op::mul(a, b); });
  }));
  reports.push_back(run_case("add_scalar", [](std::uint64_t s) {
    return unary_case(s + 300, -2, 2, [](const Tensor& x) { return op::add_scalar(x, 0.37); });
  }));
  reports.push_back(run_case("mul_scalar", [](std::uint64_t s) {
    return unary_case(s + 400, -2, 2, [](const Tensor& x) { return op::mul_scalar(x, -1.9); });
  }));
  reports.push_back(run_case("exp", [](std::uint64_t s) {
    return unary_case(s + 500, -1.5, 1.5, [](const Tensor& x) { return op::exp(x); });
  }));
  reports.push_back(run_case("log", [](std::uint64_t s) {
    return unary_case(s + 600, 0.4, 3.0, [](const Tensor& x) { return op::log(x); });
  }));
  reports.push_back(run_case("gelu", [](std::uint64_t s) {
    return unary_case(s + 700, -3.0, 3.0, [](const Tensor& x) { return op::gelu(x); });
  }));
  reports.push_back(run_case("matmul", [](std::uint64_t s) {
    Rng rng(s + 800);
    const Index m = 2 + static_cast<Index>(rng.below(3));
    const Index k = 2 + static_cast<Index>(rng.below(3));
    const Index n = 2 + static_cast<Index>(rng.below(3));
    std::vector<Tensor> in{random_tensor({m, k}, rng, -1, 1, true),
                           random_tensor({k, n}, rng, -1, 1, true)};
    Tensor w = random_tensor({m, n}, rng);
    return gradcheck([&, w] { return weighted(op::matmul(in[0], in[1]), w); }, in);
  }));
  reports.push_back(run_case("bmm", [](std::uint64_t s) {
    Rng rng(s + 900);
    const Index n = 2, m = 3, k = 2, p = 3;
    std::vector<Tensor> in{random_tensor({n, m, k}, rng, -1, 1, true),
                           random_tensor({n, k, p}, rng, -1, 1, true)};
    Tensor w = random_tensor({n, m, p}, rng);
    return gradcheck([&, w] { return weighted(op::bmm(in[0], in[1]), w); }, in);
  }));
  reports.push_back(run_case("bmm_nt", [](std::uint64_t s) {
    Rng rng(s + 1000);
    const Index n = 2, m = 3, k = 2, p = 3;
    std::vector<Tensor> in{random_tensor({n, m, k}, rng, -1, 1, true),
                           random_tensor({n, p, k}, rng, -1, 1, true)};
    Tensor w = random_tensor({n, m, p}, rng);
    return gradcheck([&, w] { return weighted(op::bmm_nt(in[0], in[1]), w); }, in);
  }));
  reports.push_back(run_case("reshape", [](std::uint64_t s) {
    Rng rng(s + 1100);
    Tensor x = random_tensor({4, 6}, rng, -2, 2, true);
    Tensor w = random_tensor({8, 3}, rng);
    return gradcheck([&, w] { return weighted(op::reshape(x, {8, 3}), w); },
                     std::span<const Tensor>(&x, 1));
  }));
  reports.push_back(run_case("transpose", [](std::uint64_t s) {
    Rng rng(s + 1200);
    Tensor x = random_tensor({3, 5}, rng, -2, 2, true);
    Tensor w = random_tensor({5, 3}, rng);
    return gradcheck([&, w] { return weighted(op::transpose(x), w); },
                     std::span<const Tensor>(&x, 1));
  }));
  reports.push_back(run_case("concat_rows", [](std::uint64_t s) {
    Rng rng(s + 1300);
    std::vector<Tensor> in{random_tensor({2, 4}, rng, -2, 2, true),
                           random_tensor({3, 4}, rng, -2, 2, true)};
    Tensor w = random_tensor({5, 4}, rng);
    return gradcheck([&, w] { return weighted(op::concat_rows(in[0], in[1]), w); }, in);
  }));
  reports.push_back(run_case("take_rows", [](std::uint64_t s) {
    Rng rng(s + 1400);
    Tensor x = random_tensor({5, 3}, rng, -2, 2, true);
    std::vector<Index> rows{0, 2, 0, 4, 2};
    Tensor w = random_tensor({5, 3}, rng);
    return gradcheck([&, w, rows] { return weighted(op::take_rows(x, rows), w); },
                     std::span<const Tensor>(&x, 1));
  }));
  reports.push_back(run_case("swap_axes12", [](std::uint64_t s) {
    Rng rng(s + 1500);
    Tensor x = random_tensor({2, 3, 2, 2}, rng, -2, 2, true);
    Tensor w = random_tensor({2, 2, 3, 2}, rng);
    return gradcheck([&, w] { return weighted(op::swap_axes12(x), w); },
                     std::span<const Tensor>(&x, 1));
  }));
  reports.push_back(run_case("add_row_bias", [](std::uint64_t s) {
    Rng rng(s + 1600);
    std::vector<Tensor> in{random_tensor({4, 5}, rng, -2, 2, true),
                           random_tensor({5}, rng, -2, 2, true)};
    Tensor w = random_tensor({4, 5}, rng);
    return gradcheck([&, w] { return weighted(op::add_row_bias(in[0], in[1]), w); }, in);
  }));
  reports.push_back(run_case("add_tiled_rows", [](std::uint64_t s) {
    Rng rng(s + 1700);
    std::vector<Tensor> in{random_tensor({6, 3}, rng, -2, 2, true),
                           random_tensor({3, 3}, rng, -2, 2, true)};
    Tensor w = random_tensor({6, 3}, rng);
    return gradcheck([&, w] { return weighted(op::add_tiled_rows(in[0], in[1]), w); }, in);
  }));
  reports.push_back(run_case("layernorm", [](std::uint64_t s) {
    Rng rng(s + 1800);
    std::vector<Tensor> in{random_tensor({3, 6}, rng, -2, 2, true),
                           random_tensor({6}, rng, 0.5, 1.5, true),
                           random_tensor({6}, rng, -0.5, 0.5, true)};
    Tensor w = random_tensor({3, 6}, rng);
    return gradcheck([&, w] { return weighted(op::layernorm(in[0], in[1], in[2]), w); }, in);
  }));
  reports.push_back(run_case("softmax_rows", [](std::uint64_t s) {
    Rng rng(s + 1900);
    Tensor x = random_tensor({3, 7}, rng, -2, 2, true);
    Tensor w = random_tensor({3, 7}, rng);
    return gradcheck([&, w] { return weighted(op::softmax_rows(x), w); },
                     std::span<const Tensor>(&x, 1));
  }));
  reports.push_back(run_case("sum", [](std::uint64_t s) {
    Rng rng(s + 2000);
    Tensor x = random_tensor({3, 4}, rng, -2, 2, true);
    return gradcheck([&] { return op::sum(x); }, std::span<const Tensor>(&x, 1));
  }));
  reports.push_back(run_case("mean", [](std::uint64_t s) {
    Rng rng(s + 2100);
    Tensor x = random_tensor({2, 6}, rng, -2, 2, true);
    return gradcheck([&] { return op::mean(x); }, std::span<const Tensor>(&x, 1));
  }));
  reports.push_back(run_case("cross_entropy", [](std::uint64_t s) {
    Rng rng(s + 2200);
    std::vector<Tensor> in{random_probs(3, 5, rng, true), random_probs(3, 5, rng, true)};
    return gradcheck([&] { return op::cross_entropy(in[0], in[1]); }, in);
  }));
  reports.push_back(run_case("sharpen", [](std::uint64_t s) {
    Rng rng(s + 2300);
    Tensor x = random_tensor({2, 6}, rng, -1, 1, true);
    Tensor w = random_tensor({2, 6}, rng);
    return gradcheck([&, w] { return weighted(distill::sharpen(x, 0.1), w); },
                     std::span<const Tensor>(&x, 1));
  }));
  reports.push_back(run_case(
      "distill_loss_full_model",
      [](std::uint64_t s) { return full_model_case(s); }, 1));

  return reports;
}

bool all_pass(const std::vector<OpCheckReport>& reports) {
  for (const auto& report : reports) {
    if (!report.pass) {
      return false;
    }
  }
  return true;
}

}  // namespace ssvt::diag
