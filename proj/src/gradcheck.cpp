// Copyright (c) 2026 The ssvt Authors
// SPDX-License-Identifier: Apache-2.0

#include "ssvt/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "ssvt/rng.hpp"

namespace ssvt {

namespace {

std::vector<Index> element_sample(Index size, Index limit, Rng& rng) {
  std::vector<Index> all(static_cast<std::size_t>(size));
  for (Index i = 0; i < size; ++i) {
    all[static_cast<std::size_t>(i)] = i;
  }
  if (limit <= 0 || limit >= size) {
    return all;
  }
  rng.shuffle(all);
  all.resize(static_cast<std::size_t>(limit));
  std::sort(all.begin(), all.end());
  return all;
}

}  // namespace

GradCheckResult gradcheck(const std::function<Tensor()>& f,
                          std::span<const Tensor> inputs,
                          const GradCheckOptions& options) {
  GradCheckResult result;

  // Analytic pass.
  std::vector<Array> analytic;
  {
    ComputeGraph graph;
    Tensor loss;
    {
      ComputeGraph::Scope scope(graph);
      loss = f();
    }
    if (!loss.defined() || loss.size() != 1) {
      throw ContractError("gradcheck: f must return a scalar tensor");
    }
    for (const Tensor& t : inputs) {
      t.zero_grad();
    }
    graph.backward(loss);
    analytic.reserve(inputs.size());
    for (const Tensor& t : inputs) {
      analytic.push_back(t.grad_or_zero());
    }
  }

  // Numeric pass: central differences, one element at a time.
  const double h = options.step;
  Rng rng(options.sample_seed);
  for (std::size_t ti = 0; ti < inputs.size(); ++ti) {
    Tensor t = inputs[ti];
    Array& data = t.array();
    const std::vector<Index> elements =
        element_sample(t.size(), options.max_elements_per_tensor, rng);
    for (Index e : elements) {
      const double saved = data[e];
      double plus = 0.0, minus = 0.0;
      {
        NoGradGuard no_grad;
        data[e] = saved + h;
        plus = f().value();
        data[e] = saved - h;
        minus = f().value();
      }
      data[e] = saved;
      const double numeric = (plus - minus) / (2.0 * h);
      const double a = analytic[ti][e];
      const double scale = std::max(std::abs(a), std::abs(numeric));
      const double err =
          scale < options.abs_switch ? std::abs(a - numeric)
                                     : std::abs(a - numeric) / scale;
      ++result.checked;
      if (err > result.max_error) {
        result.max_error = err;
        std::ostringstream w;
        w << "input#" << ti << "[" << e << "]: analytic=" << a
          << " numeric=" << numeric;
        result.worst = w.str();
      }
    }
  }
  result.pass = result.max_error <= options.tol;
  return result;
}

}  // namespace ssvt
