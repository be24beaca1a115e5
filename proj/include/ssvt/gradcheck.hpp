// Copyright (c) 2026 The ssvt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include "ssvt/tensor.hpp"

namespace ssvt {

struct GradCheckOptions {
  double step = 1e-5;
  double tol = 1e-4;
  // Below this analytic/numeric magnitude the comparison switches from
  // relative to absolute error.
  double abs_switch = 1e-6;
  // 0 checks every element; otherwise a deterministic random sample of this
  // many elements per input tensor.
  Index max_elements_per_tensor = 0;
  std::uint64_t sample_seed = 0x5eed;
};

struct GradCheckResult {
  bool pass = false;
  double max_error = 0.0;   // max over checked elements (relative or absolute)
  Index checked = 0;        // number of elements compared
  std::string worst;        // location and values of the worst element
};

// Compares backward() gradients of the scalar f() against central finite
// differences over the elements of `inputs`. f is re-evaluated eagerly for
// each perturbation, so it must be a pure function of the input tensors.
// Never throws on mismatch; always returns a report.
GradCheckResult gradcheck(const std::function<Tensor()>& f,
                          std::span<const Tensor> inputs,
                          const GradCheckOptions& options = {});

}  // namespace ssvt
