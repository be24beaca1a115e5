// Copyright (c) 2026 The ssvt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "ssvt/gradcheck.hpp"

namespace ssvt::diag {

struct OpCheckReport {
  std::string name;
  double max_error = 0.0;
  double tol = 0.0;
  Index checked = 0;
  bool pass = false;
  std::string worst;
};

// Finite-difference verification of every differentiable operation on random
// shapes, plus the full distillation loss of a 2-block model with sampled
// parameter elements. Step 1e-5, tolerance 1e-4.
std::vector<OpCheckReport> gradcheck_suite();

bool all_pass(const std::vector<OpCheckReport>& reports);

}  // namespace ssvt::diag
