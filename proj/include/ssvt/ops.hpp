// Copyright (c) 2026 The ssvt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "ssvt/tensor.hpp"

namespace ssvt::ops {

// Differentiable tensor operations. Each function shape-checks its inputs,
// computes the forward value with Eigen, and records a backward rule on the
// active ComputeGraph when any input tracks gradients.
//
// Broadcasting is deliberately limited to scalar-tensor ops and the per-row
// forms below; everything else requires exact shape agreement.

// ---- elementwise ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor add_scalar(const Tensor& a, double s);
Tensor mul_scalar(const Tensor& a, double s);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
// Tanh approximation of GELU; its derivative is closed-form.
Tensor gelu(const Tensor& a);

// ---- matrix products ----
Tensor matmul(const Tensor& a, const Tensor& b);    // [m,k] x [k,n]
Tensor bmm(const Tensor& a, const Tensor& b);       // [n,m,k] x [n,k,p]
Tensor bmm_nt(const Tensor& a, const Tensor& b);    // [n,m,k] x [n,p,k]^T -> [n,m,p]

// ---- structure ----
Tensor reshape(const Tensor& a, Shape shape);       // same element count
Tensor transpose(const Tensor& a);                  // rank-2
Tensor concat_rows(const Tensor& a, const Tensor& b);
Tensor take_rows(const Tensor& a, std::vector<Index> rows);
Tensor swap_axes12(const Tensor& a);                // [a,b,c,d] -> [a,c,b,d]

// ---- per-row broadcasts ----
// x: [..., d] plus bias [d], added to every row.
Tensor add_row_bias(const Tensor& x, const Tensor& bias);
// x: [(b*t), d] plus rows [t, d], tiled over the leading factor b.
Tensor add_tiled_rows(const Tensor& x, const Tensor& rows);

// ---- normalization ----
// Rows over the last axis: zero mean, unit variance (up to eps), then
// gamma * x + beta.
Tensor layernorm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                 double eps = 1e-5);
// Stable softmax over the last axis (max subtraction). NaN input is rejected.
Tensor softmax_rows(const Tensor& x);

// ---- reductions ----
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

// ---- losses ----
// target, pred: [b, k] row-stochastic. Mean over rows of -sum(target*log(pred)),
// with pred clamped to >= 1e-12 before the log.
Tensor cross_entropy(const Tensor& target, const Tensor& pred);

inline constexpr double kLogClamp = 1e-12;

}  // namespace ssvt::ops
