// Copyright (c) 2026 The ssvt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <vector>

#include "ssvt/tensor.hpp"

namespace ssvt::metrics {

// Exact-match fraction.
double accuracy(std::span<const int> pred_labels, std::span<const int> true_labels);

// Mann-Whitney statistic via average ranks: the fraction of
// (positive, negative) pairs where the positive scores higher, ties counting
// one half. O(n log n). Both classes must be present.
double roc_auc_binary(std::span<const double> scores, std::span<const int> labels);

struct MacroAuc {
  std::vector<double> per_class;
  double mean = 0.0;
};

// One-vs-rest AUC per class (column c of prob_matrix scored against
// label == c) plus the unweighted mean.
MacroAuc auc_macro_ovr(const Tensor& prob_matrix, std::span<const int> labels);

struct EvalReport {
  double accuracy = 0.0;
  std::vector<double> auc_per_class;
  double auc_mean = 0.0;
  std::vector<long> class_counts;
  std::string split = "test";
};

// JSON document with keys accuracy, auc_per_class, auc_mean, class_counts,
// split.
std::string to_json(const EvalReport& report);

}  // namespace ssvt::metrics
