// Copyright (c) 2026 The ssvt Authors
// SPDX-License-Identifier: Apache-2.0

#include "ssvt/metrics.hpp"

#include <algorithm>
#include <numeric>

#include <json.hpp>

namespace ssvt::metrics {

double accuracy(std::span<const int> pred_labels, std::span<const int> true_labels) {
  if (pred_labels.empty() || pred_labels.size() != true_labels.size()) {
    throw InputError("accuracy: label lists must be non-empty and equal length");
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred_labels.size(); ++i) {
    hits += pred_labels[i] == true_labels[i] ? 1u : 0u;
  }
  return static_cast<double>(hits) / static_cast<double>(pred_labels.size());
}

double roc_auc_binary(std::span<const double> scores, std::span<const int> labels) {
  if (scores.empty() || scores.size() != labels.size()) {
    throw InputError("roc_auc_binary: scores and labels must be non-empty and aligned");
  }
  std::size_t positives = 0;
  for (int label : labels) {
    if (label != 0 && label != 1) {
      throw InputError("roc_auc_binary: labels must be 0 or 1");
    }
    positives += static_cast<std::size_t>(label);
  }
  const std::size_t negatives = scores.size() - positives;
  if (positives == 0 || negatives == 0) {
    throw UndefinedMetricError("roc_auc_binary: both classes must be present");
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Average 1-based ranks over tie groups, accumulated for positives.
  double positive_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) {
      ++j;
    }
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j + 1);
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]] == 1) {
        positive_rank_sum += avg_rank;
      }
    }
    i = j + 1;
  }
  const double n1 = static_cast<double>(positives);
  const double n0 = static_cast<double>(negatives);
  const double u = positive_rank_sum - n1 * (n1 + 1.0) / 2.0;
  return u / (n1 * n0);
}

MacroAuc auc_macro_ovr(const Tensor& prob_matrix, std::span<const int> labels) {
  if (prob_matrix.rank() != 2 ||
      prob_matrix.dim(0) != static_cast<Index>(labels.size())) {
    throw ShapeError("auc_macro_ovr: probability matrix and labels are misaligned");
  }
  const Index n = prob_matrix.dim(0);
  const Index c = prob_matrix.dim(1);
  std::vector<long> counts(static_cast<std::size_t>(c), 0);
  for (int label : labels) {
    if (label < 0 || label >= c) {
      throw InputError("auc_macro_ovr: label outside [0, C)");
    }
    ++counts[static_cast<std::size_t>(label)];
  }
  for (Index cls = 0; cls < c; ++cls) {
    if (counts[static_cast<std::size_t>(cls)] == 0) {
      throw UndefinedMetricError("auc_macro_ovr: class " + std::to_string(cls) +
                                 " absent from labels");
    }
  }

  MacroAuc out;
  out.per_class.reserve(static_cast<std::size_t>(c));
  std::vector<double> column(static_cast<std::size_t>(n));
  std::vector<int> indicator(static_cast<std::size_t>(n));
  for (Index cls = 0; cls < c; ++cls) {
    for (Index r = 0; r < n; ++r) {
      column[static_cast<std::size_t>(r)] = prob_matrix.array()[r * c + cls];
      indicator[static_cast<std::size_t>(r)] =
          labels[static_cast<std::size_t>(r)] == cls ? 1 : 0;
    }
    out.per_class.push_back(roc_auc_binary(column, indicator));
  }
  out.mean = std::accumulate(out.per_class.begin(), out.per_class.end(), 0.0) /
             static_cast<double>(c);
  return out;
}

std::string to_json(const EvalReport& report) {
  nlohmann::json j;
  j["accuracy"] = report.accuracy;
  j["auc_per_class"] = report.auc_per_class;
  j["auc_mean"] = report.auc_mean;
  j["class_counts"] = report.class_counts;
  j["split"] = report.split;
  return j.dump(2) + "\n";
}

}  // namespace ssvt::metrics
