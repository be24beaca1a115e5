// Copyright (c) 2026 The ssvt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "ssvt/distill.hpp"
#include "ssvt/tensor.hpp"
#include "ssvt/vit.hpp"

namespace ssvt::probe {

struct SplitRatios {
  double train = 0.6;
  double val = 0.2;
  double test = 0.2;

  void validate() const;  // throws ConfigError
};

struct SplitAssignment {
  std::vector<Index> train;
  std::vector<Index> val;
  std::vector<Index> test;
  SplitRatios ratios;
  std::uint64_t seed = 0;
};

// Per-class largest-remainder apportionment over shuffled indices; ties go to
// the earlier partition in train -> val -> test order. Every class needs at
// least 3 items.
SplitAssignment stratified_split(const std::vector<int>& labels, int num_classes,
                                 const SplitRatios& ratios, std::uint64_t seed);

// Deterministic evaluation transform: bilinear resize of the full image to the
// model input size, then per-channel standardization. No randomness.
Tensor eval_transform(const Tensor& image, Index out_size);

// Frozen-teacher CLS features, one row per image. Pure function of
// (teacher, images): bitwise repeatable.
Tensor extract_features(const vit::ModelParams& teacher,
                        const std::vector<Tensor>& images);

struct LinearHead {
  Tensor weight;  // [embed_dim, num_classes]
  Tensor bias;    // [num_classes]
};

struct HeadSettings {
  distill::OptimSettings optim{.lr = 1e-2, .weight_decay = 0.0};
  int max_epochs = 200;
  std::uint64_t seed = 0;
};

struct HeadTrainResult {
  LinearHead head;                // parameters at the best-validation epoch
  std::vector<double> train_loss; // per epoch
  std::vector<double> val_acc;    // per epoch
  int best_epoch = 0;             // 1-based epoch of the selected parameters
};

// Softmax cross-entropy on the train partition only; model selection picks the
// epoch with the best validation accuracy (earliest wins ties).
HeadTrainResult train_head(const Tensor& features, const std::vector<int>& labels,
                           const SplitAssignment& split, const HeadSettings& settings);

struct Prediction {
  Tensor probs;             // [n, num_classes], row-stochastic
  std::vector<int> labels;  // argmax, ties to the lower class index
};

Prediction predict(const LinearHead& head, const Tensor& features);

}  // namespace ssvt::probe
