// Copyright (c) 2026 The ssvt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ssvt/augment.hpp"
#include "ssvt/tensor.hpp"
#include "ssvt/vit.hpp"

namespace ssvt::distill {

enum class EmaGranularity { kPerEpoch, kPerStep };

struct OptimSettings {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

struct DistillConfig {
  double tau_teacher = 0.04;
  double tau_student = 0.03;
  Index proj_dim = 256;  // must mirror ModelConfig::proj_dim
  double lambda_ema = 0.9;
  EmaGranularity ema_granularity = EmaGranularity::kPerEpoch;
  bool centering = false;
  double center_momentum = 0.9;
  OptimSettings optim;
  int epochs = 10;
  Index batch_size = 16;

  void validate() const;  // throws ConfigError
};

struct AdamMoments {
  Array m;
  Array v;
};

// Teacher (gradient-free, EMA-updated) and student (gradient-trained) built
// from one config, plus optimizer and centering state.
struct DistillState {
  vit::ModelParams teacher;
  vit::ModelParams student;
  std::vector<AdamMoments> moments;  // parallel to student.entries
  long step_count = 0;
  Tensor center;                     // [proj_dim], used only when centering is on
  std::vector<double> loss_trace;    // per-epoch mean pair loss
  std::vector<double> entropy_trace; // per-epoch mean entropy of the batch-mean
                                     // teacher distribution (collapse monitor)
};

// Temperature softmax: softmax(logits / tau) per row.
Tensor sharpen(const Tensor& logits, double tau);

// Mean over rows of -sum(target * log(pred)), pred clamped at 1e-12.
Tensor cross_entropy(const Tensor& target, const Tensor& pred);

// Mean cross-entropy over all (global, local) pairs of one crop set: targets
// are sharpened teacher outputs on globals (no gradients recorded), inputs are
// sharpened student outputs on locals. The running center is subtracted from
// teacher logits first when centering is on.
Tensor pair_loss(const DistillState& state, const augment::CropSet& crop_set,
                 const DistillConfig& config);

struct BatchLossInfo {
  Tensor loss;
  Array teacher_logit_mean;  // [proj_dim] column mean over the batch's globals
  double marginal_entropy = 0.0;
};

// Batched equivalent of pair_loss over several crop sets (one per image):
// the mean over images of their per-image pair losses.
BatchLossInfo batch_pair_loss(const DistillState& state,
                              std::span<const augment::CropSet> crop_sets,
                              const DistillConfig& config);

// teacher <- lambda * teacher + (1 - lambda) * student, elementwise.
// lambda = 1 leaves the teacher bitwise unchanged; lambda = 0 copies the
// student bitwise.
void ema_update(DistillState& state, double lambda);

// Decoupled-weight-decay adaptive-moment update (AdamW) over every
// gradient-tracking parameter. Throws ContractError when a gradient is
// missing.
void adamw_step(vit::ModelParams& params, std::vector<AdamMoments>& moments,
                long& step_count, const OptimSettings& settings);

// center <- momentum * center + (1 - momentum) * batch mean of teacher logits.
void update_center(DistillState& state, const Tensor& teacher_logits, double momentum);

// Entropy of the column-mean of a row-stochastic matrix (0 log 0 := 0).
double marginal_entropy(const Tensor& probs);

// Entropy of one distribution.
double distribution_entropy(const Array& probs);

// Full stage-1 loop: teacher starts as a clone of the student; every batch
// builds crop sets, takes a pair-loss gradient step on the student, and the
// teacher follows by EMA at the configured granularity.
DistillState pretrain(const std::vector<Tensor>& images,
                      const vit::ModelConfig& model_config,
                      const augment::CropConfig& crop_config,
                      const DistillConfig& distill_config, std::uint64_t seed);

}  // namespace ssvt::distill
