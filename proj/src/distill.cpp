// Copyright (c) 2026 The ssvt Authors
// SPDX-License-Identifier: Apache-2.0

#include "ssvt/distill.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "ssvt/ops.hpp"
#include "ssvt/rng.hpp"

namespace ssvt::distill {

void DistillConfig::validate() const {
  if (!(tau_teacher > 0.0) || !(tau_student > 0.0)) {
    throw ConfigError("distill config: temperatures must be strictly positive");
  }
  if (lambda_ema < 0.0 || lambda_ema > 1.0) {
    throw ConfigError("distill config: lambda_ema must lie in [0, 1]");
  }
  if (center_momentum < 0.0 || center_momentum >= 1.0) {
    throw ConfigError("distill config: center_momentum must lie in [0, 1)");
  }
  if (proj_dim <= 0) {
    throw ConfigError("distill config: proj_dim must be positive");
  }
  if (epochs < 0) {
    throw ConfigError("distill config: epochs must be non-negative");
  }
  if (batch_size < 1) {
    throw ConfigError("distill config: batch_size must be positive");
  }
  if (!(optim.lr > 0.0) || optim.beta1 < 0.0 || optim.beta1 >= 1.0 ||
      optim.beta2 < 0.0 || optim.beta2 >= 1.0 || optim.weight_decay < 0.0) {
    throw ConfigError("distill config: invalid optimizer settings");
  }
}

Tensor sharpen(const Tensor& logits, double tau) {
  if (!(tau > 0.0)) {
    throw ConfigError("sharpen: tau must be strictly positive");
  }
  return ops::softmax_rows(ops::mul_scalar(logits, 1.0 / tau));
}

Tensor cross_entropy(const Tensor& target, const Tensor& pred) {
  return ops::cross_entropy(target, pred);
}

double distribution_entropy(const Array& probs) {
  double h = 0.0;
  for (Index i = 0; i < probs.size(); ++i) {
    if (probs[i] > 0.0) {
      h -= probs[i] * std::log(probs[i]);
    }
  }
  return h;
}

double marginal_entropy(const Tensor& probs) {
  const Index k = probs.dim(probs.rank() - 1);
  const Index rows = probs.size() / k;
  Array mean = Array::Zero(k);
  for (Index r = 0; r < rows; ++r) {
    mean += probs.array().segment(r * k, k);
  }
  mean /= static_cast<double>(rows);
  return distribution_entropy(mean);
}

namespace {

Array column_mean(const Tensor& matrix) {
  const Index k = matrix.dim(matrix.rank() - 1);
  const Index rows = matrix.size() / k;
  Array mean = Array::Zero(k);
  for (Index r = 0; r < rows; ++r) {
    mean += matrix.array().segment(r * k, k);
  }
  return mean / static_cast<double>(rows);
}

// Teacher-side probabilities for a stack of global crops: forward without
// gradient recording, optional centering, then sharpening. Also yields the
// column mean of the raw logits for the center update.
Tensor teacher_probs(const DistillState& state, const Tensor& global_batch,
                     const DistillConfig& config, Array* logit_mean) {
  NoGradGuard no_grad;
  Tensor logits = vit::forward(state.teacher, global_batch).logits;
  if (logit_mean != nullptr) {
    *logit_mean = column_mean(logits);
  }
  if (config.centering) {
    if (!state.center.defined() || state.center.size() != logits.dim(1)) {
      throw ContractError("centering enabled but center vector is missing");
    }
    const Index k = logits.dim(1);
    Array shifted = logits.array();
    for (Index r = 0; r < logits.dim(0); ++r) {
      shifted.segment(r * k, k) -= state.center.array();
    }
    logits = Tensor::from_array(logits.shape(), std::move(shifted));
  }
  return sharpen(logits, config.tau_teacher);
}

BatchLossInfo pair_loss_impl(const DistillState& state,
                             std::span<const augment::CropSet> crop_sets,
                             const DistillConfig& config) {
  config.validate();
  if (crop_sets.empty()) {
    throw InputError("pair_loss: no crop sets");
  }
  const std::size_t n_images = crop_sets.size();
  const std::size_t n_g = crop_sets.front().globals.size();
  const std::size_t n_l = crop_sets.front().locals.size();
  for (const auto& set : crop_sets) {
    if (set.globals.empty() || set.locals.empty()) {
      throw InputError("pair_loss: crop set has an empty global or local side");
    }
    if (set.globals.size() != n_g || set.locals.size() != n_l) {
      throw InputError("pair_loss: crop sets disagree on crop counts");
    }
  }

  std::vector<Tensor> globals, locals;
  globals.reserve(n_images * n_g);
  locals.reserve(n_images * n_l);
  for (const auto& set : crop_sets) {
    globals.insert(globals.end(), set.globals.begin(), set.globals.end());
    locals.insert(locals.end(), set.locals.begin(), set.locals.end());
  }

  BatchLossInfo info;
  Tensor t_probs =
      teacher_probs(state, vit::stack_images(globals), config, &info.teacher_logit_mean);
  info.marginal_entropy = marginal_entropy(t_probs);

  Tensor s_logits = vit::forward(state.student, vit::stack_images(locals)).logits;
  Tensor s_probs = sharpen(s_logits, config.tau_student);

  // One row per (global, local) pair within the same image.
  const Index k = t_probs.dim(1);
  const Index pairs = static_cast<Index>(n_images * n_g * n_l);
  Tensor targets = Tensor::zeros({pairs, k});
  std::vector<Index> pred_rows;
  pred_rows.reserve(static_cast<std::size_t>(pairs));
  Index pair = 0;
  for (std::size_t img = 0; img < n_images; ++img) {
    for (std::size_t g = 0; g < n_g; ++g) {
      const Index trow = static_cast<Index>(img * n_g + g);
      for (std::size_t l = 0; l < n_l; ++l) {
        targets.array().segment(pair * k, k) = t_probs.array().segment(trow * k, k);
        pred_rows.push_back(static_cast<Index>(img * n_l + l));
        ++pair;
      }
    }
  }
  Tensor preds = ops::take_rows(s_probs, std::move(pred_rows));
  info.loss = ops::cross_entropy(targets, preds);
  return info;
}

}  // namespace

Tensor pair_loss(const DistillState& state, const augment::CropSet& crop_set,
                 const DistillConfig& config) {
  return pair_loss_impl(state, std::span<const augment::CropSet>(&crop_set, 1), config)
      .loss;
}

BatchLossInfo batch_pair_loss(const DistillState& state,
                              std::span<const augment::CropSet> crop_sets,
                              const DistillConfig& config) {
  return pair_loss_impl(state, crop_sets, config);
}

void ema_update(DistillState& state, double lambda) {
  if (lambda < 0.0 || lambda > 1.0) {
    throw ConfigError("ema_update: lambda must lie in [0, 1]");
  }
  if (lambda == 1.0) {
    return;
  }
  auto& teacher = state.teacher.entries;
  auto& student = state.student.entries;
  if (teacher.size() != student.size()) {
    throw ContractError("ema_update: teacher/student parameter sets differ");
  }
  for (std::size_t i = 0; i < teacher.size(); ++i) {
    if (teacher[i].first != student[i].first ||
        teacher[i].second.shape() != student[i].second.shape()) {
      throw ContractError("ema_update: parameter mismatch at '" + teacher[i].first + "'");
    }
    if (lambda == 0.0) {
      teacher[i].second.array() = student[i].second.array();
    } else {
      teacher[i].second.array() =
          lambda * teacher[i].second.array() + (1.0 - lambda) * student[i].second.array();
    }
  }
}

void adamw_step(vit::ModelParams& params, std::vector<AdamMoments>& moments,
                long& step_count, const OptimSettings& settings) {
  if (moments.size() != params.entries.size()) {
    moments.resize(params.entries.size());
  }
  ++step_count;
  const double t = static_cast<double>(step_count);
  const double bc1 = 1.0 - std::pow(settings.beta1, t);
  const double bc2 = 1.0 - std::pow(settings.beta2, t);
  for (std::size_t i = 0; i < params.entries.size(); ++i) {
    auto& [name, param] = params.entries[i];
    if (!param.requires_grad()) {
      continue;
    }
    if (!param.has_grad()) {
      throw ContractError("adamw_step: parameter '" + name + "' has no gradient");
    }
    AdamMoments& mom = moments[i];
    if (mom.m.size() != param.size()) {
      mom.m = Array::Zero(param.size());
      mom.v = Array::Zero(param.size());
    }
    const Array& g = param.grad();
    mom.m = settings.beta1 * mom.m + (1.0 - settings.beta1) * g;
    mom.v = settings.beta2 * mom.v + (1.0 - settings.beta2) * g.square();
    const Array m_hat = mom.m / bc1;
    const Array v_hat = mom.v / bc2;
    param.array() -= settings.lr * (m_hat / (v_hat.sqrt() + settings.eps) +
                                    settings.weight_decay * param.array());
  }
}

void update_center(DistillState& state, const Tensor& teacher_logits, double momentum) {
  if (momentum < 0.0 || momentum >= 1.0) {
    throw ConfigError("update_center: momentum must lie in [0, 1)");
  }
  const Index k = teacher_logits.dim(teacher_logits.rank() - 1);
  const Index rows = teacher_logits.size() / k;
  Array batch_mean = Array::Zero(k);
  for (Index r = 0; r < rows; ++r) {
    batch_mean += teacher_logits.array().segment(r * k, k);
  }
  batch_mean /= static_cast<double>(rows);
  if (!state.center.defined() || state.center.size() != k) {
    state.center = Tensor::zeros({k});
  }
  state.center.array() = momentum * state.center.array() + (1.0 - momentum) * batch_mean;
}

DistillState pretrain(const std::vector<Tensor>& images,
                      const vit::ModelConfig& model_config,
                      const augment::CropConfig& crop_config,
                      const DistillConfig& distill_config, std::uint64_t seed) {
  model_config.validate();
  crop_config.validate();
  distill_config.validate();
  if (images.empty()) {
    throw InputError("pretrain: dataset is empty");
  }
  if (crop_config.out_size != model_config.image_size) {
    throw ConfigError("pretrain: crop out_size must equal model image_size");
  }
  if (distill_config.proj_dim != model_config.proj_dim) {
    throw ConfigError("pretrain: distill proj_dim must mirror model proj_dim");
  }
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].rank() != 3 || images[i].dim(0) != model_config.channels ||
        images[i].dim(1) < crop_config.out_size ||
        images[i].dim(2) < crop_config.out_size) {
      throw InputError("pretrain: image " + std::to_string(i) +
                       " is smaller than the crop requirements");
    }
  }

  DistillState state;
  state.student = vit::init_params(model_config, seed);
  state.teacher = vit::clone_params(state.student);
  state.student.set_requires_grad(true);
  state.center = Tensor::zeros({model_config.proj_dim});
  state.moments.resize(state.student.entries.size());

  const Index n = static_cast<Index>(images.size());
  // The center starts at the first batch's teacher logit mean rather than
  // zero, so the collapse monitor is meaningful from the first epoch.
  bool center_primed = !distill_config.centering;
  for (int epoch = 0; epoch < distill_config.epochs; ++epoch) {
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    Rng order_rng = Rng::keyed({seed, 0x6f72646572u, static_cast<std::uint64_t>(epoch)});
    order_rng.shuffle(order);

    augment::CropConfig epoch_crops = crop_config;
    epoch_crops.seed =
        Rng::keyed({crop_config.seed, 0x65706f6368u, static_cast<std::uint64_t>(epoch)})
            .next_u64();

    double loss_sum = 0.0;
    double entropy_sum = 0.0;
    Index batches = 0;
    for (Index start = 0; start < n; start += distill_config.batch_size) {
      const Index stop = std::min(n, start + distill_config.batch_size);
      std::vector<augment::CropSet> crop_sets;
      crop_sets.reserve(static_cast<std::size_t>(stop - start));
      for (Index i = start; i < stop; ++i) {
        const Index image_index = order[static_cast<std::size_t>(i)];
        crop_sets.push_back(augment::build_crop_set(
            images[static_cast<std::size_t>(image_index)], epoch_crops,
            static_cast<std::uint64_t>(image_index)));
      }

      if (!center_primed) {
        std::vector<Tensor> first_globals;
        for (const auto& set : crop_sets) {
          first_globals.insert(first_globals.end(), set.globals.begin(),
                               set.globals.end());
        }
        NoGradGuard no_grad;
        Tensor logits = vit::forward(state.teacher, vit::stack_images(first_globals)).logits;
        update_center(state, logits, 0.0);
        center_primed = true;
      }

      ComputeGraph graph;
      Tensor loss;
      BatchLossInfo info;
      {
        ComputeGraph::Scope scope(graph);
        info = batch_pair_loss(state, crop_sets, distill_config);
        loss = info.loss;
      }
      if (!std::isfinite(loss.value())) {
        throw NumericError("pretrain: non-finite loss at epoch " + std::to_string(epoch));
      }
      graph.backward(loss);
      adamw_step(state.student, state.moments, state.step_count, distill_config.optim);
      for (auto& [name, param] : state.student.entries) {
        param.zero_grad();
      }
      if (distill_config.centering) {
        Tensor mean_row = Tensor::from_array({1, info.teacher_logit_mean.size()},
                                             info.teacher_logit_mean);
        update_center(state, mean_row, distill_config.center_momentum);
      }
      if (distill_config.ema_granularity == EmaGranularity::kPerStep) {
        ema_update(state, distill_config.lambda_ema);
      }
      loss_sum += loss.value();
      entropy_sum += info.marginal_entropy;
      ++batches;
    }
    if (distill_config.ema_granularity == EmaGranularity::kPerEpoch) {
      ema_update(state, distill_config.lambda_ema);
    }
    state.loss_trace.push_back(loss_sum / static_cast<double>(batches));
    state.entropy_trace.push_back(entropy_sum / static_cast<double>(batches));
  }
  return state;
}

}  // namespace ssvt::distill
