// Copyright (c) 2026 The ssvt Authors
// SPDX-License-Identifier: Apache-2.0

#include "ssvt/probe.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ssvt/augment.hpp"
#include "ssvt/ops.hpp"
#include "ssvt/rng.hpp"

namespace ssvt::probe {

void SplitRatios::validate() const {
  if (!(train > 0.0) || !(val > 0.0) || !(test > 0.0)) {
    throw ConfigError("split ratios must be strictly positive");
  }
  if (std::abs(train + val + test - 1.0) > 1e-9) {
    throw ConfigError("split ratios must sum to 1");
  }
}

SplitAssignment stratified_split(const std::vector<int>& labels, int num_classes,
                                 const SplitRatios& ratios, std::uint64_t seed) {
  ratios.validate();
  if (num_classes < 2) {
    throw InputError("stratified_split: need at least 2 classes");
  }
  std::vector<std::vector<Index>> per_class(static_cast<std::size_t>(num_classes));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int label = labels[i];
    if (label < 0 || label >= num_classes) {
      throw InputError("stratified_split: label " + std::to_string(label) +
                       " outside [0, " + std::to_string(num_classes) + ")");
    }
    per_class[static_cast<std::size_t>(label)].push_back(static_cast<Index>(i));
  }

  SplitAssignment out;
  out.ratios = ratios;
  out.seed = seed;
  const double ratio[3] = {ratios.train, ratios.val, ratios.test};
  for (int c = 0; c < num_classes; ++c) {
    auto& indices = per_class[static_cast<std::size_t>(c)];
    if (indices.size() < 3) {
      throw InputError("stratified_split: class " + std::to_string(c) + " has only " +
                       std::to_string(indices.size()) + " items (need >= 3)");
    }
    Rng rng = Rng::keyed({seed, 0x73706c6974u, static_cast<std::uint64_t>(c)});
    rng.shuffle(indices);

    const double n = static_cast<double>(indices.size());
    Index counts[3];
    double remainders[3];
    Index assigned = 0;
    for (int p = 0; p < 3; ++p) {
      const double exact = n * ratio[p];
      counts[p] = static_cast<Index>(std::floor(exact));
      remainders[p] = exact - std::floor(exact);
      assigned += counts[p];
    }
    Index leftover = static_cast<Index>(indices.size()) - assigned;
    // Largest remainder first; ties resolve toward the earlier partition.
    int order[3] = {0, 1, 2};
    std::stable_sort(order, order + 3,
                     [&](int a, int b) { return remainders[a] > remainders[b]; });
    for (int k = 0; leftover > 0; ++k, --leftover) {
      ++counts[order[k % 3]];
    }

    std::vector<Index>* parts[3] = {&out.train, &out.val, &out.test};
    std::size_t cursor = 0;
    for (int p = 0; p < 3; ++p) {
      for (Index j = 0; j < counts[p]; ++j) {
        parts[p]->push_back(indices[cursor++]);
      }
    }
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.val.begin(), out.val.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

Tensor eval_transform(const Tensor& image, Index out_size) {
  return augment::standardize_channels(
      augment::bilinear_resize(image, out_size, out_size));
}

Tensor extract_features(const vit::ModelParams& teacher,
                        const std::vector<Tensor>& images) {
  if (images.empty()) {
    throw InputError("extract_features: no images");
  }
  NoGradGuard no_grad;
  const Index d = teacher.config.embed_dim;
  const Index n = static_cast<Index>(images.size());
  Tensor features = Tensor::zeros({n, d});
  constexpr Index kChunk = 32;
  for (Index start = 0; start < n; start += kChunk) {
    const Index stop = std::min(n, start + kChunk);
    std::vector<Tensor> batch;
    batch.reserve(static_cast<std::size_t>(stop - start));
    for (Index i = start; i < stop; ++i) {
      batch.push_back(eval_transform(images[static_cast<std::size_t>(i)],
                                     teacher.config.image_size));
    }
    Tensor out = vit::forward(teacher, vit::stack_images(batch)).features;
    features.array().segment(start * d, (stop - start) * d) = out.array();
  }
  return features;
}

namespace {

std::vector<int> argmax_rows(const Tensor& probs) {
  const Index n = probs.dim(0), c = probs.dim(1);
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (Index r = 0; r < n; ++r) {
    Index best = 0;
    double best_v = probs.array()[r * c];
    for (Index j = 1; j < c; ++j) {
      const double v = probs.array()[r * c + j];
      if (v > best_v) {  // strict: ties keep the lower index
        best_v = v;
        best = j;
      }
    }
    labels[static_cast<std::size_t>(r)] = static_cast<int>(best);
  }
  return labels;
}

Tensor gather_rows(const Tensor& features, const std::vector<Index>& rows) {
  const Index d = features.dim(1);
  Tensor out = Tensor::zeros({static_cast<Index>(rows.size()), d});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.array().segment(static_cast<Index>(i) * d, d) =
        features.array().segment(rows[i] * d, d);
  }
  return out;
}

double accuracy_of(const std::vector<int>& pred, const std::vector<int>& truth) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    hits += pred[i] == truth[i] ? 1u : 0u;
  }
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

}  // namespace

HeadTrainResult train_head(const Tensor& features, const std::vector<int>& labels,
                           const SplitAssignment& split, const HeadSettings& settings) {
  if (features.rank() != 2 ||
      features.dim(0) != static_cast<Index>(labels.size())) {
    throw ShapeError("train_head: features and labels are misaligned");
  }
  int num_classes = 0;
  for (int label : labels) {
    num_classes = std::max(num_classes, label + 1);
    if (label < 0) {
      throw InputError("train_head: negative class label");
    }
  }
  if (num_classes < 2) {
    throw InputError("train_head: need at least 2 classes");
  }
  const Index d = features.dim(1);
  const Index c = num_classes;

  // The head only ever sees train features/labels plus validation accuracy.
  Tensor x_train = gather_rows(features, split.train);
  Tensor x_val = gather_rows(features, split.val);
  std::vector<int> y_val;
  y_val.reserve(split.val.size());
  for (Index i : split.val) {
    y_val.push_back(labels[static_cast<std::size_t>(i)]);
  }
  Tensor one_hot = Tensor::zeros({static_cast<Index>(split.train.size()), c});
  for (std::size_t i = 0; i < split.train.size(); ++i) {
    const int label = labels[static_cast<std::size_t>(split.train[i])];
    one_hot.array()[static_cast<Index>(i) * c + label] = 1.0;
  }

  Rng rng = Rng::keyed({settings.seed, 0x68656164u});
  LinearHead head;
  head.weight = Tensor::zeros({d, c}, true);
  for (Index i = 0; i < head.weight.size(); ++i) {
    head.weight.array()[i] = rng.truncated_normal(0.02);
  }
  head.bias = Tensor::zeros({c}, true);

  vit::ModelParams as_params;  // reuse the optimizer over named entries
  as_params.entries.emplace_back("weight", head.weight);
  as_params.entries.emplace_back("bias", head.bias);
  std::vector<distill::AdamMoments> moments;
  long step_count = 0;

  HeadTrainResult result;
  double best_acc = -1.0;
  for (int epoch = 1; epoch <= settings.max_epochs; ++epoch) {
    ComputeGraph graph;
    Tensor loss;
    {
      ComputeGraph::Scope scope(graph);
      Tensor logits = ops::add_row_bias(ops::matmul(x_train, head.weight), head.bias);
      loss = ops::cross_entropy(one_hot, ops::softmax_rows(logits));
    }
    graph.backward(loss);
    distill::adamw_step(as_params, moments, step_count, settings.optim);
    head.weight.zero_grad();
    head.bias.zero_grad();

    double val_acc;
    {
      NoGradGuard no_grad;
      Tensor logits = ops::add_row_bias(ops::matmul(x_val, head.weight), head.bias);
      val_acc = accuracy_of(argmax_rows(logits), y_val);
    }
    result.train_loss.push_back(loss.value());
    result.val_acc.push_back(val_acc);
    if (val_acc > best_acc) {
      best_acc = val_acc;
      result.best_epoch = epoch;
      result.head.weight = head.weight.clone();
      result.head.bias = head.bias.clone();
    }
  }
  result.head.weight.set_requires_grad(false);
  result.head.bias.set_requires_grad(false);
  return result;
}

Prediction predict(const LinearHead& head, const Tensor& features) {
  if (features.rank() != 2 || features.dim(1) != head.weight.dim(0)) {
    throw ShapeError("predict: feature width " + shape_str(features.shape()) +
                     " does not match head " + shape_str(head.weight.shape()));
  }
  NoGradGuard no_grad;
  Tensor logits = ops::add_row_bias(ops::matmul(features, head.weight), head.bias);
  Prediction out;
  out.probs = ops::softmax_rows(logits);
  out.labels = argmax_rows(out.probs);
  return out;
}

}  // namespace ssvt::probe
