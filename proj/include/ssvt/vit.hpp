// Copyright (c) 2026 The ssvt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ssvt/tensor.hpp"

namespace ssvt::vit {

struct ModelConfig {
  Index image_size = 64;
  Index patch_size = 8;
  Index channels = 3;
  Index embed_dim = 64;
  Index depth = 4;
  Index heads = 4;
  Index mlp_ratio = 4;
  Index proj_dim = 256;  // output dimension of the projection head

  Index num_patches() const { return (image_size / patch_size) * (image_size / patch_size); }
  Index tokens() const { return num_patches() + 1; }  // CLS + patches
  Index head_dim() const { return embed_dim / heads; }
  Index patch_dim() const { return channels * patch_size * patch_size; }

  void validate() const;  // throws ConfigError

  // Desk-scale presets.
  static ModelConfig tiny();
  static ModelConfig micro();
};

// Named parameter set for one encoder plus its projection head. The entry
// order is fixed by construction, so two instances built from the same config
// have identical name/shape sequences.
struct ModelParams {
  ModelConfig config;
  std::vector<std::pair<std::string, Tensor>> entries;

  Tensor& at(std::string_view name);
  const Tensor& at(std::string_view name) const;
  Index total_parameters() const;
  void set_requires_grad(bool value);
};

// Deterministic initialization: weights from a truncated normal (std 0.02),
// biases zero, layernorm scales one, CLS token and positional embeddings from
// the same truncated normal.
ModelParams init_params(const ModelConfig& config, std::uint64_t seed);

// Deep copy; mutating the copy never affects the source.
ModelParams clone_params(const ModelParams& source);

// [channels, h, w] -> [num_patches, channels*patch*patch]; non-overlapping
// patches in row-major patch order, each flattened channel-major.
Tensor patchify(const Tensor& image, Index patch_size);

// Optional capture of forward internals, used by the invariant tests.
struct ForwardTrace {
  std::vector<Tensor> attention;  // per block: [batch*heads, tokens, tokens]
};

struct ForwardOut {
  Tensor features;  // [batch, embed_dim] CLS representation after final norm
  Tensor logits;    // [batch, proj_dim]
};

// batch: [b, channels, s, s] with s == config.image_size.
ForwardOut forward(const ModelParams& params, const Tensor& batch,
                   ForwardTrace* trace = nullptr);

// Stacks per-image tensors [c, h, w] into one [n, c, h, w] leaf tensor.
Tensor stack_images(const std::vector<Tensor>& images);

}  // namespace ssvt::vit
