// Copyright (c) 2026 The ssvt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "ssvt/tensor.hpp"

namespace ssvt::augment {

struct CropConfig {
  int n_global = 2;
  int n_local = 8;
  double global_scale_lo = 0.7;
  double global_scale_hi = 1.0;
  double local_scale_lo = 0.2;
  double local_scale_hi = 0.4;
  Index out_size = 64;
  double flip_prob = 0.5;
  double grayscale_prob = 0.2;
  std::uint64_t seed = 0;

  void validate() const;  // throws ConfigError
};

// Everything needed to replay one emitted crop deterministically.
struct CropRecord {
  Index top = 0;
  Index left = 0;
  Index side = 0;
  bool flipped = false;
  bool grayscaled = false;
};

struct CropSet {
  std::vector<Tensor> globals;  // n_global tensors [c, out, out]
  std::vector<Tensor> locals;   // n_local tensors [c, out, out]
  std::vector<CropRecord> global_records;
  std::vector<CropRecord> local_records;
};

// Mirrors columns; applying it twice restores the input bitwise.
Tensor hflip(const Tensor& image);

// Luma 0.299 R + 0.587 G + 0.114 B replicated across channels.
// Single-channel input is returned unchanged.
Tensor to_grayscale(const Tensor& image);

// Bilinear sampling with half-pixel centers (align-corners false); resizing
// to the input size is a bitwise identity.
Tensor bilinear_resize(const Tensor& image, Index out_h, Index out_w);

// Per-channel (x - mean) / sqrt(var + eps).
Tensor standardize_channels(const Tensor& image, double eps = 1e-12);

// Square area-fraction crops: n_global draws from global_scale and n_local
// from local_scale, each optionally flipped and grayscaled, resized to
// out_size and standardized. Fully determined by (config.seed, image_index).
CropSet build_crop_set(const Tensor& image, const CropConfig& config,
                       std::uint64_t image_index);

// Re-applies a recorded crop; reproduces the emitted tensor bitwise.
Tensor apply_crop_record(const Tensor& image, const CropRecord& record, Index out_size);

}  // namespace ssvt::augment
