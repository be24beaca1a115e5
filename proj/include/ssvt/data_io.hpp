// Copyright (c) 2026 The ssvt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ssvt/tensor.hpp"

namespace ssvt::io {

struct ImageRecord {
  std::string filename;  // relative to <root>/images
  Tensor image;          // [3, h, w], values in [0, 1]
  int label = -1;        // -1 when unlabeled
};

struct Dataset {
  std::vector<ImageRecord> items;  // lexicographic filename order
  int num_classes = 0;             // 0 when unlabeled

  bool labeled() const { return num_classes > 0; }
  std::vector<int> labels() const;
  std::vector<Tensor> images() const;
};

// Loads <dir>/images (binary P6/P5, 8-bit maxval 255) plus the optional
// <dir>/labels.csv ("filename,label" header). Grayscale images are replicated
// to 3 channels. Entries are ordered by filename regardless of directory
// enumeration order.
Dataset load_dataset(const std::filesystem::path& dir);

// Single P6/P5 file -> [3, h, w] in [0, 1].
Tensor load_image(const std::filesystem::path& file);

// [3, h, w] in [0, 1] -> binary P6 with maxval 255.
void save_ppm(const std::filesystem::path& file, const Tensor& image);

// Renders a labeled synthetic dataset under <out_dir>: per class, a bright
// disc on dark background with class-indexed sinusoidal texture, a
// class-dependent number of bright blobs, and seeded noise. Deterministic per
// (seed, class, index); re-running yields byte-identical files.
void generate_synthetic(const std::filesystem::path& out_dir, int classes,
                        int per_class, Index image_size, std::uint64_t seed);

struct Checkpoint {
  std::uint32_t version = 1;
  std::vector<std::pair<std::string, Tensor>> tensors;
  std::map<std::string, std::string> metadata;  // sorted -> deterministic bytes
};

// Binary layout: magic "SSVTCKPT", version u32 LE, tensor count u32 LE, then
// per tensor name length + name, rank u32 LE, dims u64 LE, values as raw
// IEEE-754 64-bit LE; then metadata count and length-prefixed key/value
// pairs. Round-trips are bitwise exact for every finite double.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ssvt::io
