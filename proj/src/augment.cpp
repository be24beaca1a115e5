// Copyright (c) 2026 The ssvt Authors
// SPDX-License-Identifier: Apache-2.0

#include "ssvt/augment.hpp"

#include <algorithm>
#include <cmath>

#include "ssvt/rng.hpp"

namespace ssvt::augment {

void CropConfig::validate() const {
  auto scale_ok = [](double lo, double hi) { return lo > 0.0 && lo <= hi && hi <= 1.0; };
  if (!scale_ok(global_scale_lo, global_scale_hi) ||
      !scale_ok(local_scale_lo, local_scale_hi)) {
    throw ConfigError("crop config: scale ranges must satisfy 0 < lo <= hi <= 1");
  }
  if (local_scale_hi > global_scale_lo) {
    throw ConfigError("crop config: local_scale_hi must not exceed global_scale_lo");
  }
  if (n_global < 1 || n_local < 1) {
    throw ConfigError("crop config: need at least one global and one local crop");
  }
  if (flip_prob < 0.0 || flip_prob > 1.0 || grayscale_prob < 0.0 || grayscale_prob > 1.0) {
    throw ConfigError("crop config: probabilities must lie in [0, 1]");
  }
  if (out_size < 1) {
    throw ConfigError("crop config: out_size must be positive");
  }
}

namespace {

void require_image(const Tensor& image, const char* op) {
  if (image.rank() != 3) {
    throw ShapeError(std::string(op) + ": expected [channels, h, w], got " +
                     shape_str(image.shape()));
  }
}

}  // namespace

Tensor hflip(const Tensor& image) {
  require_image(image, "hflip");
  const Index c = image.dim(0), h = image.dim(1), w = image.dim(2);
  Tensor out = Tensor::zeros(image.shape());
  const Array& src = image.array();
  Array& dst = out.array();
  for (Index ch = 0; ch < c; ++ch) {
    for (Index y = 0; y < h; ++y) {
      const Index base = (ch * h + y) * w;
      for (Index x = 0; x < w; ++x) {
        dst[base + x] = src[base + (w - 1 - x)];
      }
    }
  }
  return out;
}

Tensor to_grayscale(const Tensor& image) {
  require_image(image, "to_grayscale");
  const Index c = image.dim(0);
  if (c == 1) {
    return image;
  }
  if (c != 3) {
    throw ShapeError("to_grayscale: expected 1 or 3 channels, got " +
                     shape_str(image.shape()));
  }
  const Index plane = image.dim(1) * image.dim(2);
  Tensor out = Tensor::zeros(image.shape());
  const Array& src = image.array();
  Array luma = 0.299 * src.segment(0, plane) + 0.587 * src.segment(plane, plane) +
               0.114 * src.segment(2 * plane, plane);
  for (Index ch = 0; ch < 3; ++ch) {
    out.array().segment(ch * plane, plane) = luma;
  }
  return out;
}

Tensor bilinear_resize(const Tensor& image, Index out_h, Index out_w) {
  require_image(image, "bilinear_resize");
  if (out_h < 1 || out_w < 1) {
    throw ShapeError("bilinear_resize: output sizes must be positive");
  }
  const Index c = image.dim(0), h = image.dim(1), w = image.dim(2);
  if (out_h == h && out_w == w) {
    return image.clone();
  }
  Tensor out = Tensor::zeros({c, out_h, out_w});
  const Array& src = image.array();
  Array& dst = out.array();
  const double sy_scale = static_cast<double>(h) / static_cast<double>(out_h);
  const double sx_scale = static_cast<double>(w) / static_cast<double>(out_w);
  for (Index oy = 0; oy < out_h; ++oy) {
    const double sy = (static_cast<double>(oy) + 0.5) * sy_scale - 0.5;
    const double fy_floor = std::floor(sy);
    const double fy = sy - fy_floor;
    const Index y0 = std::clamp(static_cast<Index>(fy_floor), Index{0}, h - 1);
    const Index y1 = std::clamp(static_cast<Index>(fy_floor) + 1, Index{0}, h - 1);
    for (Index ox = 0; ox < out_w; ++ox) {
      const double sx = (static_cast<double>(ox) + 0.5) * sx_scale - 0.5;
      const double fx_floor = std::floor(sx);
      const double fx = sx - fx_floor;
      const Index x0 = std::clamp(static_cast<Index>(fx_floor), Index{0}, w - 1);
      const Index x1 = std::clamp(static_cast<Index>(fx_floor) + 1, Index{0}, w - 1);
      for (Index ch = 0; ch < c; ++ch) {
        const Index plane = ch * h * w;
        const double v00 = src[plane + y0 * w + x0];
        const double v01 = src[plane + y0 * w + x1];
        const double v10 = src[plane + y1 * w + x0];
        const double v11 = src[plane + y1 * w + x1];
        dst[(ch * out_h + oy) * out_w + ox] = v00 * (1.0 - fy) * (1.0 - fx) +
                                              v01 * (1.0 - fy) * fx +
                                              v10 * fy * (1.0 - fx) + v11 * fy * fx;
      }
    }
  }
  return out;
}

Tensor standardize_channels(const Tensor& image, double eps) {
  require_image(image, "standardize_channels");
  const Index c = image.dim(0);
  const Index plane = image.dim(1) * image.dim(2);
  Tensor out = Tensor::zeros(image.shape());
  for (Index ch = 0; ch < c; ++ch) {
    auto seg = image.array().segment(ch * plane, plane);
    const double mean = seg.mean();
    const double var = (seg - mean).square().mean();
    out.array().segment(ch * plane, plane) = (seg - mean) / std::sqrt(var + eps);
  }
  return out;
}

namespace {

Tensor crop_block(const Tensor& image, Index top, Index left, Index side) {
  const Index c = image.dim(0), h = image.dim(1), w = image.dim(2);
  Tensor out = Tensor::zeros({c, side, side});
  for (Index ch = 0; ch < c; ++ch) {
    for (Index y = 0; y < side; ++y) {
      out.array().segment((ch * side + y) * side, side) =
          image.array().segment((ch * h + top + y) * w + left, side);
    }
  }
  return out;
}

enum CropKind : std::uint64_t { kGlobal = 0, kLocal = 1 };

std::pair<Tensor, CropRecord> draw_crop(const Tensor& image, const CropConfig& cfg,
                                        std::uint64_t image_index, CropKind kind,
                                        std::uint64_t crop_index) {
  const Index h = image.dim(1), w = image.dim(2);
  Rng rng = Rng::keyed({cfg.seed, image_index, static_cast<std::uint64_t>(kind),
                        crop_index});
  const double lo = kind == kGlobal ? cfg.global_scale_lo : cfg.local_scale_lo;
  const double hi = kind == kGlobal ? cfg.global_scale_hi : cfg.local_scale_hi;
  const double area = rng.uniform(lo, hi) * static_cast<double>(h) * static_cast<double>(w);
  const Index side = std::clamp(static_cast<Index>(std::lround(std::sqrt(area))),
                                Index{1}, std::min(h, w));
  CropRecord rec;
  rec.side = side;
  rec.top = static_cast<Index>(rng.below(static_cast<std::uint64_t>(h - side + 1)));
  rec.left = static_cast<Index>(rng.below(static_cast<std::uint64_t>(w - side + 1)));
  rec.flipped = rng.uniform() < cfg.flip_prob;
  rec.grayscaled = rng.uniform() < cfg.grayscale_prob;
  return {apply_crop_record(image, rec, cfg.out_size), rec};
}

}  // namespace

Tensor apply_crop_record(const Tensor& image, const CropRecord& record, Index out_size) {
  Tensor crop = crop_block(image, record.top, record.left, record.side);
  if (record.flipped) {
    crop = hflip(crop);
  }
  if (record.grayscaled) {
    crop = to_grayscale(crop);
  }
  crop = bilinear_resize(crop, out_size, out_size);
  return standardize_channels(crop);
}

CropSet build_crop_set(const Tensor& image, const CropConfig& config,
                       std::uint64_t image_index) {
  config.validate();
  require_image(image, "build_crop_set");
  if (image.dim(1) < config.out_size || image.dim(2) < config.out_size) {
    throw InputError("build_crop_set: image " + shape_str(image.shape()) +
                     " is smaller than out_size " + std::to_string(config.out_size));
  }
  CropSet set;
  for (int i = 0; i < config.n_global; ++i) {
    auto [crop, rec] = draw_crop(image, config, image_index, kGlobal,
                                 static_cast<std::uint64_t>(i));
    set.globals.push_back(std::move(crop));
    set.global_records.push_back(rec);
  }
  for (int i = 0; i < config.n_local; ++i) {
    auto [crop, rec] = draw_crop(image, config, image_index, kLocal,
                                 static_cast<std::uint64_t>(i));
    set.locals.push_back(std::move(crop));
    set.local_records.push_back(rec);
  }
  return set;
}

}  // namespace ssvt::augment
