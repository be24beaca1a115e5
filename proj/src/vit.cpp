// Copyright (c) 2026 The ssvt Authors
// SPDX-License-Identifier: Apache-2.0

#include "ssvt/vit.hpp"

#include <cmath>

#include "ssvt/ops.hpp"
#include "ssvt/rng.hpp"

namespace ssvt::vit {

void ModelConfig::validate() const {
  if (image_size <= 0 || patch_size <= 0 || embed_dim <= 0 || depth <= 0 ||
      heads <= 0 || mlp_ratio <= 0 || proj_dim <= 0) {
    throw ConfigError("model config: all fields must be positive");
  }
  if (channels != 1 && channels != 3) {
    throw ConfigError("model config: channels must be 1 or 3, got " +
                      std::to_string(channels));
  }
  if (image_size % patch_size != 0) {
    throw ConfigError("model config: image_size " + std::to_string(image_size) +
                      " not divisible by patch_size " + std::to_string(patch_size));
  }
  if (embed_dim % heads != 0) {
    throw ConfigError("model config: embed_dim " + std::to_string(embed_dim) +
                      " not divisible by heads " + std::to_string(heads));
  }
}

ModelConfig ModelConfig::tiny() {
  return ModelConfig{.image_size = 64,
                     .patch_size = 8,
                     .channels = 3,
                     .embed_dim = 64,
                     .depth = 4,
                     .heads = 4,
                     .mlp_ratio = 4,
                     .proj_dim = 256};
}

ModelConfig ModelConfig::micro() {
  return ModelConfig{.image_size = 32,
                     .patch_size = 8,
                     .channels = 3,
                     .embed_dim = 32,
                     .depth = 2,
                     .heads = 2,
                     .mlp_ratio = 4,
                     .proj_dim = 64};
}

Tensor& ModelParams::at(std::string_view name) {
  for (auto& [key, tensor] : entries) {
    if (key == name) {
      return tensor;
    }
  }
  throw ContractError("no parameter named '" + std::string(name) + "'");
}

const Tensor& ModelParams::at(std::string_view name) const {
  for (const auto& [key, tensor] : entries) {
    if (key == name) {
      return tensor;
    }
  }
  throw ContractError("no parameter named '" + std::string(name) + "'");
}

Index ModelParams::total_parameters() const {
  Index n = 0;
  for (const auto& [key, tensor] : entries) {
    n += tensor.size();
  }
  return n;
}

void ModelParams::set_requires_grad(bool value) {
  for (auto& [key, tensor] : entries) {
    tensor.set_requires_grad(value);
  }
}

namespace {

Tensor trunc_normal(Shape shape, Rng& rng, double stddev = 0.02) {
  Tensor t = Tensor::zeros(std::move(shape));
  Array& data = t.array();
  for (Index i = 0; i < data.size(); ++i) {
    data[i] = rng.truncated_normal(stddev);
  }
  return t;
}

}  // namespace

ModelParams init_params(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng = Rng::keyed({seed, 0x766974u});  // model stream
  const Index d = config.embed_dim;
  const Index hidden = config.mlp_ratio * d;

  ModelParams params;
  params.config = config;
  auto put = [&params](std::string name, Tensor t) {
    params.entries.emplace_back(std::move(name), std::move(t));
  };

  put("patch_embed.weight", trunc_normal({config.patch_dim(), d}, rng));
  put("patch_embed.bias", Tensor::zeros({d}));
  put("cls_token", trunc_normal({1, d}, rng));
  put("pos_embed", trunc_normal({config.tokens(), d}, rng));
  for (Index i = 0; i < config.depth; ++i) {
    const std::string prefix = "blocks." + std::to_string(i) + ".";
    put(prefix + "ln1.gamma", Tensor::full({d}, 1.0));
    put(prefix + "ln1.beta", Tensor::zeros({d}));
    put(prefix + "attn.q.weight", trunc_normal({d, d}, rng));
    put(prefix + "attn.q.bias", Tensor::zeros({d}));
    put(prefix + "attn.k.weight", trunc_normal({d, d}, rng));
    put(prefix + "attn.k.bias", Tensor::zeros({d}));
    put(prefix + "attn.v.weight", trunc_normal({d, d}, rng));
    put(prefix + "attn.v.bias", Tensor::zeros({d}));
    put(prefix + "attn.proj.weight", trunc_normal({d, d}, rng));
    put(prefix + "attn.proj.bias", Tensor::zeros({d}));
    put(prefix + "ln2.gamma", Tensor::full({d}, 1.0));
    put(prefix + "ln2.beta", Tensor::zeros({d}));
    put(prefix + "mlp.fc1.weight", trunc_normal({d, hidden}, rng));
    put(prefix + "mlp.fc1.bias", Tensor::zeros({hidden}));
    put(prefix + "mlp.fc2.weight", trunc_normal({hidden, d}, rng));
    put(prefix + "mlp.fc2.bias", Tensor::zeros({d}));
  }
  put("norm.gamma", Tensor::full({d}, 1.0));
  put("norm.beta", Tensor::zeros({d}));
  put("head.weight", trunc_normal({d, config.proj_dim}, rng));
  put("head.bias", Tensor::zeros({config.proj_dim}));
  return params;
}

ModelParams clone_params(const ModelParams& source) {
  ModelParams copy;
  copy.config = source.config;
  copy.entries.reserve(source.entries.size());
  for (const auto& [name, tensor] : source.entries) {
    copy.entries.emplace_back(name, tensor.clone());
  }
  return copy;
}

Tensor patchify(const Tensor& image, Index patch_size) {
  if (image.rank() != 3) {
    throw ShapeError("patchify: expected [channels, h, w], got " +
                     shape_str(image.shape()));
  }
  const Index c = image.dim(0), h = image.dim(1), w = image.dim(2);
  if (patch_size <= 0 || h % patch_size != 0 || w % patch_size != 0) {
    throw ShapeError("patchify: image " + shape_str(image.shape()) +
                     " not divisible by patch size " + std::to_string(patch_size));
  }
  const Index ph = h / patch_size, pw = w / patch_size;
  const Index patch_dim = c * patch_size * patch_size;
  Tensor out = Tensor::zeros({ph * pw, patch_dim});
  const Array& src = image.array();
  Array& dst = out.array();
  for (Index py = 0; py < ph; ++py) {
    for (Index px = 0; px < pw; ++px) {
      const Index patch = py * pw + px;
      Index k = patch * patch_dim;
      for (Index ch = 0; ch < c; ++ch) {
        for (Index y = 0; y < patch_size; ++y) {
          const Index row = py * patch_size + y;
          const Index base = (ch * h + row) * w + px * patch_size;
          dst.segment(k, patch_size) = src.segment(base, patch_size);
          k += patch_size;
        }
      }
    }
  }
  return out;
}

Tensor stack_images(const std::vector<Tensor>& images) {
  if (images.empty()) {
    throw InputError("stack_images: empty image list");
  }
  const Shape& first = images.front().shape();
  if (first.size() != 3) {
    throw ShapeError("stack_images: expected [channels, h, w] items");
  }
  Shape out_shape{static_cast<Index>(images.size()), first[0], first[1], first[2]};
  Tensor out = Tensor::zeros(out_shape);
  const Index stride = images.front().size();
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].shape() != first) {
      throw ShapeError("stack_images: item " + std::to_string(i) + " has shape " +
                       shape_str(images[i].shape()) + ", expected " + shape_str(first));
    }
    out.array().segment(static_cast<Index>(i) * stride, stride) = images[i].array();
  }
  return out;
}

namespace {

// One pre-norm transformer block on token matrix x2 [(b*t), d].
Tensor block_forward(const ModelParams& params, const std::string& prefix,
                     Tensor x2, Index b, Index t, ForwardTrace* trace) {
  namespace op = ssvt::ops;
  const ModelConfig& cfg = params.config;
  const Index d = cfg.embed_dim;
  const Index heads = cfg.heads;
  const Index hd = cfg.head_dim();

  Tensor h = op::layernorm(x2, params.at(prefix + "ln1.gamma"),
                           params.at(prefix + "ln1.beta"));
  auto heads_view = [&](const Tensor& proj) {
    Tensor r = op::reshape(proj, {b, t, heads, hd});
    r = op::swap_axes12(r);  // [b, heads, t, hd]
    return op::reshape(r, {b * heads, t, hd});
  };
  Tensor q = heads_view(op::add_row_bias(op::matmul(h, params.at(prefix + "attn.q.weight")),
                                         params.at(prefix + "attn.q.bias")));
  Tensor k = heads_view(op::add_row_bias(op::matmul(h, params.at(prefix + "attn.k.weight")),
                                         params.at(prefix + "attn.k.bias")));
  Tensor v = heads_view(op::add_row_bias(op::matmul(h, params.at(prefix + "attn.v.weight")),
                                         params.at(prefix + "attn.v.bias")));
  Tensor scores = op::mul_scalar(op::bmm_nt(q, k), 1.0 / std::sqrt(static_cast<double>(hd)));
  Tensor attn = op::softmax_rows(scores);
  if (trace != nullptr) {
    trace->attention.push_back(attn);
  }
  Tensor ctx = op::bmm(attn, v);  // [b*heads, t, hd]
  ctx = op::reshape(ctx, {b, heads, t, hd});
  ctx = op::swap_axes12(ctx);  // [b, t, heads, hd]
  ctx = op::reshape(ctx, {b * t, d});
  Tensor proj = op::add_row_bias(op::matmul(ctx, params.at(prefix + "attn.proj.weight")),
                                 params.at(prefix + "attn.proj.bias"));
  x2 = op::add(x2, proj);

  Tensor h2 = op::layernorm(x2, params.at(prefix + "ln2.gamma"),
                            params.at(prefix + "ln2.beta"));
  Tensor m = op::add_row_bias(op::matmul(h2, params.at(prefix + "mlp.fc1.weight")),
                              params.at(prefix + "mlp.fc1.bias"));
  m = op::gelu(m);
  m = op::add_row_bias(op::matmul(m, params.at(prefix + "mlp.fc2.weight")),
                       params.at(prefix + "mlp.fc2.bias"));
  return op::add(x2, m);
}

}  // namespace

ForwardOut forward(const ModelParams& params, const Tensor& batch, ForwardTrace* trace) {
  namespace op = ssvt::ops;
  const ModelConfig& cfg = params.config;
  if (batch.rank() != 4 || batch.dim(1) != cfg.channels ||
      batch.dim(2) != cfg.image_size || batch.dim(3) != cfg.image_size) {
    throw ShapeError("forward: expected batch [n, " + std::to_string(cfg.channels) +
                     ", " + std::to_string(cfg.image_size) + ", " +
                     std::to_string(cfg.image_size) + "], got " +
                     shape_str(batch.shape()));
  }
  const Index b = batch.dim(0);
  const Index p = cfg.num_patches();
  const Index t = cfg.tokens();

  // Patch pixels for the whole batch: [(b*p), patch_dim] leaf.
  Tensor patches = Tensor::zeros({b * p, cfg.patch_dim()});
  {
    const Index image_len = cfg.channels * cfg.image_size * cfg.image_size;
    for (Index i = 0; i < b; ++i) {
      Tensor image = Tensor::from_array(
          {cfg.channels, cfg.image_size, cfg.image_size},
          batch.array().segment(i * image_len, image_len));
      Tensor pp = patchify(image, cfg.patch_size);
      patches.array().segment(i * p * cfg.patch_dim(), p * cfg.patch_dim()) = pp.array();
    }
  }

  Tensor embedded = op::add_row_bias(op::matmul(patches, params.at("patch_embed.weight")),
                                     params.at("patch_embed.bias"));  // [(b*p), d]

  // Interleave the CLS token: row b*t+0 is CLS, rows b*t+1.. are patches.
  Tensor with_cls = op::concat_rows(params.at("cls_token"), embedded);
  std::vector<Index> token_index(static_cast<std::size_t>(b * t));
  for (Index i = 0; i < b; ++i) {
    token_index[static_cast<std::size_t>(i * t)] = 0;
    for (Index j = 0; j < p; ++j) {
      token_index[static_cast<std::size_t>(i * t + 1 + j)] = 1 + i * p + j;
    }
  }
  Tensor x2 = op::take_rows(with_cls, std::move(token_index));  // [(b*t), d]
  x2 = op::add_tiled_rows(x2, params.at("pos_embed"));

  for (Index i = 0; i < cfg.depth; ++i) {
    x2 = block_forward(params, "blocks." + std::to_string(i) + ".", x2, b, t, trace);
  }
  x2 = op::layernorm(x2, params.at("norm.gamma"), params.at("norm.beta"));

  std::vector<Index> cls_rows(static_cast<std::size_t>(b));
  for (Index i = 0; i < b; ++i) {
    cls_rows[static_cast<std::size_t>(i)] = i * t;
  }
  Tensor features = op::take_rows(x2, std::move(cls_rows));  // [b, d]
  Tensor logits = op::add_row_bias(op::matmul(features, params.at("head.weight")),
                                   params.at("head.bias"));
  return ForwardOut{features, logits};
}

}  // namespace ssvt::vit
