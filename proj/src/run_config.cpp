// Copyright (c) 2026 The ssvt Authors
// SPDX-License-Identifier: Apache-2.0

#include "ssvt/run_config.hpp"

#include <fstream>
#include <sstream>

namespace ssvt::cli {

namespace {

std::string trim(const std::string& text) {
  const auto begin = text.find_first_not_of(" \t");
  if (begin == std::string::npos) {
    return "";
  }
  const auto end = text.find_last_not_of(" \t");
  return text.substr(begin, end - begin + 1);
}

long parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long v = std::stol(value, &used);
    if (used != value.size()) {
      throw std::invalid_argument(value);
    }
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': invalid integer '" + value + "'");
  }
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) {
      throw std::invalid_argument(value);
    }
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': invalid number '" + value + "'");
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(value, &used);
    if (used != value.size()) {
      throw std::invalid_argument(value);
    }
    return static_cast<std::uint64_t>(v);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': invalid seed '" + value + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "on" || value == "true" || value == "1") {
    return true;
  }
  if (value == "off" || value == "false" || value == "0") {
    return false;
  }
  throw ConfigError("config key '" + key + "': expected on/off, got '" + value + "'");
}

}  // namespace

void apply_config_entry(RunConfig& config, const std::string& key,
                        const std::string& value) {
  // model section
  if (key == "model.image_size") config.model.image_size = parse_int(key, value);
  else if (key == "model.patch_size") config.model.patch_size = parse_int(key, value);
  else if (key == "model.channels") config.model.channels = parse_int(key, value);
  else if (key == "model.embed_dim") config.model.embed_dim = parse_int(key, value);
  else if (key == "model.depth") config.model.depth = parse_int(key, value);
  else if (key == "model.heads") config.model.heads = parse_int(key, value);
  else if (key == "model.mlp_ratio") config.model.mlp_ratio = parse_int(key, value);
  else if (key == "model.proj_dim") config.model.proj_dim = parse_int(key, value);
  // crop section
  else if (key == "crop.n_global") config.crop.n_global = static_cast<int>(parse_int(key, value));
  else if (key == "crop.n_local") config.crop.n_local = static_cast<int>(parse_int(key, value));
  else if (key == "crop.global_scale_lo") config.crop.global_scale_lo = parse_double(key, value);
  else if (key == "crop.global_scale_hi") config.crop.global_scale_hi = parse_double(key, value);
  else if (key == "crop.local_scale_lo") config.crop.local_scale_lo = parse_double(key, value);
  else if (key == "crop.local_scale_hi") config.crop.local_scale_hi = parse_double(key, value);
  else if (key == "crop.flip_prob") config.crop.flip_prob = parse_double(key, value);
  else if (key == "crop.grayscale_prob") config.crop.grayscale_prob = parse_double(key, value);
  // distill section
  else if (key == "distill.tau_teacher") config.distill.tau_teacher = parse_double(key, value);
  else if (key == "distill.tau_student") config.distill.tau_student = parse_double(key, value);
  else if (key == "distill.lambda_ema") config.distill.lambda_ema = parse_double(key, value);
  else if (key == "distill.ema_granularity") {
    if (value == "per_epoch") config.distill.ema_granularity = distill::EmaGranularity::kPerEpoch;
    else if (value == "per_step") config.distill.ema_granularity = distill::EmaGranularity::kPerStep;
    else throw ConfigError("config key '" + key + "': expected per_epoch or per_step");
  }
  else if (key == "distill.centering") config.distill.centering = parse_bool(key, value);
  else if (key == "distill.center_momentum") config.distill.center_momentum = parse_double(key, value);
  else if (key == "distill.lr") config.distill.optim.lr = parse_double(key, value);
  else if (key == "distill.beta1") config.distill.optim.beta1 = parse_double(key, value);
  else if (key == "distill.beta2") config.distill.optim.beta2 = parse_double(key, value);
  else if (key == "distill.weight_decay") config.distill.optim.weight_decay = parse_double(key, value);
  else if (key == "distill.epochs") config.distill.epochs = static_cast<int>(parse_int(key, value));
  else if (key == "distill.batch_size") config.distill.batch_size = parse_int(key, value);
  // probe section
  else if (key == "probe.lr") config.probe.optim.lr = parse_double(key, value);
  else if (key == "probe.weight_decay") config.probe.optim.weight_decay = parse_double(key, value);
  else if (key == "probe.max_epochs") config.probe.max_epochs = static_cast<int>(parse_int(key, value));
  // top level
  else if (key == "seed") config.seed = parse_u64(key, value);
  else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

void RunConfig::resolve() {
  crop.out_size = model.image_size;
  crop.seed = seed;
  distill.proj_dim = model.proj_dim;
  probe.seed = seed;
  model.validate();
  crop.validate();
  distill.validate();
}

RunConfig parse_run_config_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) {
    throw ConfigError("cannot open config file '" + file.string() + "'");
  }
  RunConfig config;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected 'section.key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": empty key or value");
    }
    apply_config_entry(config, key, value);
  }
  config.resolve();
  return config;
}

namespace {

std::string format_double(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

}  // namespace

std::map<std::string, std::string> config_metadata(const RunConfig& config) {
  std::map<std::string, std::string> meta;
  meta["config.model.image_size"] = std::to_string(config.model.image_size);
  meta["config.model.patch_size"] = std::to_string(config.model.patch_size);
  meta["config.model.channels"] = std::to_string(config.model.channels);
  meta["config.model.embed_dim"] = std::to_string(config.model.embed_dim);
  meta["config.model.depth"] = std::to_string(config.model.depth);
  meta["config.model.heads"] = std::to_string(config.model.heads);
  meta["config.model.mlp_ratio"] = std::to_string(config.model.mlp_ratio);
  meta["config.model.proj_dim"] = std::to_string(config.model.proj_dim);
  meta["config.crop.n_global"] = std::to_string(config.crop.n_global);
  meta["config.crop.n_local"] = std::to_string(config.crop.n_local);
  meta["config.crop.global_scale_lo"] = format_double(config.crop.global_scale_lo);
  meta["config.crop.global_scale_hi"] = format_double(config.crop.global_scale_hi);
  meta["config.crop.local_scale_lo"] = format_double(config.crop.local_scale_lo);
  meta["config.crop.local_scale_hi"] = format_double(config.crop.local_scale_hi);
  meta["config.crop.flip_prob"] = format_double(config.crop.flip_prob);
  meta["config.crop.grayscale_prob"] = format_double(config.crop.grayscale_prob);
  meta["config.distill.tau_teacher"] = format_double(config.distill.tau_teacher);
  meta["config.distill.tau_student"] = format_double(config.distill.tau_student);
  meta["config.distill.lambda_ema"] = format_double(config.distill.lambda_ema);
  meta["config.distill.ema_granularity"] =
      config.distill.ema_granularity == distill::EmaGranularity::kPerEpoch ? "per_epoch"
                                                                           : "per_step";
  meta["config.distill.centering"] = config.distill.centering ? "on" : "off";
  meta["config.distill.center_momentum"] = format_double(config.distill.center_momentum);
  meta["config.distill.lr"] = format_double(config.distill.optim.lr);
  meta["config.distill.beta1"] = format_double(config.distill.optim.beta1);
  meta["config.distill.beta2"] = format_double(config.distill.optim.beta2);
  meta["config.distill.weight_decay"] = format_double(config.distill.optim.weight_decay);
  meta["config.distill.epochs"] = std::to_string(config.distill.epochs);
  meta["config.distill.batch_size"] = std::to_string(config.distill.batch_size);
  meta["config.probe.lr"] = format_double(config.probe.optim.lr);
  meta["config.probe.weight_decay"] = format_double(config.probe.optim.weight_decay);
  meta["config.probe.max_epochs"] = std::to_string(config.probe.max_epochs);
  meta["config.seed"] = std::to_string(config.seed);
  return meta;
}

vit::ModelConfig model_config_from_metadata(
    const std::map<std::string, std::string>& metadata) {
  vit::ModelConfig model;
  auto want = [&metadata](const std::string& key) -> std::string {
    auto it = metadata.find(key);
    if (it == metadata.end()) {
      throw InputError("checkpoint metadata is missing '" + key + "'");
    }
    return it->second;
  };
  model.image_size = parse_int("model.image_size", want("config.model.image_size"));
  model.patch_size = parse_int("model.patch_size", want("config.model.patch_size"));
  model.channels = parse_int("model.channels", want("config.model.channels"));
  model.embed_dim = parse_int("model.embed_dim", want("config.model.embed_dim"));
  model.depth = parse_int("model.depth", want("config.model.depth"));
  model.heads = parse_int("model.heads", want("config.model.heads"));
  model.mlp_ratio = parse_int("model.mlp_ratio", want("config.model.mlp_ratio"));
  model.proj_dim = parse_int("model.proj_dim", want("config.model.proj_dim"));
  model.validate();
  return model;
}

}  // namespace ssvt::cli
