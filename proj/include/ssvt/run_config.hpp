// Copyright (c) 2026 The ssvt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "ssvt/augment.hpp"
#include "ssvt/distill.hpp"
#include "ssvt/probe.hpp"
#include "ssvt/vit.hpp"

namespace ssvt::cli {

// Resolved run configuration: every key has a default; dataset paths come
// from command-line flags. The crop output size always equals the model input
// size and the distill projection dimension mirrors the model head, so
// neither is an independent key.
struct RunConfig {
  vit::ModelConfig model = vit::ModelConfig::tiny();
  augment::CropConfig crop;
  distill::DistillConfig distill;
  probe::HeadSettings probe;
  std::uint64_t seed = 0;

  // Syncs derived fields (crop.out_size, distill.proj_dim, seeds) and
  // validates everything.
  void resolve();
};

// Line-oriented "section.key = value" text with '#' comments. Unknown keys
// are rejected.
RunConfig parse_run_config_file(const std::filesystem::path& file);

// Applies one "section.key" assignment; shared by the file parser.
void apply_config_entry(RunConfig& config, const std::string& key,
                        const std::string& value);

// Deterministic "config.section.key" -> value echo for checkpoint metadata.
std::map<std::string, std::string> config_metadata(const RunConfig& config);

// Rebuilds the model section from checkpoint metadata written by
// config_metadata.
vit::ModelConfig model_config_from_metadata(
    const std::map<std::string, std::string>& metadata);

}  // namespace ssvt::cli
