// Copyright (c) 2026 The ssvt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ssvt/data_io.hpp"
#include "ssvt/distill.hpp"
#include "ssvt/probe.hpp"
#include "ssvt/run_config.hpp"

namespace ssvt::cli {

// ---- encoder (stage-1) checkpoints ----

// teacher/* and student/* tensors plus the center vector and the resolved
// config echo.
io::Checkpoint pack_distill_state(const distill::DistillState& state,
                                  const RunConfig& config, int epochs_completed);

struct EncoderArtifact {
  vit::ModelParams teacher;
  vit::ModelParams student;
  std::map<std::string, std::string> metadata;
};

EncoderArtifact unpack_encoder(const io::Checkpoint& checkpoint);

// ---- head (stage-2) checkpoints ----

io::Checkpoint pack_head(const probe::LinearHead& head, int num_classes,
                         const std::map<std::string, std::string>& extra_metadata);

struct HeadArtifact {
  probe::LinearHead head;
  int num_classes = 0;
  std::map<std::string, std::string> metadata;
};

HeadArtifact unpack_head(const io::Checkpoint& checkpoint);

// ---- sidecar files ----

// "index,filename,partition" rows covering every dataset item.
void write_split_file(const std::filesystem::path& path, const io::Dataset& dataset,
                      const probe::SplitAssignment& split);

struct LoadedSplit {
  std::vector<Index> train;
  std::vector<Index> val;
  std::vector<Index> test;
};

// Verifies the file covers exactly this dataset (same size, same filenames).
LoadedSplit read_split_file(const std::filesystem::path& path, const io::Dataset& dataset);

// "epoch,mean_loss,teacher_entropy" rows, full double precision.
void write_loss_csv(const std::filesystem::path& path, const std::vector<double>& loss,
                    const std::vector<double>& entropy);

// "epoch,train_loss,val_acc" rows.
void write_head_trace_csv(const std::filesystem::path& path,
                          const std::vector<double>& train_loss,
                          const std::vector<double>& val_acc);

// Full-precision formatting shared by the CSV writers.
std::string format_full(double value);

}  // namespace ssvt::cli
