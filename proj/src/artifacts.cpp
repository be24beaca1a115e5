// Copyright (c) 2026 The ssvt Authors
// SPDX-License-Identifier: Apache-2.0

#include "ssvt/artifacts.hpp"

#include <cstdio>
#include <fstream>

namespace ssvt::cli {

io::Checkpoint pack_distill_state(const distill::DistillState& state,
                                  const RunConfig& config, int epochs_completed) {
  io::Checkpoint ck;
  for (const auto& [name, tensor] : state.teacher.entries) {
    ck.tensors.emplace_back("teacher/" + name, tensor);
  }
  for (const auto& [name, tensor] : state.student.entries) {
    ck.tensors.emplace_back("student/" + name, tensor);
  }
  if (state.center.defined()) {
    ck.tensors.emplace_back("center", state.center);
  }
  ck.metadata = config_metadata(config);
  ck.metadata["artifact"] = "ssvt.encoder";
  ck.metadata["seed"] = std::to_string(config.seed);
  ck.metadata["epochs_completed"] = std::to_string(epochs_completed);
  return ck;
}

namespace {

vit::ModelParams collect_prefixed(const io::Checkpoint& checkpoint,
                                  const std::string& prefix,
                                  const vit::ModelConfig& model) {
  vit::ModelParams params;
  params.config = model;
  for (const auto& [name, tensor] : checkpoint.tensors) {
    if (name.rfind(prefix, 0) == 0) {
      params.entries.emplace_back(name.substr(prefix.size()), tensor.clone());
    }
  }
  if (params.entries.empty()) {
    throw InputError("checkpoint has no '" + prefix + "' tensors");
  }
  return params;
}

}  // namespace

EncoderArtifact unpack_encoder(const io::Checkpoint& checkpoint) {
  auto it = checkpoint.metadata.find("artifact");
  if (it == checkpoint.metadata.end() || it->second != "ssvt.encoder") {
    throw InputError("checkpoint is not an encoder artifact");
  }
  EncoderArtifact artifact;
  artifact.metadata = checkpoint.metadata;
  const vit::ModelConfig model = model_config_from_metadata(checkpoint.metadata);
  artifact.teacher = collect_prefixed(checkpoint, "teacher/", model);
  artifact.student = collect_prefixed(checkpoint, "student/", model);
  return artifact;
}

io::Checkpoint pack_head(const probe::LinearHead& head, int num_classes,
                         const std::map<std::string, std::string>& extra_metadata) {
  io::Checkpoint ck;
  ck.tensors.emplace_back("head/weight", head.weight);
  ck.tensors.emplace_back("head/bias", head.bias);
  ck.metadata = extra_metadata;
  ck.metadata["artifact"] = "ssvt.head";
  ck.metadata["num_classes"] = std::to_string(num_classes);
  return ck;
}

HeadArtifact unpack_head(const io::Checkpoint& checkpoint) {
  auto it = checkpoint.metadata.find("artifact");
  if (it == checkpoint.metadata.end() || it->second != "ssvt.head") {
    throw InputError("checkpoint is not a head artifact");
  }
  HeadArtifact artifact;
  artifact.metadata = checkpoint.metadata;
  for (const auto& [name, tensor] : checkpoint.tensors) {
    if (name == "head/weight") {
      artifact.head.weight = tensor.clone();
    } else if (name == "head/bias") {
      artifact.head.bias = tensor.clone();
    }
  }
  if (!artifact.head.weight.defined() || !artifact.head.bias.defined()) {
    throw InputError("head checkpoint is missing head/weight or head/bias");
  }
  auto classes = checkpoint.metadata.find("num_classes");
  if (classes == checkpoint.metadata.end()) {
    throw InputError("head checkpoint is missing num_classes");
  }
  artifact.num_classes = std::stoi(classes->second);
  return artifact;
}

void write_split_file(const std::filesystem::path& path, const io::Dataset& dataset,
                      const probe::SplitAssignment& split) {
  std::vector<const char*> partition(dataset.items.size(), nullptr);
  for (Index i : split.train) {
    partition[static_cast<std::size_t>(i)] = "train";
  }
  for (Index i : split.val) {
    partition[static_cast<std::size_t>(i)] = "val";
  }
  for (Index i : split.test) {
    partition[static_cast<std::size_t>(i)] = "test";
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot write '" + path.string() + "'");
  }
  out << "index,filename,partition\n";
  for (std::size_t i = 0; i < dataset.items.size(); ++i) {
    if (partition[i] == nullptr) {
      throw ContractError("split does not cover index " + std::to_string(i));
    }
    out << i << "," << dataset.items[i].filename << "," << partition[i] << "\n";
  }
}

LoadedSplit read_split_file(const std::filesystem::path& path, const io::Dataset& dataset) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open split file '" + path.string() + "'");
  }
  std::string line;
  if (!std::getline(in, line) || (line != "index,filename,partition" &&
                                  line != "index,filename,partition\r")) {
    throw InputError("split file '" + path.string() +
                     "' must start with header 'index,filename,partition'");
  }
  LoadedSplit split;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty()) {
      continue;
    }
    const auto c1 = line.find(',');
    const auto c2 = line.rfind(',');
    if (c1 == std::string::npos || c2 == c1) {
      throw InputError("split file row '" + line + "' is malformed");
    }
    const std::size_t index = std::stoul(line.substr(0, c1));
    const std::string filename = line.substr(c1 + 1, c2 - c1 - 1);
    const std::string part = line.substr(c2 + 1);
    if (index >= dataset.items.size() || dataset.items[index].filename != filename) {
      throw InputError("split file does not match the dataset at row " +
                       std::to_string(rows + 1));
    }
    if (part == "train") {
      split.train.push_back(static_cast<Index>(index));
    } else if (part == "val") {
      split.val.push_back(static_cast<Index>(index));
    } else if (part == "test") {
      split.test.push_back(static_cast<Index>(index));
    } else {
      throw InputError("split file has unknown partition '" + part + "'");
    }
    ++rows;
  }
  if (rows != dataset.items.size()) {
    throw InputError("split file covers " + std::to_string(rows) + " items, dataset has " +
                     std::to_string(dataset.items.size()));
  }
  return split;
}

std::string format_full(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

void write_loss_csv(const std::filesystem::path& path, const std::vector<double>& loss,
                    const std::vector<double>& entropy) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot write '" + path.string() + "'");
  }
  out << "epoch,mean_loss,teacher_entropy\n";
  for (std::size_t i = 0; i < loss.size(); ++i) {
    out << i << "," << format_full(loss[i]) << "," << format_full(entropy[i]) << "\n";
  }
}

void write_head_trace_csv(const std::filesystem::path& path,
                          const std::vector<double>& train_loss,
                          const std::vector<double>& val_acc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot write '" + path.string() + "'");
  }
  out << "epoch,train_loss,val_acc\n";
  for (std::size_t i = 0; i < train_loss.size(); ++i) {
    out << (i + 1) << "," << format_full(train_loss[i]) << "," << format_full(val_acc[i])
        << "\n";
  }
}

}  // namespace ssvt::cli
