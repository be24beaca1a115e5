// Copyright (c) 2026 The ssvt Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: synthetic data generation, self-distillation
// pretraining, linear probing, evaluation, embedding export, and gradient
// diagnostics. Every command is deterministic given its arguments.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "ssvt/artifacts.hpp"
#include "ssvt/data_io.hpp"
#include "ssvt/diagnostics.hpp"
#include "ssvt/distill.hpp"
#include "ssvt/metrics.hpp"
#include "ssvt/probe.hpp"
#include "ssvt/run_config.hpp"

namespace fs = std::filesystem;
using namespace ssvt;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitRuntime = 3;

void check_threads_env() {
  const char* env = std::getenv("SSVT_THREADS");
  if (env == nullptr) {
    return;
  }
  try {
    std::size_t used = 0;
    const int threads = std::stoi(env, &used);
    if (used != std::string(env).size() || threads < 1) {
      throw std::invalid_argument(env);
    }
    // Execution is single-threaded; values above 1 only permit parallelism,
    // they never change results.
  } catch (const std::exception&) {
    throw ConfigError(std::string("SSVT_THREADS must be a positive integer, got '") +
                      env + "'");
  }
}

void require_data_flag(const std::string& data_dir) {
  if (data_dir.empty()) {
    throw InputError("missing --data DIR");
  }
}

cli::RunConfig load_run_config(const std::string& config_file) {
  if (config_file.empty()) {
    cli::RunConfig config;
    config.resolve();
    return config;
  }
  return cli::parse_run_config_file(config_file);
}

probe::SplitRatios parse_split_arg(const std::string& text) {
  std::vector<double> parts;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = text.find(',', pos);
    const std::string token =
        text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(token, &used));
      if (used != token.size()) {
        throw std::invalid_argument(token);
      }
    } catch (const std::exception&) {
      throw ConfigError("--split: invalid number '" + token + "'");
    }
    if (comma == std::string::npos) {
      break;
    }
    pos = comma + 1;
  }
  if (parts.size() != 3) {
    throw ConfigError("--split expects three comma-separated ratios");
  }
  probe::SplitRatios ratios{parts[0], parts[1], parts[2]};
  ratios.validate();
  return ratios;
}

std::vector<int> test_labels_of(const io::Dataset& dataset, const std::vector<Index>& test) {
  std::vector<int> labels;
  labels.reserve(test.size());
  for (Index i : test) {
    labels.push_back(dataset.items[static_cast<std::size_t>(i)].label);
  }
  return labels;
}

int cmd_pretrain(const std::string& config_file, const std::string& data_dir,
                 const std::string& out_path, int epochs_override, bool has_epochs,
                 std::uint64_t seed_override, bool has_seed) {
  require_data_flag(data_dir);
  cli::RunConfig config = load_run_config(config_file);
  if (has_epochs) {
    config.distill.epochs = epochs_override;
  }
  if (has_seed) {
    config.seed = seed_override;
  }
  config.resolve();

  io::Dataset dataset = io::load_dataset(data_dir);
  if (dataset.items.empty()) {
    throw InputError("dataset '" + data_dir + "' has no images");
  }

  distill::DistillState state = distill::pretrain(dataset.images(), config.model,
                                                  config.crop, config.distill, config.seed);

  io::save_checkpoint(out_path, cli::pack_distill_state(state, config,
                                                        config.distill.epochs));
  cli::write_loss_csv(out_path + ".loss.csv", state.loss_trace, state.entropy_trace);
  std::cout << "pretrain: " << dataset.items.size() << " images, "
            << config.distill.epochs << " epochs";
  if (!state.loss_trace.empty()) {
    std::cout << ", final mean loss " << state.loss_trace.back();
  }
  std::cout << "\nwrote " << out_path << " and " << out_path << ".loss.csv\n";
  return kExitOk;
}

int cmd_probe(const std::string& encoder_path, const std::string& data_dir,
              const std::string& split_arg, std::uint64_t seed,
              const std::string& out_path, const std::string& config_file) {
  require_data_flag(data_dir);
  probe::SplitRatios ratios = parse_split_arg(split_arg);
  cli::RunConfig run_config = load_run_config(config_file);

  cli::EncoderArtifact encoder = cli::unpack_encoder(io::load_checkpoint(encoder_path));
  io::Dataset dataset = io::load_dataset(data_dir);
  if (!dataset.labeled()) {
    throw InputError("probe requires a labeled dataset (labels.csv)");
  }

  probe::SplitAssignment split =
      probe::stratified_split(dataset.labels(), dataset.num_classes, ratios, seed);
  Tensor features = probe::extract_features(encoder.teacher, dataset.images());

  probe::HeadSettings settings = run_config.probe;
  settings.seed = seed;
  probe::HeadTrainResult result =
      probe::train_head(features, dataset.labels(), split, settings);

  std::map<std::string, std::string> meta = encoder.metadata;
  meta["head.seed"] = std::to_string(seed);
  meta["head.best_epoch"] = std::to_string(result.best_epoch);
  meta["head.best_val_acc"] =
      cli::format_full(result.val_acc[static_cast<std::size_t>(result.best_epoch - 1)]);
  meta["head.split"] = split_arg;
  io::save_checkpoint(out_path, cli::pack_head(result.head, dataset.num_classes, meta));
  cli::write_split_file(out_path + ".split.csv", dataset, split);
  cli::write_head_trace_csv(out_path + ".trace.csv", result.train_loss, result.val_acc);
  std::cout << "probe: best validation accuracy "
            << result.val_acc[static_cast<std::size_t>(result.best_epoch - 1)]
            << " at epoch " << result.best_epoch << "\nwrote " << out_path << ", "
            << out_path << ".split.csv, " << out_path << ".trace.csv\n";
  return kExitOk;
}

int cmd_eval(const std::string& encoder_path, const std::string& head_path,
             const std::string& data_dir, const std::string& split_file,
             const std::string& report_path) {
  require_data_flag(data_dir);
  cli::EncoderArtifact encoder = cli::unpack_encoder(io::load_checkpoint(encoder_path));
  cli::HeadArtifact head = cli::unpack_head(io::load_checkpoint(head_path));
  io::Dataset dataset = io::load_dataset(data_dir);
  if (!dataset.labeled()) {
    throw InputError("eval requires a labeled dataset (labels.csv)");
  }
  if (dataset.num_classes != head.num_classes) {
    throw InputError("dataset has " + std::to_string(dataset.num_classes) +
                     " classes but the head was trained for " +
                     std::to_string(head.num_classes));
  }

  cli::LoadedSplit split = cli::read_split_file(split_file, dataset);
  if (split.test.empty()) {
    throw InputError("split file has an empty test partition");
  }

  std::vector<Tensor> test_images;
  test_images.reserve(split.test.size());
  for (Index i : split.test) {
    test_images.push_back(dataset.items[static_cast<std::size_t>(i)].image);
  }
  const std::vector<int> labels = test_labels_of(dataset, split.test);

  Tensor features = probe::extract_features(encoder.teacher, test_images);
  probe::Prediction prediction = probe::predict(head.head, features);

  metrics::EvalReport report;
  report.accuracy = metrics::accuracy(prediction.labels, labels);
  metrics::MacroAuc auc = metrics::auc_macro_ovr(prediction.probs, labels);
  report.auc_per_class = auc.per_class;
  report.auc_mean = auc.mean;
  report.class_counts.assign(static_cast<std::size_t>(head.num_classes), 0);
  for (int label : labels) {
    ++report.class_counts[static_cast<std::size_t>(label)];
  }
  report.split = "test";

  std::ofstream out(report_path, std::ios::binary);
  if (!out) {
    throw IoError("cannot write '" + report_path + "'");
  }
  out << metrics::to_json(report);
  std::cout << "eval: accuracy " << report.accuracy << ", macro AUC " << report.auc_mean
            << " on " << labels.size() << " test items\nwrote " << report_path << "\n";
  return kExitOk;
}

int cmd_gradcheck() {
  const auto reports = diag::gradcheck_suite();
  Index total_checked = 0;
  for (const auto& report : reports) {
    std::cout << (report.pass ? "PASS" : "FAIL") << "  " << report.name
              << "  max_rel_error=" << report.max_error << " (tol " << report.tol
              << ", " << report.checked << " elements)";
    if (!report.pass) {
      std::cout << "  worst: " << report.worst;
    }
    std::cout << "\n";
    total_checked += report.checked;
  }
  const bool ok = diag::all_pass(reports);
  std::cout << (ok ? "gradcheck: all operations pass" : "gradcheck: FAILURES present")
            << " (" << total_checked << " elements compared)\n";
  return ok ? kExitOk : kExitRuntime;
}

int cmd_synth(const std::string& out_dir, int classes, int per_class, Index size,
              std::uint64_t seed) {
  io::generate_synthetic(out_dir, classes, per_class, size, seed);
  std::cout << "synth: wrote " << classes * per_class << " images (" << classes
            << " classes) under " << out_dir << "\n";
  return kExitOk;
}

int cmd_export_embeddings(const std::string& encoder_path, const std::string& data_dir,
                          const std::string& out_path) {
  require_data_flag(data_dir);
  cli::EncoderArtifact encoder = cli::unpack_encoder(io::load_checkpoint(encoder_path));
  io::Dataset dataset = io::load_dataset(data_dir);
  if (dataset.items.empty()) {
    throw InputError("dataset '" + data_dir + "' has no images");
  }
  Tensor features = probe::extract_features(encoder.teacher, dataset.images());

  std::ofstream out(out_path, std::ios::binary);
  if (!out) {
    throw IoError("cannot write '" + out_path + "'");
  }
  const Index d = features.dim(1);
  out << "filename,label";
  for (Index j = 0; j < d; ++j) {
    out << ",f" << j;
  }
  out << "\n";
  for (std::size_t i = 0; i < dataset.items.size(); ++i) {
    out << dataset.items[i].filename << "," << dataset.items[i].label;
    for (Index j = 0; j < d; ++j) {
      out << "," << cli::format_full(features.array()[static_cast<Index>(i) * d + j]);
    }
    out << "\n";
  }
  std::cout << "export-embeddings: wrote " << dataset.items.size() << " rows of width "
            << (d + 2) << " to " << out_path << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"self-supervised vision transformer pipeline"};
  app.require_subcommand(1);
  int exit_code = kExitOk;

  // pretrain
  std::string pre_config, pre_data, pre_out;
  int pre_epochs = 0;
  std::uint64_t pre_seed = 0;
  auto* pretrain = app.add_subcommand("pretrain", "stage-1 self-distillation pretraining");
  pretrain->add_option("--config", pre_config, "run config file");
  pretrain->add_option("--data", pre_data, "dataset directory");
  pretrain->add_option("--out", pre_out, "output checkpoint path")->required();
  auto* pre_epochs_opt = pretrain->add_option("--epochs", pre_epochs, "epoch override");
  auto* pre_seed_opt = pretrain->add_option("--seed", pre_seed, "seed override");
  pretrain->callback([&] {
    exit_code = cmd_pretrain(pre_config, pre_data, pre_out, pre_epochs,
                             pre_epochs_opt->count() > 0, pre_seed,
                             pre_seed_opt->count() > 0);
  });

  // probe
  std::string probe_encoder, probe_data, probe_split = "0.6,0.2,0.2", probe_out,
              probe_config;
  std::uint64_t probe_seed = 0;
  auto* probe_cmd = app.add_subcommand("probe", "stage-2 frozen-feature linear probe");
  probe_cmd->add_option("--encoder", probe_encoder, "encoder checkpoint")->required();
  probe_cmd->add_option("--data", probe_data, "labeled dataset directory");
  probe_cmd->add_option("--split", probe_split, "train,val,test ratios");
  probe_cmd->add_option("--seed", probe_seed, "split/init seed");
  probe_cmd->add_option("--out", probe_out, "output head checkpoint")->required();
  probe_cmd->add_option("--config", probe_config, "run config file (probe section)");
  probe_cmd->callback([&] {
    exit_code = cmd_probe(probe_encoder, probe_data, probe_split, probe_seed, probe_out,
                          probe_config);
  });

  // eval
  std::string eval_encoder, eval_head, eval_data, eval_split_file, eval_report;
  auto* eval_cmd = app.add_subcommand("eval", "test-partition evaluation report");
  eval_cmd->add_option("--encoder", eval_encoder, "encoder checkpoint")->required();
  eval_cmd->add_option("--head", eval_head, "head checkpoint")->required();
  eval_cmd->add_option("--data", eval_data, "labeled dataset directory");
  eval_cmd->add_option("--split-file", eval_split_file, "split file from probe")->required();
  eval_cmd->add_option("--report", eval_report, "output JSON report")->required();
  eval_cmd->callback([&] {
    exit_code = cmd_eval(eval_encoder, eval_head, eval_data, eval_split_file, eval_report);
  });

  // gradcheck
  auto* gradcheck_cmd = app.add_subcommand("gradcheck", "finite-difference diagnostics");
  gradcheck_cmd->callback([&] { exit_code = cmd_gradcheck(); });

  // synth
  std::string synth_out;
  int synth_classes = 2, synth_per_class = 64;
  Index synth_size = 64;
  std::uint64_t synth_seed = 0;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic labeled dataset");
  synth_cmd->add_option("--out", synth_out, "output dataset directory")->required();
  synth_cmd->add_option("--classes", synth_classes, "number of classes");
  synth_cmd->add_option("--per-class", synth_per_class, "images per class");
  synth_cmd->add_option("--size", synth_size, "image side in pixels");
  synth_cmd->add_option("--seed", synth_seed, "generator seed");
  synth_cmd->callback([&] {
    exit_code = cmd_synth(synth_out, synth_classes, synth_per_class, synth_size, synth_seed);
  });

  // export-embeddings
  std::string emb_encoder, emb_data, emb_out;
  auto* emb_cmd = app.add_subcommand("export-embeddings", "per-image feature CSV");
  emb_cmd->add_option("--encoder", emb_encoder, "encoder checkpoint")->required();
  emb_cmd->add_option("--data", emb_data, "dataset directory");
  emb_cmd->add_option("--out", emb_out, "output CSV path")->required();
  emb_cmd->callback([&] { exit_code = cmd_export_embeddings(emb_encoder, emb_data, emb_out); });

  try {
    check_threads_env();
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InputError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return exit_code;
}
