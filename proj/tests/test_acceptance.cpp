// Copyright (c) 2026 The ssvt Authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: one test case per release criterion, each printing an
// explicit [PASS]/[FAIL] line. Thresholds and tolerances are pinned here, not
// configurable.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "ssvt/artifacts.hpp"
#include "ssvt/augment.hpp"
#include "ssvt/data_io.hpp"
#include "ssvt/diagnostics.hpp"
#include "ssvt/distill.hpp"
#include "ssvt/metrics.hpp"
#include "ssvt/ops.hpp"
#include "ssvt/probe.hpp"
#include "ssvt/rng.hpp"
#include "ssvt/vit.hpp"

using namespace ssvt;
namespace fs = std::filesystem;

namespace {

bool criterion(int number, const std::string& text, bool pass) {
  std::printf("%s criterion %d: %s\n", pass ? "[PASS]" : "[FAIL]", number, text.c_str());
  std::fflush(stdout);
  return pass;
}

bool bitwise_equal(const Array& a, const Array& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
}

bool params_bitwise_equal(const vit::ModelParams& a, const vit::ModelParams& b) {
  if (a.entries.size() != b.entries.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    if (a.entries[i].first != b.entries[i].first ||
        !bitwise_equal(a.entries[i].second.array(), b.entries[i].second.array())) {
      return false;
    }
  }
  return true;
}

Tensor random_tensor(Shape shape, Rng& rng, double lo, double hi) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (Index i = 0; i < t.size(); ++i) {
    t.array()[i] = rng.uniform(lo, hi);
  }
  return t;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// ---- shared smoke-run fixture (criteria 6 and 7) ----

struct SmokeRun {
  fs::path dir;
  io::Dataset dataset;
  distill::DistillState state;
  double train_seconds = 0.0;
  vit::ModelConfig model_config = vit::ModelConfig::tiny();
  distill::DistillConfig distill_config;

  SmokeRun() {
    dir = fs::temp_directory_path() / ("ssvt_accept_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    io::generate_synthetic(dir / "data", 2, 64, 64, 11);
    dataset = io::load_dataset(dir / "data");

    augment::CropConfig crop;
    crop.out_size = model_config.image_size;
    crop.seed = 42;
    distill_config.proj_dim = model_config.proj_dim;
    distill_config.epochs = 10;
    distill_config.centering = true;

    const auto start = std::chrono::steady_clock::now();
    state = distill::pretrain(dataset.images(), model_config, crop, distill_config, 42);
    train_seconds = seconds_since(start);
  }
  ~SmokeRun() { fs::remove_all(dir); }
};

const SmokeRun& smoke_run() {
  static SmokeRun run;
  return run;
}

double probe_test_accuracy(const Tensor& features, const std::vector<int>& labels,
                           std::uint64_t seed, double* auc_mean_out = nullptr) {
  auto split = probe::stratified_split(labels, 2, probe::SplitRatios{}, seed);
  probe::HeadSettings settings;
  settings.seed = seed;
  auto result = probe::train_head(features, labels, split, settings);

  const Index d = features.dim(1);
  Tensor x_test = Tensor::zeros({static_cast<Index>(split.test.size()), d});
  std::vector<int> y_test;
  for (std::size_t i = 0; i < split.test.size(); ++i) {
    x_test.array().segment(static_cast<Index>(i) * d, d) =
        features.array().segment(split.test[i] * d, d);
    y_test.push_back(labels[static_cast<std::size_t>(split.test[i])]);
  }
  auto pred = probe::predict(result.head, x_test);
  if (auc_mean_out != nullptr) {
    *auc_mean_out = metrics::auc_macro_ovr(pred.probs, y_test).mean;
  }
  return metrics::accuracy(pred.labels, y_test);
}

// Independent softmax/cross-entropy oracles for the pair-loss check.

std::vector<double> oracle_sharpen(const std::vector<double>& logits, double tau) {
  double m = logits[0] / tau;
  for (double v : logits) {
    m = std::max(m, v / tau);
  }
  double total = 0.0;
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] / tau - m);
    total += out[i];
  }
  for (double& v : out) {
    v /= total;
  }
  return out;
}

std::vector<double> logits_of(const vit::ModelParams& params, const Tensor& crop) {
  NoGradGuard no_grad;
  Tensor logits = vit::forward(params, vit::stack_images({crop})).logits;
  std::vector<double> out(static_cast<std::size_t>(logits.size()));
  for (Index i = 0; i < logits.size(); ++i) {
    out[static_cast<std::size_t>(i)] = logits.array()[i];
  }
  return out;
}

double brute_force_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  double wins = 0.0;
  long pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) {
      continue;
    }
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) {
        continue;
      }
      ++pairs;
      if (scores[i] > scores[j]) {
        wins += 1.0;
      } else if (scores[i] == scores[j]) {
        wins += 0.5;
      }
    }
  }
  return wins / static_cast<double>(pairs);
}

std::string cli_path() {
#ifdef SSVT_CLI_PATH
  return SSVT_CLI_PATH;
#else
  const char* env = std::getenv("SSVT_CLI");
  REQUIRE(env != nullptr);
  return env;
#endif
}

int run_cli(const std::string& args) {
  const std::string cmd = cli_path() + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string read_bytes(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  REQUIRE(in.good());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("criterion 1: gradient correctness within 60 seconds") {
  const auto start = std::chrono::steady_clock::now();
  const auto reports = diag::gradcheck_suite();
  const double elapsed = seconds_since(start);

  bool ops_pass = diag::all_pass(reports);
  bool has_full_model = false;
  for (const auto& r : reports) {
    if (!r.pass) {
      MESSAGE(r.name << " failed: max_error=" << r.max_error << " " << r.worst);
    }
    has_full_model = has_full_model || r.name == "distill_loss_full_model";
  }
  const bool pass = ops_pass && has_full_model && elapsed <= 60.0;
  criterion(1, "all ops + full distillation loss match finite differences (" +
                   std::to_string(elapsed) + " s)", pass);
  CHECK(pass);
}

TEST_CASE("criterion 2: softmax row sums, bitwise shift invariance, tau monotonicity") {
  Rng rng(2025);
  bool sums_ok = true;
  for (int trial = 0; trial < 50; ++trial) {
    Tensor x = random_tensor({4, 16}, rng, -40.0, 40.0);
    Tensor p = ops::softmax_rows(x);
    for (Index r = 0; r < 4; ++r) {
      double s = 0.0;
      for (Index c = 0; c < 16; ++c) {
        s += p.array()[r * 16 + c];
      }
      sums_ok = sums_ok && std::abs(s - 1.0) <= 1e-6;
    }
  }

  bool shift_ok = true;
  for (int trial = 0; trial < 100; ++trial) {
    // Dyadic grid values: adding the constant is exact, so the max-subtracted
    // softmax must agree bitwise.
    Tensor x = Tensor::zeros({2, 12});
    for (Index i = 0; i < x.size(); ++i) {
      x.array()[i] = (static_cast<double>(rng.below(1u << 24)) - double(1u << 23)) * 0x1.0p-20;
    }
    const double c = (static_cast<double>(rng.below(1u << 24)) - double(1u << 23)) * 0x1.0p-20;
    Tensor shifted = Tensor::from_array(x.shape(), x.array() + c);
    shift_ok = shift_ok && bitwise_equal(ops::softmax_rows(x).array(),
                                         ops::softmax_rows(shifted).array());
  }

  bool mono_ok = true;
  const std::vector<double> taus{1.0, 0.5, 0.2, 0.1, 0.04};
  for (int trial = 0; trial < 100; ++trial) {
    Tensor logits = random_tensor({1, 10}, rng, -2.0, 2.0);
    Index arg = 0;
    logits.array().maxCoeff(&arg);
    logits.array()[arg] += 0.2;  // unique argmax
    double prev = 0.0;
    for (std::size_t k = 0; k < taus.size(); ++k) {
      const double mx = distill::sharpen(logits, taus[k]).array().maxCoeff();
      if (k > 0) {
        mono_ok = mono_ok && mx > prev;
      }
      prev = mx;
    }
  }

  const bool pass = sums_ok && shift_ok && mono_ok;
  criterion(2, "softmax sums within 1e-6, bitwise shift invariance, tau monotonicity", pass);
  CHECK(pass);
}

TEST_CASE("criterion 3: pair loss equals the explicit double loop") {
  bool pass = true;
  const std::vector<std::pair<int, int>> grids{{1, 1}, {2, 3}, {3, 5}};
  for (std::size_t g = 0; g < grids.size(); ++g) {
    distill::DistillState state;
    const auto cfg = vit::ModelConfig::micro();
    state.teacher = vit::init_params(cfg, 300 + g);
    state.student = vit::init_params(cfg, 400 + g);
    distill::DistillConfig dcfg;
    dcfg.proj_dim = cfg.proj_dim;

    augment::CropConfig crop;
    crop.n_global = grids[g].first;
    crop.n_local = grids[g].second;
    crop.out_size = 32;
    crop.seed = 500 + g;
    Rng rng(600 + g);
    Tensor image = random_tensor({3, 48, 48}, rng, 0.0, 1.0);
    augment::CropSet set = augment::build_crop_set(image, crop, 0);

    const double got = distill::pair_loss(state, set, dcfg).value();
    double expected = 0.0;
    for (const Tensor& gcrop : set.globals) {
      auto t_probs = oracle_sharpen(logits_of(state.teacher, gcrop), dcfg.tau_teacher);
      for (const Tensor& lcrop : set.locals) {
        auto s_probs = oracle_sharpen(logits_of(state.student, lcrop), dcfg.tau_student);
        double ce = 0.0;
        for (std::size_t i = 0; i < t_probs.size(); ++i) {
          ce -= t_probs[i] * std::log(std::max(s_probs[i], 1e-12));
        }
        expected += ce;
      }
    }
    expected /= static_cast<double>(set.globals.size() * set.locals.size());
    pass = pass && std::abs(got - expected) <= 1e-9;
  }
  criterion(3, "pair_loss matches the n_g x n_l double-loop oracle within 1e-9", pass);
  CHECK(pass);
}

TEST_CASE("criterion 4: cross-entropy identities and Gibbs inequality") {
  Rng rng(4096);
  bool self_ok = true, gibbs_ok = true;
  for (int trial = 0; trial < 100; ++trial) {
    const Index k = 3 + static_cast<Index>(rng.below(14));
    auto random_dist = [&rng, k] {
      Tensor p = Tensor::zeros({1, k});
      double total = 0.0;
      for (Index i = 0; i < k; ++i) {
        p.array()[i] = rng.uniform(0.01, 1.0);
        total += p.array()[i];
      }
      p.array() /= total;
      return p;
    };
    Tensor alpha = random_dist();
    Tensor beta = random_dist();
    const double h_self = ops::cross_entropy(alpha, alpha).value();
    const double h_cross = ops::cross_entropy(alpha, beta).value();
    const double entropy = distill::distribution_entropy(alpha.array());
    self_ok = self_ok && std::abs(h_self - entropy) <= 1e-9;
    gibbs_ok = gibbs_ok && h_cross >= h_self - 1e-12;
  }

  const Index k = 256;
  Tensor u = Tensor::full({1, k}, 1.0 / static_cast<double>(k));
  const bool uniform_ok =
      std::abs(ops::cross_entropy(u, u).value() - std::log(static_cast<double>(k))) <= 1e-9;

  const bool pass = self_ok && gibbs_ok && uniform_ok;
  criterion(4, "H(p,p)=entropy(p), H(a,b)>=H(a,a), uniform gives log K", pass);
  CHECK(pass);
}

TEST_CASE("criterion 5: EMA contract and teacher gradient exclusion") {
  const auto cfg = vit::ModelConfig::micro();

  // lambda in {0, 1}: bitwise.
  distill::DistillState state1;
  state1.teacher = vit::init_params(cfg, 51);
  state1.student = vit::init_params(cfg, 52);
  auto teacher_before = vit::clone_params(state1.teacher);
  distill::ema_update(state1, 1.0);
  const bool lambda1_ok = params_bitwise_equal(teacher_before, state1.teacher);
  distill::ema_update(state1, 0.0);
  const bool lambda0_ok = params_bitwise_equal(state1.teacher, state1.student);

  // general lambda: relative deviation from the convex combination <= 1e-12.
  distill::DistillState state2;
  state2.teacher = vit::init_params(cfg, 53);
  state2.student = vit::init_params(cfg, 54);
  auto before2 = vit::clone_params(state2.teacher);
  const double lambda = 0.7314159;
  distill::ema_update(state2, lambda);
  bool convex_ok = true;
  for (std::size_t i = 0; i < state2.teacher.entries.size(); ++i) {
    const Array expect = lambda * before2.entries[i].second.array() +
                         (1.0 - lambda) * state2.student.entries[i].second.array();
    const Array& got = state2.teacher.entries[i].second.array();
    for (Index j = 0; j < expect.size(); ++j) {
      const double denom = std::max(std::abs(expect[j]), 1e-300);
      convex_ok = convex_ok && std::abs(got[j] - expect[j]) / denom <= 1e-12;
    }
  }

  // teacher untouched by backward + optimizer step: bitwise.
  distill::DistillState state3;
  state3.teacher = vit::init_params(cfg, 55);
  state3.student = vit::init_params(cfg, 56);
  state3.student.set_requires_grad(true);
  distill::DistillConfig dcfg;
  dcfg.proj_dim = cfg.proj_dim;
  augment::CropConfig crop;
  crop.out_size = 32;
  crop.seed = 57;
  Rng rng(58);
  Tensor image = random_tensor({3, 48, 48}, rng, 0.0, 1.0);
  augment::CropSet set = augment::build_crop_set(image, crop, 0);
  auto before3 = vit::clone_params(state3.teacher);
  ComputeGraph graph;
  Tensor loss;
  {
    ComputeGraph::Scope scope(graph);
    loss = distill::pair_loss(state3, set, dcfg);
  }
  graph.backward(loss);
  distill::adamw_step(state3.student, state3.moments, state3.step_count, dcfg.optim);
  const bool frozen_ok = params_bitwise_equal(before3, state3.teacher);

  const bool pass = lambda1_ok && lambda0_ok && convex_ok && frozen_ok;
  criterion(5, "EMA convex combination within 1e-12, lambda in {0,1} bitwise, teacher frozen",
            pass);
  CHECK(pass);
}

TEST_CASE("criterion 6: self-distillation smoke run") {
  const SmokeRun& run = smoke_run();
  REQUIRE(run.state.loss_trace.size() == 10);

  const double first = run.state.loss_trace.front();
  const double last = run.state.loss_trace.back();
  const bool loss_ok = last <= 0.8 * first;

  const double entropy_floor = 0.5 * std::log(static_cast<double>(run.model_config.proj_dim));
  bool entropy_ok = true;
  for (double h : run.state.entropy_trace) {
    entropy_ok = entropy_ok && h >= entropy_floor;
  }
  const bool time_ok = run.train_seconds <= 300.0;

  char detail[256];
  std::snprintf(detail, sizeof(detail),
                "loss %.3f -> %.3f (need <= %.3f), min entropy %.3f (floor %.3f), %.0f s",
                first, last, 0.8 * first,
                *std::min_element(run.state.entropy_trace.begin(),
                                  run.state.entropy_trace.end()),
                entropy_floor, run.train_seconds);
  const bool pass = loss_ok && entropy_ok && time_ok;
  criterion(6, std::string("smoke run: ") + detail, pass);
  CHECK(pass);
}

TEST_CASE("criterion 7: probe utility and representation-learning signal") {
  const SmokeRun& run = smoke_run();
  const std::vector<int> labels = run.dataset.labels();

  Tensor ssl_features = probe::extract_features(run.state.teacher, run.dataset.images());

  double auc_mean = 0.0;
  const double acc_seed1 = probe_test_accuracy(ssl_features, labels, 1, &auc_mean);
  const bool threshold_ok = acc_seed1 >= 0.80 && auc_mean >= 0.85;

  double ssl_mean = 0.0, random_mean = 0.0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    ssl_mean += probe_test_accuracy(ssl_features, labels, seed);
    auto random_encoder = vit::init_params(run.model_config, 9000 + seed);
    Tensor random_features = probe::extract_features(random_encoder, run.dataset.images());
    random_mean += probe_test_accuracy(random_features, labels, seed);
  }
  ssl_mean /= 3.0;
  random_mean /= 3.0;
  const bool signal_ok = ssl_mean >= random_mean;

  char detail[256];
  std::snprintf(detail, sizeof(detail),
                "probe ACC %.3f (>= 0.80), AUC %.3f (>= 0.85); mean ACC ssl %.3f vs random %.3f",
                acc_seed1, auc_mean, ssl_mean, random_mean);
  const bool pass = threshold_ok && signal_ok;
  criterion(7, std::string("probe utility: ") + detail, pass);
  CHECK(pass);
}

TEST_CASE("criterion 8: AUC rank-sum equals brute force; symmetry and invariance") {
  Rng rng(888);
  bool oracle_ok = true;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.below(199);
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = static_cast<double>(rng.below(32)) / 8.0;
      labels[i] = static_cast<int>(rng.below(2));
    }
    labels[0] = 1;
    labels[n - 1] = 0;
    oracle_ok = oracle_ok &&
                std::abs(metrics::roc_auc_binary(scores, labels) -
                         brute_force_auc(scores, labels)) <= 1e-9;
  }

  // multi-class macro against the per-class brute force
  bool macro_ok = true;
  for (int trial = 0; trial < 10; ++trial) {
    const Index n = 30 + static_cast<Index>(rng.below(40));
    const Index c = 2 + static_cast<Index>(rng.below(4));
    Tensor probs = Tensor::zeros({n, c});
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
      double total = 0.0;
      for (Index j = 0; j < c; ++j) {
        probs.array()[i * c + j] = rng.uniform(0.01, 1.0);
        total += probs.array()[i * c + j];
      }
      for (Index j = 0; j < c; ++j) {
        probs.array()[i * c + j] /= total;
      }
      labels[static_cast<std::size_t>(i)] = static_cast<int>(i % c);
    }
    auto macro = metrics::auc_macro_ovr(probs, labels);
    for (Index cls = 0; cls < c; ++cls) {
      std::vector<double> col(static_cast<std::size_t>(n));
      std::vector<int> ind(static_cast<std::size_t>(n));
      for (Index i = 0; i < n; ++i) {
        col[static_cast<std::size_t>(i)] = probs.array()[i * c + cls];
        ind[static_cast<std::size_t>(i)] =
            labels[static_cast<std::size_t>(i)] == cls ? 1 : 0;
      }
      macro_ok = macro_ok &&
                 std::abs(macro.per_class[static_cast<std::size_t>(cls)] -
                          brute_force_auc(col, ind)) <= 1e-9;
    }
  }

  bool symmetry_ok = true, invariance_ok = true;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 4 + rng.below(100);
    std::vector<double> scores(n), transformed(n);
    std::vector<int> labels(n), flipped(n);
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = static_cast<double>(rng.below(24)) / 6.0 - 2.0;
      labels[i] = static_cast<int>(rng.below(2));
    }
    labels[0] = 1;
    labels[1] = 0;
    for (std::size_t i = 0; i < n; ++i) {
      flipped[i] = 1 - labels[i];
    }
    const double base = metrics::roc_auc_binary(scores, labels);
    symmetry_ok = symmetry_ok &&
                  std::abs(base + metrics::roc_auc_binary(scores, flipped) - 1.0) <= 1e-12;
    for (std::size_t i = 0; i < n; ++i) {
      transformed[i] = std::exp(scores[i]);
    }
    invariance_ok = invariance_ok &&
                    std::abs(metrics::roc_auc_binary(transformed, labels) - base) <= 1e-12;
    for (std::size_t i = 0; i < n; ++i) {
      transformed[i] = 0.25 * scores[i] + 7.0;
    }
    invariance_ok = invariance_ok &&
                    std::abs(metrics::roc_auc_binary(transformed, labels) - base) <= 1e-12;
  }

  const bool pass = oracle_ok && macro_ok && symmetry_ok && invariance_ok;
  criterion(8, "rank-sum AUC == O(N^2) oracle within 1e-9; symmetry/invariance within 1e-12",
            pass);
  CHECK(pass);
}

TEST_CASE("criterion 9: stratified split contract over 200 random instances") {
  Rng rng(999);
  bool pass = true;
  for (int trial = 0; trial < 200; ++trial) {
    const int num_classes = 2 + static_cast<int>(rng.below(5));
    std::vector<int> labels;
    std::vector<int> counts(static_cast<std::size_t>(num_classes));
    for (int c = 0; c < num_classes; ++c) {
      counts[static_cast<std::size_t>(c)] = 3 + static_cast<int>(rng.below(60));
      for (int i = 0; i < counts[static_cast<std::size_t>(c)]; ++i) {
        labels.push_back(c);
      }
    }
    // deterministic per-trial shuffle of dataset order
    Rng shuffle_rng(static_cast<std::uint64_t>(trial) + 1);
    shuffle_rng.shuffle(labels);

    auto split = probe::stratified_split(labels, num_classes, probe::SplitRatios{},
                                         rng.next_u64());
    std::vector<int> seen(labels.size(), 0);
    for (const auto* part : {&split.train, &split.val, &split.test}) {
      for (Index i : *part) {
        ++seen[static_cast<std::size_t>(i)];
      }
    }
    for (int s : seen) {
      pass = pass && s == 1;  // disjoint + complete
    }
    const double ratio[3] = {0.6, 0.2, 0.2};
    for (int c = 0; c < num_classes; ++c) {
      int class_total = 0;
      for (int label : labels) {
        class_total += label == c ? 1 : 0;
      }
      const std::vector<Index>* parts[3] = {&split.train, &split.val, &split.test};
      for (int p = 0; p < 3; ++p) {
        int got = 0;
        for (Index i : *parts[p]) {
          got += labels[static_cast<std::size_t>(i)] == c ? 1 : 0;
        }
        pass = pass && std::abs(got - ratio[p] * class_total) <= 1.0 + 1e-12;
      }
    }
  }
  criterion(9, "splits disjoint, complete, per-class within +/-1 of 0.6/0.2/0.2", pass);
  CHECK(pass);
}

TEST_CASE("criterion 10: CLI reproducibility and bit-exact serialization") {
  const fs::path dir =
      fs::temp_directory_path() / ("ssvt_accept10_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);

  REQUIRE(run_cli("synth --out " + (dir / "data").string() +
                  " --classes 2 --per-class 4 --size 32 --seed 5") == 0);
  {
    std::ofstream cfg(dir / "micro.cfg");
    cfg << "model.image_size = 32\nmodel.patch_size = 8\nmodel.embed_dim = 32\n"
           "model.depth = 2\nmodel.heads = 2\nmodel.proj_dim = 64\ncrop.n_local = 2\n"
           "distill.epochs = 2\ndistill.batch_size = 4\nseed = 3\n";
  }
  const std::string invocation =
      "pretrain --config " + (dir / "micro.cfg").string() + " --data " +
      (dir / "data").string();
  REQUIRE(run_cli(invocation + " --out " + (dir / "a.ckpt").string()) == 0);
  REQUIRE(run_cli(invocation + " --out " + (dir / "b.ckpt").string()) == 0);
  const bool ckpt_identical =
      read_bytes(dir / "a.ckpt") == read_bytes(dir / "b.ckpt");
  const bool csv_identical =
      read_bytes(dir / "a.ckpt.loss.csv") == read_bytes(dir / "b.ckpt.loss.csv");

  // checkpoint round trip: -0.0 and subnormals survive bitwise
  io::Checkpoint ck;
  ck.tensors.emplace_back(
      "edge", Tensor::from_data({5}, {-0.0, 5e-324, 2.2250738585072009e-308,
                                      -1.7976931348623157e308, 0.25}));
  ck.metadata["k"] = "v";
  io::save_checkpoint(dir / "edge.ckpt", ck);
  io::Checkpoint back = io::load_checkpoint(dir / "edge.ckpt");
  const bool roundtrip_ok =
      bitwise_equal(back.tensors[0].second.array(), ck.tensors[0].second.array()) &&
      std::signbit(back.tensors[0].second.array()[0]) && back.metadata == ck.metadata;

  fs::remove_all(dir);
  const bool pass = ckpt_identical && csv_identical && roundtrip_ok;
  criterion(10, "re-runs byte-identical; checkpoint round-trip bitwise lossless", pass);
  CHECK(pass);
}
