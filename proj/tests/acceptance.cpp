// Copyright 2026 The lte-scene Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance runner: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "checks.hpp"
#include "lte/dsp/features.hpp"
#include "lte/dsp/frames.hpp"
#include "lte/embed/embed.hpp"
#include "lte/kernelbase/kernelbase.hpp"
#include "lte/labeltree/labeltree.hpp"
#include "lte/pipeline/experiment.hpp"
#include "lte/pipeline/features.hpp"
#include "lte/pipeline/synth.hpp"
#include "oracles.hpp"

using namespace lte;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::vector<Sample> blobs(int classes, std::size_t per_class, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<std::vector<double>> centres(static_cast<std::size_t>(classes), std::vector<double>(dim));
  for (auto& c : centres)
    for (double& v : c) v = 2.0 * g(rng);
  std::vector<Sample> out;
  for (std::size_t k = 0; k < per_class; ++k) {
    for (int c = 0; c < classes; ++c) {
      Sample s{{}, c, -1};
      for (std::size_t d = 0; d < dim; ++d) s.x.push_back(centres[static_cast<std::size_t>(c)][d] + 0.7 * g(rng));
      out.push_back(std::move(s));
    }
  }
  return out;
}

forest::ForestConfig small_forest(std::size_t trees, std::uint64_t seed) {
  forest::ForestConfig f;
  f.n_trees = trees;
  f.rng_seed = seed;
  return f;
}

Outcome gradients() {
  double worst = 0.0;
  std::size_t runs = 0;
  for (auto mode : {cnn::Pooling::max, cnn::Pooling::mean, cnn::Pooling::mix}) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      worst = std::max(worst, checks::gradient_check(mode, seed).max_rel);
      ++runs;
    }
  }
  return {worst <= 1e-4, fmt("max relative error %.3g over %zu runs (3 pooling modes x 5 seeds)", worst, runs)};
}

Outcome convolution() {
  const double diff = checks::conv_oracle_max_diff(17, 100);
  return {diff <= 1e-6, fmt("max abs difference %.3g on 100 (image, filter) pairs incl. w = T", diff)};
}

Outcome partitions() {
  std::mt19937_64 rng(2024);
  const std::vector<Label> labels{0, 1, 2, 3, 4, 5, 6, 7};
  std::size_t exact_ok = 0;
  std::vector<double> ratios;
  for (int trial = 0; trial < 200; ++trial) {
    const Matrix abar = oracle::random_symmetrized_stochastic(8, rng);
    using labeltree::PartitionMode;
    const double e_exact =
        labeltree::partition_objective(abar, labels, labeltree::best_partition(abar, labels, PartitionMode::exact));
    const double e_spec =
        labeltree::partition_objective(abar, labels, labeltree::best_partition(abar, labels, PartitionMode::spectral));
    const double e_ref = oracle::max_partition_objective(abar);
    exact_ok += std::abs(e_exact - e_ref) <= 1e-12 * std::max(1.0, e_ref);
    ratios.push_back(e_spec / e_exact);
  }
  std::sort(ratios.begin(), ratios.end());
  const auto at_least = [&](double r) {
    return static_cast<double>(std::count_if(ratios.begin(), ratios.end(), [&](double v) { return v >= r - 1e-12; })) /
           static_cast<double>(ratios.size());
  };
  const double share90 = at_least(0.90);
  const bool pass = exact_ok == 200 && share90 >= 0.95;
  return {pass, fmt("exact = enumeration max on %zu/200; spectral/exact: min %.4f, p5 %.4f, median %.4f, "
                    "share >= 0.90: %.1f%%, share optimal: %.1f%%",
                    exact_ok, ratios.front(), ratios[10], ratios[100], 100.0 * share90, 100.0 * at_least(1.0))};
}

Outcome normalization() {
  const auto train = blobs(6, 40, 10, 5);
  labeltree::TreeBuildOptions opts;
  opts.forest = small_forest(30, 1);
  opts.seed = 3;
  const auto tree = labeltree::build_label_tree(train, opts);
  const auto model = embed::EmbeddingModel::train(tree, train, small_forest(30, 2), embed::ChannelTag{});
  std::mt19937_64 rng(99);
  std::normal_distribution<double> g(0.0, 4.0);
  double worst_sum = 0.0;
  std::size_t out_of_range = 0;
  for (int i = 0; i < 10000; ++i) {
    std::vector<double> x(10);
    for (double& v : x) v = g(rng);
    const auto psi = model.embed_segment(x);
    for (std::size_t j = 0; j < psi.size(); j += 2) {
      worst_sum = std::max(worst_sum, std::abs(psi[j] + psi[j + 1] - 1.0));
      out_of_range += (psi[j] < 0.0 || psi[j] > 1.0) + (psi[j + 1] < 0.0 || psi[j + 1] > 1.0);
    }
  }
  return {worst_sum <= 1e-9 && out_of_range == 0,
          fmt("10000 segments, %zu split pairs each: max |sum - 1| %.3g, entries outside [0,1]: %zu", model.tree().n_splits(),
              worst_sum, out_of_range)};
}

Outcome structure() {
  std::vector<std::string> failures;
  auto expect = [&](bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  };

  // 15 classes: 14 split nodes, 28 embedding features.
  labeltree::TreeBuildOptions opts;
  opts.forest = small_forest(10, 1);
  opts.seed = 4;
  const auto tree15 = labeltree::build_label_tree(blobs(15, 12, 6, 8), opts);
  expect(tree15.n_splits() == 14, "C=15 split nodes");

  // One embedding model per channel, fed by the features of real recordings.
  std::vector<embed::EmbeddingModel> models;
  for (const auto tag : embed::canonical_channels()) {
    const auto dim = dsp::family_dim(tag.family);
    models.push_back(embed::EmbeddingModel::train(tree15, blobs(15, 6, dim, 20 + tag.canonical_index()),
                                                  small_forest(3, 5), tag));
  }
  expect(models[0].output_dim() == 28, "C=15 embedding length");

  expect(dsp::segment_count(30 * 44100, 44100.0) == 118, "30 s segment count");
  pipeline::SynthConfig sc;
  sc.duration = 30.0;
  const auto rf30 = pipeline::extract_recording(pipeline::synth_recording(sc, 0, 0), {});
  sc.duration = 10.0;
  const auto rf10 = pipeline::extract_recording(pipeline::synth_recording(sc, 1, 0), {});
  expect(rf30.channels[0].segments() == 118, "30 s feature columns");
  expect(rf10.channels[0].segments() == 38, "10 s feature columns");

  std::vector<embed::LteImage> imgs30, imgs10;
  for (std::size_t k = 0; k < embed::kChannels; ++k) {
    imgs30.push_back(embed::lte_image(models[k], rf30.channels[k]));
    imgs10.push_back(embed::circular_pad(embed::lte_image(models[k], rf10.channels[k])));
  }
  const auto s30 = embed::stack_channels(imgs30);
  const auto s10 = embed::stack_channels(imgs10);
  expect(s30.p == 6 && s30.f == 28 && s30.t == 118, "stacked 30 s image shape");
  expect(s10.p == 6 && s10.f == 28 && s10.t == 118, "stacked padded 10 s image shape");

  // Pooled vector lengths with Q = 32 and widths {3, 5, 7}.
  std::vector<std::size_t> pooled;
  for (auto mode : {cnn::Pooling::max, cnn::Pooling::mean, cnn::Pooling::mix}) {
    cnn::CnnShape shape{6, 28, {3, 5, 7}, 32, 15, mode};
    const auto model = cnn::CnnModel::init(shape, std::vector<Label>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14}, 1);
    pooled.push_back(cnn::forward(model, cnn::to_time_major(s30)).pooled.size());
  }
  expect(pooled == std::vector<std::size_t>{96, 96, 192}, "pooled lengths");

  std::string detail = fmt("splits %zu, F %zu, T(30 s) %zu, T(10 s) %zu -> padded %zu, image %zux%zux%zu, pooled %zu/%zu/%zu",
                           tree15.n_splits(), models[0].output_dim(), rf30.channels[0].segments(),
                           rf10.channels[0].segments(), s10.t, s30.p, s30.f, s30.t, pooled[0], pooled[1], pooled[2]);
  for (const auto& f : failures) detail += "; wrong: " + f;
  return {failures.empty(), detail};
}

Outcome kernels() {
  using namespace lte::kernelbase;
  const auto xs = checks::random_instances(50, 6, 14, 7);
  const Matrix g = gram_matrix(xs, channel_means(xs));
  bool symmetric = true, unit = true;
  double trace = 0.0;
  for (std::size_t i = 0; i < 50; ++i) {
    unit = unit && g(i, i) == 1.0;
    trace += g(i, i);
    for (std::size_t j = 0; j < 50; ++j) symmetric = symmetric && g(i, j) == g(j, i);
  }
  const double min_eig = min_eigenvalue(g);

  SvmConfig tight;
  tight.tol = 1e-9;
  double worst = 0.0;
  // Soft margin, fusion kernel, 20 points.
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    std::vector<Label> labels;
    for (int i = 0; i < 20; ++i) labels.push_back(i % 2);
    auto inst = checks::class_instances(labels, 3, seed);
    std::swap(inst[2], inst[3]);
    const Matrix k = gram_matrix(inst, channel_means(inst));
    std::vector<int> y;
    for (Label l : labels) y.push_back(l == 0 ? 1 : -1);
    for (double cost : {0.25, 2.0, 16.0}) {
      tight.cost = cost;
      const auto sol = solve_binary(k, checks::iota(20), y, tight);
      const auto ref = oracle::soft_margin_dual(k, y, cost);
      for (std::size_t i = 0; i < 20; ++i) worst = std::max(worst, std::abs(checks::decision_of(sol, y, k, i) - ref.decision(k, i)));
    }
  }
  // Hard margin, linear kernel, 16 points.
  std::mt19937_64 rng(11);
  std::normal_distribution<double> nd(0.0, 0.6);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<std::vector<double>> x;
    std::vector<int> y;
    for (int i = 0; i < 16; ++i) {
      const int label = i % 2 == 0 ? 1 : -1;
      x.push_back({nd(rng) + 2.0 * label, nd(rng) - 1.0 * label});
      y.push_back(label);
    }
    const Matrix k = checks::linear_gram(x);
    tight.cost = 1e4;
    const auto sol = solve_binary(k, checks::iota(16), y, tight);
    const auto ref = oracle::hard_margin_linear(x, y);
    for (std::size_t i = 0; i < 16; ++i) worst = std::max(worst, std::abs(checks::decision_of(sol, y, k, i) - ref.decision(k, i)));
  }
  const bool pass = symmetric && unit && min_eig >= -1e-8 * trace && worst <= 1e-4;
  return {pass, fmt("Gram 50x50: symmetric %s, unit diagonal %s, min eigenvalue %.3g (bound %.3g); "
                    "max decision difference vs QP oracle %.3g",
                    symmetric ? "yes" : "no", unit ? "yes" : "no", min_eig, -1e-8 * trace, worst)};
}

Outcome end_to_end() {
  const fs::path dir = fs::temp_directory_path() / ("lte_acceptance_" + std::to_string(std::random_device{}()));
  struct Cleanup {
    fs::path p;
    ~Cleanup() {
      std::error_code ec;
      fs::remove_all(p, ec);
    }
  } cleanup{dir};
  const auto manifest = pipeline::synth_corpus(pipeline::SynthConfig{}, dir);
  auto cfg = pipeline::ExperimentConfig::desk();
  cfg.seed = 42;
  cfg.jobs = std::max(1u, std::thread::hardware_concurrency());
  const auto t0 = std::chrono::steady_clock::now();
  const auto result = pipeline::run_experiment(manifest, {pipeline::System::lte_plus, pipeline::System::cnn_mix}, cfg,
                                               [&](const std::string& s) {
                                                 const double t = std::chrono::duration<double>(
                                                     std::chrono::steady_clock::now() - t0).count();
                                                 std::cerr << fmt("  [%6.1f s] ", t) << s << '\n';
                                               });
  const double lte_plus = result.reports[0].overall;
  const double mix = result.reports[1].overall;
  const bool pass = mix >= 90.0 && mix >= lte_plus - 5.0;
  return {pass, fmt("120 recordings, 4 folds: cnn-mix %.1f%%, LTE+ %.1f%%, padded T %zu", mix, lte_plus,
                    result.pad_segments)};
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "gradient correctness", 30, gradients},
      {2, "convolution oracle", 10, convolution},
      {3, "partition exactness", 60, partitions},
      {4, "embedding normalization", 0, normalization},
      {5, "structural constants", 0, structure},
      {6, "kernel properties", 0, kernels},
      {7, "end-to-end desk scale", 900, end_to_end},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0 && secs > c.budget_s) {
      out.pass = false;
      out.detail += fmt("; over the %.0f s budget", c.budget_s);
    }
    std::printf("criterion %d %s  %s: %s (%.1f s)\n", c.id, out.pass ? "PASS" : "FAIL", c.name, out.detail.c_str(),
                secs);
    std::fflush(stdout);
    failed += !out.pass;
  }
  return failed == 0 ? 0 : 1;
}
