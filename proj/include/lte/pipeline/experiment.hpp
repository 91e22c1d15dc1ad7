// Copyright 2026 The lte-scene Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "lte/cnn/cnn.hpp"
#include "lte/forest/forest.hpp"
#include "lte/kernelbase/kernelbase.hpp"
#include "lte/labeltree/labeltree.hpp"
#include "lte/pipeline/features.hpp"
#include "lte/pipeline/manifest.hpp"
#include "lte/pipeline/report.hpp"

namespace lte::pipeline {

/// LTE1..3: single raw channel (GTCC, MFCC, LOGFB) with the fusion SVM.
/// LTE+: the three raw channels fused. cnn-*: six-channel images.
enum class System { lte1, lte2, lte3, lte_plus, cnn_max, cnn_mean, cnn_mix };

std::string_view system_name(System s);
System parse_system(std::string_view name);
std::vector<System> all_systems();
bool is_cnn(System s);

struct ExperimentConfig {
  FeatureSettings features;
  forest::ForestConfig tree_forest;   // confusion estimates for the label tree
  forest::ForestConfig embed_forest;  // split-node classifiers
  labeltree::PartitionMode partition = labeltree::PartitionMode::automatic;
  std::size_t descriptor_folds = 10;
  /// Train the CNN on held-out descriptors like the SVM systems; otherwise the
  /// training images come from the model fitted on all training recordings.
  bool cnn_crossval_descriptors = true;
  std::size_t pad_segments = 0;  // 0: longest recording in the corpus
  kernelbase::FusionSvmConfig svm;
  cnn::CnnConfig cnn;
  std::uint64_t seed = 42;
  std::size_t jobs = 1;
  bool deterministic = false;  // forces the scalar kernels
  bool resample = false;
  std::filesystem::path checkpoint_dir;

  void validate() const;

  /// Laptop-sized settings for the synthetic corpus.
  static ExperimentConfig desk();
  /// Full-size forests and 1000 filters per width, 500 epochs.
  static ExperimentConfig paper_scale();

  nlohmann::json to_json() const;
  /// Keys present in `j` override `base`; unknown keys are an error. A
  /// "preset" key ("default", "desk", "paper-scale") selects the base.
  static ExperimentConfig from_json(const nlohmann::json& j, ExperimentConfig base);
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::filesystem::path& path, ExperimentConfig base);
  static ExperimentConfig load(const std::filesystem::path& path);
};

using LogFn = std::function<void(const std::string&)>;

/// Features of every usable recording in the manifest.
struct Corpus {
  std::vector<std::string> ids;
  std::vector<Label> labels;
  std::vector<int> folds;
  std::vector<RecordingFeatures> features;
  std::vector<std::string> classes;
  std::vector<std::string> warnings;

  std::size_t size() const { return ids.size(); }
  std::size_t max_segments() const;
};

Corpus load_corpus(const DatasetManifest& manifest, const ExperimentConfig& cfg, bool need_denoised,
                   const LogFn& log = {});

struct ExperimentResult {
  std::vector<EvaluationReport> reports;  // one per requested system
  std::vector<std::string> warnings;
  std::size_t pad_segments = 0;
};

/// Outer cross-validation over the manifest folds. With a checkpoint
/// directory, finished folds are stored and skipped when rerun with the same
/// configuration.
ExperimentResult run_experiment(const DatasetManifest& manifest, const std::vector<System>& systems,
                                const ExperimentConfig& cfg, const LogFn& log = {});

/// Same as run_experiment on features that are already loaded.
ExperimentResult run_experiment(const Corpus& corpus, const std::vector<System>& systems, const ExperimentConfig& cfg,
                                const LogFn& log = {});

}  // namespace lte::pipeline
