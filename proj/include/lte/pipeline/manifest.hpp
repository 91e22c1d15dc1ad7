// Copyright 2026 The lte-scene Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "lte/common.hpp"

namespace lte::pipeline {

struct ManifestEntry {
  std::string id;
  std::filesystem::path path;  // relative paths resolve against the manifest's directory
  std::string label;
  int fold = 1;
  bool excluded = false;
};

/// Recording list with class names and cross-validation folds.
///
/// CSV columns: id,path,label,fold[,exclude]. `exclude` is 0/1 (or empty) and
/// marks recordings to leave out entirely.
struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  std::vector<std::string> classes;  // sorted
  std::filesystem::path root;

  int n_folds() const;
  Label label_index(std::string_view name) const;
  std::filesystem::path resolve(const ManifestEntry& e) const;
  /// Entries that are not excluded.
  std::vector<ManifestEntry> active() const;
};

/// Parses and validates the CSV text. With `check_files`, every referenced
/// file must exist; all missing ids are reported together.
DatasetManifest parse_manifest(std::string_view csv, const std::filesystem::path& root, bool check_files = true);

DatasetManifest ingest_dataset(const std::filesystem::path& manifest_path, bool check_files = true);

/// Marks the listed ids (one per line, '#' comments) as excluded; unknown ids are an error.
void apply_exclusions(DatasetManifest& manifest, const std::filesystem::path& list);

std::string manifest_csv(const DatasetManifest& manifest);

}  // namespace lte::pipeline
