// Copyright 2026 The lte-scene Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "lte/common.hpp"

namespace lte::pipeline {

struct FoldScore {
  int fold = 0;
  std::size_t correct = 0;
  std::size_t total = 0;
  double accuracy() const { return total == 0 ? 0.0 : 100.0 * static_cast<double>(correct) / static_cast<double>(total); }
};

/// Accuracies in percent. confusion[i][j] counts recordings of class i predicted as j.
struct EvaluationReport {
  std::string system;
  std::vector<std::string> classes;
  std::vector<std::vector<std::size_t>> confusion;
  std::vector<double> per_class;
  double overall = 0.0;
  std::vector<FoldScore> folds;

  std::size_t total() const;
  std::size_t correct() const;

  /// class,accuracy rows then an "Overall" row.
  std::string to_csv() const;
  /// Table layout: one line per class, then the overall figure and fold breakdown.
  std::string to_text() const;
  nlohmann::json to_json() const;
  static EvaluationReport from_json(const nlohmann::json& j);
};

/// Scores aligned predictions against truth. `folds` (optional, aligned) adds
/// a per-fold breakdown.
EvaluationReport evaluate(std::span<const Label> predictions, std::span<const Label> truth,
                          const std::vector<std::string>& classes, std::span<const int> folds = {});

/// Side-by-side per-class table for several systems.
std::string compare_text(const std::vector<EvaluationReport>& reports);

}  // namespace lte::pipeline
