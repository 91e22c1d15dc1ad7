// Copyright 2026 The lte-scene Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lte/common.hpp"

namespace lte::kernelbase {

/// 1/2 sum (u-v)^2 / (u+v); zero-denominator terms are skipped. Throws on
/// negative entries or a length mismatch.
double chi2_distance(std::span<const double> u, std::span<const double> v);

/// One pooled vector per channel.
using Instance = std::vector<std::vector<double>>;

/// Mean chi2 distance over all unordered pairs i < j. Needs >= 2 vectors.
double mean_train_distance(std::span<const std::vector<double>> vectors);
/// mean_train_distance per channel of the training instances.
std::vector<double> channel_means(std::span<const Instance> train);

/// exp(-sum_k D(a_k, b_k) / means_k). Throws if any mean is <= 0.
double fusion_kernel(const Instance& a, const Instance& b, std::span<const double> means);

/// K(rows_i, cols_j).
Matrix gram_matrix(std::span<const Instance> rows, std::span<const Instance> cols, std::span<const double> means,
                   std::size_t jobs = 1);
/// Symmetric training Gram matrix.
Matrix gram_matrix(std::span<const Instance> train, std::span<const double> means, std::size_t jobs = 1);

double min_eigenvalue(const Matrix& symmetric);
/// Smallest eigenvalue >= -rel * trace.
bool is_psd(const Matrix& symmetric, double rel = 1e-8);

struct SvmConfig {
  double cost = 1.0;
  double tol = 1e-3;
  std::size_t max_iter = 1'000'000;
  std::size_t jobs = 1;

  void validate() const;
};

/// Result of one two-class dual solve over a subset of the training points.
struct BinarySolution {
  std::vector<double> alpha;  // in [0, cost], aligned with the subset
  double bias = 0.0;
  std::size_t iterations = 0;
  double residual = 0.0;  // maximal KKT violation at exit
};

/// SMO with second-order working-set selection on
///   max  sum a_i - 1/2 sum a_i a_j y_i y_j K_ij,  0 <= a_i <= cost,  sum a_i y_i = 0.
/// `gram` is indexed through `subset`; y holds +1/-1 per subset entry.
/// If `objective_trace` is non-null, the dual objective after each step is appended.
BinarySolution solve_binary(const Matrix& gram, std::span<const std::size_t> subset, std::span<const int> y,
                            const SvmConfig& cfg, std::vector<double>* objective_trace = nullptr);

/// One pairwise machine; positive side is `first`.
struct PairMachine {
  Label first = 0;
  Label second = 1;
  std::vector<std::size_t> support;  // indices into the training set
  std::vector<double> coef;          // alpha_i y_i
  double bias = 0.0;

  /// sum coef_s K(x, support_s) + bias, given K(x, train_j) for every training point j.
  double decision(std::span<const double> kernel_row) const;
};

class SvmModel {
 public:
  SvmModel() = default;
  SvmModel(std::vector<Label> classes, std::vector<PairMachine> machines, double cost, std::size_t n_train);

  const std::vector<Label>& classes() const { return classes_; }
  const std::vector<PairMachine>& machines() const { return machines_; }
  double cost() const { return cost_; }
  std::size_t n_train() const { return n_train_; }

  /// Majority vote; ties go to the larger summed margin, then the smaller label.
  Label predict(std::span<const double> kernel_row) const;
  std::vector<double> decision_values(std::span<const double> kernel_row) const;

  std::string serialize() const;
  static SvmModel deserialize(std::string_view bytes);

 private:
  std::vector<Label> classes_;
  std::vector<PairMachine> machines_;
  double cost_ = 1.0;
  std::size_t n_train_ = 0;
};

/// C(C-1)/2 pairwise machines over a precomputed training Gram matrix.
SvmModel train_ovo_svm(const Matrix& gram, std::span<const Label> labels, const SvmConfig& cfg);

/// 2^-3 ... 2^7
std::vector<double> default_cost_grid();

struct CostSearch {
  double best_cost = 1.0;
  std::vector<double> grid;
  std::vector<double> cv_accuracy;  // aligned with grid
};

/// k-fold stratified cross-validation over the grid; the first best cost wins.
CostSearch select_cost(const Matrix& gram, std::span<const Label> labels, std::span<const double> grid,
                       std::size_t folds, std::uint64_t seed, const SvmConfig& base);

struct FusionSvmConfig {
  SvmConfig svm;
  std::vector<double> cost_grid = default_cost_grid();
  std::size_t cv_folds = 10;
  std::uint64_t seed = 0;
};

/// Fusion-kernel SVM with its training instances and channel means.
class FusionSvm {
 public:
  static FusionSvm train(std::vector<Instance> train, std::span<const Label> labels, const FusionSvmConfig& cfg);

  Label predict(const Instance& x) const;
  const SvmModel& model() const { return model_; }
  const std::vector<double>& means() const { return means_; }
  const CostSearch& search() const { return search_; }
  const std::vector<Instance>& training_instances() const { return train_; }

  /// Training instances, channel means, cost search and the pairwise machines.
  std::string serialize() const;
  static FusionSvm deserialize(std::string_view bytes);

 private:
  std::vector<Instance> train_;
  std::vector<double> means_;
  SvmModel model_;
  CostSearch search_;
};

}  // namespace lte::kernelbase
