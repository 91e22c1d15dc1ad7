// Copyright 2026 The lte-scene Authors
// SPDX-License-Identifier: Apache-2.0

#include "lte/kernelbase/kernelbase.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>


#include "json.hpp"
#include "lte/binio.hpp"
#include "lte/embed/embed.hpp"
#include "lte/parallel.hpp"
#include "lte/simd/kernels.hpp"

namespace lte::kernelbase {
namespace {

constexpr std::uint32_t kSvmMagic = 0x5653544cu;  // "LTSV"
constexpr std::uint32_t kFusionMagic = 0x5346544cu;  // "LTFS"
constexpr std::uint32_t kSvmVersion = 1;
constexpr double kTau = 1e-12;

void check_nonnegative(std::span<const double> u) {
  for (double v : u) {
    if (!(v >= 0.0)) throw Error("chi2 distance needs non-negative finite entries");
  }
}

void check_instances(std::span<const Instance> set, std::size_t channels) {
  for (const auto& inst : set) {
    if (inst.size() != channels) throw Error("instance has " + std::to_string(inst.size()) + " channels, expected " + std::to_string(channels));
    for (const auto& v : inst) check_nonnegative(v);
  }
}

void check_means(std::span<const double> means) {
  for (std::size_t k = 0; k < means.size(); ++k) {
    if (!(means[k] > 0.0)) {
      throw Error("mean training distance of channel " + std::to_string(k) +
                  " is not positive (all training vectors identical?)");
    }
  }
}

double kernel_unchecked(const Instance& a, const Instance& b, std::span<const double> means) {
  double s = 0.0;
  for (std::size_t k = 0; k < means.size(); ++k) {
    if (a[k].size() != b[k].size()) throw Error("chi2 distance needs equal-length vectors");
    s += simd::chi2(a[k], b[k]) / means[k];
  }
  return std::exp(-s);
}

Matrix submatrix(const Matrix& m, std::span<const std::size_t> rows, std::span<const std::size_t> cols) {
  Matrix out(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = m(rows[i], cols[j]);
  return out;
}

}  // namespace

double chi2_distance(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw Error("chi2 distance needs equal-length vectors");
  check_nonnegative(u);
  check_nonnegative(v);
  return simd::chi2(u, v);
}

double mean_train_distance(std::span<const std::vector<double>> vectors) {
  if (vectors.size() < 2) throw Error("mean training distance needs at least two instances");
  for (const auto& v : vectors) check_nonnegative(v);
  double sum = 0.0;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    for (std::size_t j = i + 1; j < vectors.size(); ++j) {
      if (vectors[i].size() != vectors[j].size()) throw Error("chi2 distance needs equal-length vectors");
      sum += simd::chi2(vectors[i], vectors[j]);
    }
  }
  const double pairs = 0.5 * static_cast<double>(vectors.size()) * static_cast<double>(vectors.size() - 1);
  return sum / pairs;
}

std::vector<double> channel_means(std::span<const Instance> train) {
  if (train.empty()) throw Error("no training instances");
  const std::size_t channels = train.front().size();
  std::vector<double> means(channels);
  std::vector<std::vector<double>> column(train.size());
  for (std::size_t k = 0; k < channels; ++k) {
    for (std::size_t i = 0; i < train.size(); ++i) {
      if (train[i].size() != channels) throw Error("instances disagree on channel count");
      column[i] = train[i][k];
    }
    means[k] = mean_train_distance(column);
  }
  return means;
}

double fusion_kernel(const Instance& a, const Instance& b, std::span<const double> means) {
  if (a.size() != means.size() || b.size() != means.size()) throw Error("channel count does not match kernel means");
  check_means(means);
  for (std::size_t k = 0; k < means.size(); ++k) {
    check_nonnegative(a[k]);
    check_nonnegative(b[k]);
  }
  return kernel_unchecked(a, b, means);
}

Matrix gram_matrix(std::span<const Instance> rows, std::span<const Instance> cols, std::span<const double> means,
                   std::size_t jobs) {
  check_means(means);
  check_instances(rows, means.size());
  check_instances(cols, means.size());
  Matrix g(rows.size(), cols.size());
  parallel_for(rows.size(), jobs, [&](std::size_t i) {
    for (std::size_t j = 0; j < cols.size(); ++j) g(i, j) = kernel_unchecked(rows[i], cols[j], means);
  });
  return g;
}

Matrix gram_matrix(std::span<const Instance> train, std::span<const double> means, std::size_t jobs) {
  check_means(means);
  check_instances(train, means.size());
  const std::size_t n = train.size();
  Matrix g(n, n);
  parallel_for(n, jobs, [&](std::size_t i) {
    g(i, i) = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) g(i, j) = kernel_unchecked(train[i], train[j], means);
  });
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) g(i, j) = g(j, i);
  return g;
}

double min_eigenvalue(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() == 0) throw Error("eigenvalues need a non-empty square matrix");
  Eigen::MatrixXd e(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) e(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(i, j);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(e, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

bool is_psd(const Matrix& m, double rel) {
  double trace = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) trace += m(i, i);
  return min_eigenvalue(m) >= -rel * std::abs(trace);
}

void SvmConfig::validate() const {
  if (!(cost > 0.0)) throw Error("SVM cost must be positive");
  if (!(tol > 0.0)) throw Error("SVM tolerance must be positive");
  if (max_iter == 0) throw Error("SVM max_iter must be positive");
}

BinarySolution solve_binary(const Matrix& gram, std::span<const std::size_t> subset, std::span<const int> y,
                            const SvmConfig& cfg, std::vector<double>* objective_trace) {
  cfg.validate();
  const std::size_t n = subset.size();
  if (y.size() != n) throw Error("label count does not match subset size");
  if (n < 2) throw Error("binary SVM needs at least two points");
  bool has_pos = false, has_neg = false;
  for (int v : y) {
    if (v == 1) has_pos = true;
    else if (v == -1) has_neg = true;
    else throw Error("binary SVM labels must be +1 or -1");
  }
  if (!has_pos || !has_neg) throw Error("binary SVM needs both classes");

  const Matrix k = submatrix(gram, subset, subset);
  const double c = cfg.cost;
  std::vector<double> alpha(n, 0.0), grad(n, -1.0);
  auto q = [&](std::size_t i, std::size_t j) { return static_cast<double>(y[i] * y[j]) * k(i, j); };
  auto at_upper = [&](std::size_t t) { return alpha[t] >= c; };
  auto at_lower = [&](std::size_t t) { return alpha[t] <= 0.0; };
  auto in_up = [&](std::size_t t) { return y[t] == 1 ? !at_upper(t) : !at_lower(t); };
  auto in_low = [&](std::size_t t) { return y[t] == 1 ? !at_lower(t) : !at_upper(t); };
  auto dual_objective = [&] {
    double f = 0.0;
    for (std::size_t t = 0; t < n; ++t) f += alpha[t] * (grad[t] - 1.0);
    return -0.5 * f;
  };

  BinarySolution sol;
  for (;;) {
    double gmax = -std::numeric_limits<double>::infinity(), gmin = std::numeric_limits<double>::infinity();
    std::size_t i = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (in_up(t) && -y[t] * grad[t] > gmax) {
        gmax = -y[t] * grad[t];
        i = t;
      }
    }
    std::size_t j = n;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < n; ++t) {
      if (!in_low(t)) continue;
      const double v = -y[t] * grad[t];
      gmin = std::min(gmin, v);
      if (i == n || v >= gmax) continue;
      const double b = gmax - v;
      double a = k(i, i) + k(t, t) - 2.0 * k(i, t);
      if (a <= 0.0) a = kTau;
      if (-b * b / a < best) {
        best = -b * b / a;
        j = t;
      }
    }
    sol.residual = (i == n || gmin == std::numeric_limits<double>::infinity()) ? 0.0 : gmax - gmin;
    if (j == n || sol.residual < cfg.tol) break;
    if (sol.iterations >= cfg.max_iter) {
      throw Error("SMO did not converge in " + std::to_string(cfg.max_iter) + " iterations (KKT residual " +
                  std::to_string(sol.residual) + ")");
    }
    ++sol.iterations;

    const double ai_old = alpha[i], aj_old = alpha[j];
    if (y[i] != y[j]) {
      double quad = k(i, i) + k(j, j) + 2.0 * q(i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = -diff;
      }
      if (diff > 0.0) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = c - diff;
        }
      } else if (alpha[j] > c) {
        alpha[j] = c;
        alpha[i] = c + diff;
      }
    } else {
      double quad = k(i, i) + k(j, j) - 2.0 * q(i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > c) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = sum - c;
        }
      } else if (alpha[j] < 0.0) {
        alpha[j] = 0.0;
        alpha[i] = sum;
      }
      if (sum > c) {
        if (alpha[j] > c) {
          alpha[j] = c;
          alpha[i] = sum - c;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = sum;
      }
    }
    const double di = alpha[i] - ai_old, dj = alpha[j] - aj_old;
    for (std::size_t t = 0; t < n; ++t) grad[t] += q(t, i) * di + q(t, j) * dj;
    if (objective_trace) objective_trace->push_back(dual_objective());
  }

  double ub = std::numeric_limits<double>::infinity(), lb = -ub, sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (at_upper(t)) {
      if (y[t] == -1) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (at_lower(t)) {
      if (y[t] == 1) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : 0.5 * (ub + lb);
  sol.bias = -rho;
  sol.alpha = std::move(alpha);
  return sol;
}

double PairMachine::decision(std::span<const double> kernel_row) const {
  double f = bias;
  for (std::size_t s = 0; s < support.size(); ++s) {
    if (support[s] >= kernel_row.size()) throw Error("kernel row shorter than the training set");
    f += coef[s] * kernel_row[support[s]];
  }
  return f;
}

SvmModel::SvmModel(std::vector<Label> classes, std::vector<PairMachine> machines, double cost, std::size_t n_train)
    : classes_(std::move(classes)), machines_(std::move(machines)), cost_(cost), n_train_(n_train) {
  if (classes_.size() < 2) throw Error("SVM needs at least two classes");
  if (machines_.size() != classes_.size() * (classes_.size() - 1) / 2) throw Error("SVM needs one machine per class pair");
  for (const auto& m : machines_) {
    if (m.support.size() != m.coef.size()) throw Error("support and coefficient counts differ");
    for (std::size_t s : m.support)
      if (s >= n_train_) throw Error("support index out of range");
  }
}

std::vector<double> SvmModel::decision_values(std::span<const double> kernel_row) const {
  if (kernel_row.size() != n_train_) {
    throw Error("kernel row has " + std::to_string(kernel_row.size()) + " entries, model was trained on " +
                std::to_string(n_train_));
  }
  std::vector<double> out;
  out.reserve(machines_.size());
  for (const auto& m : machines_) out.push_back(m.decision(kernel_row));
  return out;
}

Label SvmModel::predict(std::span<const double> kernel_row) const {
  const auto f = decision_values(kernel_row);
  std::map<Label, std::pair<int, double>> tally;  // votes, summed margin
  for (Label c : classes_) tally[c] = {0, 0.0};
  for (std::size_t m = 0; m < machines_.size(); ++m) {
    const auto& pm = machines_[m];
    auto& winner = tally[f[m] > 0.0 ? pm.first : pm.second];
    ++winner.first;
    tally[pm.first].second += f[m];
    tally[pm.second].second -= f[m];
  }
  Label best = classes_.front();
  for (const auto& [c, score] : tally) {
    const auto& b = tally[best];
    if (score.first > b.first || (score.first == b.first && score.second > b.second)) best = c;
  }
  return best;
}

std::string SvmModel::serialize() const {
  nlohmann::json header{{"format", "lte-svm"}, {"classes", classes_}, {"cost", cost_}, {"n_train", n_train_},
                        {"machines", machines_.size()}};
  ByteWriter w;
  w.u32(kSvmMagic);
  w.u32(kSvmVersion);
  w.str(header.dump());
  for (const auto& m : machines_) {
    w.i32(m.first);
    w.i32(m.second);
    w.f64(m.bias);
    w.u64(m.support.size());
    for (std::size_t s = 0; s < m.support.size(); ++s) {
      w.u64(m.support[s]);
      w.f64(m.coef[s]);
    }
  }
  return w.take();
}

SvmModel SvmModel::deserialize(std::string_view bytes) {
  ByteReader r(bytes);
  if (r.u32() != kSvmMagic) throw Error("not an SVM record (bad magic)");
  if (const auto v = r.u32(); v != kSvmVersion) throw Error("unsupported SVM record version " + std::to_string(v));
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(r.str());
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("bad SVM header: ") + e.what());
  }
  const auto classes = header.at("classes").get<std::vector<Label>>();
  const auto count = header.at("machines").get<std::size_t>();
  std::vector<PairMachine> machines(count);
  for (auto& m : machines) {
    m.first = r.i32();
    m.second = r.i32();
    m.bias = r.f64();
    const auto ns = r.u64();
    if (ns > r.remaining()) throw Error("support count exceeds record size");
    m.support.resize(ns);
    m.coef.resize(ns);
    for (std::size_t s = 0; s < ns; ++s) {
      m.support[s] = r.u64();
      m.coef[s] = r.f64();
    }
  }
  if (r.remaining() != 0) throw Error("trailing bytes after SVM record");
  return SvmModel(classes, std::move(machines), header.at("cost").get<double>(), header.at("n_train").get<std::size_t>());
}

SvmModel train_ovo_svm(const Matrix& gram, std::span<const Label> labels, const SvmConfig& cfg) {
  cfg.validate();
  const std::size_t n = labels.size();
  if (gram.rows() != n || gram.cols() != n) throw Error("Gram matrix does not match the label count");
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (std::abs(gram(i, j) - gram(j, i)) > 1e-12 * (1.0 + std::abs(gram(i, j)))) {
        throw Error("Gram matrix is not symmetric at (" + std::to_string(i) + ", " + std::to_string(j) + ")");
      }
    }
  }
  std::map<Label, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < n; ++i) members[labels[i]].push_back(i);
  if (members.size() < 2) throw Error("SVM needs at least two classes");
  std::vector<Label> classes;
  for (const auto& [c, m] : members) classes.push_back(c);

  std::vector<std::pair<Label, Label>> pairs;
  for (std::size_t a = 0; a < classes.size(); ++a)
    for (std::size_t b = a + 1; b < classes.size(); ++b) pairs.emplace_back(classes[a], classes[b]);

  std::vector<PairMachine> machines(pairs.size());
  parallel_for(pairs.size(), cfg.jobs, [&](std::size_t p) {
    const auto [first, second] = pairs[p];
    std::vector<std::size_t> subset;
    std::vector<int> y;
    std::merge(members[first].begin(), members[first].end(), members[second].begin(), members[second].end(),
               std::back_inserter(subset));
    for (std::size_t idx : subset) y.push_back(labels[idx] == first ? 1 : -1);
    BinarySolution sol;
    try {
      sol = solve_binary(gram, subset, y, cfg);
    } catch (const Error& e) {
      throw Error("machine " + std::to_string(first) + " vs " + std::to_string(second) + ": " + e.what());
    }
    PairMachine& m = machines[p];
    m.first = first;
    m.second = second;
    m.bias = sol.bias;
    for (std::size_t s = 0; s < subset.size(); ++s) {
      if (sol.alpha[s] > 0.0) {
        m.support.push_back(subset[s]);
        m.coef.push_back(sol.alpha[s] * y[s]);
      }
    }
  });
  return SvmModel(std::move(classes), std::move(machines), cfg.cost, n);
}

std::vector<double> default_cost_grid() {
  std::vector<double> grid;
  for (int e = -3; e <= 7; ++e) grid.push_back(std::ldexp(1.0, e));
  return grid;
}

CostSearch select_cost(const Matrix& gram, std::span<const Label> labels, std::span<const double> grid,
                       std::size_t folds, std::uint64_t seed, const SvmConfig& base) {
  if (grid.empty()) throw Error("empty cost grid");
  CostSearch out;
  out.grid.assign(grid.begin(), grid.end());
  if (grid.size() == 1) {
    out.best_cost = grid.front();
    out.cv_accuracy.assign(1, std::numeric_limits<double>::quiet_NaN());
    return out;
  }
  folds = std::min(folds, labels.size());
  const auto fold_of = embed::stratified_folds(labels, folds, derive_seed(seed, "kernelbase.cv"));
  std::vector<std::vector<std::size_t>> train_idx(folds), test_idx(folds);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t f = 0; f < folds; ++f) (fold_of[i] == f ? test_idx[f] : train_idx[f]).push_back(i);
  }
  std::vector<Matrix> fold_gram(folds), fold_rows(folds);
  std::vector<std::vector<Label>> fold_labels(folds);
  for (std::size_t f = 0; f < folds; ++f) {
    fold_gram[f] = submatrix(gram, train_idx[f], train_idx[f]);
    fold_rows[f] = submatrix(gram, test_idx[f], train_idx[f]);
    for (std::size_t i : train_idx[f]) fold_labels[f].push_back(labels[i]);
  }

  out.cv_accuracy.assign(grid.size(), 0.0);
  double best = -1.0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    SvmConfig cfg = base;
    cfg.cost = grid[g];
    std::size_t correct = 0;
    for (std::size_t f = 0; f < folds; ++f) {
      const auto model = train_ovo_svm(fold_gram[f], fold_labels[f], cfg);
      for (std::size_t t = 0; t < test_idx[f].size(); ++t) {
        if (model.predict(fold_rows[f].row(t)) == labels[test_idx[f][t]]) ++correct;
      }
    }
    out.cv_accuracy[g] = static_cast<double>(correct) / static_cast<double>(labels.size());
    if (out.cv_accuracy[g] > best) {
      best = out.cv_accuracy[g];
      out.best_cost = grid[g];
    }
  }
  return out;
}

FusionSvm FusionSvm::train(std::vector<Instance> train, std::span<const Label> labels, const FusionSvmConfig& cfg) {
  if (train.size() != labels.size()) throw Error("instance and label counts differ");
  FusionSvm out;
  out.train_ = std::move(train);
  out.means_ = channel_means(out.train_);
  const Matrix gram = gram_matrix(out.train_, out.means_, cfg.svm.jobs);
  out.search_ = select_cost(gram, labels, cfg.cost_grid, cfg.cv_folds, cfg.seed, cfg.svm);
  SvmConfig svm = cfg.svm;
  svm.cost = out.search_.best_cost;
  out.model_ = train_ovo_svm(gram, labels, svm);
  return out;
}

Label FusionSvm::predict(const Instance& x) const {
  const Matrix row = gram_matrix(std::span<const Instance>(&x, 1), train_, means_);
  return model_.predict(row.row(0));
}

std::string FusionSvm::serialize() const {
  ByteWriter w;
  w.u32(kFusionMagic);
  w.u32(kSvmVersion);
  nlohmann::json header{{"format", "lte-fusion-svm"},
                        {"instances", train_.size()},
                        {"channels", means_.size()},
                        {"means", means_},
                        {"cost_grid", search_.grid},
                        {"cv_accuracy", search_.cv_accuracy},
                        {"best_cost", search_.best_cost}};
  w.str(header.dump());
  for (const auto& inst : train_) {
    for (const auto& v : inst) {
      w.u64(v.size());
      for (double x : v) w.f64(x);
    }
  }
  w.str(model_.serialize());
  return w.take();
}

FusionSvm FusionSvm::deserialize(std::string_view bytes) {
  ByteReader r(bytes);
  if (r.u32() != kFusionMagic) throw Error("not a fusion SVM record (bad magic)");
  if (const auto v = r.u32(); v != kSvmVersion) throw Error("unsupported SVM record version " + std::to_string(v));
  FusionSvm out;
  try {
    const auto header = nlohmann::json::parse(r.str());
    out.means_ = header.at("means").get<std::vector<double>>();
    out.search_.grid = header.at("cost_grid").get<std::vector<double>>();
    out.search_.cv_accuracy = header.at("cv_accuracy").get<std::vector<double>>();
    out.search_.best_cost = header.at("best_cost").get<double>();
    const auto n = header.at("instances").get<std::size_t>();
    if (n > r.remaining()) throw Error("instance count exceeds record size");
    out.train_.assign(n, Instance(out.means_.size()));
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("bad fusion SVM header: ") + e.what());
  }
  for (auto& inst : out.train_) {
    for (auto& v : inst) {
      const auto len = r.u64();
      if (len > r.remaining() / 8) throw Error("vector length exceeds record size");
      v.resize(len);
      for (double& x : v) x = r.f64();
    }
  }
  out.model_ = SvmModel::deserialize(r.str());
  if (out.model_.n_train() != out.train_.size()) throw Error("fusion SVM record: model and instance counts differ");
  return out;
}

}  // namespace lte::kernelbase
