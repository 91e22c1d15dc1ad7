// Copyright 2026 The lte-scene Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Measurements shared by the unit tests and the acceptance runner.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "lte/cnn/cnn.hpp"
#include "lte/kernelbase/kernelbase.hpp"
#include "oracles.hpp"

namespace checks {

inline lte::embed::MultiChannelImage random_image(std::size_t p, std::size_t f, std::size_t t, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  lte::embed::MultiChannelImage img;
  img.p = p;
  img.f = f;
  img.t = t;
  img.values.resize(p * f * t);
  for (double& v : img.values) v = g(rng);
  return img;
}

/// Relative error with a small absolute floor, so entries that are zero up to
/// rounding do not dominate.
inline double rel_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-7});
}

struct GradCheckResult {
  double max_rel = 0.0;
  std::size_t n_params = 0;
};

/// Central differences (delta 1e-5) of the minibatch loss against the analytic
/// gradient on a P=2, F=3, T=10, Q=2, widths {2,3}, C=3 network.
inline GradCheckResult gradient_check(lte::cnn::Pooling mode, std::uint64_t seed, double lambda = 1e-3,
                                      const lte::cnn::DropoutPlan* dropout = nullptr) {
  using namespace lte::cnn;
  std::mt19937_64 rng(seed);
  const CnnShape shape{2, 3, {2, 3}, 2, 3, mode};
  CnnModel model = CnnModel::init(shape, {0, 1, 2}, seed * 7919 + 1);
  std::normal_distribution<double> g(0.0, 0.3);
  for (double& v : model.theta()) v += g(rng);  // non-zero biases, generic point
  std::vector<TimeMajor> xs;
  std::vector<std::size_t> targets;
  for (std::size_t i = 0; i < 4; ++i) {
    xs.push_back(to_time_major(random_image(2, 3, 10, rng)));
    targets.push_back(i % 3);
  }
  const auto analytic = loss_and_gradient(model, xs, targets, lambda, dropout);
  GradCheckResult out;
  out.n_params = model.theta().size();
  const double delta = 1e-5;
  for (std::size_t i = 0; i < model.theta().size(); ++i) {
    const double keep = model.theta()[i];
    model.theta()[i] = keep + delta;
    const double up = loss_and_gradient(model, xs, targets, lambda, dropout).loss;
    model.theta()[i] = keep - delta;
    const double down = loss_and_gradient(model, xs, targets, lambda, dropout).loss;
    model.theta()[i] = keep;
    out.max_rel = std::max(out.max_rel, rel_error(analytic.grad[i], (up - down) / (2.0 * delta)));
  }
  return out;
}

/// Max |conv_forward - naive| over random (image, filter) pairs; every fourth pair uses w = T.
inline double conv_oracle_max_diff(std::uint64_t seed, std::size_t pairs) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> dim(1, 6), len(1, 40);
  std::normal_distribution<double> g(0.0, 1.0);
  double worst = 0.0;
  for (std::size_t n = 0; n < pairs; ++n) {
    const std::size_t p = dim(rng), f = dim(rng), t = len(rng);
    const std::size_t w = n % 4 == 0 ? t : std::uniform_int_distribution<std::size_t>(1, t)(rng);
    const auto img = random_image(p, f, t, rng);
    std::vector<double> filt(p * f * w);
    for (double& v : filt) v = g(rng);
    const double bias = g(rng);
    const auto fm = lte::cnn::conv_forward(img, filt, w, bias);
    const auto ref = oracle::naive_conv(img.values, p, f, t, filt, w);
    if (fm.o.size() != ref.size()) return INFINITY;
    for (std::size_t i = 0; i < ref.size(); ++i) {
      worst = std::max(worst, std::abs(fm.o[i] - ref[i]));
      worst = std::max(worst, std::abs(fm.a[i] - std::max(0.0, ref[i] + bias)));
    }
  }
  return worst;
}

// Random pooled-embedding-like vector: (p, 1-p) pairs.
inline std::vector<double> random_pairs(std::size_t pairs, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v;
  for (std::size_t i = 0; i < pairs; ++i) {
    const double p = u(rng);
    v.push_back(p);
    v.push_back(1.0 - p);
  }
  return v;
}

inline std::vector<lte::kernelbase::Instance> random_instances(std::size_t n, std::size_t channels, std::size_t pairs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<lte::kernelbase::Instance> out(n);
  for (auto& inst : out)
    for (std::size_t k = 0; k < channels; ++k) inst.push_back(random_pairs(pairs, rng));
  return out;
}

// Instances whose first pair leans towards class label / classes.
inline std::vector<lte::kernelbase::Instance> class_instances(const std::vector<lte::Label>& labels, int classes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.08);
  std::vector<lte::kernelbase::Instance> out;
  for (lte::Label l : labels) {
    std::vector<double> v;
    for (int c = 0; c < classes; ++c) {
      const double p = std::clamp((c == l ? 0.8 : 0.2) + g(rng), 0.0, 1.0);
      v.push_back(p);
      v.push_back(1.0 - p);
    }
    out.push_back({v});
  }
  return out;
}

inline lte::Matrix linear_gram(const std::vector<std::vector<double>>& x) {
  lte::Matrix k(x.size(), x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < x.size(); ++j)
      for (std::size_t d = 0; d < x[i].size(); ++d) k(i, j) += x[i][d] * x[j][d];
  return k;
}

inline std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

inline double decision_of(const lte::kernelbase::BinarySolution& sol, const std::vector<int>& y, const lte::Matrix& k, std::size_t row) {
  double f = sol.bias;
  for (std::size_t j = 0; j < y.size(); ++j) f += sol.alpha[j] * y[j] * k(row, j);
  return f;
}

}  // namespace checks
