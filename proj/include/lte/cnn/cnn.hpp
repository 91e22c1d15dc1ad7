// Copyright 2026 The lte-scene Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lte/common.hpp"
#include "lte/embed/embed.hpp"

namespace lte::cnn {

enum class Pooling { max, mean, mix };
std::string_view pooling_name(Pooling p);
Pooling parse_pooling(std::string_view name);

/// Where training-time dropout is applied.
enum class DropoutTarget { pooled, weights };
std::string_view dropout_target_name(DropoutTarget t);
DropoutTarget parse_dropout_target(std::string_view name);

struct CnnConfig {
  std::vector<std::size_t> widths{3, 5, 7};
  std::size_t filters_per_width = 32;
  double learning_rate = 1e-4;
  double dropout_rate = 0.5;
  DropoutTarget dropout_target = DropoutTarget::pooled;
  double lambda = 1e-3;
  std::size_t epochs = 100;
  std::size_t minibatch = 50;
  Pooling pooling = Pooling::max;
  std::uint64_t rng_seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t jobs = 1;

  void validate() const;
  /// 1000 filters per width, 500 epochs.
  static CnnConfig paper_scale();
};

/// Network dimensions; everything else derives from these.
struct CnnShape {
  std::size_t p = 0, f = 0;
  std::vector<std::size_t> widths;
  std::size_t q = 0;
  std::size_t classes = 0;
  Pooling pooling = Pooling::max;

  std::size_t n_filters() const { return q * widths.size(); }
  std::size_t pooled_len() const { return (pooling == Pooling::mix ? 2 : 1) * n_filters(); }
  std::size_t max_width() const;
  std::size_t n_params() const;
  void validate() const;

  friend bool operator==(const CnnShape&, const CnnShape&) = default;
};

/// All parameters live in one flat vector:
///   per width r, per filter q: w*P*F weights (time-major: [i][p][f]) then 1 bias;
///   softmax weights (pooled_len x classes, row-major); classes biases.
class CnnModel {
 public:
  CnnModel() = default;
  CnnModel(CnnShape shape, std::vector<Label> classes, std::vector<double> theta);

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
  static CnnModel init(const CnnShape& shape, std::vector<Label> classes, std::uint64_t seed);

  const CnnShape& shape() const { return shape_; }
  const std::vector<Label>& classes() const { return classes_; }
  std::vector<double>& theta() { return theta_; }
  const std::vector<double>& theta() const { return theta_; }

  /// Offset of filter k (k = r*Q + q) in theta; its bias follows the weights.
  std::size_t filter_offset(std::size_t k) const { return filter_offsets_[k]; }
  std::size_t filter_width(std::size_t k) const { return shape_.widths[k / shape_.q]; }
  std::size_t softmax_offset() const { return softmax_offset_; }
  std::size_t softmax_bias_offset() const { return softmax_offset_ + shape_.pooled_len() * shape_.classes; }

  /// Filter k in P x F x w layout (w fastest), for inspection and export.
  std::vector<double> filter_pfw(std::size_t k) const;
  void set_filter_pfw(std::size_t k, std::span<const double> pfw);

  std::string serialize() const;
  static CnnModel deserialize(std::string_view bytes);

 private:
  void layout();

  CnnShape shape_;
  std::vector<Label> classes_;
  std::vector<double> theta_;
  std::vector<std::size_t> filter_offsets_;
  std::size_t softmax_offset_ = 0;
};

/// Image as T rows of P*F values; column order [p][f].
struct TimeMajor {
  std::size_t t = 0, pf = 0;
  std::vector<double> x;
};
TimeMajor to_time_major(const embed::MultiChannelImage& img);

struct FeatureMap {
  std::vector<double> o;  // pre-activation, length T - w + 1
  std::vector<double> a;  // max(0, o + b)
};

/// Temporal convolution of one filter (P x F x w, w fastest) over the image.
FeatureMap conv_forward(const embed::MultiChannelImage& s, std::span<const double> filter_pfw, std::size_t w,
                        double bias);

/// Max half then mean half for mix.
std::vector<double> pool(std::span<const std::vector<double>> maps, Pooling mode);

/// Numerically stable softmax.
std::vector<double> softmax(std::span<const double> logits);
/// -log softmax(logits)[target] via log-sum-exp.
double cross_entropy(std::span<const double> logits, std::size_t target);

/// Training-time dropout mask (0 or 1/(1-rate)) of length n.
std::vector<double> dropout_mask(std::size_t n, double rate, std::uint64_t seed);
/// Inverted dropout; in inference mode returns the input.
std::vector<double> dropout_apply(std::span<const double> values, double rate, std::uint64_t seed, bool training);

struct ForwardTrace {
  std::vector<FeatureMap> maps;       // one per filter, k = r*Q + q
  std::vector<std::size_t> argmax;    // per filter
  std::vector<double> pooled;         // before dropout
  std::vector<double> mask;           // dropout mask; empty = none
  std::vector<double> logits;
  std::vector<double> probs;
};

/// Dropout used during a forward pass. Masks are drawn per sample from
/// derive_seed(seed, "cnn.dropout", sample_id).
struct DropoutPlan {
  double rate = 0.0;
  DropoutTarget target = DropoutTarget::pooled;
  std::uint64_t seed = 0;
};

ForwardTrace forward(const CnnModel& model, const TimeMajor& x, const DropoutPlan* dropout = nullptr,
                     std::uint64_t sample_id = 0);

/// (lambda/2) * |theta|^2
double l2_penalty(const CnnModel& model, double lambda);

struct BatchGradient {
  double loss = 0.0;  // mean cross-entropy + L2 term
  std::vector<double> grad;
};

/// Exact gradient of the minibatch loss. Targets are class indices into
/// model.classes(). sample_ids seed the dropout masks; defaults to 0..N-1.
BatchGradient loss_and_gradient(const CnnModel& model, std::span<const TimeMajor> xs,
                                std::span<const std::size_t> targets, double lambda,
                                const DropoutPlan* dropout = nullptr, std::span<const std::uint64_t> sample_ids = {},
                                std::size_t jobs = 1);

struct AdamState {
  std::vector<double> m, v;
  std::uint64_t t = 0;
};

struct AdamParams {
  double lr = 1e-4, beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8;
};

/// One bias-corrected Adam update; increments state.t first.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, const AdamParams& hp);

struct TrainingLog {
  std::vector<double> epoch_loss;
  std::string to_csv() const;
};

struct TrainResult {
  CnnModel model;
  TrainingLog log;
};

using EpochCallback = std::function<void(std::size_t epoch, double loss)>;

TrainResult train_cnn(std::span<const embed::MultiChannelImage> images, std::span<const Label> labels,
                      const CnnConfig& cfg, const EpochCallback& on_epoch = {});

struct Prediction {
  Label label = 0;
  std::vector<double> probs;  // in model.classes() order
};

Prediction predict_cnn(const CnnModel& model, const embed::MultiChannelImage& image);

}  // namespace lte::cnn
