// Copyright 2026 The lte-scene Authors
// SPDX-License-Identifier: Apache-2.0

#include "lte/cnn/cnn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "json.hpp"
#include "lte/binio.hpp"
#include "lte/parallel.hpp"
#include "lte/pipeline/tensor.hpp"
#include "lte/simd/kernels.hpp"

namespace lte::cnn {
namespace {

constexpr std::uint32_t kModelMagic = 0x4e43544cu;  // "LTCN"
constexpr std::uint32_t kModelVersion = 1;

// First NaN wins so that overflow upstream surfaces in the loss.
std::size_t argmax_of(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (std::isnan(v[i])) return i;
    if (v[i] > v[best]) best = i;
  }
  return best;
}

double relu(double v) { return std::isnan(v) ? v : std::max(0.0, v); }

void check_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw Error(std::string(what) + " contains non-finite values");
  }
}

}  // namespace

std::string_view pooling_name(Pooling p) {
  switch (p) {
    case Pooling::max: return "max";
    case Pooling::mean: return "mean";
    case Pooling::mix: return "mix";
  }
  return "?";
}

Pooling parse_pooling(std::string_view name) {
  if (name == "max") return Pooling::max;
  if (name == "mean") return Pooling::mean;
  if (name == "mix") return Pooling::mix;
  throw Error("unknown pooling mode: " + std::string(name));
}

std::string_view dropout_target_name(DropoutTarget t) { return t == DropoutTarget::pooled ? "pooled" : "weights"; }

DropoutTarget parse_dropout_target(std::string_view name) {
  if (name == "pooled") return DropoutTarget::pooled;
  if (name == "weights") return DropoutTarget::weights;
  throw Error("unknown dropout target: " + std::string(name));
}

void CnnConfig::validate() const {
  if (widths.empty()) throw Error("at least one filter width is required");
  for (auto w : widths)
    if (w == 0) throw Error("filter widths must be >= 1");
  if (filters_per_width == 0) throw Error("filters_per_width must be >= 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw Error("dropout rate must lie in [0, 1)");
  if (!(lambda >= 0.0)) throw Error("lambda must be >= 0");
  if (!(learning_rate > 0.0)) throw Error("learning rate must be positive");
  if (minibatch == 0) throw Error("minibatch must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0 && epsilon > 0.0)) throw Error("bad Adam parameters");
}

CnnConfig CnnConfig::paper_scale() {
  CnnConfig cfg;
  cfg.filters_per_width = 1000;
  cfg.epochs = 500;
  return cfg;
}

std::size_t CnnShape::max_width() const { return widths.empty() ? 0 : *std::max_element(widths.begin(), widths.end()); }

std::size_t CnnShape::n_params() const {
  std::size_t n = 0;
  for (auto w : widths) n += q * (w * p * f + 1);
  return n + pooled_len() * classes + classes;
}

void CnnShape::validate() const {
  if (p == 0 || f == 0) throw Error("network input needs P, F >= 1");
  if (widths.empty() || q == 0) throw Error("network needs filters");
  for (auto w : widths)
    if (w == 0) throw Error("filter widths must be >= 1");
  if (classes < 2) throw Error("network needs at least two classes");
}

CnnModel::CnnModel(CnnShape shape, std::vector<Label> classes, std::vector<double> theta)
    : shape_(std::move(shape)), classes_(std::move(classes)), theta_(std::move(theta)) {
  shape_.validate();
  if (classes_.size() != shape_.classes) throw Error("class list does not match network shape");
  if (theta_.size() != shape_.n_params()) {
    throw Error("parameter vector has " + std::to_string(theta_.size()) + " entries, shape needs " +
                std::to_string(shape_.n_params()));
  }
  check_finite(theta_, "parameter vector");
  layout();
}

void CnnModel::layout() {
  filter_offsets_.clear();
  std::size_t off = 0;
  const std::size_t pf = shape_.p * shape_.f;
  for (auto w : shape_.widths) {
    for (std::size_t q = 0; q < shape_.q; ++q) {
      filter_offsets_.push_back(off);
      off += w * pf + 1;
    }
  }
  softmax_offset_ = off;
}

CnnModel CnnModel::init(const CnnShape& shape, std::vector<Label> classes, std::uint64_t seed) {
  shape.validate();
  std::vector<double> theta(shape.n_params(), 0.0);
  std::mt19937_64 rng(seed);
  const std::size_t pf = shape.p * shape.f;
  std::size_t off = 0;
  for (auto w : shape.widths) {
    std::uniform_real_distribution<double> u(-1.0 / std::sqrt(static_cast<double>(w * pf)),
                                             1.0 / std::sqrt(static_cast<double>(w * pf)));
    for (std::size_t q = 0; q < shape.q; ++q) {
      for (std::size_t i = 0; i < w * pf; ++i) theta[off + i] = u(rng);
      off += w * pf + 1;
    }
  }
  const double s = 1.0 / std::sqrt(static_cast<double>(shape.pooled_len()));
  std::uniform_real_distribution<double> u(-s, s);
  for (std::size_t i = 0; i < shape.pooled_len() * shape.classes; ++i) theta[off + i] = u(rng);
  return CnnModel(shape, std::move(classes), std::move(theta));
}

std::vector<double> CnnModel::filter_pfw(std::size_t k) const {
  const std::size_t w = filter_width(k), pf = shape_.p * shape_.f;
  std::vector<double> out(w * pf);
  for (std::size_t i = 0; i < w; ++i)
    for (std::size_t j = 0; j < pf; ++j) out[j * w + i] = theta_[filter_offsets_[k] + i * pf + j];
  return out;
}

void CnnModel::set_filter_pfw(std::size_t k, std::span<const double> pfw) {
  const std::size_t w = filter_width(k), pf = shape_.p * shape_.f;
  if (pfw.size() != w * pf) throw Error("filter has the wrong number of weights");
  for (std::size_t i = 0; i < w; ++i)
    for (std::size_t j = 0; j < pf; ++j) theta_[filter_offsets_[k] + i * pf + j] = pfw[j * w + i];
}

std::string CnnModel::serialize() const {
  nlohmann::json header{{"format", "lte-cnn"},
                        {"p", shape_.p},
                        {"f", shape_.f},
                        {"widths", shape_.widths},
                        {"q", shape_.q},
                        {"pooling", pooling_name(shape_.pooling)},
                        {"classes", classes_}};
  pipeline::Tensor t;
  t.dims = {theta_.size()};
  t.values = theta_;
  t.meta = {{"name", "theta"}};
  ByteWriter w;
  w.u32(kModelMagic);
  w.u32(kModelVersion);
  w.str(header.dump());
  w.str(pipeline::encode_tensor(t));
  return w.take();
}

CnnModel CnnModel::deserialize(std::string_view bytes) {
  ByteReader r(bytes);
  if (r.u32() != kModelMagic) throw Error("not a CNN model record (bad magic)");
  if (const auto v = r.u32(); v != kModelVersion) throw Error("unsupported CNN model version " + std::to_string(v));
  CnnShape shape;
  std::vector<Label> classes;
  try {
    const auto h = nlohmann::json::parse(r.str());
    shape.p = h.at("p").get<std::size_t>();
    shape.f = h.at("f").get<std::size_t>();
    shape.widths = h.at("widths").get<std::vector<std::size_t>>();
    shape.q = h.at("q").get<std::size_t>();
    shape.pooling = parse_pooling(h.at("pooling").get<std::string>());
    classes = h.at("classes").get<std::vector<Label>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("bad CNN model header: ") + e.what());
  }
  shape.classes = classes.size();
  const auto t = pipeline::decode_tensor(r.str());
  if (r.remaining() != 0) throw Error("trailing bytes after CNN model record");
  return CnnModel(shape, std::move(classes), t.values);
}

TimeMajor to_time_major(const embed::MultiChannelImage& img) {
  if (img.values.size() != img.p * img.f * img.t) throw Error("image buffer does not match its shape");
  TimeMajor out{img.t, img.p * img.f, std::vector<double>(img.values.size())};
  for (std::size_t c = 0; c < img.p; ++c)
    for (std::size_t r = 0; r < img.f; ++r)
      for (std::size_t t = 0; t < img.t; ++t) out.x[t * out.pf + c * img.f + r] = img.at(c, r, t);
  return out;
}

namespace {

void conv_time_major(const TimeMajor& x, const double* w_tm, std::size_t w, double bias, FeatureMap& out) {
  const std::size_t len = x.t - w + 1, n = w * x.pf;
  out.o.resize(len);
  out.a.resize(len);
  const std::span<const double> filt(w_tm, n);
  for (std::size_t i = 0; i < len; ++i) {
    out.o[i] = simd::dot(std::span<const double>(x.x.data() + i * x.pf, n), filt);
    out.a[i] = relu(out.o[i] + bias);
  }
}

}  // namespace

FeatureMap conv_forward(const embed::MultiChannelImage& s, std::span<const double> filter_pfw, std::size_t w,
                        double bias) {
  const std::size_t pf = s.p * s.f;
  if (w == 0 || filter_pfw.size() != pf * w) throw Error("filter shape does not match P x F x w");
  if (w > s.t) throw Error("filter width " + std::to_string(w) + " exceeds image length " + std::to_string(s.t));
  std::vector<double> tm(w * pf);
  for (std::size_t i = 0; i < w; ++i)
    for (std::size_t j = 0; j < pf; ++j) tm[i * pf + j] = filter_pfw[j * w + i];
  FeatureMap out;
  conv_time_major(to_time_major(s), tm.data(), w, bias, out);
  return out;
}

std::vector<double> pool(std::span<const std::vector<double>> maps, Pooling mode) {
  if (maps.empty()) throw Error("pooling needs at least one feature map");
  const std::size_t n = maps.size();
  std::vector<double> out(mode == Pooling::mix ? 2 * n : n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& m = maps[k];
    if (m.empty()) throw Error("cannot pool an empty feature map");
    const double mx = *std::max_element(m.begin(), m.end());
    const double mean = std::accumulate(m.begin(), m.end(), 0.0) / static_cast<double>(m.size());
    switch (mode) {
      case Pooling::max: out[k] = mx; break;
      case Pooling::mean: out[k] = mean; break;
      case Pooling::mix:
        out[k] = mx;
        out[n + k] = mean;
        break;
    }
  }
  return out;
}

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) throw Error("softmax of an empty vector");
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) sum += out[i] = std::exp(logits[i] - mx);
  for (double& v : out) v /= sum;
  return out;
}

double cross_entropy(std::span<const double> logits, std::size_t target) {
  if (target >= logits.size()) throw Error("target index out of range");
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double l : logits) sum += std::exp(l - mx);
  return mx + std::log(sum) - logits[target];
}

std::vector<double> dropout_mask(std::size_t n, double rate, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate < 1.0)) throw Error("dropout rate must lie in [0, 1)");
  std::vector<double> mask(n, 1.0);
  if (rate == 0.0) return mask;
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution drop(rate);
  const double keep = 1.0 / (1.0 - rate);
  for (double& m : mask) m = drop(rng) ? 0.0 : keep;
  return mask;
}

std::vector<double> dropout_apply(std::span<const double> values, double rate, std::uint64_t seed, bool training) {
  std::vector<double> out(values.begin(), values.end());
  if (!training) return out;
  const auto mask = dropout_mask(values.size(), rate, seed);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  return out;
}

ForwardTrace forward(const CnnModel& model, const TimeMajor& x, const DropoutPlan* dropout, std::uint64_t sample_id) {
  const auto& sh = model.shape();
  if (x.pf != sh.p * sh.f) throw Error("image has P*F = " + std::to_string(x.pf) + ", network expects " + std::to_string(sh.p * sh.f));
  if (x.t < sh.max_width()) {
    throw Error("image length " + std::to_string(x.t) + " is shorter than the widest filter (" +
                std::to_string(sh.max_width()) + ")");
  }
  const auto& theta = model.theta();
  const std::size_t nf = sh.n_filters(), nc = sh.classes, zl = sh.pooled_len();
  ForwardTrace tr;
  tr.maps.resize(nf);
  tr.argmax.resize(nf);
  for (std::size_t k = 0; k < nf; ++k) {
    const std::size_t w = model.filter_width(k), off = model.filter_offset(k);
    conv_time_major(x, theta.data() + off, w, theta[off + w * x.pf], tr.maps[k]);
    tr.argmax[k] = argmax_of(tr.maps[k].a);
  }
  tr.pooled.assign(zl, 0.0);
  for (std::size_t k = 0; k < nf; ++k) {
    const auto& a = tr.maps[k].a;
    const double mean = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(a.size());
    switch (sh.pooling) {
      case Pooling::max: tr.pooled[k] = a[tr.argmax[k]]; break;
      case Pooling::mean: tr.pooled[k] = mean; break;
      case Pooling::mix:
        tr.pooled[k] = a[tr.argmax[k]];
        tr.pooled[nf + k] = mean;
        break;
    }
  }

  const bool drop = dropout != nullptr && dropout->rate > 0.0;
  if (drop) {
    const std::size_t n = dropout->target == DropoutTarget::pooled ? zl : zl * nc;
    tr.mask = dropout_mask(n, dropout->rate, derive_seed(dropout->seed, "cnn.dropout", sample_id));
  }
  const bool mask_pooled = drop && dropout->target == DropoutTarget::pooled;
  const bool mask_weights = drop && dropout->target == DropoutTarget::weights;

  const double* wsm = theta.data() + model.softmax_offset();
  const double* bsm = theta.data() + model.softmax_bias_offset();
  tr.logits.assign(bsm, bsm + nc);
  for (std::size_t j = 0; j < zl; ++j) {
    const double z = mask_pooled ? tr.pooled[j] * tr.mask[j] : tr.pooled[j];
    if (z == 0.0) continue;
    for (std::size_t c = 0; c < nc; ++c) {
      const double wjc = mask_weights ? wsm[j * nc + c] * tr.mask[j * nc + c] : wsm[j * nc + c];
      tr.logits[c] += z * wjc;
    }
  }
  tr.probs = softmax(tr.logits);
  return tr;
}

double l2_penalty(const CnnModel& model, double lambda) {
  return 0.5 * lambda * simd::sum_sq(model.theta());
}

namespace {

// Adds the gradient of (scale * cross-entropy) for one sample into g; returns the cross-entropy.
double accumulate_sample(const CnnModel& model, const TimeMajor& x, std::size_t target, double scale,
                         const DropoutPlan* dropout, std::uint64_t sample_id, std::vector<double>& g) {
  const auto& sh = model.shape();
  const auto& theta = model.theta();
  const std::size_t nf = sh.n_filters(), nc = sh.classes, zl = sh.pooled_len();
  if (target >= nc) throw Error("target index out of range");
  const ForwardTrace tr = forward(model, x, dropout, sample_id);
  const double loss = cross_entropy(tr.logits, target);

  std::vector<double> dlog(tr.probs);
  dlog[target] -= 1.0;
  for (double& d : dlog) d *= scale;

  const bool drop = !tr.mask.empty();
  const bool mask_pooled = drop && dropout->target == DropoutTarget::pooled;
  const bool mask_weights = drop && dropout->target == DropoutTarget::weights;
  const std::size_t ws = model.softmax_offset(), bs = model.softmax_bias_offset();
  for (std::size_t c = 0; c < nc; ++c) g[bs + c] += dlog[c];

  std::vector<double> dz(zl, 0.0);
  for (std::size_t j = 0; j < zl; ++j) {
    const double z = mask_pooled ? tr.pooled[j] * tr.mask[j] : tr.pooled[j];
    double acc = 0.0;
    for (std::size_t c = 0; c < nc; ++c) {
      const double m = mask_weights ? tr.mask[j * nc + c] : 1.0;
      g[ws + j * nc + c] += z * m * dlog[c];
      acc += theta[ws + j * nc + c] * m * dlog[c];
    }
    dz[j] = mask_pooled ? acc * tr.mask[j] : acc;
  }

  for (std::size_t k = 0; k < nf; ++k) {
    const std::size_t w = model.filter_width(k), off = model.filter_offset(k), n = w * x.pf;
    const auto& a = tr.maps[k].a;
    const std::size_t len = a.size();
    double dmax = 0.0, dmean = 0.0;
    switch (sh.pooling) {
      case Pooling::max: dmax = dz[k]; break;
      case Pooling::mean: dmean = dz[k]; break;
      case Pooling::mix:
        dmax = dz[k];
        dmean = dz[nf + k];
        break;
    }
    const std::span<double> gw(g.data() + off, n);
    double& gb = g[off + n];
    if (dmean != 0.0) {
      const double per = dmean / static_cast<double>(len);
      for (std::size_t i = 0; i < len; ++i) {
        // Gate on a > 0, i.e. o + b > 0.
        double d = a[i] > 0.0 ? per : 0.0;
        if (i == tr.argmax[k] && a[i] > 0.0) d += dmax;
        if (d == 0.0) continue;
        simd::axpy(d, std::span<const double>(x.x.data() + i * x.pf, n), gw);
        gb += d;
      }
    } else if (dmax != 0.0) {
      const std::size_t i = tr.argmax[k];
      if (a[i] > 0.0) {
        simd::axpy(dmax, std::span<const double>(x.x.data() + i * x.pf, n), gw);
        gb += dmax;
      }
    }
  }
  return loss;
}

}  // namespace

BatchGradient loss_and_gradient(const CnnModel& model, std::span<const TimeMajor> xs,
                                std::span<const std::size_t> targets, double lambda, const DropoutPlan* dropout,
                                std::span<const std::uint64_t> sample_ids, std::size_t jobs) {
  if (xs.empty()) throw Error("empty minibatch");
  if (targets.size() != xs.size()) throw Error("target count does not match minibatch size");
  if (!sample_ids.empty() && sample_ids.size() != xs.size()) throw Error("sample id count does not match minibatch size");
  const std::size_t n = xs.size(), np = model.theta().size();
  const double scale = 1.0 / static_cast<double>(n);
  jobs = std::max<std::size_t>(1, std::min(jobs, n));

  // Fixed contiguous chunks, reduced in chunk order: the result depends on jobs, not on scheduling.
  std::vector<std::vector<double>> partial(jobs, std::vector<double>(np, 0.0));
  std::vector<double> partial_loss(jobs, 0.0);
  parallel_for(jobs, jobs, [&](std::size_t j) {
    const std::size_t lo = j * n / jobs, hi = (j + 1) * n / jobs;
    for (std::size_t i = lo; i < hi; ++i) {
      const std::uint64_t id = sample_ids.empty() ? i : sample_ids[i];
      partial_loss[j] += accumulate_sample(model, xs[i], targets[i], scale, dropout, id, partial[j]);
    }
  });
  BatchGradient out;
  out.grad = std::move(partial[0]);
  for (std::size_t j = 1; j < jobs; ++j) simd::axpy(1.0, partial[j], out.grad);
  double ce = 0.0;
  for (double l : partial_loss) ce += l;
  out.loss = ce * scale + l2_penalty(model, lambda);
  if (lambda != 0.0) simd::axpy(lambda, model.theta(), out.grad);
  return out;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, const AdamParams& hp) {
  if (params.size() != grads.size()) throw Error("parameter and gradient sizes differ");
  if (state.m.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  if (state.m.size() != params.size()) throw Error("Adam state does not match parameter count");
  ++state.t;
  const double c1 = 1.0 - std::pow(hp.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(hp.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = hp.beta1 * state.m[i] + (1.0 - hp.beta1) * grads[i];
    state.v[i] = hp.beta2 * state.v[i] + (1.0 - hp.beta2) * grads[i] * grads[i];
    params[i] -= hp.lr * (state.m[i] / c1) / (std::sqrt(state.v[i] / c2) + hp.epsilon);
  }
}

std::string TrainingLog::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "epoch,loss\n";
  for (std::size_t e = 0; e < epoch_loss.size(); ++e) os << e + 1 << ',' << epoch_loss[e] << '\n';
  return os.str();
}

TrainResult train_cnn(std::span<const embed::MultiChannelImage> images, std::span<const Label> labels,
                      const CnnConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  if (images.empty()) throw Error("no training images");
  if (images.size() != labels.size()) throw Error("image and label counts differ");
  const auto& first = images.front();
  for (const auto& img : images) {
    if (img.p != first.p || img.f != first.f || img.t != first.t) throw Error("training images differ in shape");
  }
  std::vector<Label> classes(labels.begin(), labels.end());
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  if (classes.size() < 2) throw Error("training needs at least two classes");
  for (std::size_t i = 0; i < images.size(); ++i) {
    for (double v : images[i].values) {
      if (!std::isfinite(v)) throw Error("training image " + std::to_string(i) + " contains non-finite values");
    }
  }
  for (auto w : cfg.widths) {
    if (w > first.t) throw Error("filter width " + std::to_string(w) + " exceeds image length " + std::to_string(first.t));
  }

  const CnnShape shape{first.p, first.f, cfg.widths, cfg.filters_per_width, classes.size(), cfg.pooling};
  TrainResult out{CnnModel::init(shape, classes, derive_seed(cfg.rng_seed, "cnn.init")), {}};

  std::vector<TimeMajor> xs;
  xs.reserve(images.size());
  for (const auto& img : images) xs.push_back(to_time_major(img));
  std::vector<std::size_t> targets;
  for (Label l : labels) targets.push_back(static_cast<std::size_t>(std::lower_bound(classes.begin(), classes.end(), l) - classes.begin()));

  const DropoutPlan plan{cfg.dropout_rate, cfg.dropout_target, derive_seed(cfg.rng_seed, "cnn.dropout")};
  const AdamParams hp{cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon};
  AdamState adam;
  const std::size_t n = xs.size();
  std::vector<std::size_t> order(n);
  std::vector<TimeMajor> batch;
  std::vector<std::size_t> batch_targets;
  std::vector<std::uint64_t> batch_ids;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(derive_seed(cfg.rng_seed, "cnn.shuffle", epoch));
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    std::size_t batches = 0;
    for (std::size_t lo = 0; lo < n; lo += cfg.minibatch) {
      const std::size_t hi = std::min(n, lo + cfg.minibatch);
      batch.clear();
      batch_targets.clear();
      batch_ids.clear();
      for (std::size_t i = lo; i < hi; ++i) {
        batch.push_back(xs[order[i]]);
        batch_targets.push_back(targets[order[i]]);
        batch_ids.push_back(epoch * n + i);
      }
      const auto bg = loss_and_gradient(out.model, batch, batch_targets, cfg.lambda, &plan, batch_ids, cfg.jobs);
      if (!std::isfinite(bg.loss)) {
        throw Error("non-finite training loss at epoch " + std::to_string(epoch + 1) + ", batch " +
                    std::to_string(batches + 1));
      }
      adam_step(out.model.theta(), bg.grad, adam, hp);
      total += bg.loss;
      ++batches;
    }
    out.log.epoch_loss.push_back(total / static_cast<double>(batches));
    if (on_epoch) on_epoch(epoch + 1, out.log.epoch_loss.back());
  }
  check_finite(out.model.theta(), "trained parameters");
  return out;
}

Prediction predict_cnn(const CnnModel& model, const embed::MultiChannelImage& image) {
  if (image.p != model.shape().p || image.f != model.shape().f) {
    throw Error("image is " + std::to_string(image.p) + "x" + std::to_string(image.f) + ", network expects " +
                std::to_string(model.shape().p) + "x" + std::to_string(model.shape().f));
  }
  const auto tr = forward(model, to_time_major(image));
  Prediction p;
  p.probs = tr.probs;
  p.label = model.classes()[argmax_of(tr.probs)];
  return p;
}

}  // namespace lte::cnn
