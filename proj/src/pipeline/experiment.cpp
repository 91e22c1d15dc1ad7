// Copyright 2026 The lte-scene Authors
// SPDX-License-Identifier: Apache-2.0

#include "lte/pipeline/experiment.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "lte/dsp/audio.hpp"
#include "lte/embed/embed.hpp"
#include "lte/parallel.hpp"
#include "lte/pipeline/tensor.hpp"
#include "lte/simd/kernels.hpp"

namespace lte::pipeline {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<System, std::string_view>, 7> kSystemNames{{
    {System::lte1, "LTE1"},
    {System::lte2, "LTE2"},
    {System::lte3, "LTE3"},
    {System::lte_plus, "LTE+"},
    {System::cnn_max, "cnn-max"},
    {System::cnn_mean, "cnn-mean"},
    {System::cnn_mix, "cnn-mix"},
}};

cnn::Pooling pooling_of(System s) {
  switch (s) {
    case System::cnn_max: return cnn::Pooling::max;
    case System::cnn_mean: return cnn::Pooling::mean;
    default: return cnn::Pooling::mix;
  }
}

// Raw channel indices feeding an SVM system.
std::vector<std::size_t> svm_channels(System s) {
  switch (s) {
    case System::lte1: return {0};
    case System::lte2: return {1};
    case System::lte3: return {2};
    default: return {0, 1, 2};
  }
}

json forest_json(const forest::ForestConfig& f) {
  return {{"n_trees", f.n_trees},       {"max_depth", f.max_depth},
          {"min_leaf", f.min_leaf},     {"features_per_split", f.features_per_split},
          {"bootstrap", f.bootstrap},   {"laplace_alpha", f.laplace_alpha}};
}

void check_keys(const json& j, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw Error("config: " + std::string(where) + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw Error("config: unknown key '" + std::string(where) + (where.empty() ? "" : ".") + key + "'");
    }
  }
}

template <class T>
void take(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void forest_from_json(const json& j, std::string_view where, forest::ForestConfig& f) {
  check_keys(j, where, {"n_trees", "max_depth", "min_leaf", "features_per_split", "bootstrap", "laplace_alpha"});
  take(j, "n_trees", f.n_trees);
  take(j, "max_depth", f.max_depth);
  take(j, "min_leaf", f.min_leaf);
  take(j, "features_per_split", f.features_per_split);
  take(j, "bootstrap", f.bootstrap);
  take(j, "laplace_alpha", f.laplace_alpha);
}

std::uint64_t text_hash(std::string_view s) { return derive_seed(0, s); }

}  // namespace

std::string_view system_name(System s) {
  for (const auto& [sys, name] : kSystemNames)
    if (sys == s) return name;
  return "?";
}

System parse_system(std::string_view name) {
  for (const auto& [sys, n] : kSystemNames)
    if (n == name) return sys;
  throw Error("unknown system '" + std::string(name) + "' (expected LTE1, LTE2, LTE3, LTE+, cnn-max, cnn-mean, cnn-mix)");
}

std::vector<System> all_systems() {
  std::vector<System> out;
  for (const auto& entry : kSystemNames) out.push_back(entry.first);
  return out;
}

bool is_cnn(System s) { return s == System::cnn_max || s == System::cnn_mean || s == System::cnn_mix; }

void ExperimentConfig::validate() const {
  features.frames.validate();
  features.denoise.validate();
  tree_forest.validate();
  embed_forest.validate();
  svm.svm.validate();
  cnn.validate();
  if (descriptor_folds < 2) throw Error("descriptor_folds must be at least 2");
  if (svm.cv_folds < 2) throw Error("svm.cv_folds must be at least 2");
  if (svm.cost_grid.empty()) throw Error("svm.cost_grid is empty");
  if (jobs == 0) throw Error("jobs must be positive");
}

ExperimentConfig ExperimentConfig::desk() {
  ExperimentConfig c;
  c.tree_forest.n_trees = 50;
  c.embed_forest.n_trees = 50;
  c.cnn.filters_per_width = 32;
  c.cnn.epochs = 100;
  return c;
}

ExperimentConfig ExperimentConfig::paper_scale() {
  ExperimentConfig c;
  c.cnn = cnn::CnnConfig::paper_scale();
  c.pad_segments = embed::kPaddedSegments;
  return c;
}

json ExperimentConfig::to_json() const {
  std::vector<std::size_t> widths(cnn.widths.begin(), cnn.widths.end());
  return {
      {"frames", {{"frame_len", features.frames.frame_len}, {"hop", features.frames.hop}}},
      {"segments", {{"length", features.segments.length}, {"hop", features.segments.hop}}},
      {"denoise",
       {{"fft_len", features.denoise.fft_len},
        {"min_window", features.denoise.min_window},
        {"bias_comp", features.denoise.bias_comp},
        {"floor_beta", features.denoise.floor_beta},
        {"smoothing", features.denoise.smoothing}}},
      {"tree_forest", forest_json(tree_forest)},
      {"embed_forest", forest_json(embed_forest)},
      {"partition", std::string(labeltree::mode_name(partition))},
      {"descriptor_folds", descriptor_folds},
      {"cnn_crossval_descriptors", cnn_crossval_descriptors},
      {"pad_segments", pad_segments},
      {"svm",
       {{"cost_grid", svm.cost_grid}, {"cv_folds", svm.cv_folds}, {"tol", svm.svm.tol}, {"max_iter", svm.svm.max_iter}}},
      {"cnn",
       {{"widths", widths},
        {"filters_per_width", cnn.filters_per_width},
        {"learning_rate", cnn.learning_rate},
        {"dropout_rate", cnn.dropout_rate},
        {"dropout_target", std::string(cnn::dropout_target_name(cnn.dropout_target))},
        {"lambda", cnn.lambda},
        {"epochs", cnn.epochs},
        {"minibatch", cnn.minibatch}}},
      {"seed", seed},
      {"jobs", jobs},
      {"deterministic", deterministic},
      {"resample", resample},
      {"checkpoint_dir", checkpoint_dir.string()},
  };
}

ExperimentConfig ExperimentConfig::from_json(const json& j, ExperimentConfig base) {
  try {
    check_keys(j, "",
               {"preset", "frames", "segments", "denoise", "tree_forest", "embed_forest", "partition",
                "descriptor_folds", "cnn_crossval_descriptors", "pad_segments", "svm", "cnn", "seed", "jobs",
                "deterministic", "resample", "checkpoint_dir"});
    ExperimentConfig c = std::move(base);
    if (j.contains("preset")) {
      const auto p = j.at("preset").get<std::string>();
      if (p == "desk") c = desk();
      else if (p == "paper-scale") c = paper_scale();
      else if (p == "default") c = ExperimentConfig{};
      else throw Error("config: unknown preset '" + p + "'");
    }
    if (j.contains("frames")) {
      const auto& f = j.at("frames");
      check_keys(f, "frames", {"frame_len", "hop"});
      take(f, "frame_len", c.features.frames.frame_len);
      take(f, "hop", c.features.frames.hop);
    }
    if (j.contains("segments")) {
      const auto& s = j.at("segments");
      check_keys(s, "segments", {"length", "hop"});
      take(s, "length", c.features.segments.length);
      take(s, "hop", c.features.segments.hop);
    }
    if (j.contains("denoise")) {
      const auto& d = j.at("denoise");
      check_keys(d, "denoise", {"fft_len", "min_window", "bias_comp", "floor_beta", "smoothing"});
      take(d, "fft_len", c.features.denoise.fft_len);
      take(d, "min_window", c.features.denoise.min_window);
      take(d, "bias_comp", c.features.denoise.bias_comp);
      take(d, "floor_beta", c.features.denoise.floor_beta);
      take(d, "smoothing", c.features.denoise.smoothing);
    }
    if (j.contains("tree_forest")) forest_from_json(j.at("tree_forest"), "tree_forest", c.tree_forest);
    if (j.contains("embed_forest")) forest_from_json(j.at("embed_forest"), "embed_forest", c.embed_forest);
    if (j.contains("partition")) c.partition = labeltree::parse_mode(j.at("partition").get<std::string>());
    take(j, "descriptor_folds", c.descriptor_folds);
    take(j, "cnn_crossval_descriptors", c.cnn_crossval_descriptors);
    take(j, "pad_segments", c.pad_segments);
    if (j.contains("svm")) {
      const auto& s = j.at("svm");
      check_keys(s, "svm", {"cost_grid", "cv_folds", "tol", "max_iter"});
      take(s, "cost_grid", c.svm.cost_grid);
      take(s, "cv_folds", c.svm.cv_folds);
      take(s, "tol", c.svm.svm.tol);
      take(s, "max_iter", c.svm.svm.max_iter);
    }
    if (j.contains("cnn")) {
      const auto& n = j.at("cnn");
      check_keys(n, "cnn",
                 {"widths", "filters_per_width", "learning_rate", "dropout_rate", "dropout_target", "lambda", "epochs",
                  "minibatch"});
      take(n, "widths", c.cnn.widths);
      take(n, "filters_per_width", c.cnn.filters_per_width);
      take(n, "learning_rate", c.cnn.learning_rate);
      take(n, "dropout_rate", c.cnn.dropout_rate);
      if (n.contains("dropout_target"))
        c.cnn.dropout_target = cnn::parse_dropout_target(n.at("dropout_target").get<std::string>());
      take(n, "lambda", c.cnn.lambda);
      take(n, "epochs", c.cnn.epochs);
      take(n, "minibatch", c.cnn.minibatch);
    }
    take(j, "seed", c.seed);
    take(j, "jobs", c.jobs);
    take(j, "deterministic", c.deterministic);
    take(j, "resample", c.resample);
    if (j.contains("checkpoint_dir")) c.checkpoint_dir = j.at("checkpoint_dir").get<std::string>();
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw Error(std::string("config: ") + e.what());
  }
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path, ExperimentConfig base) {
  const std::string text = read_file(path);
  json j;
  try {
    j = json::parse(text, nullptr, true, true);
  } catch (const json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
  try {
    return from_json(j, std::move(base));
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

ExperimentConfig ExperimentConfig::from_json(const json& j) { return from_json(j, ExperimentConfig{}); }

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) { return load(path, ExperimentConfig{}); }

std::size_t Corpus::max_segments() const {
  std::size_t t = 0;
  for (const auto& f : features) t = std::max(t, f.channels[0].segments());
  return t;
}

Corpus load_corpus(const DatasetManifest& manifest, const ExperimentConfig& cfg, bool need_denoised, const LogFn& log) {
  const auto entries = manifest.active();
  if (entries.empty()) throw Error("manifest has no active recordings");
  FeatureSettings settings = cfg.features;
  settings.need_denoised = need_denoised;

  std::vector<std::optional<RecordingFeatures>> feats(entries.size());
  std::vector<std::string> problems(entries.size());
  parallel_for(entries.size(), cfg.jobs, [&](std::size_t i) {
    const auto& e = entries[i];
    const auto audio = dsp::read_wav(manifest.resolve(e), cfg.resample);
    try {
      feats[i] = extract_recording(audio, settings);
      if (feats[i]->segments_dropped > 0) {
        problems[i] = "recording " + e.id + ": dropped " + std::to_string(feats[i]->segments_dropped) + " of " +
                      std::to_string(feats[i]->segments_total) + " segments (clipping or non-finite samples)";
      }
    } catch (const Error& err) {
      problems[i] = "recording " + e.id + " excluded: " + err.what();
    }
  });

  Corpus c;
  c.classes = manifest.classes;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!problems[i].empty()) {
      c.warnings.push_back(problems[i]);
      if (log) log("warning: " + problems[i]);
    }
    if (!feats[i]) continue;
    c.ids.push_back(entries[i].id);
    c.labels.push_back(manifest.label_index(entries[i].label));
    c.folds.push_back(entries[i].fold);
    c.features.push_back(std::move(*feats[i]));
  }
  if (c.ids.empty()) throw Error("no usable recordings left after segment validation");
  return c;
}

ExperimentResult run_experiment(const DatasetManifest& manifest, const std::vector<System>& systems,
                                const ExperimentConfig& cfg, const LogFn& log) {
  cfg.validate();
  const bool need_denoised = std::any_of(systems.begin(), systems.end(), is_cnn);
  const auto t0 = std::chrono::steady_clock::now();
  const Corpus corpus = load_corpus(manifest, cfg, need_denoised, log);
  if (log) {
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::ostringstream os;
    os << "features: " << corpus.size() << " recordings in " << s << " s";
    log(os.str());
  }
  return run_experiment(corpus, systems, cfg, log);
}

namespace {

struct FoldPredictions {
  std::map<std::string, std::vector<std::pair<std::string, Label>>> by_system;
};

std::filesystem::path checkpoint_path(const ExperimentConfig& cfg, int fold) {
  return cfg.checkpoint_dir / ("fold_" + std::to_string(fold) + ".json");
}

std::optional<FoldPredictions> load_checkpoint(const ExperimentConfig& cfg, int fold, std::uint64_t hash) {
  if (cfg.checkpoint_dir.empty()) return std::nullopt;
  const auto path = checkpoint_path(cfg, fold);
  if (!std::filesystem::exists(path)) return std::nullopt;
  try {
    const json j = json::parse(read_file(path));
    if (j.at("hash").get<std::uint64_t>() != hash) return std::nullopt;
    FoldPredictions out;
    for (const auto& [sys, rows] : j.at("predictions").items()) {
      for (const auto& row : rows) out.by_system[sys].emplace_back(row.at(0).get<std::string>(), row.at(1).get<Label>());
    }
    return out;
  } catch (const std::exception&) {
    return std::nullopt;  // unreadable checkpoints are recomputed
  }
}

void save_checkpoint(const ExperimentConfig& cfg, int fold, std::uint64_t hash, const FoldPredictions& p) {
  if (cfg.checkpoint_dir.empty()) return;
  json preds = json::object();
  for (const auto& [sys, rows] : p.by_system) {
    json arr = json::array();
    for (const auto& [id, label] : rows) arr.push_back({id, label});
    preds[sys] = arr;
  }
  const json j{{"fold", fold}, {"hash", hash}, {"predictions", preds}};
  write_file(checkpoint_path(cfg, fold), j.dump(1));
}

struct ChannelOutputs {
  // Aligned with the fold's training recordings: held-out descriptors and
  // descriptors from the model fitted on all of them.
  std::vector<embed::LteImage> train_cv;
  std::vector<embed::LteImage> train_full;
  std::vector<embed::LteImage> test;
};

ChannelOutputs run_channel(const Corpus& corpus, const std::vector<std::size_t>& train_idx,
                           const std::vector<std::size_t>& test_idx, std::size_t ch, bool crossval, bool full, int fold,
                           const ExperimentConfig& cfg, std::size_t jobs) {
  const embed::ChannelTag tag = embed::canonical_channels()[ch];
  const auto stream = static_cast<std::uint64_t>(fold) * 16 + ch;

  std::vector<embed::RecordingSegments> recs;
  recs.reserve(train_idx.size());
  for (std::size_t i : train_idx) {
    recs.push_back({static_cast<int>(i), corpus.labels[i], corpus.features[i].channels[ch]});
  }
  const auto samples = embed::segment_samples(recs);

  labeltree::TreeBuildOptions topts;
  topts.forest = cfg.tree_forest;
  topts.forest.jobs = jobs;
  topts.mode = cfg.partition;
  topts.seed = derive_seed(cfg.seed, "pipeline.tree", stream);
  const auto tree = labeltree::build_label_tree(samples, topts);

  forest::ForestConfig fcfg = cfg.embed_forest;
  fcfg.jobs = jobs;
  fcfg.rng_seed = derive_seed(cfg.seed, "pipeline.embed", stream);
  const auto model = embed::EmbeddingModel::train(tree, samples, fcfg, tag);

  ChannelOutputs out;
  for (std::size_t i : test_idx) out.test.push_back(embed::lte_image(model, corpus.features[i].channels[ch]));

  if (crossval) {
    auto cv = embed::crossval_embed(tree, recs, fcfg, tag, cfg.descriptor_folds,
                                    derive_seed(cfg.seed, "pipeline.descriptors", stream));
    const std::set<std::size_t> test_set(test_idx.begin(), test_idx.end());
    for (std::size_t r = 0; r < cv.provenance.size(); ++r) {
      for (int id : cv.provenance[r]) {
        if (id < 0 || test_set.count(static_cast<std::size_t>(id)) || corpus.folds[static_cast<std::size_t>(id)] == fold) {
          throw Error("fold isolation violated: recording " + corpus.ids[static_cast<std::size_t>(id)] +
                      " of the evaluation fold trained a descriptor model");
        }
      }
    }
    out.train_cv = std::move(cv.images);
  }
  if (full) {
    for (std::size_t i : train_idx) out.train_full.push_back(embed::lte_image(model, corpus.features[i].channels[ch]));
  }
  return out;
}

enum class Split { train_cv, train_full, test };

const embed::LteImage& image_of(const ChannelOutputs& c, Split split, std::size_t index) {
  switch (split) {
    case Split::train_cv: return c.train_cv.at(index);
    case Split::train_full: return c.train_full.at(index);
    default: return c.test.at(index);
  }
}

embed::MultiChannelImage stack_padded(const std::array<ChannelOutputs, embed::kChannels>& chans, Split split,
                                      std::size_t index, std::size_t pad) {
  std::vector<embed::LteImage> imgs;
  imgs.reserve(embed::kChannels);
  for (const auto& c : chans) imgs.push_back(embed::circular_pad(image_of(c, split, index), pad));
  return embed::stack_channels(imgs);
}

}  // namespace

ExperimentResult run_experiment(const Corpus& corpus, const std::vector<System>& systems, const ExperimentConfig& cfg,
                                const LogFn& log) {
  cfg.validate();
  if (systems.empty()) throw Error("no systems requested");
  if (cfg.deterministic) simd::force_isa(simd::Isa::scalar);

  const bool any_cnn = std::any_of(systems.begin(), systems.end(), is_cnn);
  const bool any_svm = std::any_of(systems.begin(), systems.end(), [](System s) { return !is_cnn(s); });
  if (any_cnn) {
    for (const auto& f : corpus.features) {
      if (f.channels[3].segments() == 0) throw Error("CNN systems need denoised channels; corpus was loaded without them");
    }
  }

  ExperimentResult result;
  result.warnings = corpus.warnings;
  result.pad_segments = cfg.pad_segments != 0 ? cfg.pad_segments : corpus.max_segments();

  std::set<int> fold_ids(corpus.folds.begin(), corpus.folds.end());
  if (fold_ids.size() < 2) throw Error("cross-validation needs at least two folds with recordings");

  // Channels in use: raw channels for the SVM systems, all six for the CNN.
  std::vector<std::size_t> channels;
  for (std::size_t ch = 0; ch < embed::kChannels; ++ch) {
    bool used = any_cnn;
    for (System s : systems) {
      if (is_cnn(s)) continue;
      const auto sc = svm_channels(s);
      used = used || std::find(sc.begin(), sc.end(), ch) != sc.end();
    }
    if (used) channels.push_back(ch);
  }

  json hash_doc = cfg.to_json();
  hash_doc.erase("jobs");
  hash_doc.erase("checkpoint_dir");
  hash_doc["ids"] = corpus.ids;
  hash_doc["folds"] = corpus.folds;
  hash_doc["pad"] = result.pad_segments;
  const std::uint64_t hash = text_hash(hash_doc.dump());

  std::map<std::string, std::map<std::string, Label>> predicted;  // system -> id -> label

  for (int fold : fold_ids) {
    std::vector<std::string> want;
    for (System s : systems) want.emplace_back(system_name(s));
    if (auto cp = load_checkpoint(cfg, fold, hash)) {
      const bool complete = std::all_of(want.begin(), want.end(), [&](const std::string& s) { return cp->by_system.count(s); });
      if (complete) {
        for (const auto& s : want)
          for (const auto& [id, label] : cp->by_system[s]) predicted[s][id] = label;
        if (log) log("fold " + std::to_string(fold) + ": restored from checkpoint");
        continue;
      }
    }

    const auto fold_start = std::chrono::steady_clock::now();
    auto elapsed = [&] {
      return std::chrono::duration<double>(std::chrono::steady_clock::now() - fold_start).count();
    };
    FoldPredictions fp;
    try {
      std::vector<std::size_t> train_idx, test_idx;
      for (std::size_t i = 0; i < corpus.size(); ++i) (corpus.folds[i] == fold ? test_idx : train_idx).push_back(i);
      if (train_idx.empty()) throw Error("no training recordings");
      std::vector<Label> train_labels;
      for (std::size_t i : train_idx) train_labels.push_back(corpus.labels[i]);

      const std::size_t outer = std::min(cfg.jobs, channels.size());
      const std::size_t inner = std::max<std::size_t>(1, cfg.jobs / outer);
      std::array<ChannelOutputs, embed::kChannels> chans;
      parallel_for(channels.size(), outer, [&](std::size_t k) {
        const std::size_t ch = channels[k];
        const bool crossval = (ch < 3 && any_svm) || (any_cnn && cfg.cnn_crossval_descriptors);
        const bool full = any_cnn && !cfg.cnn_crossval_descriptors;
        chans[ch] = run_channel(corpus, train_idx, test_idx, ch, crossval, full, fold, cfg, inner);
      });
      if (log) log("fold " + std::to_string(fold) + ": embeddings done (" + std::to_string(elapsed()) + " s)");

      for (std::size_t si = 0; si < systems.size(); ++si) {
        const System sys = systems[si];
        const std::string name(system_name(sys));
        auto& rows = fp.by_system[name];
        const auto stream = static_cast<std::uint64_t>(fold) * 8 + static_cast<std::uint64_t>(sys);
        if (!is_cnn(sys)) {
          const auto used = svm_channels(sys);
          auto instance = [&](bool train, std::size_t j) {
            kernelbase::Instance inst;
            for (std::size_t ch : used) inst.push_back(embed::average_pool(image_of(chans[ch], train ? Split::train_cv : Split::test, j)));
            return inst;
          };
          std::vector<kernelbase::Instance> train;
          for (std::size_t j = 0; j < train_idx.size(); ++j) train.push_back(instance(true, j));
          kernelbase::FusionSvmConfig scfg = cfg.svm;
          scfg.svm.jobs = cfg.jobs;
          scfg.seed = derive_seed(cfg.seed, "pipeline.svm", stream);
          const auto svm = kernelbase::FusionSvm::train(std::move(train), train_labels, scfg);
          for (std::size_t j = 0; j < test_idx.size(); ++j)
            rows.emplace_back(corpus.ids[test_idx[j]], svm.predict(instance(false, j)));
        } else {
          const Split cnn_split = cfg.cnn_crossval_descriptors ? Split::train_cv : Split::train_full;
          std::vector<embed::MultiChannelImage> train;
          for (std::size_t j = 0; j < train_idx.size(); ++j)
            train.push_back(stack_padded(chans, cnn_split, j, result.pad_segments));
          cnn::CnnConfig ccfg = cfg.cnn;
          ccfg.pooling = pooling_of(sys);
          ccfg.jobs = cfg.jobs;
          ccfg.rng_seed = derive_seed(cfg.seed, "pipeline.cnn", stream);
          const auto trained = cnn::train_cnn(train, train_labels, ccfg);
          for (std::size_t j = 0; j < test_idx.size(); ++j) {
            const auto p = cnn::predict_cnn(trained.model, stack_padded(chans, Split::test, j, result.pad_segments));
            rows.emplace_back(corpus.ids[test_idx[j]], p.label);
          }
        }
        if (log) log("fold " + std::to_string(fold) + ": " + name + " done (" + std::to_string(elapsed()) + " s)");
      }
    } catch (const std::exception& e) {
      std::string msg = "fold " + std::to_string(fold) + " failed: " + e.what();
      if (!cfg.checkpoint_dir.empty()) msg += "; finished folds are checkpointed in " + cfg.checkpoint_dir.string();
      throw Error(msg);
    }
    save_checkpoint(cfg, fold, hash, fp);
    for (const auto& [s, rows] : fp.by_system)
      for (const auto& [id, label] : rows) predicted[s][id] = label;
  }

  for (System sys : systems) {
    const std::string name(system_name(sys));
    std::vector<Label> pred, truth;
    std::vector<int> folds;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      const auto it = predicted[name].find(corpus.ids[i]);
      if (it == predicted[name].end()) throw Error("no prediction for recording " + corpus.ids[i]);
      pred.push_back(it->second);
      truth.push_back(corpus.labels[i]);
      folds.push_back(corpus.folds[i]);
    }
    auto report = evaluate(pred, truth, corpus.classes, folds);
    report.system = name;
    result.reports.push_back(std::move(report));
  }
  return result;
}

}  // namespace lte::pipeline
