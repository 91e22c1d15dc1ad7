// Copyright 2026 The lte-scene Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end: feature extraction, label trees, embeddings,
// classifier training and cross-validated evaluation.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lte/cnn/cnn.hpp"
#include "lte/dsp/audio.hpp"
#include "lte/dsp/denoise.hpp"
#include "lte/embed/embed.hpp"
#include "lte/kernelbase/kernelbase.hpp"
#include "lte/labeltree/labeltree.hpp"
#include "lte/pipeline/experiment.hpp"
#include "lte/pipeline/features.hpp"
#include "lte/pipeline/manifest.hpp"
#include "lte/pipeline/report.hpp"
#include "lte/pipeline/synth.hpp"
#include "lte/pipeline/tensor.hpp"
#include "lte/simd/kernels.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lte;
using namespace lte::pipeline;

namespace {

struct Globals {
  std::uint64_t seed = 42;
  std::optional<std::uint64_t> seed_flag;
  std::string config;
  bool deterministic = false;
  std::size_t jobs = 0;
  bool resample = false;
  bool quiet = false;
};

ExperimentConfig resolve_config(const Globals& g) {
  ExperimentConfig cfg = g.config.empty() ? ExperimentConfig{} : ExperimentConfig::load(g.config);
  if (g.seed_flag) cfg.seed = *g.seed_flag;
  if (g.jobs > 0) cfg.jobs = g.jobs;
  cfg.deterministic = cfg.deterministic || g.deterministic;
  cfg.resample = cfg.resample || g.resample;
  cfg.validate();
  if (cfg.deterministic) simd::force_isa(simd::Isa::scalar);
  return cfg;
}

LogFn logger(const Globals& g) {
  if (g.quiet) return {};
  return [](const std::string& s) { std::cerr << s << '\n'; };
}

Tensor segment_tensor(const dsp::SegmentMatrix& seg, const std::string& channel) {
  Tensor t;
  t.dims = {seg.dim(), seg.segments()};
  t.values = seg.values.data();
  t.meta = {{"kind", "segments"}, {"channel", channel}};
  return t;
}

// Model files carry their class names in a JSON sidecar next to them.
fs::path sidecar(const fs::path& model) { return fs::path(model.string() + ".json"); }

void write_sidecar(const fs::path& model, const json& j) { write_file(sidecar(model), j.dump(1) + "\n"); }

json read_sidecar(const fs::path& model) {
  try {
    return json::parse(read_file(sidecar(model)));
  } catch (const json::exception& e) {
    throw Error(sidecar(model).string() + ": " + e.what());
  }
}

embed::MultiChannelImage image_from_tensor(const Tensor& t, const fs::path& path) {
  if (t.dims.size() != 3) throw Error(path.string() + ": expected a P x F x T image tensor");
  embed::MultiChannelImage img;
  img.p = t.dims[0];
  img.f = t.dims[1];
  img.t = t.dims[2];
  img.values = t.values;
  if (t.meta.contains("channels")) {
    for (const auto& c : t.meta.at("channels")) img.channels.push_back(embed::ChannelTag::parse(c.get<std::string>()));
  }
  return img;
}

// Repeats columns cyclically up to `target` columns.
embed::MultiChannelImage pad_image(const embed::MultiChannelImage& img, std::size_t target) {
  if (img.t == target) return img;
  if (img.t > target) throw Error("image longer than target");
  embed::MultiChannelImage out = img;
  out.t = target;
  out.values.assign(img.p * img.f * target, 0.0);
  for (std::size_t c = 0; c < img.p; ++c)
    for (std::size_t r = 0; r < img.f; ++r)
      for (std::size_t k = 0; k < target; ++k) out.at(c, r, k) = img.at(c, r, k % img.t);
  return out;
}

kernelbase::Instance pooled_instance(const embed::MultiChannelImage& img) {
  kernelbase::Instance inst(img.p, std::vector<double>(img.f, 0.0));
  for (std::size_t c = 0; c < img.p; ++c)
    for (std::size_t r = 0; r < img.f; ++r) {
      double s = 0.0;
      for (std::size_t k = 0; k < img.t; ++k) s += img.at(c, r, k);
      inst[c][r] = s / static_cast<double>(img.t);
    }
  return inst;
}

struct LabelledImages {
  std::vector<embed::MultiChannelImage> images;
  std::vector<std::string> names;  // class name per image
  std::vector<std::string> ids;
};

LabelledImages load_images(const std::vector<std::string>& paths) {
  LabelledImages out;
  for (const auto& p : paths) {
    const Tensor t = read_tensor(p);
    out.images.push_back(image_from_tensor(t, p));
    out.names.push_back(t.meta.value("label", ""));
    out.ids.push_back(t.meta.value("recording", fs::path(p).stem().string()));
  }
  return out;
}

std::vector<Label> to_labels(const std::vector<std::string>& names, const std::vector<std::string>& classes) {
  std::vector<Label> out;
  for (const auto& n : names) {
    const auto it = std::lower_bound(classes.begin(), classes.end(), n);
    if (n.empty() || it == classes.end() || *it != n) throw Error("image label '" + n + "' is not a known class");
    out.push_back(static_cast<Label>(it - classes.begin()));
  }
  return out;
}

// Training recordings of one channel: all active entries outside `fold`.
std::vector<embed::RecordingSegments> channel_recordings(const DatasetManifest& m, const ExperimentConfig& cfg,
                                                         embed::ChannelTag tag, int fold, const LogFn& log) {
  const Corpus corpus = load_corpus(m, cfg, tag.denoised, log);
  std::vector<embed::RecordingSegments> recs;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (corpus.folds[i] == fold) continue;
    recs.push_back({static_cast<int>(i), corpus.labels[i], corpus.features[i].channels[tag.canonical_index()]});
  }
  if (recs.empty()) throw Error("no training recordings outside fold " + std::to_string(fold));
  return recs;
}

std::uint64_t channel_stream(int fold, embed::ChannelTag tag) {
  return static_cast<std::uint64_t>(std::max(fold, 0)) * 16 + tag.canonical_index();
}

void write_report(const EvaluationReport& r, const fs::path& dir) {
  const std::string base = r.system.empty() ? "report" : r.system;
  write_file(dir / (base + ".json"), r.to_json().dump(1) + "\n");
  write_file(dir / (base + ".csv"), r.to_csv());
  write_file(dir / (base + ".txt"), r.to_text());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acoustic scene classification with label tree embeddings"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed_flag, "Experiment seed (overrides the config)");
  app.add_option("--config", g.config, "JSON experiment config")->check(CLI::ExistingFile);
  app.add_flag("--deterministic", g.deterministic, "Use the scalar reference kernels");
  app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--resample", g.resample, "Resample audio that is not at 44.1 kHz instead of rejecting it");
  app.add_flag("-q,--quiet", g.quiet, "No progress output");

  // synth
  auto* synth = app.add_subcommand("synth", "Write a synthetic scene corpus and its manifest");
  SynthConfig sc;
  std::string synth_out;
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--classes", sc.classes, "Number of classes");
  synth->add_option("--per-class", sc.per_class, "Recordings per class");
  synth->add_option("--duration", sc.duration, "Seconds per recording");
  synth->add_option("--folds", sc.folds, "Cross-validation folds");

  // features
  auto* features = app.add_subcommand("features", "Segment features of one recording, raw and denoised");
  std::string feat_in, feat_out;
  bool feat_raw_only = false;
  features->add_option("--in", feat_in, "WAV file")->required()->check(CLI::ExistingFile);
  features->add_option("--out", feat_out, "Output directory")->required();
  features->add_flag("--raw-only", feat_raw_only, "Skip the denoised channels");

  // denoise
  auto* denoise = app.add_subcommand("denoise", "Spectral subtraction of one recording");
  std::string den_in, den_out;
  denoise->add_option("--in", den_in, "WAV file")->required()->check(CLI::ExistingFile);
  denoise->add_option("--out", den_out, "Output WAV")->required();

  // tree
  auto* tree = app.add_subcommand("tree", "Learn a label tree for one channel");
  std::string tree_manifest, tree_channel = "GTCC-raw", tree_out;
  int tree_fold = 0;
  tree->add_option("--manifest", tree_manifest, "Manifest CSV")->required()->check(CLI::ExistingFile);
  tree->add_option("--channel", tree_channel, "Channel, e.g. GTCC-raw or MFCC-denoised");
  tree->add_option("--fold", tree_fold, "Held-out fold (0 = train on everything)");
  tree->add_option("--out", tree_out, "Output tree JSON")->required();

  // embed
  auto* embedc = app.add_subcommand("embed", "Train the split-node classifiers of a label tree");
  std::string emb_manifest, emb_channel = "GTCC-raw", emb_tree, emb_out;
  int emb_fold = 0;
  embedc->add_option("--manifest", emb_manifest, "Manifest CSV")->required()->check(CLI::ExistingFile);
  embedc->add_option("--channel", emb_channel, "Channel");
  embedc->add_option("--tree", emb_tree, "Label tree JSON")->required()->check(CLI::ExistingFile);
  embedc->add_option("--fold", emb_fold, "Held-out fold (0 = train on everything)");
  embedc->add_option("--out", emb_out, "Output embedding model")->required();

  // image
  auto* image = app.add_subcommand("image", "LTE image of one recording");
  std::vector<std::string> img_models;
  std::string img_in, img_out, img_label, img_id;
  std::size_t img_pad = 0;
  image->add_option("--model", img_models, "Embedding model(s); six in canonical order give a stacked image")
      ->required();
  image->add_option("--in", img_in, "WAV file")->required()->check(CLI::ExistingFile);
  image->add_option("--out", img_out, "Output tensor")->required();
  image->add_option("--pad", img_pad, "Pad to this many segments (0 = none)");
  image->add_option("--label", img_label, "Class name stored with the image");
  image->add_option("--id", img_id, "Recording id stored with the image");

  // train-svm
  auto* train_svm = app.add_subcommand("train-svm", "Fusion-kernel SVM on time-averaged images");
  std::vector<std::string> svm_images;
  std::string svm_out;
  train_svm->add_option("--images", svm_images, "Labelled image tensors")->required();
  train_svm->add_option("--out", svm_out, "Output model")->required();

  // train-cnn
  auto* train_cnn = app.add_subcommand("train-cnn", "Convolutional network on LTE images");
  std::vector<std::string> cnn_images;
  std::string cnn_out, cnn_pool = "mix", cnn_loss;
  train_cnn->add_option("--images", cnn_images, "Labelled image tensors")->required();
  train_cnn->add_option("--out", cnn_out, "Output model")->required();
  train_cnn->add_option("--pooling", cnn_pool, "max, mean or mix");
  train_cnn->add_option("--loss-csv", cnn_loss, "Write the per-epoch loss curve");

  // eval
  auto* eval = app.add_subcommand("eval", "Cross-validated experiment, or scoring of a trained model");
  std::string ev_manifest, ev_out = "reports", ev_model, ev_exclude;
  std::vector<std::string> ev_systems{"LTE+", "cnn-mix"}, ev_images;
  eval->add_option("--manifest", ev_manifest, "Manifest CSV (runs the full cross-validation)")
      ->check(CLI::ExistingFile);
  eval->add_option("--systems", ev_systems, "LTE1 LTE2 LTE3 LTE+ cnn-max cnn-mean cnn-mix")->delimiter(',');
  eval->add_option("--exclude", ev_exclude, "File of recording ids to leave out")->check(CLI::ExistingFile);
  eval->add_option("--model", ev_model, "Trained SVM or CNN model")->check(CLI::ExistingFile);
  eval->add_option("--images", ev_images, "Labelled image tensors for --model");
  eval->add_option("--out", ev_out, "Report directory");

  // report
  auto* report = app.add_subcommand("report", "Print stored reports side by side");
  std::vector<std::string> rep_in;
  bool rep_csv = false;
  report->add_option("reports", rep_in, "Report JSON files")->required()->check(CLI::ExistingFile);
  report->add_flag("--csv", rep_csv, "Print each report as CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    const ExperimentConfig cfg = resolve_config(g);
    const LogFn log = logger(g);

    if (synth->parsed()) {
      sc.seed = g.seed_flag.value_or(cfg.seed);
      const auto m = synth_corpus(sc, synth_out);
      std::cout << "wrote " << m.entries.size() << " recordings, " << m.classes.size() << " classes, " << m.n_folds()
                << " folds to " << synth_out << '\n';
    } else if (features->parsed()) {
      FeatureSettings fs_cfg = cfg.features;
      fs_cfg.need_denoised = !feat_raw_only;
      const auto rf = extract_recording(dsp::read_wav(feat_in, cfg.resample), fs_cfg);
      const auto tags = embed::canonical_channels();
      for (std::size_t k = 0; k < embed::kChannels; ++k) {
        if (rf.channels[k].segments() == 0) continue;
        auto t = segment_tensor(rf.channels[k], tags[k].name());
        t.meta["recording"] = fs::path(feat_in).stem().string();
        t.meta["segments_dropped"] = rf.segments_dropped;
        write_tensor(fs::path(feat_out) / (tags[k].name() + ".ltb"), t);
      }
      std::cout << rf.segments_total - rf.segments_dropped << " segments (" << rf.segments_dropped << " dropped)\n";
    } else if (denoise->parsed()) {
      dsp::write_wav(den_out, dsp::spectral_subtract(dsp::read_wav(den_in, cfg.resample), cfg.features.denoise),
                     dsp::WavEncoding::float32);
    } else if (tree->parsed()) {
      const auto m = ingest_dataset(tree_manifest);
      const auto tag = embed::ChannelTag::parse(tree_channel);
      const auto recs = channel_recordings(m, cfg, tag, tree_fold, log);
      labeltree::TreeBuildOptions opts;
      opts.forest = cfg.tree_forest;
      opts.forest.jobs = cfg.jobs;
      opts.mode = cfg.partition;
      opts.seed = derive_seed(cfg.seed, "pipeline.tree", channel_stream(tree_fold, tag));
      const auto lt = labeltree::build_label_tree(embed::segment_samples(recs), opts);
      write_file(tree_out, lt.to_text());
      write_sidecar(tree_out, {{"classes", m.classes}, {"channel", tag.name()}, {"fold", tree_fold}});
      std::cout << "label tree with " << lt.n_splits() << " split nodes written to " << tree_out << '\n';
    } else if (embedc->parsed()) {
      const auto m = ingest_dataset(emb_manifest);
      const auto tag = embed::ChannelTag::parse(emb_channel);
      const auto lt = labeltree::LabelTree::from_text(read_file(emb_tree));
      const auto recs = channel_recordings(m, cfg, tag, emb_fold, log);
      forest::ForestConfig fc = cfg.embed_forest;
      fc.jobs = cfg.jobs;
      fc.rng_seed = derive_seed(cfg.seed, "pipeline.embed", channel_stream(emb_fold, tag));
      const auto model = embed::EmbeddingModel::train(lt, embed::segment_samples(recs), fc, tag);
      write_file(emb_out, model.serialize());
      write_sidecar(emb_out, {{"classes", m.classes}, {"channel", tag.name()}, {"fold", emb_fold}});
      std::cout << "embedding model (" << model.output_dim() << " outputs) written to " << emb_out << '\n';
    } else if (image->parsed()) {
      std::vector<embed::EmbeddingModel> models;
      bool need_denoised = false;
      for (const auto& p : img_models) {
        models.push_back(embed::EmbeddingModel::deserialize(read_file(p)));
        need_denoised = need_denoised || models.back().channel().denoised;
      }
      FeatureSettings fs_cfg = cfg.features;
      fs_cfg.need_denoised = need_denoised;
      const auto rf = extract_recording(dsp::read_wav(img_in, cfg.resample), fs_cfg);
      std::vector<embed::LteImage> imgs;
      for (const auto& model : models) {
        auto img = embed::lte_image(model, rf.channels[model.channel().canonical_index()]);
        imgs.push_back(img_pad > 0 ? embed::circular_pad(img, img_pad) : img);
      }
      const auto stacked = imgs.size() == embed::kChannels ? embed::stack_channels(imgs) : embed::stack_any(imgs);
      Tensor t;
      t.dims = {stacked.p, stacked.f, stacked.t};
      t.values = stacked.values;
      json channels = json::array();
      for (const auto& c : stacked.channels) channels.push_back(c.name());
      t.meta = {{"kind", "lte-image"},
                {"channels", channels},
                {"original_segments", imgs.front().original_segments},
                {"recording", img_id.empty() ? fs::path(img_in).stem().string() : img_id},
                {"label", img_label}};
      write_tensor(img_out, t);
    } else if (train_svm->parsed()) {
      const auto data = load_images(svm_images);
      std::set<std::string> names(data.names.begin(), data.names.end());
      const std::vector<std::string> classes(names.begin(), names.end());
      const auto labels = to_labels(data.names, classes);
      std::vector<kernelbase::Instance> inst;
      for (const auto& img : data.images) inst.push_back(pooled_instance(img));
      kernelbase::FusionSvmConfig sc2 = cfg.svm;
      sc2.svm.jobs = cfg.jobs;
      sc2.seed = derive_seed(cfg.seed, "pipeline.svm");
      const auto svm = kernelbase::FusionSvm::train(std::move(inst), labels, sc2);
      write_file(svm_out, svm.serialize());
      write_sidecar(svm_out, {{"kind", "svm"}, {"classes", classes}});
      std::cout << "cost " << svm.search().best_cost << ", " << svm.model().machines().size()
                << " pairwise machines written to " << svm_out << '\n';
    } else if (train_cnn->parsed()) {
      auto data = load_images(cnn_images);
      std::set<std::string> names(data.names.begin(), data.names.end());
      const std::vector<std::string> classes(names.begin(), names.end());
      const auto labels = to_labels(data.names, classes);
      std::size_t t_max = 0;
      for (const auto& img : data.images) t_max = std::max(t_max, img.t);
      for (auto& img : data.images) img = pad_image(img, t_max);
      cnn::CnnConfig cc = cfg.cnn;
      cc.pooling = cnn::parse_pooling(cnn_pool);
      cc.jobs = cfg.jobs;
      cc.rng_seed = derive_seed(cfg.seed, "pipeline.cnn");
      const auto result = cnn::train_cnn(data.images, labels, cc, [&](std::size_t epoch, double loss) {
        if (log && (epoch % 10 == 0 || epoch == cc.epochs)) log("epoch " + std::to_string(epoch) + " loss " + std::to_string(loss));
      });
      write_file(cnn_out, result.model.serialize());
      write_sidecar(cnn_out, {{"kind", "cnn"}, {"classes", classes}, {"segments", t_max}});
      if (!cnn_loss.empty()) write_file(cnn_loss, result.log.to_csv());
      std::cout << "model with " << result.model.theta().size() << " parameters written to " << cnn_out << '\n';
    } else if (eval->parsed()) {
      if (!ev_manifest.empty()) {
        auto m = ingest_dataset(ev_manifest);
        if (!ev_exclude.empty()) apply_exclusions(m, ev_exclude);
        std::vector<System> systems;
        for (const auto& s : ev_systems) systems.push_back(parse_system(s));
        const auto result = run_experiment(m, systems, cfg, log);
        for (const auto& r : result.reports) write_report(r, ev_out);
        write_file(fs::path(ev_out) / "config.json", cfg.to_json().dump(1) + "\n");
        std::cout << compare_text(result.reports);
      } else {
        if (ev_model.empty() || ev_images.empty()) throw Error("eval needs --manifest, or --model with --images");
        const json side = read_sidecar(ev_model);
        const auto classes = side.at("classes").get<std::vector<std::string>>();
        const auto data = load_images(ev_images);
        const auto truth = to_labels(data.names, classes);
        std::vector<Label> pred;
        const std::string kind = side.at("kind").get<std::string>();
        if (kind == "svm") {
          const auto svm = kernelbase::FusionSvm::deserialize(read_file(ev_model));
          for (const auto& img : data.images) pred.push_back(svm.predict(pooled_instance(img)));
        } else if (kind == "cnn") {
          const auto model = cnn::CnnModel::deserialize(read_file(ev_model));
          const auto t = side.at("segments").get<std::size_t>();
          for (const auto& img : data.images) pred.push_back(cnn::predict_cnn(model, pad_image(img, std::max(t, img.t))).label);
        } else {
          throw Error("unknown model kind '" + kind + "'");
        }
        auto r = evaluate(pred, truth, classes);
        r.system = fs::path(ev_model).stem().string();
        write_report(r, ev_out);
        std::cout << r.to_text();
      }
    } else if (report->parsed()) {
      std::vector<EvaluationReport> reports;
      for (const auto& p : rep_in) {
        try {
          reports.push_back(EvaluationReport::from_json(json::parse(read_file(p))));
        } catch (const json::exception& e) {
          throw Error(p + ": " + e.what());
        }
      }
      if (rep_csv) {
        for (const auto& r : reports) std::cout << "# " << r.system << '\n' << r.to_csv();
      } else {
        std::cout << compare_text(reports);
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
