// Copyright 2026 The lte-scene Authors
// SPDX-License-Identifier: Apache-2.0

#include "lte/pipeline/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

namespace lte::pipeline {
namespace {

std::string fixed1(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

std::string rpad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

}  // namespace

std::size_t EvaluationReport::total() const {
  std::size_t n = 0;
  for (const auto& row : confusion)
    for (auto v : row) n += v;
  return n;
}

std::size_t EvaluationReport::correct() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < confusion.size(); ++i) n += confusion[i][i];
  return n;
}

EvaluationReport evaluate(std::span<const Label> predictions, std::span<const Label> truth,
                          const std::vector<std::string>& classes, std::span<const int> folds) {
  if (predictions.size() != truth.size()) {
    throw Error("prediction count " + std::to_string(predictions.size()) + " does not match truth count " +
                std::to_string(truth.size()));
  }
  if (!folds.empty() && folds.size() != truth.size()) throw Error("fold list does not match truth count");
  if (truth.empty()) throw Error("nothing to evaluate");
  const std::size_t c = classes.size();
  EvaluationReport r;
  r.classes = classes;
  r.confusion.assign(c, std::vector<std::size_t>(c, 0));
  std::map<int, FoldScore> by_fold;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto t = static_cast<std::size_t>(truth[i]), p = static_cast<std::size_t>(predictions[i]);
    if (truth[i] < 0 || t >= c || predictions[i] < 0 || p >= c) throw Error("label outside the class list");
    ++r.confusion[t][p];
    if (!folds.empty()) {
      auto& fs = by_fold[folds[i]];
      fs.fold = folds[i];
      ++fs.total;
      fs.correct += t == p;
    }
  }
  r.per_class.resize(c);
  for (std::size_t i = 0; i < c; ++i) {
    std::size_t n = 0;
    for (auto v : r.confusion[i]) n += v;
    r.per_class[i] = n == 0 ? 0.0 : 100.0 * static_cast<double>(r.confusion[i][i]) / static_cast<double>(n);
  }
  r.overall = 100.0 * static_cast<double>(r.correct()) / static_cast<double>(r.total());
  for (const auto& [f, s] : by_fold) r.folds.push_back(s);
  return r;
}

std::string EvaluationReport::to_csv() const {
  std::string out = "class,accuracy\n";
  for (std::size_t i = 0; i < classes.size(); ++i) out += classes[i] + ',' + fixed1(per_class[i]) + '\n';
  out += "Overall," + fixed1(overall) + '\n';
  return out;
}

std::string EvaluationReport::to_text() const {
  std::size_t w = 8;
  for (const auto& c : classes) w = std::max(w, c.size() + 2);
  std::string out = "System: " + (system.empty() ? std::string("-") : system) + "\n";
  out += pad("Class", w) + rpad("Acc (%)", 8) + '\n';
  for (std::size_t i = 0; i < classes.size(); ++i) out += pad(classes[i], w) + rpad(fixed1(per_class[i]), 8) + '\n';
  out += pad("Overall", w) + rpad(fixed1(overall), 8) + '\n';
  if (!folds.empty()) {
    out += "Folds:";
    for (const auto& f : folds) out += " " + std::to_string(f.fold) + "=" + fixed1(f.accuracy());
    out += '\n';
  }
  return out;
}

nlohmann::json EvaluationReport::to_json() const {
  nlohmann::json folds_j = nlohmann::json::array();
  for (const auto& f : folds) folds_j.push_back({{"fold", f.fold}, {"correct", f.correct}, {"total", f.total}});
  return {{"system", system}, {"classes", classes}, {"confusion", confusion}, {"per_class", per_class},
          {"overall", overall}, {"folds", folds_j}};
}

EvaluationReport EvaluationReport::from_json(const nlohmann::json& j) {
  EvaluationReport r;
  try {
    r.system = j.at("system").get<std::string>();
    r.classes = j.at("classes").get<std::vector<std::string>>();
    r.confusion = j.at("confusion").get<std::vector<std::vector<std::size_t>>>();
    r.per_class = j.at("per_class").get<std::vector<double>>();
    r.overall = j.at("overall").get<double>();
    for (const auto& f : j.at("folds")) {
      r.folds.push_back({f.at("fold").get<int>(), f.at("correct").get<std::size_t>(), f.at("total").get<std::size_t>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("bad report document: ") + e.what());
  }
  if (r.confusion.size() != r.classes.size() || r.per_class.size() != r.classes.size()) {
    throw Error("report confusion matrix does not match its class list");
  }
  for (const auto& row : r.confusion)
    if (row.size() != r.classes.size()) throw Error("report confusion matrix is not square");
  if (r.total() > 0) {
    const double recomputed = 100.0 * static_cast<double>(r.correct()) / static_cast<double>(r.total());
    if (std::abs(recomputed - r.overall) > 1e-9) throw Error("report overall accuracy disagrees with its confusion matrix");
  }
  return r;
}

std::string compare_text(const std::vector<EvaluationReport>& reports) {
  if (reports.empty()) return {};
  const auto& classes = reports.front().classes;
  for (const auto& r : reports)
    if (r.classes != classes) throw Error("reports disagree on the class list");
  std::size_t w = 8;
  for (const auto& c : classes) w = std::max(w, c.size() + 2);
  std::vector<std::size_t> cw;
  std::string out = pad("Class", w);
  for (const auto& r : reports) {
    cw.push_back(std::max<std::size_t>(8, r.system.size() + 2));
    out += rpad(r.system, cw.back());
  }
  out += '\n';
  for (std::size_t i = 0; i < classes.size(); ++i) {
    out += pad(classes[i], w);
    for (std::size_t k = 0; k < reports.size(); ++k) out += rpad(fixed1(reports[k].per_class[i]), cw[k]);
    out += '\n';
  }
  out += pad("Overall", w);
  for (std::size_t k = 0; k < reports.size(); ++k) out += rpad(fixed1(reports[k].overall), cw[k]);
  return out + '\n';
}

}  // namespace lte::pipeline
