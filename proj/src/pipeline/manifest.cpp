// Copyright 2026 The lte-scene Authors
// SPDX-License-Identifier: Apache-2.0

#include "lte/pipeline/manifest.hpp"

#include <algorithm>
#include <charconv>
#include <set>
#include <sstream>

#include "lte/pipeline/tensor.hpp"

namespace lte::pipeline {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// Comma-separated fields; double quotes protect commas, "" is a literal quote.
std::vector<std::string> split_csv_line(std::string_view line, std::size_t line_no) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw Error("manifest line " + std::to_string(line_no) + ": unterminated quote");
  out.push_back(trim(cur));
  return out;
}

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

}  // namespace

int DatasetManifest::n_folds() const {
  int n = 0;
  for (const auto& e : entries) n = std::max(n, e.fold);
  return n;
}

Label DatasetManifest::label_index(std::string_view name) const {
  const auto it = std::lower_bound(classes.begin(), classes.end(), name);
  if (it == classes.end() || *it != name) throw Error("unknown class label: " + std::string(name));
  return static_cast<Label>(it - classes.begin());
}

std::filesystem::path DatasetManifest::resolve(const ManifestEntry& e) const {
  return e.path.is_absolute() ? e.path : root / e.path;
}

std::vector<ManifestEntry> DatasetManifest::active() const {
  std::vector<ManifestEntry> out;
  for (const auto& e : entries)
    if (!e.excluded) out.push_back(e);
  return out;
}

DatasetManifest parse_manifest(std::string_view csv, const std::filesystem::path& root, bool check_files) {
  DatasetManifest m;
  m.root = root;
  std::istringstream in{std::string(csv)};
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::set<std::string> ids;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty() || trim(line).front() == '#') continue;
    const auto fields = split_csv_line(line, line_no);
    if (!header_seen) {
      header_seen = true;
      const bool five = fields.size() == 5 && fields[4] == "exclude";
      if (fields.size() < 4 || fields[0] != "id" || fields[1] != "path" || fields[2] != "label" ||
          fields[3] != "fold" || (fields.size() > 4 && !five)) {
        throw Error("manifest header must be id,path,label,fold[,exclude]");
      }
      continue;
    }
    if (fields.size() != 4 && fields.size() != 5) {
      throw Error("manifest line " + std::to_string(line_no) + ": expected 4 or 5 fields, got " +
                  std::to_string(fields.size()));
    }
    ManifestEntry e;
    e.id = fields[0];
    e.path = fields[1];
    e.label = fields[2];
    if (e.id.empty() || fields[1].empty() || e.label.empty()) {
      throw Error("manifest line " + std::to_string(line_no) + ": empty id, path or label");
    }
    const auto& fs = fields[3];
    const auto [ptr, ec] = std::from_chars(fs.data(), fs.data() + fs.size(), e.fold);
    if (ec != std::errc() || ptr != fs.data() + fs.size() || e.fold < 1) {
      throw Error("manifest line " + std::to_string(line_no) + " (id " + e.id + "): unknown fold '" + fs + "'");
    }
    if (fields.size() == 5) {
      if (fields[4] == "1") e.excluded = true;
      else if (!fields[4].empty() && fields[4] != "0") throw Error("manifest line " + std::to_string(line_no) + ": exclude must be 0 or 1");
    }
    if (!ids.insert(e.id).second) throw Error("duplicate recording id: " + e.id);
    m.entries.push_back(std::move(e));
  }
  if (m.entries.empty()) throw Error("manifest has no recordings");

  std::set<int> folds;
  std::set<std::string> classes;
  for (const auto& e : m.entries) {
    folds.insert(e.fold);
    if (!e.excluded) classes.insert(e.label);
  }
  for (int f = 1; f <= *folds.rbegin(); ++f) {
    if (!folds.contains(f)) throw Error("fold ids must be contiguous from 1; fold " + std::to_string(f) + " is missing");
  }
  m.classes.assign(classes.begin(), classes.end());

  if (check_files) {
    std::vector<std::string> missing;
    for (const auto& e : m.entries) {
      if (!e.excluded && !std::filesystem::is_regular_file(m.resolve(e))) missing.push_back(e.id);
    }
    if (!missing.empty()) {
      std::string msg = "missing audio files for " + std::to_string(missing.size()) + " recording(s):";
      for (std::size_t i = 0; i < missing.size() && i < 20; ++i) msg += " " + missing[i];
      if (missing.size() > 20) msg += " ...";
      throw Error(msg);
    }
  }
  return m;
}

DatasetManifest ingest_dataset(const std::filesystem::path& manifest_path, bool check_files) {
  const std::string text = read_file(manifest_path);
  try {
    return parse_manifest(text, manifest_path.parent_path(), check_files);
  } catch (const Error& e) {
    throw Error(manifest_path.string() + ": " + e.what());
  }
}

void apply_exclusions(DatasetManifest& manifest, const std::filesystem::path& list) {
  std::istringstream in(read_file(list));
  std::string line;
  while (std::getline(in, line)) {
    const std::string id = trim(line.substr(0, line.find('#')));
    if (id.empty()) continue;
    auto it = std::find_if(manifest.entries.begin(), manifest.entries.end(), [&](const auto& e) { return e.id == id; });
    if (it == manifest.entries.end()) throw Error("exclusion list names unknown recording id: " + id);
    it->excluded = true;
  }
  std::set<std::string> classes;
  for (const auto& e : manifest.entries)
    if (!e.excluded) classes.insert(e.label);
  manifest.classes.assign(classes.begin(), classes.end());
}

std::string manifest_csv(const DatasetManifest& manifest) {
  std::string out = "id,path,label,fold,exclude\n";
  for (const auto& e : manifest.entries) {
    out += quote(e.id) + ',' + quote(e.path.generic_string()) + ',' + quote(e.label) + ',' + std::to_string(e.fold) +
           ',' + (e.excluded ? "1" : "0") + '\n';
  }
  return out;
}

}  // namespace lte::pipeline
