// Copyright 2026 The lte-scene Authors
// SPDX-License-Identifier: Apache-2.0

#include "lte/labeltree/labeltree.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "json.hpp"

namespace lte::labeltree {
namespace {

std::string label_set_text(const std::vector<Label>& labels) {
  std::ostringstream os;
  os << '{';
  for (std::size_t i = 0; i < labels.size(); ++i) os << (i ? "," : "") << labels[i];
  os << '}';
  return os.str();
}

std::size_t index_of(const std::vector<Label>& labels, Label l) {
  const auto it = std::find(labels.begin(), labels.end(), l);
  if (it == labels.end()) throw Error("label " + std::to_string(l) + " not in label set");
  return static_cast<std::size_t>(it - labels.begin());
}

// side[i] == true puts labels[i] on the right.
double objective_of(const Matrix& abar, const std::vector<bool>& side) {
  double e = 0.0;
  for (std::size_t i = 0; i < side.size(); ++i) {
    for (std::size_t j = 0; j < side.size(); ++j) {
      if (side[i] == side[j]) e += abar(i, j);
    }
  }
  return e;
}

// Left part always holds the smallest label.
Partition to_partition(const std::vector<Label>& labels, std::vector<bool> side) {
  const std::size_t smallest =
      static_cast<std::size_t>(std::min_element(labels.begin(), labels.end()) - labels.begin());
  if (side[smallest]) side.flip();
  Partition p;
  for (std::size_t i = 0; i < labels.size(); ++i) (side[i] ? p.right : p.left).push_back(labels[i]);
  std::sort(p.left.begin(), p.left.end());
  std::sort(p.right.begin(), p.right.end());
  return p;
}

struct Candidate {
  Partition part;
  double e = -1.0;
};

// Strictly better objective wins; exact ties go to the smaller left part.
void consider(Candidate& best, const Matrix& abar, const std::vector<Label>& labels, const std::vector<bool>& side) {
  const bool any_right = std::find(side.begin(), side.end(), true) != side.end();
  const bool any_left = std::find(side.begin(), side.end(), false) != side.end();
  if (!any_left || !any_right) return;
  const double e = objective_of(abar, side);
  if (e > best.e) {
    best = {to_partition(labels, side), e};
  } else if (e == best.e) {
    Partition p = to_partition(labels, side);
    if (p.left < best.part.left) best.part = std::move(p);
  }
}

Partition exact_partition(const Matrix& abar, const std::vector<Label>& labels) {
  const std::size_t n = labels.size();
  if (n > 24) throw Error("exact partition search limited to 24 labels");
  const std::size_t anchor =
      static_cast<std::size_t>(std::min_element(labels.begin(), labels.end()) - labels.begin());
  std::vector<std::size_t> others;
  for (std::size_t i = 0; i < n; ++i) {
    if (i != anchor) others.push_back(i);
  }
  Candidate best;
  std::vector<bool> side(n, false);
  const std::uint64_t count = candidate_count(n);
  for (std::uint64_t mask = 1; mask <= count; ++mask) {
    for (std::size_t b = 0; b < others.size(); ++b) side[others[b]] = ((mask >> b) & 1u) != 0;
    consider(best, abar, labels, side);
  }
  return best.part;
}

// Normalised spectral embedding (affinity = abar with zero diagonal). The
// partition is the best objective among every threshold cut of the
// degree-scaled second eigenvector and the 2-means split of the row-normalised
// two-dimensional embedding.
Partition spectral_partition(const Matrix& abar, const std::vector<Label>& labels) {
  const std::size_t n = labels.size();
  Eigen::MatrixXd w(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) w(i, j) = i == j ? 0.0 : std::max(0.0, abar(i, j));
  }
  Eigen::VectorXd inv_sqrt_deg(n);
  for (std::size_t i = 0; i < n; ++i) inv_sqrt_deg(i) = 1.0 / std::sqrt(std::max(w.row(i).sum(), 1e-12));
  const Eigen::MatrixXd m = inv_sqrt_deg.asDiagonal() * w * inv_sqrt_deg.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
  if (solver.info() != Eigen::Success) throw Error("spectral partition: eigen-decomposition failed");
  Eigen::MatrixXd u(n, 2);
  u.col(0) = solver.eigenvectors().col(n - 1);
  u.col(1) = solver.eigenvectors().col(n - 2);
  for (int c = 0; c < 2; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      if (std::abs(u(i, c)) > 1e-12) {
        if (u(i, c) < 0) u.col(c) *= -1.0;
        break;
      }
    }
  }

  Candidate best;

  // Sweep cuts.
  std::vector<double> fiedler(n);
  for (std::size_t i = 0; i < n; ++i) fiedler[i] = u(i, 1) * inv_sqrt_deg(i);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fiedler[a] < fiedler[b]; });
  std::vector<bool> side(n, true);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    side[order[k]] = false;
    consider(best, abar, labels, side);
  }

  // Ng-Jordan-Weiss 2-means on row-normalised rows.
  Eigen::MatrixXd rows = u;
  for (std::size_t i = 0; i < n; ++i) {
    const double norm = rows.row(i).norm();
    if (norm > 1e-12) rows.row(i) /= norm;
  }
  Eigen::RowVector2d c0 = rows.row(0);
  std::size_t far = 0;
  double far_d = -1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = (rows.row(i) - c0).squaredNorm();
    if (d > far_d) {
      far_d = d;
      far = i;
    }
  }
  Eigen::RowVector2d c1 = rows.row(far);
  std::vector<bool> assign(n, false);
  for (int iter = 0; iter < 100; ++iter) {
    std::vector<bool> next(n);
    for (std::size_t i = 0; i < n; ++i) next[i] = (rows.row(i) - c1).squaredNorm() < (rows.row(i) - c0).squaredNorm();
    if (iter > 0 && next == assign) break;
    assign = std::move(next);
    Eigen::RowVector2d s0 = Eigen::RowVector2d::Zero(), s1 = Eigen::RowVector2d::Zero();
    std::size_t n0 = 0, n1 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (assign[i]) {
        s1 += rows.row(i);
        ++n1;
      } else {
        s0 += rows.row(i);
        ++n0;
      }
    }
    if (n0 > 0) c0 = s0 / static_cast<double>(n0);
    if (n1 > 0) c1 = s1 / static_cast<double>(n1);
  }
  // Empty-cluster repair: move the row with the weakest within-cluster affinity.
  const std::size_t n_right = static_cast<std::size_t>(std::count(assign.begin(), assign.end(), true));
  if (n_right == 0 || n_right == n) {
    std::size_t weakest = 0;
    double weakest_aff = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      const double aff = w.row(i).sum();
      if (aff < weakest_aff) {
        weakest_aff = aff;
        weakest = i;
      }
    }
    assign[weakest] = !assign[weakest];
  }
  consider(best, abar, labels, assign);
  return best.part;
}

void check_square(const Matrix& a, std::size_t n) {
  if (a.rows() != a.cols()) throw Error("matrix is not square");
  if (a.rows() != n) throw Error("matrix size does not match label count");
}

}  // namespace

ConfusionMatrix confusion_from_classifier(std::span<const Sample> eval, const std::vector<Label>& labels,
                                          const ProbaFn& proba) {
  const std::size_t n = labels.size();
  ConfusionMatrix out{Matrix(n, n), labels};
  std::vector<std::size_t> counts(n, 0);
  for (const Sample& s : eval) {
    const std::size_t i = index_of(labels, s.label);
    const auto p = proba(s.x);
    if (p.size() != n) throw Error("classifier output size does not match label count");
    for (std::size_t j = 0; j < n; ++j) out.a(i, j) += p[j];
    ++counts[i];
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (counts[i] == 0) throw Error("no evaluation samples for label " + std::to_string(labels[i]));
    for (std::size_t j = 0; j < n; ++j) out.a(i, j) /= static_cast<double>(counts[i]);
  }
  return out;
}

ConfusionMatrix confusion_matrix(std::span<const Sample> samples, const std::vector<Label>& labels,
                                 const forest::ForestConfig& cfg, std::uint64_t seed) {
  if (labels.size() < 2) throw Error("confusion matrix needs at least two labels");
  // Per-class sample positions, in data order.
  std::vector<std::vector<std::size_t>> by_class(labels.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto it = std::find(labels.begin(), labels.end(), samples[i].label);
    if (it != labels.end()) by_class[static_cast<std::size_t>(it - labels.begin())].push_back(i);
  }
  std::vector<bool> in_train(samples.size(), false);
  for (const auto& members : by_class) {
    if (members.size() < 2) throw Error("insufficient samples for stratified halving");
    // Seeded by the class's first sample position so relabelling does not change the split.
    std::vector<std::size_t> shuffled = members;
    std::mt19937_64 rng(derive_seed(seed, "labeltree.halve", members.front()));
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    for (std::size_t k = 0; k < shuffled.size() / 2; ++k) in_train[shuffled[k]] = true;
  }

  // Data order, so the forest's bootstrap draws do not depend on label names.
  std::vector<bool> member(samples.size(), false);
  for (const auto& members : by_class) {
    for (std::size_t i : members) member[i] = true;
  }
  std::vector<Sample> train, eval;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (member[i]) (in_train[i] ? train : eval).push_back(samples[i]);
  }

  forest::ForestConfig fcfg = cfg;
  fcfg.rng_seed = derive_seed(seed, "labeltree.forest");
  const forest::Forest model = forest::train_forest(train, fcfg);

  // The forest orders classes ascending; map back to `labels` order.
  std::vector<std::size_t> slot(labels.size());
  for (std::size_t j = 0; j < labels.size(); ++j) slot[j] = model.class_index(labels[j]);
  return confusion_from_classifier(eval, labels, [&](std::span<const double> x) {
    const auto p = model.predict_proba(x);
    std::vector<double> out(labels.size());
    for (std::size_t j = 0; j < labels.size(); ++j) out[j] = p[slot[j]];
    return out;
  });
}

Matrix symmetrize(const Matrix& a) {
  if (a.rows() != a.cols()) throw Error("symmetrize: matrix is not square");
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = 0.5 * (a(i, j) + a(j, i));
  }
  return out;
}

double partition_objective(const Matrix& abar, const std::vector<Label>& labels, const Partition& part) {
  check_square(abar, labels.size());
  if (part.left.empty() || part.right.empty()) throw Error("partition has an empty part");
  if (part.left.size() + part.right.size() != labels.size()) throw Error("partition does not cover the label set");
  std::vector<int> seen(labels.size(), 0);
  std::vector<bool> side(labels.size(), false);
  for (Label l : part.left) ++seen[index_of(labels, l)];
  for (Label l : part.right) {
    const std::size_t i = index_of(labels, l);
    ++seen[i];
    side[i] = true;
  }
  for (int s : seen) {
    if (s != 1) throw Error("partition parts overlap");
  }
  return objective_of(abar, side);
}

std::string_view mode_name(PartitionMode mode) {
  switch (mode) {
    case PartitionMode::exact: return "exact";
    case PartitionMode::spectral: return "spectral";
    case PartitionMode::automatic: return "auto";
  }
  return "?";
}

PartitionMode parse_mode(std::string_view name) {
  if (name == "exact") return PartitionMode::exact;
  if (name == "spectral") return PartitionMode::spectral;
  if (name == "auto" || name == "automatic") return PartitionMode::automatic;
  throw Error("unknown partition mode: " + std::string(name));
}

std::uint64_t candidate_count(std::size_t n) {
  if (n < 2) return 0;
  return (std::uint64_t{1} << (n - 1)) - 1;
}

Partition best_partition(const Matrix& abar, const std::vector<Label>& labels, PartitionMode mode) {
  if (labels.size() < 2) throw Error("partition needs at least two labels");
  check_square(abar, labels.size());
  if (labels.size() == 2) return to_partition(labels, {false, true});
  const bool exact = mode == PartitionMode::exact || (mode == PartitionMode::automatic && labels.size() <= kExactLimit);
  return exact ? exact_partition(abar, labels) : spectral_partition(abar, labels);
}

LabelTree::LabelTree(std::vector<Node> nodes) : nodes_(std::move(nodes)) {
  validate();
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!nodes_[i].is_leaf()) split_order_.push_back(static_cast<int>(i));
  }
}

void LabelTree::validate() const {
  if (nodes_.empty()) throw Error("label tree has no nodes");
  std::size_t leaves = 0, splits = 0;
  std::vector<int> visits(nodes_.size(), 0);
  // Pre-order walk from the root must visit node ids 0, 1, 2, ... in sequence.
  std::vector<int> stack{0};
  int expected = 0;
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    if (id != expected++) throw Error("label tree nodes are not stored in pre-order");
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    ++visits[static_cast<std::size_t>(id)];
    if (n.labels.empty()) throw Error("label tree node with empty label set");
    if (n.is_leaf()) {
      if (n.labels.size() != 1 || n.right >= 0) throw Error("label tree leaf must carry exactly one label");
      ++leaves;
      continue;
    }
    ++splits;
    if (n.right < 0 || static_cast<std::size_t>(n.left) >= nodes_.size() ||
        static_cast<std::size_t>(n.right) >= nodes_.size()) {
      throw Error("label tree split node with bad children");
    }
    std::vector<Label> merged = nodes_[static_cast<std::size_t>(n.left)].labels;
    const auto& r = nodes_[static_cast<std::size_t>(n.right)].labels;
    merged.insert(merged.end(), r.begin(), r.end());
    std::sort(merged.begin(), merged.end());
    std::vector<Label> parent = n.labels;
    std::sort(parent.begin(), parent.end());
    if (merged != parent || std::adjacent_find(merged.begin(), merged.end()) != merged.end()) {
      throw Error("label tree children do not partition " + label_set_text(n.labels));
    }
    stack.push_back(n.right);
    stack.push_back(n.left);
  }
  if (static_cast<std::size_t>(expected) != nodes_.size()) throw Error("label tree has unreachable nodes");
  if (splits + 1 != leaves) throw Error("label tree must have C-1 split nodes");
}

std::string LabelTree::to_text() const {
  nlohmann::json doc;
  doc["format"] = "lte-label-tree";
  doc["version"] = 1;
  doc["classes"] = classes();
  auto& arr = doc["nodes"] = nlohmann::json::array();
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    nlohmann::json j{{"id", i}, {"labels", n.labels}};
    if (!n.is_leaf()) {
      j["left"] = n.left;
      j["right"] = n.right;
      j["objective"] = n.objective;
    }
    arr.push_back(std::move(j));
  }
  nlohmann::json splits = nlohmann::json::array();
  for (int id : split_order_) splits.push_back(id);
  doc["split_order"] = splits;
  return doc.dump(2);
}

LabelTree LabelTree::from_text(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("label tree document is not valid JSON: ") + e.what());
  }
  if (doc.value("format", "") != "lte-label-tree") throw Error("not a label tree document");
  std::vector<Node> nodes;
  for (const auto& j : doc.at("nodes")) {
    Node n;
    n.labels = j.at("labels").get<std::vector<Label>>();
    n.left = j.value("left", -1);
    n.right = j.value("right", -1);
    n.objective = j.value("objective", 0.0);
    nodes.push_back(std::move(n));
  }
  return LabelTree(std::move(nodes));
}

bool operator==(const LabelTree& a, const LabelTree& b) {
  if (a.nodes_.size() != b.nodes_.size()) return false;
  for (std::size_t i = 0; i < a.nodes_.size(); ++i) {
    const auto& x = a.nodes_[i];
    const auto& y = b.nodes_[i];
    if (x.labels != y.labels || x.left != y.left || x.right != y.right) return false;
  }
  return true;
}

LabelTree build_label_tree(std::span<const Sample> samples, const TreeBuildOptions& opts) {
  std::vector<Label> classes;
  for (const Sample& s : samples) classes.push_back(s.label);
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  if (classes.size() < 2) throw Error("label tree needs at least two classes");

  std::vector<LabelTree::Node> nodes;
  // Recursive pre-order growth.
  auto grow = [&](auto&& self, const std::vector<Label>& labels) -> int {
    const int id = static_cast<int>(nodes.size());
    nodes.push_back(LabelTree::Node{labels, -1, -1, 0.0});
    if (labels.size() == 1) return id;

    Partition part;
    double objective = 0.0;
    try {
      // Node seed depends only on which samples the node sees, not on label names.
      std::size_t first = samples.size(), count = 0;
      for (std::size_t i = 0; i < samples.size(); ++i) {
        if (std::binary_search(labels.begin(), labels.end(), samples[i].label)) {
          first = std::min(first, i);
          ++count;
        }
      }
      const std::uint64_t node_seed = derive_seed(opts.seed, "labeltree.node", (first << 24) ^ count);
      if (labels.size() == 2) {
        part = Partition{{labels[0]}, {labels[1]}};
      } else {
        const ConfusionMatrix cm = confusion_matrix(samples, labels, opts.forest, node_seed);
        const Matrix abar = symmetrize(cm.a);
        part = best_partition(abar, labels, opts.mode);
        objective = partition_objective(abar, labels, part);
      }
    } catch (const Error& e) {
      throw Error("label tree node " + label_set_text(labels) + ": " + e.what());
    }
    const int left = self(self, part.left);
    const int right = self(self, part.right);
    nodes[static_cast<std::size_t>(id)].left = left;
    nodes[static_cast<std::size_t>(id)].right = right;
    nodes[static_cast<std::size_t>(id)].objective = objective;
    return id;
  };
  grow(grow, classes);
  return LabelTree(std::move(nodes));
}

}  // namespace lte::labeltree
