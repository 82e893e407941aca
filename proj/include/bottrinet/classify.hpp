#pragma once

// Random forest over account embeddings, plus a logistic-regression model
// used as a cross-check classifier.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include <json.hpp>

#include "bottrinet/common.hpp"

namespace bottrinet {

struct ForestConfig {
  std::size_t n_trees = 100;
  std::size_t max_depth = 12;
  std::size_t min_samples_leaf = 2;
  std::size_t features_per_split = 0;  // 0: ceil(sqrt(dim))
  bool bootstrap = true;
  std::uint64_t seed = 1;

  std::size_t resolved_features(std::size_t dim) const {
    if (features_per_split) return features_per_split;
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(dim)))));
  }

  void validate(std::size_t dim) const {
    if (n_trees < 1) throw InputError("forest: n_trees must be >= 1");
    if (max_depth < 1) throw InputError("forest: max_depth must be >= 1");
    if (min_samples_leaf < 1) throw InputError("forest: min_samples_leaf must be >= 1");
    const auto f = resolved_features(dim);
    if (f < 1 || f > dim) throw InputError("forest: features_per_split must lie in [1, dim]");
  }
};

inline void to_json(nlohmann::json& j, const ForestConfig& c) {
  j = nlohmann::json{{"n_trees", c.n_trees},
                     {"max_depth", c.max_depth},
                     {"min_samples_leaf", c.min_samples_leaf},
                     {"features_per_split", c.features_per_split},
                     {"bootstrap", c.bootstrap},
                     {"seed", c.seed}};
}

inline void from_json(const nlohmann::json& j, ForestConfig& c) {
  j.at("n_trees").get_to(c.n_trees);
  j.at("max_depth").get_to(c.max_depth);
  j.at("min_samples_leaf").get_to(c.min_samples_leaf);
  j.at("features_per_split").get_to(c.features_per_split);
  j.at("bootstrap").get_to(c.bootstrap);
  j.at("seed").get_to(c.seed);
}

/// Gini impurity of a two-class node: sum_k p_k (1 - p_k).
inline double gini(std::size_t n0, std::size_t n1) {
  const std::size_t n = n0 + n1;
  if (n == 0) return 0.0;
  const double p0 = static_cast<double>(n0) / static_cast<double>(n);
  const double p1 = static_cast<double>(n1) / static_cast<double>(n);
  return p0 * (1.0 - p0) + p1 * (1.0 - p1);
}

/// Node array; leaves have feature == -1. Samples with x[feature] <= threshold go left.
struct DecisionTree {
  std::vector<int> feature;
  std::vector<double> threshold;
  std::vector<int> left;
  std::vector<int> right;
  std::vector<Label> leaf;

  std::size_t node_count() const { return feature.size(); }

  Label predict(std::span<const float> x) const {
    std::size_t n = 0;
    while (feature[n] >= 0)
      n = static_cast<std::size_t>(static_cast<double>(x[static_cast<std::size_t>(feature[n])]) <= threshold[n] ? left[n]
                                                                                                             : right[n]);
    return leaf[n];
  }

  std::size_t add_node() {
    feature.push_back(-1);
    threshold.push_back(0.0);
    left.push_back(-1);
    right.push_back(-1);
    leaf.push_back(Label::Genuine);
    return feature.size() - 1;
  }

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;
};

namespace detail {

struct TreeBuilder {
  std::span<const Vector> x;
  std::span<const Label> y;
  std::size_t dim;
  std::size_t features;
  const ForestConfig& cfg;
  Rng& rng;
  DecisionTree tree;

  struct Split {
    bool found = false;
    std::size_t feature = 0;
    double threshold = 0.0;
    double impurity = 0.0;
  };

  Split best_split(const std::vector<std::size_t>& idx) {
    // Sample candidate features without replacement, then scan them in index order.
    std::vector<std::size_t> feats(dim);
    std::iota(feats.begin(), feats.end(), 0);
    for (std::size_t i = 0; i < features; ++i) std::swap(feats[i], feats[i + rng.uniform_index(dim - i)]);
    feats.resize(features);
    std::sort(feats.begin(), feats.end());

    std::size_t total1 = 0;
    for (auto i : idx) total1 += to_int(y[i]);
    const std::size_t n = idx.size();

    Split best;
    std::vector<std::pair<float, int>> column(n);
    for (std::size_t f : feats) {
      for (std::size_t k = 0; k < n; ++k) column[k] = {x[idx[k]][f], to_int(y[idx[k]])};
      std::sort(column.begin(), column.end());
      std::size_t left1 = 0;
      for (std::size_t k = 0; k + 1 < n; ++k) {
        left1 += static_cast<std::size_t>(column[k].second);
        if (column[k].first == column[k + 1].first) continue;
        const std::size_t nl = k + 1;
        const std::size_t nr = n - nl;
        if (nl < cfg.min_samples_leaf || nr < cfg.min_samples_leaf) continue;
        const double imp = (static_cast<double>(nl) * gini(nl - left1, left1) +
                            static_cast<double>(nr) * gini(nr - (total1 - left1), total1 - left1)) /
                           static_cast<double>(n);
        const double thr = (static_cast<double>(column[k].first) + static_cast<double>(column[k + 1].first)) / 2.0;
        // Strict improvement only: earlier feature, then lower threshold, wins ties.
        if (!best.found || imp < best.impurity) best = {true, f, thr, imp};
      }
    }
    return best;
  }

  std::size_t grow(std::vector<std::size_t> idx, std::size_t depth) {
    const std::size_t node = tree.add_node();
    std::size_t n1 = 0;
    for (auto i : idx) n1 += to_int(y[i]);
    const std::size_t n0 = idx.size() - n1;
    tree.leaf[node] = n1 > n0 ? Label::Bot : Label::Genuine;

    if (depth >= cfg.max_depth || n0 == 0 || n1 == 0 || idx.size() < 2 * cfg.min_samples_leaf) return node;
    const Split s = best_split(idx);
    if (!s.found) return node;

    std::vector<std::size_t> li, ri;
    for (auto i : idx) (static_cast<double>(x[i][s.feature]) <= s.threshold ? li : ri).push_back(i);
    idx.clear();
    idx.shrink_to_fit();

    tree.feature[node] = static_cast<int>(s.feature);
    tree.threshold[node] = s.threshold;
    const auto l = grow(std::move(li), depth + 1);
    tree.left[node] = static_cast<int>(l);
    const auto r = grow(std::move(ri), depth + 1);
    tree.right[node] = static_cast<int>(r);
    return node;
  }
};

inline void check_training_set(std::span<const Vector> x, std::span<const Label> y, std::size_t min_per_class,
                               const char* who) {
  if (x.size() != y.size()) throw InputError(std::string(who) + ": features/labels length mismatch");
  if (x.empty()) throw InputError(std::string(who) + ": empty training set");
  const std::size_t dim = x.front().size();
  std::size_t counts[2] = {0, 0};
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i].size() != dim) throw InputError(std::string(who) + ": feature vectors differ in length");
    ++counts[to_int(y[i])];
  }
  if (counts[0] == 0 || counts[1] == 0) throw InputError(std::string(who) + ": training data contains a single class");
  if (counts[0] < min_per_class || counts[1] < min_per_class)
    throw InputError(std::string(who) + ": need at least " + std::to_string(min_per_class) + " samples per class");
}

}  // namespace detail

/// Grows one tree on the given sample indices (duplicates allowed).
inline DecisionTree train_tree(std::span<const Vector> x, std::span<const Label> y,
                               const std::vector<std::size_t>& sample, const ForestConfig& cfg, Rng& rng) {
  const std::size_t dim = x.front().size();
  detail::TreeBuilder b{x, y, dim, cfg.resolved_features(dim), cfg, rng, {}};
  b.grow(sample, 0);
  return std::move(b.tree);
}

class ForestModel {
 public:
  static constexpr int kFormatVersion = 1;

  ForestModel() = default;
  ForestModel(std::vector<DecisionTree> trees, ForestConfig cfg, std::size_t dim)
      : trees_(std::move(trees)), config_(cfg), dim_(dim) {}

  const std::vector<DecisionTree>& trees() const { return trees_; }
  const ForestConfig& config() const { return config_; }
  std::size_t dim() const { return dim_; }

  std::size_t votes_for_bot(std::span<const float> x) const {
    if (x.size() != dim_) throw Error("forest: input length " + std::to_string(x.size()) + " != dim " + std::to_string(dim_));
    std::size_t votes = 0;
    for (const auto& t : trees_) votes += to_int(t.predict(x));
    return votes;
  }

  /// Majority vote; a tied vote goes to Genuine.
  Label predict(std::span<const float> x) const {
    return 2 * votes_for_bot(x) > trees_.size() ? Label::Bot : Label::Genuine;
  }

  nlohmann::json to_json() const {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : trees_) {
      std::vector<int> leaf(t.leaf.size());
      std::transform(t.leaf.begin(), t.leaf.end(), leaf.begin(), to_int);
      trees.push_back({{"feature", t.feature}, {"threshold", t.threshold}, {"left", t.left}, {"right", t.right},
                       {"leaf", leaf}});
    }
    return {{"format_version", kFormatVersion}, {"dim", dim_}, {"config", config_}, {"trees", std::move(trees)}};
  }

  static ForestModel from_json(const nlohmann::json& j) {
    try {
      if (j.at("format_version").get<int>() != kFormatVersion) throw InputError("forest: unsupported format_version");
      ForestModel m;
      m.dim_ = j.at("dim").get<std::size_t>();
      m.config_ = j.at("config").get<ForestConfig>();
      for (const auto& jt : j.at("trees")) {
        DecisionTree t;
        t.feature = jt.at("feature").get<std::vector<int>>();
        t.threshold = jt.at("threshold").get<std::vector<double>>();
        t.left = jt.at("left").get<std::vector<int>>();
        t.right = jt.at("right").get<std::vector<int>>();
        for (int l : jt.at("leaf").get<std::vector<int>>()) {
          if (l != 0 && l != 1) throw InputError("forest: leaf class out of range");
          t.leaf.push_back(l == 1 ? Label::Bot : Label::Genuine);
        }
        const std::size_t n = t.feature.size();
        if (n == 0 || t.threshold.size() != n || t.left.size() != n || t.right.size() != n || t.leaf.size() != n)
          throw InputError("forest: inconsistent node arrays");
        for (std::size_t k = 0; k < n; ++k) {
          if (t.feature[k] < 0) continue;
          if (static_cast<std::size_t>(t.feature[k]) >= m.dim_) throw InputError("forest: feature index out of range");
          // Children always follow their parent, so traversal terminates.
          for (int c : {t.left[k], t.right[k]})
            if (c <= static_cast<int>(k) || static_cast<std::size_t>(c) >= n) throw InputError("forest: bad child index");
        }
        m.trees_.push_back(std::move(t));
      }
      if (m.trees_.empty()) throw InputError("forest: no trees");
      return m;
    } catch (const nlohmann::json::exception& e) {
      throw InputError(std::string("forest: ") + e.what());
    }
  }

 private:
  std::vector<DecisionTree> trees_;
  ForestConfig config_;
  std::size_t dim_ = 0;
};

/// Tree t draws its bootstrap sample and feature subsets from seed + t, so
/// trees are independent of training order.
inline ForestModel train_forest(std::span<const Vector> x, std::span<const Label> y, const ForestConfig& cfg) {
  detail::check_training_set(x, y, 2, "forest");
  const std::size_t dim = x.front().size();
  cfg.validate(dim);

  std::vector<DecisionTree> trees;
  trees.reserve(cfg.n_trees);
  std::vector<std::size_t> sample(x.size());
  for (std::size_t t = 0; t < cfg.n_trees; ++t) {
    Rng rng(cfg.seed + t);
    if (cfg.bootstrap)
      for (auto& s : sample) s = rng.uniform_index(x.size());
    else
      std::iota(sample.begin(), sample.end(), 0);
    trees.push_back(train_tree(x, y, sample, cfg, rng));
  }
  return ForestModel(std::move(trees), cfg, dim);
}

// ---------------------------------------------------------------------------
// Logistic regression

struct LinearModel {
  std::vector<double> weights;
  double bias = 0.0;

  double probability(std::span<const float> x) const {
    if (x.size() != weights.size()) throw Error("logreg: input length mismatch");
    double z = bias;
    for (std::size_t i = 0; i < weights.size(); ++i) z += weights[i] * static_cast<double>(x[i]);
    return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
  }

  /// Bot iff probability > 0.5; zero parameters therefore predict Genuine.
  Label predict(std::span<const float> x) const { return probability(x) > 0.5 ? Label::Bot : Label::Genuine; }
};

/// Mean cross-entropy plus (l2/2)|w|^2; the bias is not regularized.
inline double logreg_loss(const LinearModel& m, std::span<const Vector> x, std::span<const Label> y, double l2) {
  double loss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double z = m.bias;
    for (std::size_t k = 0; k < m.weights.size(); ++k) z += m.weights[k] * static_cast<double>(x[i][k]);
    // log(1 + e^z) - t z
    const double sp = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    loss += sp - (y[i] == Label::Bot ? z : 0.0);
  }
  loss /= static_cast<double>(x.size());
  for (double w : m.weights) loss += 0.5 * l2 * w * w;
  return loss;
}

/// Gradient of logreg_loss; the result stores dw in `weights` and db in `bias`.
inline LinearModel logreg_gradient(const LinearModel& m, std::span<const Vector> x, std::span<const Label> y,
                                   double l2) {
  LinearModel g{std::vector<double>(m.weights.size(), 0.0), 0.0};
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = m.probability(x[i]) - (y[i] == Label::Bot ? 1.0 : 0.0);
    for (std::size_t k = 0; k < g.weights.size(); ++k) g.weights[k] += r * static_cast<double>(x[i][k]);
    g.bias += r;
  }
  const double n = static_cast<double>(x.size());
  for (std::size_t k = 0; k < g.weights.size(); ++k) g.weights[k] = g.weights[k] / n + l2 * m.weights[k];
  g.bias /= n;
  return g;
}

/// Per-sample SGD in a seeded shuffled order, starting from zero parameters.
inline LinearModel train_logreg(std::span<const Vector> x, std::span<const Label> y, double l2, std::size_t epochs,
                                double lr, std::uint64_t seed) {
  detail::check_training_set(x, y, 1, "logreg");
  const std::size_t dim = x.front().size();
  LinearModel m{std::vector<double>(dim, 0.0), 0.0};
  Rng rng(seed);
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t e = 0; e < epochs; ++e) {
    rng.shuffle(order.begin(), order.end());
    for (auto i : order) {
      const double r = m.probability(x[i]) - (y[i] == Label::Bot ? 1.0 : 0.0);
      for (std::size_t k = 0; k < dim; ++k) m.weights[k] -= lr * (r * static_cast<double>(x[i][k]) + l2 * m.weights[k]);
      m.bias -= lr * r;
    }
  }
  return m;
}

}  // namespace bottrinet
