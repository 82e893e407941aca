#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "bottrinet/classify.hpp"

namespace bottrinet {
namespace {

struct Data {
  std::vector<Vector> x;
  std::vector<Label> y;
};

Data separable_1d(std::size_t n_per_class, std::uint64_t seed) {
  Rng rng(seed);
  Data d;
  for (std::size_t i = 0; i < n_per_class; ++i) {
    d.x.push_back({static_cast<float>(rng.uniform(0.1, 5.0))});
    d.y.push_back(Label::Bot);
    d.x.push_back({static_cast<float>(rng.uniform(-5.0, -0.1))});
    d.y.push_back(Label::Genuine);
  }
  return d;
}

Data xor_2d() {
  Data d;
  Rng rng(3);
  for (int i = 0; i < 40; ++i) {
    const int qx = i % 2, qy = (i / 2) % 2;
    d.x.push_back({static_cast<float>(qx + rng.uniform(-0.2, 0.2)), static_cast<float>(qy + rng.uniform(-0.2, 0.2))});
    d.y.push_back(qx != qy ? Label::Bot : Label::Genuine);
  }
  return d;
}

double training_accuracy(const ForestModel& m, const Data& d) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < d.x.size(); ++i) ok += m.predict(d.x[i]) == d.y[i];
  return static_cast<double>(ok) / static_cast<double>(d.x.size());
}

DecisionTree constant_tree(Label label) {
  DecisionTree t;
  t.add_node();
  t.leaf[0] = label;
  return t;
}

TEST(Gini, MatchesBruteForce) {
  Rng rng(1);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(50);
    std::vector<int> labels(n);
    for (auto& l : labels) l = static_cast<int>(rng.uniform_index(2));
    double brute = 0.0;
    for (int k = 0; k < 2; ++k) {
      const double p = static_cast<double>(std::count(labels.begin(), labels.end(), k)) / static_cast<double>(n);
      brute += p * (1 - p);
    }
    const auto n1 = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
    EXPECT_NEAR(gini(n - n1, n1), brute, 1e-15);
  }
  EXPECT_EQ(gini(0, 0), 0.0);
  EXPECT_EQ(gini(5, 0), 0.0);
  EXPECT_DOUBLE_EQ(gini(3, 3), 0.5);
}

TEST(Forest, SeparableDataIsLearned) {
  const auto d = separable_1d(30, 1);
  ForestConfig cfg;
  cfg.n_trees = 25;
  const auto m = train_forest(d.x, d.y, cfg);
  EXPECT_EQ(training_accuracy(m, d), 1.0);
  EXPECT_EQ(m.predict(Vector{3.f}), Label::Bot);
  EXPECT_EQ(m.predict(Vector{-3.f}), Label::Genuine);
}

TEST(Forest, DeterministicGivenSeed) {
  const auto d = xor_2d();
  ForestConfig cfg;
  cfg.n_trees = 15;
  cfg.seed = 8;
  const auto a = train_forest(d.x, d.y, cfg), b = train_forest(d.x, d.y, cfg);
  EXPECT_EQ(a.to_json(), b.to_json());
  Rng rng(2);
  for (int i = 0; i < 200; ++i) {
    const Vector q = {static_cast<float>(rng.uniform(-1, 2)), static_cast<float>(rng.uniform(-1, 2))};
    EXPECT_EQ(a.predict(q), b.predict(q));
  }
}

TEST(Forest, StumpCannotSolveXor) {
  const auto d = xor_2d();
  ForestConfig cfg;
  cfg.n_trees = 1;
  cfg.max_depth = 1;
  cfg.min_samples_leaf = 1;
  cfg.bootstrap = false;
  cfg.features_per_split = 2;
  const double acc = training_accuracy(train_forest(d.x, d.y, cfg), d);

  // Best accuracy over every axis-aligned stump and leaf labelling.
  double best = 0.0;
  for (std::size_t f = 0; f < 2; ++f) {
    std::vector<float> cuts;
    for (const auto& v : d.x) cuts.push_back(v[f]);
    cuts.push_back(-INFINITY);
    for (float c : cuts)
      for (int left = 0; left < 2; ++left)
        for (int right = 0; right < 2; ++right) {
          std::size_t ok = 0;
          for (std::size_t i = 0; i < d.x.size(); ++i) ok += (d.x[i][f] <= c ? left : right) == to_int(d.y[i]);
          best = std::max(best, static_cast<double>(ok) / static_cast<double>(d.x.size()));
        }
  }
  EXPECT_LE(best, 0.75);
  EXPECT_LE(acc, best);
  EXPECT_LE(acc, 0.75);
}

TEST(Forest, UnanimousVote) {
  const ForestModel m({constant_tree(Label::Bot), constant_tree(Label::Bot), constant_tree(Label::Bot)}, {}, 2);
  EXPECT_EQ(m.votes_for_bot(Vector{0, 0}), 3u);
  EXPECT_EQ(m.predict(Vector{0, 0}), Label::Bot);
}

TEST(Forest, TiedVoteGoesToGenuine) {
  const ForestModel m({constant_tree(Label::Bot), constant_tree(Label::Genuine)}, {}, 1);
  EXPECT_EQ(m.predict(Vector{0}), Label::Genuine);
}

TEST(Forest, DimensionMismatch) {
  const ForestModel m({constant_tree(Label::Bot)}, {}, 2);
  EXPECT_THROW(m.predict(Vector{0}), Error);
}

TEST(Forest, FullDepthMemorizesTrainingPoints) {
  Rng rng(4);
  Data d;
  for (int i = 0; i < 60; ++i) {
    d.x.push_back({static_cast<float>(rng.uniform(-1, 1)), static_cast<float>(rng.uniform(-1, 1))});
    d.y.push_back(rng.uniform_index(2) ? Label::Bot : Label::Genuine);
  }
  ForestConfig cfg;
  cfg.n_trees = 1;
  cfg.max_depth = 64;
  cfg.min_samples_leaf = 1;
  cfg.bootstrap = false;
  cfg.features_per_split = 2;
  EXPECT_EQ(training_accuracy(train_forest(d.x, d.y, cfg), d), 1.0);
}

TEST(Forest, PredictionInvariantToTreeOrder) {
  const auto d = xor_2d();
  ForestConfig cfg;
  cfg.n_trees = 9;
  const auto m = train_forest(d.x, d.y, cfg);
  auto trees = m.trees();
  std::reverse(trees.begin(), trees.end());
  Rng rng(5);
  rng.shuffle(trees.begin(), trees.end());
  const ForestModel shuffled(trees, cfg, 2);
  for (int i = 0; i < 300; ++i) {
    const Vector q = {static_cast<float>(rng.uniform(-1, 2)), static_cast<float>(rng.uniform(-1, 2))};
    EXPECT_EQ(m.predict(q), shuffled.predict(q));
  }
}

TEST(Forest, DuplicatedPointsKeepTrainingDecisions) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(seed);
    Data d;
    for (int i = 0; i < 30; ++i) {
      d.x.push_back({static_cast<float>(rng.uniform(-1, 1)), static_cast<float>(rng.uniform(-1, 1))});
      d.y.push_back(d.x.back()[0] + 0.3f * d.x.back()[1] > 0 ? Label::Bot : Label::Genuine);
    }
    Data dup = d;
    for (std::size_t i = 0; i < d.x.size(); i += 3) {
      dup.x.push_back(d.x[i]);
      dup.y.push_back(d.y[i]);
    }
    ForestConfig cfg;
    cfg.n_trees = 1;
    cfg.max_depth = 64;
    cfg.min_samples_leaf = 1;
    cfg.bootstrap = false;
    cfg.features_per_split = 2;
    const auto a = train_forest(d.x, d.y, cfg), b = train_forest(dup.x, dup.y, cfg);
    for (std::size_t i = 0; i < d.x.size(); ++i) EXPECT_EQ(a.predict(d.x[i]), b.predict(d.x[i]));
  }
}

TEST(Forest, JsonRoundTrip) {
  const auto d = xor_2d();
  ForestConfig cfg;
  cfg.n_trees = 5;
  const auto m = train_forest(d.x, d.y, cfg);
  const auto back = ForestModel::from_json(nlohmann::json::parse(m.to_json().dump()));
  EXPECT_EQ(back.trees(), m.trees());
  EXPECT_EQ(back.dim(), 2u);

  auto broken = m.to_json();
  broken["trees"][0]["left"][0] = 0;
  if (broken["trees"][0]["feature"][0] >= 0) {
    EXPECT_THROW(ForestModel::from_json(broken), InputError);
  }
  broken = m.to_json();
  broken["trees"][0]["leaf"][0] = 2;
  EXPECT_THROW(ForestModel::from_json(broken), InputError);
}

TEST(Forest, InputErrors) {
  Data one_class;
  one_class.x = {{1}, {2}, {3}};
  one_class.y = {Label::Bot, Label::Bot, Label::Bot};
  EXPECT_THROW(train_forest(one_class.x, one_class.y, {}), InputError);
  const auto d = separable_1d(5, 1);
  ForestConfig cfg;
  cfg.features_per_split = 3;
  EXPECT_THROW(train_forest(d.x, d.y, cfg), InputError);
}

TEST(LogReg, SeparableData) {
  const auto d = separable_1d(30, 2);
  const auto m = train_logreg(d.x, d.y, 0.0, 200, 0.1, 1);
  for (std::size_t i = 0; i < d.x.size(); ++i) EXPECT_EQ(m.predict(d.x[i]), d.y[i]);
}

TEST(LogReg, ZeroEpochsPredictGenuine) {
  const auto d = separable_1d(10, 2);
  const auto m = train_logreg(d.x, d.y, 0.0, 0, 0.1, 1);
  EXPECT_EQ(m.bias, 0.0);
  for (const auto& x : d.x) EXPECT_EQ(m.predict(x), Label::Genuine);
}

TEST(LogReg, GradientMatchesFiniteDifferences) {
  Rng rng(6);
  constexpr double h = 1e-5;
  for (int trial = 0; trial < 20; ++trial) {
    Data d;
    const std::size_t dim = 1 + rng.uniform_index(5);
    for (int i = 0; i < 12; ++i) {
      Vector v(dim);
      for (auto& x : v) x = static_cast<float>(rng.uniform(-2, 2));
      d.x.push_back(v);
      d.y.push_back(i % 2 ? Label::Bot : Label::Genuine);
    }
    LinearModel m{std::vector<double>(dim), rng.uniform(-1, 1)};
    for (auto& w : m.weights) w = rng.uniform(-1, 1);
    const double l2 = rng.uniform(0, 0.5);
    const auto g = logreg_gradient(m, d.x, d.y, l2);

    auto rel = [](double num, double ana) { return std::abs(num - ana) / std::max({std::abs(num), std::abs(ana), 1e-6}); };
    for (std::size_t k = 0; k < dim; ++k) {
      auto up = m, down = m;
      up.weights[k] += h;
      down.weights[k] -= h;
      const double num = (logreg_loss(up, d.x, d.y, l2) - logreg_loss(down, d.x, d.y, l2)) / (2 * h);
      EXPECT_LE(rel(num, g.weights[k]), 1e-5);
    }
    auto up = m, down = m;
    up.bias += h;
    down.bias -= h;
    const double num = (logreg_loss(up, d.x, d.y, l2) - logreg_loss(down, d.x, d.y, l2)) / (2 * h);
    EXPECT_LE(rel(num, g.bias), 1e-5);
  }
}

TEST(LogReg, SingleClassIsRejected) {
  const std::vector<Vector> x = {{1}, {2}};
  const std::vector<Label> y = {Label::Genuine, Label::Genuine};
  EXPECT_THROW(train_logreg(x, y, 0.0, 5, 0.1, 1), InputError);
}

}  // namespace
}  // namespace bottrinet
