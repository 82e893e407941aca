#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "bottrinet/common.hpp"
#include "bottrinet/pooling.hpp"

namespace bottrinet {

/// Positive class is Bot.
struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + fp + tn + fn; }

  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

inline ConfusionCounts confusion(std::span<const Label> predictions, std::span<const Label> labels) {
  if (predictions.size() != labels.size()) throw Error("confusion: predictions/labels length mismatch");
  if (predictions.empty()) throw Error("confusion: no instances");
  ConfusionCounts c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool pred = predictions[i] == Label::Bot;
    const bool truth = labels[i] == Label::Bot;
    if (pred && truth)
      ++c.tp;
    else if (pred)
      ++c.fp;
    else if (truth)
      ++c.fn;
    else
      ++c.tn;
  }
  return c;
}

// Degenerate ratios (0/0) are reported as 0.

inline double accuracy(const ConfusionCounts& c) {
  if (c.total() == 0) throw Error("accuracy: empty confusion counts");
  return static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}

inline double precision(const ConfusionCounts& c) {
  if (c.total() == 0) throw Error("precision: empty confusion counts");
  return c.tp + c.fp == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
}

inline double recall(const ConfusionCounts& c) {
  if (c.total() == 0) throw Error("recall: empty confusion counts");
  return c.tp + c.fn == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
}

inline double f1(const ConfusionCounts& c) {
  const double p = precision(c);
  const double r = recall(c);
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

/// Mean pairwise Euclidean distance between accounts of different classes
/// over the mean distance between accounts of the same class.
inline double class_distance_ratio(const std::vector<AccountEmbedding>& accounts) {
  double inter = 0.0, intra = 0.0;
  std::size_t n_inter = 0, n_intra = 0;
  for (std::size_t i = 0; i < accounts.size(); ++i)
    for (std::size_t j = i + 1; j < accounts.size(); ++j) {
      const auto& a = accounts[i].vector;
      const auto& b = accounts[j].vector;
      if (a.size() != b.size()) throw Error("class_distance_ratio: embeddings differ in length");
      double s = 0.0;
      for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = static_cast<double>(a[k]) - static_cast<double>(b[k]);
        s += d * d;
      }
      const double dist = std::sqrt(s);
      if (accounts[i].label == accounts[j].label) {
        intra += dist;
        ++n_intra;
      } else {
        inter += dist;
        ++n_inter;
      }
    }
  if (n_inter == 0 || n_intra == 0) throw Error("class_distance_ratio: need both classes and a repeated class");
  intra /= static_cast<double>(n_intra);
  inter /= static_cast<double>(n_inter);
  return intra == 0.0 ? std::numeric_limits<double>::infinity() : inter / intra;
}

}  // namespace bottrinet
