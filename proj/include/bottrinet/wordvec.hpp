#pragma once

// Skip-gram word embeddings trained with negative sampling, plus the lookup
// table used by the pooling stage.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "bottrinet/common.hpp"
#include "bottrinet/corpus.hpp"

namespace bottrinet {

struct WordVecConfig {
  std::size_t dim = 100;
  std::size_t window = 5;
  std::size_t negatives = 5;
  std::size_t epochs = 5;
  double learning_rate = 0.025;  // decays linearly to min_learning_rate
  double min_learning_rate = 0.0001;
  std::uint64_t seed = 1;

  void validate() const {
    if (dim < 2) throw InputError("wordvec: dim must be >= 2");
    if (window < 1) throw InputError("wordvec: window must be >= 1");
    if (negatives < 1) throw InputError("wordvec: negatives must be >= 1");
    if (epochs < 1) throw InputError("wordvec: epochs must be >= 1");
    if (!(learning_rate > 0.0)) throw InputError("wordvec: learning rate must be positive");
    if (!(min_learning_rate >= 0.0)) throw InputError("wordvec: min learning rate must be non-negative");
  }
};

inline void to_json(nlohmann::json& j, const WordVecConfig& c) {
  j = nlohmann::json{{"dim", c.dim},
                     {"window", c.window},
                     {"negatives", c.negatives},
                     {"epochs", c.epochs},
                     {"learning_rate", c.learning_rate},
                     {"min_learning_rate", c.min_learning_rate},
                     {"seed", c.seed}};
}

inline void from_json(const nlohmann::json& j, WordVecConfig& c) {
  j.at("dim").get_to(c.dim);
  j.at("window").get_to(c.window);
  j.at("negatives").get_to(c.negatives);
  j.at("epochs").get_to(c.epochs);
  j.at("learning_rate").get_to(c.learning_rate);
  j.at("min_learning_rate").get_to(c.min_learning_rate);
  j.at("seed").get_to(c.seed);
}

/// Vocabulary-indexed word vectors plus the fallback used for unseen tokens.
class EmbeddingTable {
 public:
  static constexpr int kFormatVersion = 1;

  EmbeddingTable() = default;

  /// Takes row-major vectors (|words| x dim); the fallback becomes their mean.
  EmbeddingTable(std::vector<std::string> words, std::size_t dim, std::vector<float> vectors)
      : words_(std::move(words)), dim_(dim), vectors_(std::move(vectors)) {
    check_shape();
    std::vector<double> sum(dim_, 0.0);
    for (std::size_t r = 0; r < words_.size(); ++r)
      for (std::size_t k = 0; k < dim_; ++k) sum[k] += vectors_[r * dim_ + k];
    fallback_.resize(dim_);
    for (std::size_t k = 0; k < dim_; ++k)
      fallback_[k] = static_cast<float>(sum[k] / static_cast<double>(words_.size()));
    build_index();
  }

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }

  std::span<const float> row(std::size_t i) const { return {vectors_.data() + i * dim_, dim_}; }
  std::span<const float> fallback() const { return fallback_; }

  std::optional<std::size_t> find(std::string_view surface) const {
    auto it = index_.find(std::string(surface));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  /// Known surface -> its vector; anything else -> the fallback.
  std::span<const float> lookup(std::string_view surface) const {
    auto i = find(surface);
    return i ? row(*i) : fallback();
  }
  std::span<const float> lookup(const Token& t) const { return lookup(t.surface); }

  nlohmann::json to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t r = 0; r < size(); ++r) {
      auto v = row(r);
      rows.push_back(std::vector<float>(v.begin(), v.end()));
    }
    return {{"format_version", kFormatVersion},
            {"dim", dim_},
            {"vocab", words_},
            {"vectors", std::move(rows)},
            {"fallback", fallback_}};
  }

  static EmbeddingTable from_json(const nlohmann::json& j) {
    try {
      if (j.at("format_version").get<int>() != kFormatVersion)
        throw InputError("embedding table: unsupported format_version");
      EmbeddingTable t;
      t.dim_ = j.at("dim").get<std::size_t>();
      t.words_ = j.at("vocab").get<std::vector<std::string>>();
      const auto& rows = j.at("vectors");
      if (rows.size() != t.words_.size()) throw InputError("embedding table: vocab/vectors length mismatch");
      t.vectors_.reserve(t.words_.size() * t.dim_);
      for (const auto& r : rows) {
        auto v = r.get<std::vector<float>>();
        if (v.size() != t.dim_) throw InputError("embedding table: row length differs from dim");
        t.vectors_.insert(t.vectors_.end(), v.begin(), v.end());
      }
      t.fallback_ = j.at("fallback").get<std::vector<float>>();
      t.check_shape();
      t.build_index();
      return t;
    } catch (const nlohmann::json::exception& e) {
      throw InputError(std::string("embedding table: ") + e.what());
    }
  }

 private:
  void check_shape() const {
    if (dim_ < 1) throw InputError("embedding table: dim must be positive");
    if (words_.empty()) throw InputError("embedding table: empty vocabulary");
    if (vectors_.size() != words_.size() * dim_) throw InputError("embedding table: vector storage size mismatch");
    if (!fallback_.empty() && fallback_.size() != dim_) throw InputError("embedding table: fallback length mismatch");
    for (float x : vectors_)
      if (!std::isfinite(x)) throw InputError("embedding table: non-finite entry");
  }

  void build_index() {
    index_.clear();
    for (std::size_t i = 0; i < words_.size(); ++i)
      if (!index_.emplace(words_[i], i).second) throw InputError("embedding table: duplicate word '" + words_[i] + "'");
  }

  std::vector<std::string> words_;
  std::size_t dim_ = 0;
  std::vector<float> vectors_;
  std::vector<float> fallback_;
  std::unordered_map<std::string, std::size_t> index_;
};

// ---------------------------------------------------------------------------
// Negative-sampling objective for one (center, context) pair:
//   L = -log s(u_o . v_c) - sum_k log s(-u_k . v_c)
// with v_c the center's input vector, u_o the context's output vector and u_k
// the output vectors of the sampled negatives.

namespace detail {

// log(1 + e^z) without overflow.
template <std::floating_point T>
T softplus(T z) {
  return z > T(0) ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

template <std::floating_point T>
T sigmoid(T z) {
  if (z >= T(0)) return T(1) / (T(1) + std::exp(-z));
  const T e = std::exp(z);
  return e / (T(1) + e);
}

template <std::floating_point T>
T dot(std::span<const T> a, std::span<const T> b) {
  T s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace detail

template <std::floating_point T>
T skipgram_loss(std::span<const T> center, std::span<const T> context,
                const std::vector<std::span<const T>>& negatives) {
  T loss = detail::softplus(-detail::dot(context, center));
  for (const auto& u : negatives) loss += detail::softplus(detail::dot(u, center));
  return loss;
}

template <std::floating_point T>
struct SkipGramGradients {
  T loss = 0;
  std::vector<T> center;                  // dL/dv_c
  std::vector<T> context;                 // dL/du_o
  std::vector<std::vector<T>> negatives;  // dL/du_k
};

/// Fills `out` with the loss and its gradients. Buffers in `out` are reused.
template <std::floating_point T>
void skipgram_gradients(std::span<const T> center, std::span<const T> context,
                        const std::vector<std::span<const T>>& negatives, SkipGramGradients<T>& out) {
  const std::size_t dim = center.size();
  out.center.assign(dim, T(0));
  out.context.resize(dim);
  out.negatives.resize(negatives.size());

  const T s_o = detail::dot(context, center);
  out.loss = detail::softplus(-s_o);
  const T g_o = detail::sigmoid(s_o) - T(1);
  for (std::size_t i = 0; i < dim; ++i) {
    out.context[i] = g_o * center[i];
    out.center[i] += g_o * context[i];
  }
  for (std::size_t k = 0; k < negatives.size(); ++k) {
    const auto& u = negatives[k];
    const T s_k = detail::dot(u, center);
    out.loss += detail::softplus(s_k);
    const T g_k = detail::sigmoid(s_k);
    out.negatives[k].resize(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      out.negatives[k][i] = g_k * center[i];
      out.center[i] += g_k * u[i];
    }
  }
}

struct WordVecResult {
  EmbeddingTable table;
  std::vector<double> epoch_loss;  // mean pair loss per epoch
};

/// Trains skip-gram vectors over `corpus` (tokenized posts). Tokens missing
/// from `vocab` are skipped. Iteration order is fixed and every random draw
/// comes from cfg.seed, so identical inputs give identical tables.
/// `objective_trace`, when given, receives the full objective after each epoch
/// scored against one fixed draw of negatives.
inline WordVecResult train_word_embeddings(const std::vector<std::vector<Token>>& corpus, const Vocabulary& vocab,
                                           const WordVecConfig& cfg, std::vector<double>* objective_trace = nullptr) {
  cfg.validate();
  if (vocab.empty()) throw InputError("wordvec: empty vocabulary");

  std::vector<std::vector<std::size_t>> sentences;
  std::size_t total_tokens = 0;
  for (const auto& post : corpus) {
    std::vector<std::size_t> ids;
    for (const auto& t : post)
      if (auto i = vocab.find(t.surface)) ids.push_back(*i);
    total_tokens += ids.size();
    if (ids.size() >= 2) sentences.push_back(std::move(ids));
  }
  if (total_tokens == 0) throw InputError("wordvec: corpus has no in-vocabulary tokens");

  const std::size_t V = vocab.size();
  const std::size_t dim = cfg.dim;
  Rng rng(cfg.seed);

  std::vector<double> input(V * dim);
  std::vector<double> output(V * dim, 0.0);
  const double scale = 0.5 / static_cast<double>(dim);
  for (auto& x : input) x = rng.uniform(-scale, scale);

  // Unigram^0.75 sampling table as a cumulative distribution.
  std::vector<double> cumulative(V);
  double acc = 0.0;
  for (std::size_t i = 0; i < V; ++i) {
    acc += std::pow(static_cast<double>(vocab.counts[i]), 0.75);
    cumulative[i] = acc;
  }
  auto draw_negative = [&](Rng& r_rng) {
    const double r = r_rng.uniform01() * acc;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), r);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), V - 1);
  };

  auto in_row = [&](std::size_t w) { return std::span<double>(input.data() + w * dim, dim); };
  auto out_row = [&](std::size_t w) { return std::span<double>(output.data() + w * dim, dim); };

  WordVecResult result;
  SkipGramGradients<double> grad;
  std::vector<std::size_t> neg_ids;
  std::vector<std::span<const double>> neg_rows;
  const double schedule = static_cast<double>(cfg.epochs) * static_cast<double>(total_tokens);
  double processed = 0.0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    double epoch_loss = 0.0;
    std::size_t pairs = 0;
    for (const auto& s : sentences) {
      for (std::size_t i = 0; i < s.size(); ++i) {
        const double lr = std::max(cfg.min_learning_rate, cfg.learning_rate * (1.0 - processed / schedule));
        processed += 1.0;
        const std::size_t lo = i >= cfg.window ? i - cfg.window : 0;
        const std::size_t hi = std::min(s.size() - 1, i + cfg.window);
        for (std::size_t j = lo; j <= hi; ++j) {
          if (j == i) continue;
          const std::size_t center = s[i];
          const std::size_t context = s[j];

          neg_ids.clear();
          for (std::size_t k = 0; k < cfg.negatives; ++k) {
            const std::size_t n = draw_negative(rng);
            if (n != context) neg_ids.push_back(n);
          }
          neg_rows.clear();
          for (std::size_t n : neg_ids) neg_rows.emplace_back(out_row(n));

          skipgram_gradients<double>(in_row(center), out_row(context), neg_rows, grad);
          epoch_loss += grad.loss;
          ++pairs;

          auto v = in_row(center);
          for (std::size_t d = 0; d < dim; ++d) v[d] -= lr * grad.center[d];
          auto u = out_row(context);
          for (std::size_t d = 0; d < dim; ++d) u[d] -= lr * grad.context[d];
          for (std::size_t k = 0; k < neg_ids.size(); ++k) {
            auto un = out_row(neg_ids[k]);
            for (std::size_t d = 0; d < dim; ++d) un[d] -= lr * grad.negatives[k][d];
          }
        }
      }
    }
    result.epoch_loss.push_back(pairs ? epoch_loss / static_cast<double>(pairs) : 0.0);

    if (objective_trace) {
      Rng eval_rng(mix_seed(cfg.seed, 1));
      double total = 0.0;
      std::size_t n_pairs = 0;
      for (const auto& s : sentences) {
        for (std::size_t i = 0; i < s.size(); ++i) {
          const std::size_t lo = i >= cfg.window ? i - cfg.window : 0;
          const std::size_t hi = std::min(s.size() - 1, i + cfg.window);
          for (std::size_t j = lo; j <= hi; ++j) {
            if (j == i) continue;
            neg_rows.clear();
            for (std::size_t k = 0; k < cfg.negatives; ++k) {
              const std::size_t n = draw_negative(eval_rng);
              if (n != s[j]) neg_rows.emplace_back(out_row(n));
            }
            total += skipgram_loss<double>(in_row(s[i]), out_row(s[j]), neg_rows);
            ++n_pairs;
          }
        }
      }
      objective_trace->push_back(n_pairs ? total / static_cast<double>(n_pairs) : 0.0);
    }
  }

  std::vector<float> vectors(input.size());
  std::transform(input.begin(), input.end(), vectors.begin(), [](double x) { return static_cast<float>(x); });
  result.table = EmbeddingTable(vocab.words, dim, std::move(vectors));
  return result;
}

}  // namespace bottrinet
