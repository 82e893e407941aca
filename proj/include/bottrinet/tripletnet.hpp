#pragma once

// Triplet-trained refinement network for content embeddings.
//
// The network is a symmetric perceptron N -> 2N -> N (rectifier on hidden
// layers, identity on the output). It is trained on triples drawn from the
// training accounts: the anchor is an account (by default the mean of its raw
// contents), the positive is one of that account's contents and the negative
// is a content from an account of the opposite class.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "bottrinet/common.hpp"
#include "bottrinet/pooling.hpp"

namespace bottrinet {

enum class AnchorMode : std::uint8_t { Centric, Random };
enum class NegativeMode : std::uint8_t { Adapted, OldNegative };

NLOHMANN_JSON_SERIALIZE_ENUM(AnchorMode, {{AnchorMode::Centric, "centric"}, {AnchorMode::Random, "random"}})
NLOHMANN_JSON_SERIALIZE_ENUM(NegativeMode, {{NegativeMode::Adapted, "adapted"}, {NegativeMode::OldNegative, "old"}})

struct TripletConfig {
  double margin = 0.5;
  double learning_rate = 0.01;
  std::size_t epochs = 20;
  std::size_t triples_per_epoch = 0;  // 0: four per training content
  AnchorMode anchor_mode = AnchorMode::Centric;
  NegativeMode negative_mode = NegativeMode::Adapted;
  std::size_t hidden_layers = 1;
  std::uint64_t seed = 1;

  void validate() const {
    if (!(margin > 0.0)) throw InputError("triplet: margin must be positive");
    if (!(learning_rate >= 0.0)) throw InputError("triplet: learning rate must be non-negative");
    if (hidden_layers < 1) throw InputError("triplet: at least one hidden layer is required");
  }
};

inline void to_json(nlohmann::json& j, const TripletConfig& c) {
  j = nlohmann::json{{"margin", c.margin},
                     {"learning_rate", c.learning_rate},
                     {"epochs", c.epochs},
                     {"triples_per_epoch", c.triples_per_epoch},
                     {"anchor_mode", c.anchor_mode},
                     {"negative_mode", c.negative_mode},
                     {"hidden_layers", c.hidden_layers},
                     {"seed", c.seed}};
}

inline void from_json(const nlohmann::json& j, TripletConfig& c) {
  j.at("margin").get_to(c.margin);
  j.at("learning_rate").get_to(c.learning_rate);
  j.at("epochs").get_to(c.epochs);
  j.at("triples_per_epoch").get_to(c.triples_per_epoch);
  j.at("anchor_mode").get_to(c.anchor_mode);
  j.at("negative_mode").get_to(c.negative_mode);
  j.at("hidden_layers").get_to(c.hidden_layers);
  j.at("seed").get_to(c.seed);
}

// ---------------------------------------------------------------------------
// Network

/// Fully connected layer, weight stored row-major (out x in).
template <std::floating_point T>
struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<T> weight;
  std::vector<T> bias;

  DenseLayer() = default;
  DenseLayer(std::size_t in_dim, std::size_t out_dim)
      : in(in_dim), out(out_dim), weight(in_dim * out_dim, T(0)), bias(out_dim, T(0)) {}

  T& w(std::size_t r, std::size_t c) { return weight[r * in + c]; }
  T w(std::size_t r, std::size_t c) const { return weight[r * in + c]; }

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

template <std::floating_point T>
class EmbeddingNetwork {
 public:
  static constexpr int kFormatVersion = 1;

  EmbeddingNetwork() = default;

  /// All-zero network: dim -> hidden_dim (x hidden_layers) -> dim.
  EmbeddingNetwork(std::size_t dim, std::size_t hidden_dim, std::size_t hidden_layers = 1) {
    if (dim < 2) throw InputError("embedding network: dim must be >= 2");
    if (hidden_dim < 1 || hidden_layers < 1) throw InputError("embedding network: empty hidden layer");
    std::size_t prev = dim;
    for (std::size_t l = 0; l < hidden_layers; ++l) {
      layers_.emplace_back(prev, hidden_dim);
      prev = hidden_dim;
    }
    layers_.emplace_back(prev, dim);
  }

  /// Weights uniform in +-1/sqrt(fan_in), zero biases, hidden width 2*dim.
  static EmbeddingNetwork init(std::size_t dim, std::uint64_t seed, std::size_t hidden_layers = 1) {
    EmbeddingNetwork net(dim, 2 * dim, hidden_layers);
    Rng rng(seed);
    for (auto& layer : net.layers_) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in));
      for (auto& w : layer.weight) w = static_cast<T>(rng.uniform(-bound, bound));
    }
    return net;
  }

  std::size_t dim() const { return layers_.empty() ? 0 : layers_.front().in; }
  std::size_t hidden_dim() const { return layers_.empty() ? 0 : layers_.front().out; }
  std::size_t hidden_layers() const { return layers_.empty() ? 0 : layers_.size() - 1; }

  std::vector<DenseLayer<T>>& layers() { return layers_; }
  const std::vector<DenseLayer<T>>& layers() const { return layers_; }

  /// activations[0] = x, activations[l + 1] = output of layer l (after the
  /// rectifier on hidden layers).
  void forward(std::span<const T> x, std::vector<std::vector<T>>& activations) const {
    if (x.size() != dim())
      throw Error("embedding network: input length " + std::to_string(x.size()) + " != dim " + std::to_string(dim()));
    activations.resize(layers_.size() + 1);
    activations[0].assign(x.begin(), x.end());
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const auto& layer = layers_[l];
      const auto& in = activations[l];
      auto& out = activations[l + 1];
      out.resize(layer.out);
      const bool hidden = l + 1 < layers_.size();
      for (std::size_t r = 0; r < layer.out; ++r) {
        const T* w = layer.weight.data() + r * layer.in;
        T s = T(0);
        for (std::size_t c = 0; c < layer.in; ++c) s += w[c] * in[c];
        s += layer.bias[r];
        out[r] = hidden ? std::max(T(0), s) : s;
      }
    }
  }

  std::vector<T> forward(std::span<const T> x) const {
    std::vector<std::vector<T>> acts;
    forward(x, acts);
    return std::move(acts.back());
  }

  /// Gradients share the network's shape.
  EmbeddingNetwork zeros_like() const {
    EmbeddingNetwork g = *this;
    g.set_zero();
    return g;
  }

  void set_zero() {
    for (auto& layer : layers_) {
      std::fill(layer.weight.begin(), layer.weight.end(), T(0));
      std::fill(layer.bias.begin(), layer.bias.end(), T(0));
    }
  }

  /// Plain SGD step: params -= lr * grads.
  void apply_gradients(const EmbeddingNetwork& grads, T lr) {
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      auto& p = layers_[l];
      const auto& g = grads.layers_[l];
      for (std::size_t i = 0; i < p.weight.size(); ++i) p.weight[i] -= lr * g.weight[i];
      for (std::size_t i = 0; i < p.bias.size(); ++i) p.bias[i] -= lr * g.bias[i];
    }
  }

  bool all_finite() const {
    for (const auto& layer : layers_) {
      for (T w : layer.weight)
        if (!std::isfinite(w)) return false;
      for (T b : layer.bias)
        if (!std::isfinite(b)) return false;
    }
    return true;
  }

  /// {format_version, dim, hidden_dim, hidden_layers, W1, b1, W2, b2, ...};
  /// weights are arrays of rows.
  nlohmann::json to_json() const {
    nlohmann::json j{{"format_version", kFormatVersion},
                     {"dim", dim()},
                     {"hidden_dim", hidden_dim()},
                     {"hidden_layers", hidden_layers()}};
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const auto& layer = layers_[l];
      nlohmann::json rows = nlohmann::json::array();
      for (std::size_t r = 0; r < layer.out; ++r)
        rows.push_back(std::vector<T>(layer.weight.begin() + static_cast<std::ptrdiff_t>(r * layer.in),
                                      layer.weight.begin() + static_cast<std::ptrdiff_t>((r + 1) * layer.in)));
      j["W" + std::to_string(l + 1)] = std::move(rows);
      j["b" + std::to_string(l + 1)] = layer.bias;
    }
    return j;
  }

  static EmbeddingNetwork from_json(const nlohmann::json& j) {
    try {
      if (j.at("format_version").get<int>() != kFormatVersion)
        throw InputError("embedding network: unsupported format_version");
      const auto hidden_layers = j.contains("hidden_layers") ? j.at("hidden_layers").get<std::size_t>() : 1;
      EmbeddingNetwork net(j.at("dim").get<std::size_t>(), j.at("hidden_dim").get<std::size_t>(), hidden_layers);
      for (std::size_t l = 0; l < net.layers_.size(); ++l) {
        auto& layer = net.layers_[l];
        const auto& rows = j.at("W" + std::to_string(l + 1));
        if (rows.size() != layer.out) throw InputError("embedding network: W" + std::to_string(l + 1) + " shape mismatch");
        for (std::size_t r = 0; r < layer.out; ++r) {
          auto row = rows[r].get<std::vector<T>>();
          if (row.size() != layer.in) throw InputError("embedding network: W" + std::to_string(l + 1) + " shape mismatch");
          std::copy(row.begin(), row.end(), layer.weight.begin() + static_cast<std::ptrdiff_t>(r * layer.in));
        }
        layer.bias = j.at("b" + std::to_string(l + 1)).get<std::vector<T>>();
        if (layer.bias.size() != layer.out) throw InputError("embedding network: b" + std::to_string(l + 1) + " shape mismatch");
      }
      if (!net.all_finite()) throw InputError("embedding network: non-finite parameter");
      return net;
    } catch (const nlohmann::json::exception& e) {
      throw InputError(std::string("embedding network: ") + e.what());
    }
  }

  friend bool operator==(const EmbeddingNetwork&, const EmbeddingNetwork&) = default;

 private:
  std::vector<DenseLayer<T>> layers_;
};

// ---------------------------------------------------------------------------
// Loss and gradients

/// Views into stored vectors; the account indices are filled in by the selector.
template <std::floating_point T>
struct Triple {
  std::span<const T> anchor;
  std::span<const T> positive;
  std::span<const T> negative;
  std::size_t anchor_account = std::numeric_limits<std::size_t>::max();
  std::size_t negative_account = std::numeric_limits<std::size_t>::max();
};

template <std::floating_point T>
T euclidean(std::span<const T> a, std::span<const T> b) {
  if (a.size() != b.size()) throw Error("euclidean: length mismatch");
  T s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const T d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

/// max(0, d(a,p) - d(a,n) + margin) on already-embedded vectors.
template <std::floating_point T>
T triplet_loss(std::span<const T> a, std::span<const T> p, std::span<const T> n, T margin) {
  if (a.size() != p.size() || a.size() != n.size()) throw Error("triplet_loss: length mismatch");
  return std::max(T(0), euclidean(a, p) - euclidean(a, n) + margin);
}

/// Scratch buffers reused across backward() calls.
template <std::floating_point T>
struct BackwardWorkspace {
  std::vector<std::vector<T>> acts_a, acts_p, acts_n;
  std::vector<T> g_a, g_p, g_n, prev;
};

namespace detail {

// Backpropagates `delta` (gradient at the network output) along one forward
// pass and accumulates parameter gradients. `delta` is consumed.
template <std::floating_point T>
void backprop_path(const EmbeddingNetwork<T>& net, const std::vector<std::vector<T>>& acts, std::vector<T>& delta,
                   std::vector<T>& prev, EmbeddingNetwork<T>& grads) {
  const auto& layers = net.layers();
  auto& glayers = grads.layers();
  for (std::size_t l = layers.size(); l-- > 0;) {
    const auto& layer = layers[l];
    auto& g = glayers[l];
    const auto& in = acts[l];
    for (std::size_t r = 0; r < layer.out; ++r) {
      const T d = delta[r];
      if (d == T(0)) continue;
      T* gw = g.weight.data() + r * layer.in;
      for (std::size_t c = 0; c < layer.in; ++c) gw[c] += d * in[c];
      g.bias[r] += d;
    }
    if (l == 0) break;
    prev.assign(layer.in, T(0));
    for (std::size_t r = 0; r < layer.out; ++r) {
      const T d = delta[r];
      if (d == T(0)) continue;
      const T* w = layer.weight.data() + r * layer.in;
      for (std::size_t c = 0; c < layer.in; ++c) prev[c] += w[c] * d;
    }
    // Rectifier below: a hidden unit passes gradient only where it fired.
    for (std::size_t c = 0; c < layer.in; ++c)
      if (!(in[c] > T(0))) prev[c] = T(0);
    delta.swap(prev);
  }
}

}  // namespace detail

/// Accumulates into `grads` (shaped like `net`, zeroed by the caller) the
/// gradient of triplet_loss(f(a), f(p), f(n), margin) and returns the loss.
/// Inactive hinge (loss <= 0) contributes nothing. The gradient of a distance
/// at zero separation is taken as zero.
template <std::floating_point T>
T backward(const EmbeddingNetwork<T>& net, const Triple<T>& triple, T margin, EmbeddingNetwork<T>& grads,
           BackwardWorkspace<T>& ws) {
  net.forward(triple.anchor, ws.acts_a);
  net.forward(triple.positive, ws.acts_p);
  net.forward(triple.negative, ws.acts_n);
  const auto& fa = ws.acts_a.back();
  const auto& fp = ws.acts_p.back();
  const auto& fn = ws.acts_n.back();

  const T d_ap = euclidean<T>(fa, fp);
  const T d_an = euclidean<T>(fa, fn);
  const T loss = d_ap - d_an + margin;
  if (!(loss > T(0))) return T(0);

  const std::size_t dim = fa.size();
  ws.g_a.resize(dim);
  ws.g_p.resize(dim);
  ws.g_n.resize(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    const T u = d_ap > T(0) ? (fa[i] - fp[i]) / d_ap : T(0);
    const T v = d_an > T(0) ? (fa[i] - fn[i]) / d_an : T(0);
    ws.g_a[i] = u - v;
    ws.g_p[i] = -u;
    ws.g_n[i] = v;
  }
  detail::backprop_path(net, ws.acts_a, ws.g_a, ws.prev, grads);
  detail::backprop_path(net, ws.acts_p, ws.g_p, ws.prev, grads);
  detail::backprop_path(net, ws.acts_n, ws.g_n, ws.prev, grads);
  return loss;
}

template <std::floating_point T>
T backward(const EmbeddingNetwork<T>& net, const Triple<T>& triple, T margin, EmbeddingNetwork<T>& grads) {
  BackwardWorkspace<T> ws;
  return backward(net, triple, margin, grads, ws);
}

// ---------------------------------------------------------------------------
// Triple selection

/// One anchor vector per training account, aligned with the training contents.
struct AnchorSet {
  std::vector<std::string> account_ids;
  std::vector<Vector> anchors;

  std::size_t size() const { return anchors.size(); }
};

/// Centric: mean of the account's raw contents. Random: one of its contents,
/// chosen uniformly with a generator seeded by `seed`.
inline AnchorSet build_anchors(const std::vector<AccountContents>& accounts, AnchorMode mode, std::uint64_t seed) {
  AnchorSet set;
  Rng rng(seed);
  for (const auto& a : accounts) {
    if (a.contents.empty()) throw InputError("build_anchors: account '" + a.account_id + "' has no contents");
    set.account_ids.push_back(a.account_id);
    if (mode == AnchorMode::Centric)
      set.anchors.push_back(average_pool(a.contents));
    else
      set.anchors.push_back(a.contents[rng.uniform_index(a.contents.size())]);
  }
  return set;
}

/// Draws triples from fixed training contents. Anchor accounts are uniform,
/// positives uniform within the anchor's account, negatives uniform over the
/// eligible contents: opposite label (Adapted) or any other account (OldNegative).
class TripleSelector {
 public:
  TripleSelector(const AnchorSet& anchors, const std::vector<AccountContents>& accounts, NegativeMode mode)
      : anchors_(&anchors), accounts_(&accounts), mode_(mode) {
    if (anchors.size() != accounts.size()) throw Error("triple selector: anchors/accounts size mismatch");
    if (accounts.empty()) throw InputError("triple selector: no training accounts");
    for (std::size_t a = 0; a < accounts.size(); ++a) {
      const auto& acc = accounts[a];
      if (acc.contents.empty()) throw InputError("triple selector: account '" + acc.account_id + "' has no contents");
      auto& pool = by_label_[to_int(acc.label)];
      auto& range = ranges_.emplace_back();
      range.label_begin = pool.size();
      range.all_begin = all_.size();
      for (std::size_t c = 0; c < acc.contents.size(); ++c) {
        pool.push_back({a, c});
        all_.push_back({a, c});
      }
      range.count = acc.contents.size();
    }
    for (std::size_t a = 0; a < accounts.size(); ++a) {
      if (mode_ == NegativeMode::Adapted && by_label_[to_int(opposite(accounts[a].label))].empty())
        throw InputError("triple selector: no content with the label opposite to account '" + accounts[a].account_id + "'");
      if (mode_ == NegativeMode::OldNegative && all_.size() == ranges_[a].count)
        throw InputError("triple selector: no content outside account '" + accounts[a].account_id + "'");
    }
  }

  Triple<float> draw(Rng& rng) const {
    const auto& accounts = *accounts_;
    const std::size_t a = rng.uniform_index(accounts.size());
    const auto& anchor_acc = accounts[a];
    Triple<float> t;
    t.anchor_account = a;
    t.anchor = anchors_->anchors[a];
    t.positive = anchor_acc.contents[rng.uniform_index(anchor_acc.contents.size())];

    Ref neg;
    if (mode_ == NegativeMode::Adapted) {
      const auto& pool = by_label_[to_int(opposite(anchor_acc.label))];
      neg = pool[rng.uniform_index(pool.size())];
    } else {
      // Uniform over all contents outside the anchor's contiguous block.
      const auto& range = ranges_[a];
      std::size_t r = rng.uniform_index(all_.size() - range.count);
      if (r >= range.all_begin) r += range.count;
      neg = all_[r];
    }
    t.negative_account = neg.account;
    t.negative = accounts[neg.account].contents[neg.content];
    return t;
  }

 private:
  struct Ref {
    std::size_t account = 0;
    std::size_t content = 0;
  };
  struct Range {
    std::size_t label_begin = 0;
    std::size_t all_begin = 0;
    std::size_t count = 0;
  };

  const AnchorSet* anchors_;
  const std::vector<AccountContents>* accounts_;
  NegativeMode mode_;
  std::vector<Ref> by_label_[2];
  std::vector<Ref> all_;
  std::vector<Range> ranges_;
};

inline Triple<float> select_triple(const AnchorSet& anchors, const std::vector<AccountContents>& accounts,
                                   NegativeMode mode, Rng& rng) {
  return TripleSelector(anchors, accounts, mode).draw(rng);
}

// ---------------------------------------------------------------------------
// Training and refinement

using Network = EmbeddingNetwork<float>;

struct TripletTrainResult {
  Network network;
  std::vector<double> loss_trace;  // mean triplet loss per epoch
};

/// SGD over epochs x triples_per_epoch selected triples. Anchors come from the
/// raw training contents and stay fixed; all three vectors pass through the
/// current network at every step.
inline TripletTrainResult train_triplet_network(const std::vector<AccountContents>& train, const TripletConfig& cfg) {
  cfg.validate();
  if (train.empty()) throw InputError("triplet: no training accounts");
  bool has[2] = {false, false};
  std::size_t n_contents = 0;
  std::size_t dim = 0;
  for (const auto& a : train) {
    has[to_int(a.label)] = true;
    for (const auto& c : a.contents) {
      if (dim == 0) dim = c.size();
      if (c.size() != dim) throw InputError("triplet: content embeddings differ in length");
      ++n_contents;
    }
  }
  if (!has[0] || !has[1]) throw InputError("triplet: training data must contain both classes");

  TripletTrainResult result;
  result.network = Network::init(dim, mix_seed(cfg.seed, 0), cfg.hidden_layers);
  const AnchorSet anchors = build_anchors(train, cfg.anchor_mode, mix_seed(cfg.seed, 1));
  const TripleSelector selector(anchors, train, cfg.negative_mode);
  Rng rng(mix_seed(cfg.seed, 2));

  const std::size_t per_epoch = cfg.triples_per_epoch ? cfg.triples_per_epoch : 4 * n_contents;
  const auto margin = static_cast<float>(cfg.margin);
  const auto lr = static_cast<float>(cfg.learning_rate);
  Network grads = result.network.zeros_like();
  BackwardWorkspace<float> ws;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    double total = 0.0;
    for (std::size_t step = 0; step < per_epoch; ++step) {
      const Triple<float> t = selector.draw(rng);
      grads.set_zero();
      const float loss = backward(result.network, t, margin, grads, ws);
      total += loss;
      if (loss > 0.0f && lr > 0.0f) result.network.apply_gradients(grads, lr);
    }
    result.loss_trace.push_back(total / static_cast<double>(per_epoch));
  }
  if (!result.network.all_finite()) throw Error("triplet: training diverged (non-finite parameters)");
  return result;
}

/// Passes every content through the network; ids and labels are kept.
inline std::vector<AccountContents> refine(const Network& net, const std::vector<AccountContents>& accounts) {
  std::vector<AccountContents> out;
  out.reserve(accounts.size());
  std::vector<std::vector<float>> acts;
  for (const auto& a : accounts) {
    AccountContents r{a.account_id, a.label, {}};
    r.contents.reserve(a.contents.size());
    for (const auto& c : a.contents) {
      net.forward(c, acts);
      r.contents.push_back(std::move(acts.back()));
    }
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<ContentEmbedding> refine(const Network& net, const std::vector<ContentEmbedding>& contents) {
  std::vector<ContentEmbedding> out;
  out.reserve(contents.size());
  for (const auto& c : contents) out.push_back({c.account_id, c.label, net.forward(c.vector)});
  return out;
}

}  // namespace bottrinet
