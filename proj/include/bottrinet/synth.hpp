#pragma once

// Seeded synthetic bot/genuine datasets.
//
// The vocabulary is cut into a shared block and two class-specific blocks.
// Every token of a post comes from the author's class-specific block with
// probability `divergence` and from the shared block otherwise, each block
// being Zipf-distributed. Short bot histories (few posts) reproduce the
// content-less regime where pooled embeddings are noisy.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "bottrinet/common.hpp"
#include "bottrinet/corpus.hpp"

namespace bottrinet {

struct CountRange {
  std::size_t lo = 1;
  std::size_t hi = 1;

  friend bool operator==(const CountRange&, const CountRange&) = default;
};

struct SynthConfig {
  std::size_t n_bots = 100;
  std::size_t n_genuine = 100;
  CountRange posts_per_bot{20, 40};
  CountRange posts_per_genuine{20, 40};
  std::size_t vocab_size = 300;
  double divergence = 0.5;
  CountRange post_length{6, 14};
  std::string bot_category = "bot";
  std::uint64_t seed = 1;

  void validate() const {
    if (n_bots < 2 || n_genuine < 2) throw InputError("synth: need at least 2 accounts per class");
    if (vocab_size < 10) throw InputError("synth: vocab_size must be >= 10");
    if (!(divergence >= 0.0 && divergence <= 1.0)) throw InputError("synth: divergence must lie in [0, 1]");
    for (const auto* r : {&posts_per_bot, &posts_per_genuine, &post_length})
      if (r->lo < 1 || r->hi < r->lo) throw InputError("synth: ranges must satisfy 1 <= lo <= hi");
    if (bot_category.empty() || bot_category == "genuine") throw InputError("synth: invalid bot category");
  }
};

/// Content-less bots: few posts, moderately different vocabulary.
inline SynthConfig hard_low_content_preset() {
  SynthConfig c;
  c.n_bots = 300;
  c.n_genuine = 300;
  c.posts_per_bot = {2, 5};
  c.posts_per_genuine = {5, 10};
  c.vocab_size = 3000;
  c.divergence = 0.4;
  c.post_length = {3, 6};
  c.bot_category = "fake";
  c.seed = 7;
  return c;
}

/// Content-rich bots with disjoint class vocabularies.
inline SynthConfig content_rich_preset() {
  SynthConfig c;
  c.n_bots = 100;
  c.n_genuine = 100;
  c.posts_per_bot = {20, 40};
  c.posts_per_genuine = {20, 40};
  c.vocab_size = 300;
  c.divergence = 1.0;
  c.post_length = {6, 14};
  c.bot_category = "social1";
  c.seed = 11;
  return c;
}

/// Both classes drawn from the same distribution.
inline SynthConfig identical_preset() {
  SynthConfig c = content_rich_preset();
  c.divergence = 0.0;
  c.bot_category = "social2";
  c.seed = 13;
  return c;
}

inline SynthConfig synth_preset(std::string_view name) {
  if (name == "hard") return hard_low_content_preset();
  if (name == "rich") return content_rich_preset();
  if (name == "identical") return identical_preset();
  throw InputError("synth: unknown preset '" + std::string(name) + "' (expected hard, rich or identical)");
}

namespace detail {

inline std::size_t parse_count(std::string_view key, std::string_view v) {
  std::size_t pos = 0;
  const std::string s(v);
  unsigned long long x = 0;
  try {
    x = std::stoull(s, &pos);
  } catch (const std::exception&) {
    pos = std::string::npos;
  }
  if (pos != s.size() || s.empty() || s.front() == '-')
    throw InputError("synth config: key '" + std::string(key) + "': expected a non-negative integer, got '" + s + "'");
  return static_cast<std::size_t>(x);
}

inline CountRange parse_range(std::string_view key, std::string_view v) {
  const auto sep = v.find_first_of("-,:");
  if (sep == std::string_view::npos) {
    const auto x = parse_count(key, v);
    return {x, x};
  }
  return {parse_count(key, v.substr(0, sep)), parse_count(key, v.substr(sep + 1))};
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && is_space(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace detail

/// Applies one "key = value" setting. Ranges accept "lo-hi", "lo,hi" or a single value.
inline void set_synth_option(SynthConfig& c, std::string_view key, std::string_view value) {
  using namespace detail;
  if (key == "n_bots")
    c.n_bots = parse_count(key, value);
  else if (key == "n_genuine")
    c.n_genuine = parse_count(key, value);
  else if (key == "posts_per_bot")
    c.posts_per_bot = parse_range(key, value);
  else if (key == "posts_per_genuine")
    c.posts_per_genuine = parse_range(key, value);
  else if (key == "vocab_size")
    c.vocab_size = parse_count(key, value);
  else if (key == "post_length")
    c.post_length = parse_range(key, value);
  else if (key == "bot_category")
    c.bot_category = std::string(value);
  else if (key == "seed")
    c.seed = parse_count(key, value);
  else if (key == "divergence") {
    try {
      std::size_t pos = 0;
      c.divergence = std::stod(std::string(value), &pos);
      if (pos != value.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw InputError("synth config: key 'divergence': expected a number, got '" + std::string(value) + "'");
    }
  } else if (key == "preset")
    c = synth_preset(value);
  else
    throw InputError("synth config: unknown key '" + std::string(key) + "'");
}

/// Flat key-value file: one "key = value" per line, '#' starts a comment.
/// A "preset" line resets every field, so put it first.
inline SynthConfig read_synth_config(std::istream& in, SynthConfig base = {}) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view s = line;
    if (auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = detail::trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos)
      throw InputError("synth config: line " + std::to_string(line_no) + ": expected key = value");
    set_synth_option(base, detail::trim(s.substr(0, eq)), detail::trim(s.substr(eq + 1)));
  }
  return base;
}

namespace detail {

inline std::string pseudo_word(std::size_t index) {
  static constexpr std::string_view kSyllables[] = {"ka", "lo", "mi", "ru", "te", "sa", "no", "vi",
                                                    "po", "de", "zu", "ha", "re", "bo", "li", "ne"};
  std::string w;
  std::size_t i = index + 16;  // at least two syllables
  while (i > 0) {
    w += kSyllables[i % 16];
    i /= 16;
  }
  return w;
}

// Zipf(1) over `n` items, as a cumulative table.
inline std::vector<double> zipf_table(std::size_t n) {
  std::vector<double> cum(n);
  double acc = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    acc += 1.0 / static_cast<double>(r + 1);
    cum[r] = acc;
  }
  return cum;
}

inline std::size_t sample_cumulative(const std::vector<double>& cum, Rng& rng) {
  const double r = rng.uniform01() * cum.back();
  const auto it = std::upper_bound(cum.begin(), cum.end(), r);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cum.begin()), cum.size() - 1);
}

}  // namespace detail

inline Dataset generate_dataset(const SynthConfig& cfg) {
  cfg.validate();
  const std::size_t block = cfg.vocab_size / 3;
  const std::size_t shared = cfg.vocab_size - 2 * block;

  // Surface forms. A few shared words carry '#', '@' or URL prefixes.
  std::vector<std::string> words(cfg.vocab_size);
  for (std::size_t i = 0; i < cfg.vocab_size; ++i) {
    std::string w = detail::pseudo_word(i);
    if (i < shared) {
      if (i % 17 == 5)
        w = "#" + w;
      else if (i % 17 == 9)
        w = "@" + w;
      else if (i % 17 == 13)
        w = "https://t.co/" + w;
    }
    words[i] = std::move(w);
  }
  const auto shared_cum = detail::zipf_table(shared);
  const auto class_cum = detail::zipf_table(block);

  Rng rng(cfg.seed);
  Dataset ds;
  auto make_accounts = [&](Label label, std::size_t n, CountRange posts, const std::string& prefix,
                           const std::string& category, std::size_t class_offset) {
    for (std::size_t a = 0; a < n; ++a) {
      Account acc;
      std::ostringstream id;
      id << prefix;
      id.width(5);
      id.fill('0');
      id << a;
      acc.id = id.str();
      acc.label = label;
      acc.category = category;
      const std::size_t n_posts = rng.uniform_between(posts.lo, posts.hi);
      for (std::size_t p = 0; p < n_posts; ++p) {
        const std::size_t len = rng.uniform_between(cfg.post_length.lo, cfg.post_length.hi);
        std::string text;
        for (std::size_t t = 0; t < len; ++t) {
          const bool specific = rng.uniform01() < cfg.divergence;
          const std::size_t w = specific ? class_offset + detail::sample_cumulative(class_cum, rng)
                                         : detail::sample_cumulative(shared_cum, rng);
          if (t) text += ' ';
          std::string surface = words[w];
          if (t == 0 && surface.front() >= 'a' && surface.front() <= 'z')
            surface.front() = static_cast<char>(surface.front() - 'a' + 'A');
          text += surface;
        }
        text += rng.uniform01() < 0.3 ? "!" : ".";
        acc.posts.push_back(std::move(text));
      }
      ds.accounts.push_back(std::move(acc));
    }
  };
  make_accounts(Label::Bot, cfg.n_bots, cfg.posts_per_bot, "bot", cfg.bot_category, shared);
  make_accounts(Label::Genuine, cfg.n_genuine, cfg.posts_per_genuine, "gen", "genuine", shared + block);
  return ds;
}

}  // namespace bottrinet
