#pragma once

// Account/post ingestion, tokenization, vocabularies, ground truths and
// train/test splitting.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "bottrinet/common.hpp"

namespace bottrinet {

// ---------------------------------------------------------------------------
// Tokens

enum class TokenKind : std::uint8_t { Word, Url, Mention, Topic, Other };

inline constexpr std::string_view kUrlToken = "[URL]";
inline constexpr std::string_view kMentionToken = "[Others]";
inline constexpr std::string_view kTopicToken = "[Topic]";

struct Token {
  std::string surface;
  TokenKind kind = TokenKind::Word;

  friend bool operator==(const Token&, const Token&) = default;
};

/// Url, Mention and Topic tokens collapse to sentinel surfaces.
inline bool is_special(TokenKind kind) {
  return kind == TokenKind::Url || kind == TokenKind::Mention || kind == TokenKind::Topic;
}

namespace detail {

inline bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// Bytes >= 0x80 belong to multi-byte UTF-8 sequences and are kept as word bytes.
inline bool is_word_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

inline char ascii_lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

inline bool starts_with_nocase(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i)
    if (ascii_lower(s[i]) != prefix[i]) return false;
  return true;
}

inline void split_words(std::string_view chunk, std::vector<Token>& out) {
  std::size_t i = 0;
  while (i < chunk.size()) {
    while (i < chunk.size() && !is_word_byte(static_cast<unsigned char>(chunk[i]))) ++i;
    std::size_t j = i;
    while (j < chunk.size() && is_word_byte(static_cast<unsigned char>(chunk[j]))) ++j;
    if (j > i) {
      Token t;
      t.surface.reserve(j - i);
      bool numeric = true;
      for (std::size_t k = i; k < j; ++k) {
        t.surface.push_back(ascii_lower(chunk[k]));
        numeric = numeric && chunk[k] >= '0' && chunk[k] <= '9';
      }
      t.kind = numeric ? TokenKind::Other : TokenKind::Word;
      out.push_back(std::move(t));
    }
    i = j;
  }
}

}  // namespace detail

/// Splits a post into normalized tokens.
///
/// Whitespace separates chunks. Leading punctuation (other than '@' and '#')
/// is dropped, then a chunk starting with "http:"/"https:" becomes [URL], one
/// starting with '@' becomes [Others] and one starting with '#' becomes
/// [Topic]. Any other chunk is cut at punctuation into lowercase word tokens;
/// all-digit tokens keep their digits and get kind Other.
inline std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && detail::is_space(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !detail::is_space(static_cast<unsigned char>(text[j]))) ++j;
    std::string_view chunk = text.substr(i, j - i);
    i = j;

    std::size_t lead = 0;
    while (lead < chunk.size()) {
      const auto c = static_cast<unsigned char>(chunk[lead]);
      if (detail::is_word_byte(c) || c == '@' || c == '#') break;
      ++lead;
    }
    chunk.remove_prefix(lead);
    if (chunk.empty()) continue;

    if (detail::starts_with_nocase(chunk, "http:") || detail::starts_with_nocase(chunk, "https:")) {
      tokens.push_back({std::string(kUrlToken), TokenKind::Url});
    } else if (chunk.front() == '@') {
      tokens.push_back({std::string(kMentionToken), TokenKind::Mention});
    } else if (chunk.front() == '#') {
      tokens.push_back({std::string(kTopicToken), TokenKind::Topic});
    } else {
      detail::split_words(chunk, tokens);
    }
  }
  return tokens;
}

// ---------------------------------------------------------------------------
// Accounts and datasets

struct Account {
  std::string id;
  Label label = Label::Genuine;
  std::string category;
  std::vector<std::string> posts;

  friend bool operator==(const Account&, const Account&) = default;
};

struct Dataset {
  std::vector<Account> accounts;
  std::size_t skipped = 0;  // accounts dropped at ingestion for having no posts
};

/// Reads newline-delimited account records:
/// {"id": str, "label": 0|1, "category": str, "posts": [str, ...]}.
/// Blank lines are ignored. Accounts without posts are dropped and counted
/// in Dataset::skipped. A category listing several tags ("a,b") keeps the first.
inline Dataset ingest_dataset(std::istream& in) {
  using nlohmann::json;
  Dataset ds;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;

  while (std::getline(in, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(),
                    [](char c) { return detail::is_space(static_cast<unsigned char>(c)); }))
      continue;
    const std::string where = "line " + std::to_string(line_no);

    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw InputError(where + ": malformed record: " + e.what());
    }
    if (!rec.is_object()) throw InputError(where + ": record is not an object");

    auto field = [&](const char* name) -> const json& {
      auto it = rec.find(name);
      if (it == rec.end()) throw InputError(where + ": field '" + name + "': missing");
      return *it;
    };

    Account acc;
    const json& id = field("id");
    if (!id.is_string() || id.get_ref<const std::string&>().empty())
      throw InputError(where + ": field 'id': expected nonempty string");
    acc.id = id.get<std::string>();

    const json& label = field("label");
    if (!label.is_number_integer())
      throw InputError(where + ": field 'label': expected integer 0 or 1");
    const auto lv = label.get<std::int64_t>();
    if (lv != 0 && lv != 1) throw InputError(where + ": field 'label': label out of range");
    acc.label = lv == 1 ? Label::Bot : Label::Genuine;

    const json& category = field("category");
    if (!category.is_string()) throw InputError(where + ": field 'category': expected string");
    acc.category = category.get<std::string>();
    if (auto comma = acc.category.find(','); comma != std::string::npos) acc.category.resize(comma);

    const json& posts = field("posts");
    if (!posts.is_array()) throw InputError(where + ": field 'posts': expected array of strings");
    acc.posts.reserve(posts.size());
    for (const auto& p : posts) {
      if (!p.is_string()) throw InputError(where + ": field 'posts': expected array of strings");
      acc.posts.push_back(p.get<std::string>());
    }

    if (!seen.insert(acc.id).second) throw InputError(where + ": duplicate account id '" + acc.id + "'");
    if (acc.posts.empty()) {
      ++ds.skipped;
      continue;
    }
    ds.accounts.push_back(std::move(acc));
  }
  return ds;
}

/// Writes the record format read by ingest_dataset: accounts in id order,
/// posts in stored order, one compact JSON object per line.
inline void emit_dataset(const Dataset& ds, std::ostream& out) {
  std::vector<const Account*> order;
  order.reserve(ds.accounts.size());
  for (const auto& a : ds.accounts) order.push_back(&a);
  std::sort(order.begin(), order.end(), [](const Account* a, const Account* b) { return a->id < b->id; });

  for (const Account* a : order) {
    nlohmann::ordered_json rec;
    rec["id"] = a->id;
    rec["label"] = to_int(a->label);
    rec["category"] = a->category;
    rec["posts"] = a->posts;
    out << rec.dump(-1, ' ', false, nlohmann::ordered_json::error_handler_t::replace) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Vocabulary

struct Vocabulary {
  std::vector<std::string> words;  // index -> surface; count-descending, ties by surface
  std::vector<std::uint64_t> counts;
  std::unordered_map<std::string, std::size_t> index;
  std::size_t min_count = 1;

  std::size_t size() const { return words.size(); }
  bool empty() const { return words.empty(); }

  std::optional<std::size_t> find(std::string_view surface) const {
    auto it = index.find(std::string(surface));
    if (it == index.end()) return std::nullopt;
    return it->second;
  }

  std::uint64_t count(std::string_view surface) const {
    auto i = find(surface);
    return i ? counts[*i] : 0;
  }
};

/// Counts tokens over tokenized posts. Tokens below min_count are dropped,
/// except the [URL]/[Others]/[Topic] sentinels which are kept whenever seen.
inline Vocabulary build_vocabulary(const std::vector<std::vector<Token>>& posts, std::size_t min_count) {
  if (min_count < 1) throw InputError("build_vocabulary: min_count must be >= 1");
  std::map<std::string, std::pair<std::uint64_t, bool>> tally;  // surface -> (count, special)
  for (const auto& post : posts)
    for (const auto& t : post) {
      auto& e = tally[t.surface];
      ++e.first;
      e.second = e.second || is_special(t.kind);
    }
  if (tally.empty()) throw InputError("build_vocabulary: empty corpus");

  std::vector<std::pair<std::string, std::uint64_t>> kept;
  for (auto& [surface, e] : tally)
    if (e.first >= min_count || e.second) kept.emplace_back(surface, e.first);
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  Vocabulary v;
  v.min_count = min_count;
  for (auto& [surface, count] : kept) {
    v.index.emplace(surface, v.words.size());
    v.words.push_back(surface);
    v.counts.push_back(count);
  }
  return v;
}

inline Vocabulary build_vocabulary(const Dataset& ds, std::size_t min_count) {
  std::vector<std::vector<Token>> posts;
  for (const auto& a : ds.accounts)
    for (const auto& p : a.posts) posts.push_back(tokenize(p));
  return build_vocabulary(posts, min_count);
}

// ---------------------------------------------------------------------------
// Ground truths, splits and statistics

struct GroundTruth {
  std::string name;
  std::vector<Account> positives;  // bots
  std::vector<Account> negatives;  // genuine
};

/// Pairs the bots of the requested categories with every genuine account.
inline GroundTruth build_ground_truth(const Dataset& ds, const std::vector<std::string>& bot_categories,
                                      std::string name) {
  if (bot_categories.empty()) throw InputError("ground truth '" + name + "': no bot categories given");
  std::set<std::string> wanted(bot_categories.begin(), bot_categories.end());
  std::set<std::string> matched;

  GroundTruth gt;
  gt.name = std::move(name);
  for (const auto& a : ds.accounts) {
    if (a.label == Label::Genuine) {
      gt.negatives.push_back(a);
    } else if (wanted.count(a.category)) {
      matched.insert(a.category);
      gt.positives.push_back(a);
    }
  }
  for (const auto& c : bot_categories)
    if (!matched.count(c)) throw InputError("ground truth '" + gt.name + "': no bot account has category '" + c + "'");
  if (gt.negatives.empty()) throw InputError("ground truth '" + gt.name + "': dataset has no genuine accounts");
  return gt;
}

/// Parses "NAME:cat1,cat2,...".
inline std::pair<std::string, std::vector<std::string>> parse_ground_truth_spec(std::string_view spec) {
  const auto colon = spec.find(':');
  if (colon == std::string_view::npos || colon == 0 || colon + 1 == spec.size())
    throw InputError("ground truth '" + std::string(spec) + "': expected NAME:cat1,cat2,...");
  std::vector<std::string> cats;
  std::string_view rest = spec.substr(colon + 1);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    std::string_view c = rest.substr(0, comma);
    if (c.empty()) throw InputError("ground truth '" + std::string(spec) + "': empty category");
    cats.emplace_back(c);
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
    if (rest.empty()) throw InputError("ground truth '" + std::string(spec) + "': empty category");
  }
  return {std::string(spec.substr(0, colon)), std::move(cats)};
}

/// Every bot category present in the dataset, sorted.
inline std::vector<std::string> bot_categories(const Dataset& ds) {
  std::set<std::string> cats;
  for (const auto& a : ds.accounts)
    if (a.label == Label::Bot) cats.insert(a.category);
  return {cats.begin(), cats.end()};
}

struct SplitSets {
  std::vector<Account> train;
  std::vector<Account> test;
};

/// Account-level split, stratified per class: each class contributes
/// round(train_fraction * size) accounts to train, clamped so both sides keep
/// at least one account. Train holds bots first, then genuine accounts.
inline SplitSets split(const GroundTruth& gt, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw InputError("split: train fraction must lie strictly between 0 and 1");
  SplitSets out;
  const std::vector<Account>* classes[] = {&gt.positives, &gt.negatives};
  for (std::size_t c = 0; c < 2; ++c) {
    const auto& members = *classes[c];
    if (members.size() < 2)
      throw InputError("split: ground truth '" + gt.name + "' has fewer than 2 " +
                       (c == 0 ? "bot" : "genuine") + " accounts");
    std::vector<std::size_t> order(members.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(mix_seed(seed, c));
    rng.shuffle(order.begin(), order.end());

    auto k = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(members.size())));
    k = std::clamp<std::size_t>(k, 1, members.size() - 1);
    for (std::size_t i = 0; i < order.size(); ++i)
      (i < k ? out.train : out.test).push_back(members[order[i]]);
  }
  return out;
}

struct CorpusStats {
  std::uint64_t count_a = 0;  // bot accounts
  std::uint64_t count_t = 0;  // posts across bot accounts
  double count_m = 0.0;       // count_t / count_a
};

inline CorpusStats corpus_stats(const GroundTruth& gt) {
  if (gt.positives.empty()) throw InputError("corpus_stats: ground truth '" + gt.name + "' has no bots");
  CorpusStats s;
  s.count_a = gt.positives.size();
  for (const auto& a : gt.positives) s.count_t += a.posts.size();
  s.count_m = static_cast<double>(s.count_t) / static_cast<double>(s.count_a);
  return s;
}

}  // namespace bottrinet
