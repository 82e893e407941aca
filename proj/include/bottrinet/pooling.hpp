#pragma once

// Average pooling: word vectors -> content embedding -> account embedding.

#include <span>
#include <string>
#include <vector>

#include "bottrinet/common.hpp"
#include "bottrinet/corpus.hpp"
#include "bottrinet/wordvec.hpp"

namespace bottrinet {

struct ContentEmbedding {
  std::string account_id;
  Label label = Label::Genuine;
  Vector vector;
};

struct AccountEmbedding {
  std::string account_id;
  Label label = Label::Genuine;
  Vector vector;
};

/// All content embeddings of one account.
struct AccountContents {
  std::string account_id;
  Label label = Label::Genuine;
  std::vector<Vector> contents;
};

/// Componentwise mean of equal-length rows, summed at f64.
template <class Rows>
Vector average_pool(const Rows& rows) {
  if (std::empty(rows)) throw Error("average_pool: no rows");
  const std::size_t dim = std::size(*std::begin(rows));
  std::vector<double> sum(dim, 0.0);
  std::size_t n = 0;
  for (const auto& r : rows) {
    if (std::size(r) != dim) throw Error("average_pool: rows differ in length");
    std::size_t k = 0;
    for (auto x : r) sum[k++] += static_cast<double>(x);
    ++n;
  }
  Vector out(dim);
  for (std::size_t k = 0; k < dim; ++k) out[k] = static_cast<float>(sum[k] / static_cast<double>(n));
  return out;
}

/// Mean of the tokens' vectors. A post whose tokens were all stripped maps to
/// the table's fallback vector.
inline Vector content_embedding(const EmbeddingTable& table, std::span<const Token> tokens) {
  if (tokens.empty()) {
    auto f = table.fallback();
    return Vector(f.begin(), f.end());
  }
  std::vector<std::span<const float>> rows;
  rows.reserve(tokens.size());
  for (const auto& t : tokens) rows.push_back(table.lookup(t));
  return average_pool(rows);
}

/// Mean of one account's content vectors; every content must carry the same id.
inline AccountEmbedding account_embedding(std::span<const ContentEmbedding> contents) {
  if (contents.empty()) throw Error("account_embedding: no contents");
  const auto& id = contents.front().account_id;
  std::vector<std::span<const float>> rows;
  rows.reserve(contents.size());
  for (const auto& c : contents) {
    if (c.account_id != id)
      throw Error("account_embedding: contents mix accounts '" + id + "' and '" + c.account_id + "'");
    rows.emplace_back(c.vector);
  }
  return {id, contents.front().label, average_pool(rows)};
}

inline AccountEmbedding account_embedding(const AccountContents& account) {
  if (account.contents.empty()) throw Error("account_embedding: account '" + account.account_id + "' has no contents");
  return {account.account_id, account.label, average_pool(account.contents)};
}

/// Tokenizes and embeds every post of every account.
inline std::vector<AccountContents> embed_contents(const EmbeddingTable& table, const std::vector<Account>& accounts) {
  std::vector<AccountContents> out;
  out.reserve(accounts.size());
  for (const auto& a : accounts) {
    AccountContents ac{a.id, a.label, {}};
    ac.contents.reserve(a.posts.size());
    for (const auto& p : a.posts) ac.contents.push_back(content_embedding(table, tokenize(p)));
    out.push_back(std::move(ac));
  }
  return out;
}

inline std::vector<AccountEmbedding> pool_accounts(const std::vector<AccountContents>& accounts) {
  std::vector<AccountEmbedding> out;
  out.reserve(accounts.size());
  for (const auto& a : accounts) out.push_back(account_embedding(a));
  return out;
}

}  // namespace bottrinet
