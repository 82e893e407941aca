#include <gtest/gtest.h>

#include <cmath>

#include "bottrinet/wordvec.hpp"

namespace bottrinet {
namespace {

std::vector<std::vector<Token>> topic_corpus() {
  Rng rng(5);
  const std::vector<std::string> animals = {"cat", "dog"}, animal_ctx = {"pet", "fur", "vet", "leash", "paw"};
  const std::vector<std::string> vehicles = {"car", "bus"}, vehicle_ctx = {"road", "fuel", "wheel", "engine", "lane"};
  std::vector<std::vector<Token>> corpus;
  for (int i = 0; i < 400; ++i) {
    const bool animal = i % 2 == 0;
    const auto& heads = animal ? animals : vehicles;
    const auto& ctx = animal ? animal_ctx : vehicle_ctx;
    std::string post;
    for (int w = 0; w < 6; ++w) post += ctx[rng.uniform_index(ctx.size())] + " ";
    post += heads[rng.uniform_index(heads.size())];
    for (int w = 0; w < 3; ++w) post += " " + ctx[rng.uniform_index(ctx.size())];
    corpus.push_back(tokenize(post));
  }
  return corpus;
}

double cosine(std::span<const float> a, std::span<const float> b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += double(a[i]) * b[i];
    aa += double(a[i]) * a[i];
    bb += double(b[i]) * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

WordVecConfig small_config() {
  WordVecConfig cfg;
  cfg.dim = 16;
  cfg.epochs = 10;
  cfg.seed = 3;
  return cfg;
}

TEST(WordVec, CooccurringWordsAreCloser) {
  const auto corpus = topic_corpus();
  const auto vocab = build_vocabulary(corpus, 1);
  const auto t = train_word_embeddings(corpus, vocab, small_config()).table;
  const double same = cosine(t.lookup("cat"), t.lookup("dog"));
  const double cross = cosine(t.lookup("cat"), t.lookup("car"));
  EXPECT_GT(same, cross);
  EXPECT_GT(cosine(t.lookup("car"), t.lookup("bus")), cosine(t.lookup("bus"), t.lookup("dog")));
}

TEST(WordVec, DeterministicGivenSeed) {
  const auto corpus = topic_corpus();
  const auto vocab = build_vocabulary(corpus, 1);
  const auto a = train_word_embeddings(corpus, vocab, small_config());
  const auto b = train_word_embeddings(corpus, vocab, small_config());
  EXPECT_EQ(a.table.to_json(), b.table.to_json());
  EXPECT_EQ(a.epoch_loss, b.epoch_loss);

  auto other = small_config();
  other.seed = 4;
  EXPECT_NE(train_word_embeddings(corpus, vocab, other).table.to_json(), a.table.to_json());
}

TEST(WordVec, DimensionIsRespected) {
  const auto corpus = topic_corpus();
  const auto vocab = build_vocabulary(corpus, 1);
  auto cfg = small_config();
  cfg.dim = 4;
  const auto t = train_word_embeddings(corpus, vocab, cfg).table;
  EXPECT_EQ(t.dim(), 4u);
  EXPECT_EQ(t.size(), vocab.size());
  for (std::size_t i = 0; i < t.size(); ++i) EXPECT_EQ(t.row(i).size(), 4u);
  EXPECT_EQ(t.lookup("nothing-like-this").size(), 4u);
}

TEST(WordVec, ObjectiveMovingAverageNonIncreasing) {
  const auto corpus = topic_corpus();
  const auto vocab = build_vocabulary(corpus, 1);
  auto cfg = small_config();
  cfg.epochs = 30;
  std::vector<double> objective;
  const auto result = train_word_embeddings(corpus, vocab, cfg, &objective);
  ASSERT_EQ(objective.size(), 30u);
  ASSERT_EQ(result.epoch_loss.size(), 30u);
  constexpr std::size_t w = 10;
  double prev = INFINITY;
  for (std::size_t s = 0; s + w <= objective.size(); ++s) {
    double avg = 0;
    for (std::size_t i = s; i < s + w; ++i) avg += objective[i];
    avg /= w;
    EXPECT_LE(avg, prev) << "window starting at epoch " << s;
    prev = avg;
  }
  EXPECT_LT(objective.back(), objective.front());
}

TEST(WordVec, TracingDoesNotChangeTheTable) {
  const auto corpus = topic_corpus();
  const auto vocab = build_vocabulary(corpus, 1);
  std::vector<double> objective;
  EXPECT_EQ(train_word_embeddings(corpus, vocab, small_config(), &objective).table.to_json(),
            train_word_embeddings(corpus, vocab, small_config()).table.to_json());
}

TEST(WordVec, InvalidConfig) {
  const auto corpus = topic_corpus();
  const auto vocab = build_vocabulary(corpus, 1);
  auto cfg = small_config();
  cfg.dim = 1;
  EXPECT_THROW(train_word_embeddings(corpus, vocab, cfg), InputError);
  cfg = small_config();
  cfg.window = 0;
  EXPECT_THROW(train_word_embeddings(corpus, vocab, cfg), InputError);
}

TEST(EmbeddingTable, FallbackIsMeanVector) {
  const EmbeddingTable t({"a", "b"}, 2, {0.f, 2.f, 2.f, 0.f});
  const auto f = t.fallback();
  EXPECT_FLOAT_EQ(f[0], 1.f);
  EXPECT_FLOAT_EQ(f[1], 1.f);
  EXPECT_EQ(t.lookup("zzz").data(), f.data());
  EXPECT_FLOAT_EQ(t.lookup("b")[0], 2.f);
}

TEST(EmbeddingTable, JsonRoundTrip) {
  const EmbeddingTable t({"x", "[URL]", "y"}, 3, {0.1f, -0.2f, 0.3f, 1e-7f, 5.f, -6.f, 0.f, 0.f, 1.f});
  const auto back = EmbeddingTable::from_json(nlohmann::json::parse(t.to_json().dump()));
  EXPECT_EQ(back.words(), t.words());
  for (std::size_t i = 0; i < t.size(); ++i)
    for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(back.row(i)[k], t.row(i)[k]);
  EXPECT_THROW(EmbeddingTable::from_json(nlohmann::json{{"dim", 3}}), InputError);
}

TEST(EmbeddingTable, ShapeErrors) {
  EXPECT_THROW(EmbeddingTable({"a", "b"}, 2, {0.f, 1.f, 2.f}), Error);
  EXPECT_THROW(EmbeddingTable({"a", "a"}, 1, {0.f, 1.f}), Error);
}

// Central differences on the negative-sampling loss, in double precision.
TEST(SkipGram, GradientMatchesFiniteDifferences) {
  Rng rng(11);
  constexpr double h = 1e-5;
  SkipGramGradients<double> g;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t dim = 3 + rng.uniform_index(8), k = 1 + rng.uniform_index(5);
    auto rand_vec = [&] {
      std::vector<double> v(dim);
      for (auto& x : v) x = rng.uniform(-1.0, 1.0);
      return v;
    };
    std::vector<double> center = rand_vec(), context = rand_vec();
    std::vector<std::vector<double>> negs;
    for (std::size_t j = 0; j < k; ++j) negs.push_back(rand_vec());

    auto loss = [&] {
      std::vector<std::span<const double>> spans(negs.begin(), negs.end());
      return skipgram_loss<double>(center, context, spans);
    };
    std::vector<std::span<const double>> spans(negs.begin(), negs.end());
    skipgram_gradients<double>(center, context, spans, g);
    EXPECT_NEAR(g.loss, loss(), 1e-12);

    auto check = [&](std::vector<double>& param, const std::vector<double>& analytic) {
      for (std::size_t i = 0; i < dim; ++i) {
        const double saved = param[i];
        param[i] = saved + h;
        const double up = loss();
        param[i] = saved - h;
        const double down = loss();
        param[i] = saved;
        const double numeric = (up - down) / (2 * h);
        const double rel = std::abs(numeric - analytic[i]) / std::max(1e-8, std::abs(numeric) + std::abs(analytic[i]));
        EXPECT_LT(rel, 1e-4) << "trial " << trial << " index " << i;
      }
    };
    check(center, g.center);
    check(context, g.context);
    for (std::size_t j = 0; j < k; ++j) check(negs[j], g.negatives[j]);
  }
}

TEST(SkipGram, StableForLargeScores) {
  EXPECT_NEAR(detail::softplus(800.0), 800.0, 1e-9);
  EXPECT_NEAR(detail::softplus(-800.0), 0.0, 1e-300);
  EXPECT_DOUBLE_EQ(detail::sigmoid(-800.0), 0.0);
  EXPECT_DOUBLE_EQ(detail::sigmoid(800.0), 1.0);
}

}  // namespace
}  // namespace bottrinet
