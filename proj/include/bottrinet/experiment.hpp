#pragma once

// End-to-end pipeline: split -> word vectors -> content embeddings ->
// (optional triplet refinement) -> account embeddings -> random forest.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bottrinet/classify.hpp"
#include "bottrinet/common.hpp"
#include "bottrinet/corpus.hpp"
#include "bottrinet/metrics.hpp"
#include "bottrinet/pooling.hpp"
#include "bottrinet/tripletnet.hpp"
#include "bottrinet/wordvec.hpp"

namespace bottrinet {

struct PipelineConfig {
  double train_fraction = 0.7;
  std::uint64_t split_seed = 1;
  std::size_t min_count = 2;
  WordVecConfig wordvec;
  TripletConfig triplet;
  ForestConfig forest;

  /// Derives every component seed from one master seed.
  void set_seed(std::uint64_t seed) {
    split_seed = mix_seed(seed, 10);
    wordvec.seed = mix_seed(seed, 11);
    triplet.seed = mix_seed(seed, 12);
    forest.seed = mix_seed(seed, 13);
  }

  void validate() const {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
      throw InputError("pipeline: train fraction must lie strictly between 0 and 1");
    if (min_count < 1) throw InputError("pipeline: min_count must be >= 1");
    wordvec.validate();
    triplet.validate();
    if (forest.n_trees < 1 || forest.max_depth < 1 || forest.min_samples_leaf < 1)
      throw InputError("pipeline: invalid forest configuration");
    if (forest.features_per_split > wordvec.dim) throw InputError("pipeline: features_per_split exceeds dim");
  }

  nlohmann::json to_json() const {
    return {{"train_fraction", train_fraction}, {"split_seed", split_seed}, {"min_count", min_count},
            {"wordvec", wordvec},               {"triplet", triplet},       {"forest", forest}};
  }

  static PipelineConfig from_json(const nlohmann::json& j) {
    try {
      PipelineConfig c;
      j.at("train_fraction").get_to(c.train_fraction);
      j.at("split_seed").get_to(c.split_seed);
      j.at("min_count").get_to(c.min_count);
      j.at("wordvec").get_to(c.wordvec);
      j.at("triplet").get_to(c.triplet);
      j.at("forest").get_to(c.forest);
      return c;
    } catch (const nlohmann::json::exception& e) {
      throw InputError(std::string("run config: ") + e.what());
    }
  }

  /// Stable across runs: hashes the canonical JSON form (sorted keys).
  std::string fingerprint() const { return bottrinet::fingerprint(to_json().dump()); }
};

struct ArmMetrics {
  ConfusionCounts counts;
  double accuracy = 0.0;
  double f1 = 0.0;
};

struct ExperimentReport {
  std::string ground_truth;
  CorpusStats stats;
  ArmMetrics baseline;
  ArmMetrics refined;
  double accuracy_gain = 0.0;  // refined - baseline
  double f1_gain = 0.0;
  std::string config_fingerprint;
  std::string split_fingerprint;
  double raw_distance_ratio = 0.0;      // test accounts, raw account embeddings
  double refined_distance_ratio = 0.0;  // test accounts, refined account embeddings
  std::vector<double> triplet_loss_trace;
};

struct AblationRow {
  std::string setting;
  AnchorMode anchor_mode = AnchorMode::Centric;
  NegativeMode negative_mode = NegativeMode::Adapted;
  ArmMetrics metrics;
  std::string split_fingerprint;
};

struct AblationReport {
  std::string ground_truth;
  std::string config_fingerprint;
  std::string split_fingerprint;
  std::vector<AblationRow> rows;
};

/// Everything both arms share: one split, one word-embedding table trained on
/// the training posts only, and raw content embeddings for every account.
struct PreparedData {
  SplitSets split;
  EmbeddingTable table;
  std::vector<AccountContents> train_raw;
  std::vector<AccountContents> test_raw;
  std::string split_fingerprint;
};

inline std::string split_fingerprint(const SplitSets& s) {
  std::string bytes = "train";
  for (const auto& a : s.train) bytes += '\n' + a.id;
  bytes += "\ntest";
  for (const auto& a : s.test) bytes += '\n' + a.id;
  return fingerprint(bytes);
}

inline EmbeddingTable train_table(const std::vector<Account>& accounts, const PipelineConfig& cfg) {
  std::vector<std::vector<Token>> corpus;
  for (const auto& a : accounts)
    for (const auto& p : a.posts) corpus.push_back(tokenize(p));
  const Vocabulary vocab = build_vocabulary(corpus, cfg.min_count);
  return train_word_embeddings(corpus, vocab, cfg.wordvec).table;
}

inline PreparedData prepare_data(const GroundTruth& gt, const PipelineConfig& cfg) {
  cfg.validate();
  PreparedData d;
  d.split = split(gt, cfg.train_fraction, cfg.split_seed);
  d.split_fingerprint = split_fingerprint(d.split);
  d.table = train_table(d.split.train, cfg);
  d.train_raw = embed_contents(d.table, d.split.train);
  d.test_raw = embed_contents(d.table, d.split.test);
  return d;
}

inline std::vector<Vector> feature_rows(const std::vector<AccountEmbedding>& accounts) {
  std::vector<Vector> rows;
  rows.reserve(accounts.size());
  for (const auto& a : accounts) rows.push_back(a.vector);
  return rows;
}

inline std::vector<Label> label_column(const std::vector<AccountEmbedding>& accounts) {
  std::vector<Label> labels;
  labels.reserve(accounts.size());
  for (const auto& a : accounts) labels.push_back(a.label);
  return labels;
}

/// Pools contents into account embeddings, fits a forest on train, scores test.
inline ArmMetrics evaluate_arm(const std::vector<AccountContents>& train, const std::vector<AccountContents>& test,
                               const ForestConfig& forest_cfg) {
  const auto train_acc = pool_accounts(train);
  const auto test_acc = pool_accounts(test);
  const auto x = feature_rows(train_acc);
  const auto y = label_column(train_acc);
  const ForestModel forest = train_forest(x, y, forest_cfg);

  std::vector<Label> predictions;
  predictions.reserve(test_acc.size());
  for (const auto& a : test_acc) predictions.push_back(forest.predict(a.vector));
  ArmMetrics m;
  m.counts = confusion(predictions, label_column(test_acc));
  m.accuracy = accuracy(m.counts);
  m.f1 = f1(m.counts);
  return m;
}

/// Baseline (raw contents) against refined (triplet-refined contents) on the
/// same split, word table and forest configuration.
inline ExperimentReport run_experiment(const GroundTruth& gt, const PipelineConfig& cfg) {
  const PreparedData d = prepare_data(gt, cfg);

  ExperimentReport r;
  r.ground_truth = gt.name;
  r.stats = corpus_stats(gt);
  r.config_fingerprint = cfg.fingerprint();
  r.split_fingerprint = d.split_fingerprint;

  r.baseline = evaluate_arm(d.train_raw, d.test_raw, cfg.forest);

  auto trained = train_triplet_network(d.train_raw, cfg.triplet);
  const auto train_ref = refine(trained.network, d.train_raw);
  const auto test_ref = refine(trained.network, d.test_raw);
  r.refined = evaluate_arm(train_ref, test_ref, cfg.forest);
  r.triplet_loss_trace = std::move(trained.loss_trace);

  r.accuracy_gain = r.refined.accuracy - r.baseline.accuracy;
  r.f1_gain = r.refined.f1 - r.baseline.f1;
  r.raw_distance_ratio = class_distance_ratio(pool_accounts(d.test_raw));
  r.refined_distance_ratio = class_distance_ratio(pool_accounts(test_ref));
  return r;
}

inline constexpr const char* kRandomAnchorSetting = "Random Anchor";
inline constexpr const char* kOldNegativeSetting = "Old Negative";
inline constexpr const char* kFullSetting = "BotTriNet";

/// Three refined runs that differ only in the triple selector settings.
inline AblationReport run_ablation(const GroundTruth& gt, const PipelineConfig& cfg) {
  const PreparedData d = prepare_data(gt, cfg);
  AblationReport report;
  report.ground_truth = gt.name;
  report.config_fingerprint = cfg.fingerprint();
  report.split_fingerprint = d.split_fingerprint;

  const struct {
    const char* name;
    AnchorMode anchor;
    NegativeMode negative;
  } settings[] = {{kRandomAnchorSetting, AnchorMode::Random, NegativeMode::Adapted},
                  {kOldNegativeSetting, AnchorMode::Centric, NegativeMode::OldNegative},
                  {kFullSetting, AnchorMode::Centric, NegativeMode::Adapted}};

  for (const auto& s : settings) {
    TripletConfig tc = cfg.triplet;
    tc.anchor_mode = s.anchor;
    tc.negative_mode = s.negative;
    const auto trained = train_triplet_network(d.train_raw, tc);
    AblationRow row;
    row.setting = s.name;
    row.anchor_mode = s.anchor;
    row.negative_mode = s.negative;
    row.metrics = evaluate_arm(refine(trained.network, d.train_raw), refine(trained.network, d.test_raw), cfg.forest);
    row.split_fingerprint = d.split_fingerprint;
    report.rows.push_back(std::move(row));
  }
  return report;
}

// ---------------------------------------------------------------------------
// CSV output

/// Metric values are written in units of 1e-4 so that a gain column is
/// exactly the difference of the two printed values.
inline long long metric_units(double x) { return std::llround(x * 10000.0); }

inline std::string format_units(long long units) {
  const bool neg = units < 0;
  const unsigned long long u = static_cast<unsigned long long>(neg ? -units : units);
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s%llu.%04llu", neg ? "-" : "", u / 10000, u % 10000);
  return buf;
}

inline std::string format4(double x) { return format_units(metric_units(x)); }

inline constexpr const char* kReportHeader =
    "ground_truth,count_a,count_t,count_m,baseline_accuracy,baseline_f1,refined_accuracy,refined_f1,"
    "accuracy_gain,f1_gain,config_fingerprint";

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + '"';
}

inline void write_report_csv(const std::vector<ExperimentReport>& reports, std::ostream& out) {
  out << kReportHeader << '\n';
  for (const auto& r : reports) {
    const long long ba = metric_units(r.baseline.accuracy), bf = metric_units(r.baseline.f1);
    const long long ra = metric_units(r.refined.accuracy), rf = metric_units(r.refined.f1);
    out << csv_field(r.ground_truth) << ',' << r.stats.count_a << ',' << r.stats.count_t << ','
        << format4(r.stats.count_m) << ',' << format_units(ba) << ',' << format_units(bf) << ',' << format_units(ra)
        << ',' << format_units(rf) << ',' << format_units(ra - ba) << ',' << format_units(rf - bf) << ','
        << r.config_fingerprint << '\n';
  }
}

inline constexpr const char* kAblationHeader = "ground_truth,setting,f1";

inline void write_ablation_csv(const std::vector<AblationReport>& reports, std::ostream& out) {
  out << kAblationHeader << '\n';
  for (const auto& r : reports)
    for (const auto& row : r.rows) out << csv_field(r.ground_truth) << ',' << csv_field(row.setting) << ',' << format4(row.metrics.f1) << '\n';
}

// ---------------------------------------------------------------------------
// Deployable model: all three stages trained on every account of a ground truth.

struct ModelBundle {
  std::string ground_truth;
  PipelineConfig config;
  EmbeddingTable table;
  Network network;
  ForestModel forest;
};

inline ModelBundle train_bundle(const GroundTruth& gt, const PipelineConfig& cfg) {
  cfg.validate();
  std::vector<Account> accounts = gt.positives;
  accounts.insert(accounts.end(), gt.negatives.begin(), gt.negatives.end());
  if (gt.positives.size() < 2 || gt.negatives.size() < 2)
    throw InputError("train: ground truth '" + gt.name + "' needs at least 2 accounts per class");

  ModelBundle b;
  b.ground_truth = gt.name;
  b.config = cfg;
  b.table = train_table(accounts, cfg);
  const auto raw = embed_contents(b.table, accounts);
  b.network = train_triplet_network(raw, cfg.triplet).network;
  const auto pooled = pool_accounts(refine(b.network, raw));
  b.forest = train_forest(feature_rows(pooled), label_column(pooled), cfg.forest);
  return b;
}

inline Label predict_account(const ModelBundle& b, const Account& account) {
  const auto raw = embed_contents(b.table, {account});
  const auto pooled = account_embedding(refine(b.network, raw).front());
  return b.forest.predict(pooled.vector);
}

}  // namespace bottrinet
