#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "bottrinet/experiment.hpp"
#include "bottrinet/io.hpp"
#include "bottrinet/synth.hpp"

namespace bottrinet {
namespace {

PipelineConfig fast_pipeline(std::uint64_t seed = 1) {
  PipelineConfig p;
  p.wordvec.dim = 16;
  p.wordvec.epochs = 3;
  p.triplet.epochs = 3;
  p.forest.n_trees = 30;
  p.set_seed(seed);
  return p;
}

GroundTruth small_gt(double divergence, std::uint64_t seed = 5) {
  SynthConfig c;
  c.n_bots = 30;
  c.n_genuine = 30;
  c.posts_per_bot = {4, 8};
  c.posts_per_genuine = {4, 8};
  c.vocab_size = 150;
  c.divergence = divergence;
  c.seed = seed;
  return build_ground_truth(generate_dataset(c), {c.bot_category}, "GT-TEST");
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

long long units(const std::string& s) { return std::llround(std::stod(s) * 10000.0); }

TEST(Format, FourDecimalUnits) {
  EXPECT_EQ(format4(0.5), "0.5000");
  EXPECT_EQ(format4(1.0), "1.0000");
  EXPECT_EQ(format4(0.123456), "0.1235");
  EXPECT_EQ(format_units(-500), "-0.0500");
  EXPECT_EQ(format_units(0), "0.0000");
  EXPECT_EQ(csv_field("plain"), "plain");
  EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
}

TEST(Experiment, SeparableDataHitsCeiling) {
  const auto r = run_experiment(small_gt(1.0), fast_pipeline());
  EXPECT_EQ(r.baseline.accuracy, 1.0);
  EXPECT_EQ(r.refined.accuracy, 1.0);
  EXPECT_EQ(r.accuracy_gain, 0.0);
  EXPECT_EQ(r.f1_gain, 0.0);
  EXPECT_EQ(r.triplet_loss_trace.size(), 3u);
}

TEST(Experiment, ReportCsvGainsMatchPrintedColumns) {
  std::vector<ExperimentReport> reports;
  for (std::uint64_t seed : {1, 2, 3}) reports.push_back(run_experiment(small_gt(0.3, seed), fast_pipeline(seed)));
  std::ostringstream out;
  write_report_csv(reports, out);

  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, kReportHeader);
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    const auto f = split_csv_line(line);
    ASSERT_EQ(f.size(), 11u) << line;
    EXPECT_EQ(f[0], "GT-TEST");
    for (std::size_t i = 3; i <= 9; ++i) {
      const auto dot = f[i].find('.');
      ASSERT_NE(dot, std::string::npos);
      EXPECT_EQ(f[i].size() - dot - 1, 4u) << f[i];
    }
    EXPECT_EQ(units(f[8]), units(f[6]) - units(f[4]));
    EXPECT_EQ(units(f[9]), units(f[7]) - units(f[5]));
    EXPECT_EQ(f[10], reports[rows].config_fingerprint);
    ++rows;
  }
  EXPECT_EQ(rows, 3u);
}

TEST(Experiment, IdenticalConfigGivesIdenticalReport) {
  auto csv = [] {
    std::ostringstream out;
    write_report_csv({run_experiment(small_gt(0.3), fast_pipeline())}, out);
    return out.str();
  };
  EXPECT_EQ(csv(), csv());
}

TEST(Experiment, TableUsesTrainingPostsOnly) {
  auto gt = small_gt(0.3);
  const auto cfg = fast_pipeline();
  const auto split_sets = split(gt, cfg.train_fraction, cfg.split_seed);
  const std::string marker = "zzqmarkerword";
  const std::string test_id = split_sets.test.front().id;
  for (auto* side : {&gt.positives, &gt.negatives})
    for (auto& a : *side)
      if (a.id == test_id) a.posts.insert(a.posts.end(), 5, marker + " " + marker);
  const auto prepared = prepare_data(gt, cfg);
  EXPECT_FALSE(prepared.table.find(marker));
  EXPECT_EQ(prepared.split_fingerprint, split_fingerprint(split_sets));
}

TEST(Ablation, ThreeRowsSharingOneSplit) {
  const auto a = run_ablation(small_gt(0.3), fast_pipeline());
  ASSERT_EQ(a.rows.size(), 3u);
  EXPECT_EQ(a.rows[0].setting, "Random Anchor");
  EXPECT_EQ(a.rows[1].setting, "Old Negative");
  EXPECT_EQ(a.rows[2].setting, "BotTriNet");
  EXPECT_EQ(a.rows[0].anchor_mode, AnchorMode::Random);
  EXPECT_EQ(a.rows[1].negative_mode, NegativeMode::OldNegative);
  for (const auto& r : a.rows) EXPECT_EQ(r.split_fingerprint, a.split_fingerprint);

  std::ostringstream out;
  write_ablation_csv({a}, out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, kAblationHeader);
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    EXPECT_EQ(split_csv_line(line).size(), 3u);
    ++rows;
  }
  EXPECT_EQ(rows, 3u);
}

TEST(Ablation, FullSettingMatchesMainExperiment) {
  const auto gt = small_gt(0.3);
  const auto a = run_ablation(gt, fast_pipeline());
  const auto r = run_experiment(gt, fast_pipeline());
  EXPECT_EQ(a.rows[2].metrics.f1, r.refined.f1);
  EXPECT_EQ(a.split_fingerprint, r.split_fingerprint);
}

TEST(PipelineConfig, FingerprintAndJson) {
  const auto a = fast_pipeline();
  EXPECT_EQ(a.fingerprint(), fast_pipeline().fingerprint());
  EXPECT_EQ(a.fingerprint().size(), 16u);
  EXPECT_NE(a.fingerprint(), fast_pipeline(2).fingerprint());
  auto b = a;
  b.triplet.margin = 0.25;
  EXPECT_NE(a.fingerprint(), b.fingerprint());
  EXPECT_EQ(PipelineConfig::from_json(nlohmann::json::parse(a.to_json().dump())).fingerprint(), a.fingerprint());
  EXPECT_THROW(PipelineConfig::from_json(nlohmann::json::object()), InputError);
}

TEST(PipelineConfig, Validation) {
  auto c = fast_pipeline();
  c.train_fraction = 1.0;
  EXPECT_THROW(c.validate(), InputError);
  c = fast_pipeline();
  c.forest.features_per_split = 17;
  EXPECT_THROW(c.validate(), InputError);
}

TEST(Bundle, SaveLoadPredictsIdentically) {
  const auto gt = small_gt(0.5);
  const auto bundle = train_bundle(gt, fast_pipeline());
  const auto dir = std::filesystem::temp_directory_path() / "bottrinet_bundle_test";
  std::filesystem::remove_all(dir);
  save_bundle(bundle, dir);
  const auto loaded = load_bundle(dir);
  EXPECT_EQ(loaded.ground_truth, "GT-TEST");
  EXPECT_EQ(loaded.config.fingerprint(), bundle.config.fingerprint());
  EXPECT_EQ(loaded.network, bundle.network);
  for (const auto* side : {&gt.positives, &gt.negatives})
    for (const auto& a : *side) EXPECT_EQ(predict_account(loaded, a), predict_account(bundle, a));
  std::filesystem::remove_all(dir);
  EXPECT_THROW(load_bundle(dir), InputError);
}

}  // namespace
}  // namespace bottrinet
