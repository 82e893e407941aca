// bottrinet: command-line front end.
//
//   bottrinet synth    --output data.jsonl [--preset hard|rich|identical] [--config synth.cfg] [...]
//   bottrinet evaluate --input data.jsonl --output report.csv [--ground-truth NAME:cat1,cat2 ...]
//   bottrinet ablate   --input data.jsonl --output ablation.csv [--ground-truth ...]
//   bottrinet train    --input data.jsonl --output model_dir [--ground-truth ...]
//   bottrinet predict  --model model_dir --input data.jsonl --output predictions.csv
//
// Exit codes: 0 success, 1 internal error, 2 usage or input error.

#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bottrinet/corpus.hpp"
#include "bottrinet/experiment.hpp"
#include "bottrinet/io.hpp"
#include "bottrinet/synth.hpp"

namespace {

using namespace bottrinet;

struct PipelineFlags {
  std::uint64_t seed = 1;
  std::size_t dim = 100;
  double margin = 0.5;
  std::size_t epochs = 20;
  std::string anchor_mode = "centric";
  std::string negative_mode = "adapted";
  std::size_t trees = 100;
  double train_fraction = 0.7;
  double triplet_lr = 0.01;
  std::size_t triples_per_epoch = 0;
  std::size_t hidden_layers = 1;
  std::size_t w2v_epochs = 5;
  std::size_t window = 5;
  std::size_t negatives = 5;
  std::size_t min_count = 2;
  std::size_t max_depth = 12;
  std::size_t min_samples_leaf = 2;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--seed", seed, "Master seed; every component seed derives from it");
    cmd.add_option("--dim", dim, "Word/content embedding dimension");
    cmd.add_option("--margin", margin, "Triplet loss margin");
    cmd.add_option("--epochs", epochs, "Triplet training epochs");
    cmd.add_option("--anchor-mode", anchor_mode, "Anchor initialization")
        ->check(CLI::IsMember({"centric", "random"}));
    cmd.add_option("--negative-mode", negative_mode, "Negative selection")->check(CLI::IsMember({"adapted", "old"}));
    cmd.add_option("--trees", trees, "Random forest size");
    cmd.add_option("--train-fraction", train_fraction, "Share of each class used for training");
    cmd.add_option("--triplet-lr", triplet_lr, "Triplet SGD learning rate");
    cmd.add_option("--triples-per-epoch", triples_per_epoch, "Triples per epoch (0: four per training content)");
    cmd.add_option("--hidden-layers", hidden_layers, "Hidden layers in the refinement network");
    cmd.add_option("--w2v-epochs", w2v_epochs, "Word2vec epochs");
    cmd.add_option("--window", window, "Word2vec context window");
    cmd.add_option("--negatives", negatives, "Word2vec negative samples per pair");
    cmd.add_option("--min-count", min_count, "Minimum token count for the vocabulary");
    cmd.add_option("--max-depth", max_depth, "Maximum tree depth");
    cmd.add_option("--min-samples-leaf", min_samples_leaf, "Minimum samples per tree leaf");
  }

  PipelineConfig build() const {
    PipelineConfig c;
    c.set_seed(seed);
    c.train_fraction = train_fraction;
    c.min_count = min_count;
    c.wordvec.dim = dim;
    c.wordvec.epochs = w2v_epochs;
    c.wordvec.window = window;
    c.wordvec.negatives = negatives;
    c.triplet.margin = margin;
    c.triplet.epochs = epochs;
    c.triplet.learning_rate = triplet_lr;
    c.triplet.triples_per_epoch = triples_per_epoch;
    c.triplet.hidden_layers = hidden_layers;
    c.triplet.anchor_mode = anchor_mode == "random" ? AnchorMode::Random : AnchorMode::Centric;
    c.triplet.negative_mode = negative_mode == "old" ? NegativeMode::OldNegative : NegativeMode::Adapted;
    c.forest.n_trees = trees;
    c.forest.max_depth = max_depth;
    c.forest.min_samples_leaf = min_samples_leaf;
    c.validate();
    return c;
  }
};

std::vector<GroundTruth> ground_truths(const Dataset& ds, const std::vector<std::string>& specs) {
  std::vector<GroundTruth> out;
  if (specs.empty()) {
    out.push_back(build_ground_truth(ds, bot_categories(ds), "GT-ALL"));
    return out;
  }
  for (const auto& s : specs) {
    auto [name, cats] = parse_ground_truth_spec(s);
    out.push_back(build_ground_truth(ds, cats, name));
  }
  return out;
}

Dataset load_logged(const std::string& path) {
  Dataset ds = load_dataset(path);
  std::cerr << "loaded " << ds.accounts.size() << " accounts from " << path << " (" << ds.skipped
            << " skipped without posts)\n";
  return ds;
}

std::string percent(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * x);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bot detection with triplet-refined text embeddings"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a seeded synthetic dataset");
  std::string synth_out, synth_preset_name = "hard", synth_config;
  std::optional<std::uint64_t> synth_seed;
  std::optional<std::size_t> synth_bots, synth_genuine, synth_vocab;
  std::optional<double> synth_divergence;
  std::optional<std::string> synth_ppb, synth_ppg, synth_len, synth_category;
  synth->add_option("--output", synth_out, "Dataset file to write")->required();
  synth->add_option("--preset", synth_preset_name, "Base preset")->check(CLI::IsMember({"hard", "rich", "identical"}));
  synth->add_option("--config", synth_config, "Key-value config file applied over the preset")->default_str("(none)");
  synth->add_option("--seed", synth_seed, "Generator seed")->default_str("(preset)");
  synth->add_option("--bots", synth_bots, "Number of bot accounts")->default_str("(preset)");
  synth->add_option("--genuine", synth_genuine, "Number of genuine accounts")->default_str("(preset)");
  synth->add_option("--posts-per-bot", synth_ppb, "Posts per bot, lo-hi")->default_str("(preset)");
  synth->add_option("--posts-per-genuine", synth_ppg, "Posts per genuine account, lo-hi")->default_str("(preset)");
  synth->add_option("--vocab-size", synth_vocab, "Vocabulary size")->default_str("(preset)");
  synth->add_option("--divergence", synth_divergence, "Class vocabulary divergence in [0,1]")->default_str("(preset)");
  synth->add_option("--post-length", synth_len, "Tokens per post, lo-hi")->default_str("(preset)");
  synth->add_option("--bot-category", synth_category, "Category tag of generated bots")->default_str("(preset)");

  // evaluate / ablate / train share the pipeline flags
  std::string input, output, model_dir;
  std::vector<std::string> gt_specs;
  PipelineFlags eval_flags, ablate_flags, train_flags;

  auto* evaluate = app.add_subcommand("evaluate", "Compare raw and triplet-refined pipelines per ground truth");
  evaluate->add_option("--input", input, "Dataset file")->required();
  evaluate->add_option("--output", output, "Report CSV to write")->required();
  evaluate->add_option("--ground-truth", gt_specs, "NAME:cat1,cat2 (repeatable)")
      ->default_str("GT-ALL:<every bot category>");
  eval_flags.add_to(*evaluate);

  auto* ablate = app.add_subcommand("ablate", "Run the triple selector ablation");
  ablate->add_option("--input", input, "Dataset file")->required();
  ablate->add_option("--output", output, "Ablation CSV to write")->required();
  ablate->add_option("--ground-truth", gt_specs, "NAME:cat1,cat2 (repeatable)")
      ->default_str("GT-ALL:<every bot category>");
  ablate_flags.add_to(*ablate);

  auto* train = app.add_subcommand("train", "Train a model bundle on every account of one ground truth");
  train->add_option("--input", input, "Dataset file")->required();
  train->add_option("--output", output, "Bundle directory to write")->required();
  train->add_option("--ground-truth", gt_specs, "NAME:cat1,cat2 (at most one)")
      ->default_str("GT-ALL:<every bot category>");
  train_flags.add_to(*train);

  auto* predict = app.add_subcommand("predict", "Label every account of a dataset with a trained bundle");
  predict->add_option("--model", model_dir, "Bundle directory")->required();
  predict->add_option("--input", input, "Dataset file")->required();
  predict->add_option("--output", output, "Predictions CSV to write")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*synth) {
      SynthConfig cfg = synth_preset(synth_preset_name);
      if (!synth_config.empty()) {
        std::istringstream in(read_file(synth_config));
        cfg = read_synth_config(in, cfg);
      }
      if (synth_seed) cfg.seed = *synth_seed;
      if (synth_bots) cfg.n_bots = *synth_bots;
      if (synth_genuine) cfg.n_genuine = *synth_genuine;
      if (synth_vocab) cfg.vocab_size = *synth_vocab;
      if (synth_divergence) cfg.divergence = *synth_divergence;
      if (synth_ppb) set_synth_option(cfg, "posts_per_bot", *synth_ppb);
      if (synth_ppg) set_synth_option(cfg, "posts_per_genuine", *synth_ppg);
      if (synth_len) set_synth_option(cfg, "post_length", *synth_len);
      if (synth_category) cfg.bot_category = *synth_category;
      const Dataset ds = generate_dataset(cfg);
      save_dataset(ds, synth_out);
      std::ostringstream key;
      key << cfg.n_bots << '|' << cfg.n_genuine << '|' << cfg.posts_per_bot.lo << '-' << cfg.posts_per_bot.hi << '|'
          << cfg.posts_per_genuine.lo << '-' << cfg.posts_per_genuine.hi << '|' << cfg.vocab_size << '|'
          << cfg.divergence << '|' << cfg.post_length.lo << '-' << cfg.post_length.hi << '|' << cfg.bot_category
          << '|' << cfg.seed;
      std::cout << "config_fingerprint=" << fingerprint(key.str()) << '\n';
      std::cerr << "wrote " << ds.accounts.size() << " accounts to " << synth_out << '\n';
    } else if (*evaluate) {
      const PipelineConfig cfg = eval_flags.build();
      std::cout << "config_fingerprint=" << cfg.fingerprint() << '\n';
      const Dataset ds = load_logged(input);
      std::vector<ExperimentReport> reports;
      for (const auto& gt : ground_truths(ds, gt_specs)) {
        std::cerr << "evaluating " << gt.name << " (" << gt.positives.size() << " bots, " << gt.negatives.size()
                  << " genuine)\n";
        reports.push_back(run_experiment(gt, cfg));
        const auto& r = reports.back();
        std::cout << r.ground_truth << ": accuracy " << percent(r.baseline.accuracy) << " -> "
                  << percent(r.refined.accuracy) << ", f1 " << percent(r.baseline.f1) << " -> "
                  << percent(r.refined.f1) << '\n';
      }
      std::ostringstream csv;
      write_report_csv(reports, csv);
      write_file_atomic(output, csv.str());
    } else if (*ablate) {
      const PipelineConfig cfg = ablate_flags.build();
      std::cout << "config_fingerprint=" << cfg.fingerprint() << '\n';
      const Dataset ds = load_logged(input);
      std::vector<AblationReport> reports;
      for (const auto& gt : ground_truths(ds, gt_specs)) {
        std::cerr << "ablating " << gt.name << '\n';
        reports.push_back(run_ablation(gt, cfg));
        std::cout << gt.name << " split_fingerprint=" << reports.back().split_fingerprint << '\n';
        for (const auto& row : reports.back().rows)
          std::cout << "  " << row.setting << ": f1 " << percent(row.metrics.f1) << '\n';
      }
      std::ostringstream csv;
      write_ablation_csv(reports, csv);
      write_file_atomic(output, csv.str());
    } else if (*train) {
      if (gt_specs.size() > 1) throw InputError("train: expected at most one --ground-truth");
      const PipelineConfig cfg = train_flags.build();
      std::cout << "config_fingerprint=" << cfg.fingerprint() << '\n';
      const Dataset ds = load_logged(input);
      const auto gts = ground_truths(ds, gt_specs);
      const ModelBundle bundle = train_bundle(gts.front(), cfg);
      save_bundle(bundle, output);
      std::cerr << "wrote model bundle to " << output << '\n';
    } else if (*predict) {
      const ModelBundle bundle = load_bundle(model_dir);
      std::cout << "config_fingerprint=" << bundle.config.fingerprint() << '\n';
      const Dataset ds = load_logged(input);
      std::ostringstream csv;
      csv << "account_id,label,predicted\n";
      for (const auto& a : ds.accounts)
        csv << csv_field(a.id) << ',' << to_int(a.label) << ',' << to_int(predict_account(bundle, a)) << '\n';
      write_file_atomic(output, csv.str());
    }
  } catch (const InputError& e) {
    std::cerr << "error: input: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
