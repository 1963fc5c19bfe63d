// tools/marginlm.cc
//
// Command-line front end wiring the toolkit into one workflow:
//   synth        seeded synthetic corpora + n-best lists + oracle report
//   train-mle    train the recurrent LM by minimum perplexity
//   adapt        softmax-only fine-tuning on in-domain text
//   train-margin discriminative fine-tuning (naive | margin | rank)
//   ppl, score   corpus perplexity / per-sentence LM-scores
//   tune         interpolation-weight grid search on a dev n-best file
//   rescore      rerank an n-best file by task + weight * LM score
//   eval         top-1 corpus metric of an n-best file
//   diagnose     margin histogram, correlation boxplot, comparison table
//
// Every run derives all randomness from --seed and writes a manifest next
// to its outputs recording the resolved configuration.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "marginlm/checkpoint.h"
#include "marginlm/common.h"
#include "marginlm/corpus-io.h"
#include "marginlm/diagnostics.h"
#include "marginlm/losses.h"
#include "marginlm/nbest.h"
#include "marginlm/rescore.h"
#include "marginlm/rng.h"
#include "marginlm/rnn.h"
#include "marginlm/trainer.h"
#include "marginlm/vocab.h"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace marginlm;

namespace {

void WriteManifest(const std::string& subcommand, const json& config,
                   const json& inputs, const json& outputs, const fs::path& path) {
  json manifest;
  manifest["toolkit_version"] = kVersion;
  manifest["subcommand"] = subcommand;
  manifest["config"] = config;
  manifest["inputs"] = inputs;
  manifest["outputs"] = outputs;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw MarginlmError("cannot write manifest: " + path.string());
  out << manifest.dump(2) << '\n';
}

fs::path ManifestBeside(std::string artifact) {
  artifact += ".manifest.json";
  return fs::path(std::move(artifact));
}

std::vector<IdSentence> EncodeCorpus(const Vocabulary& vocab,
                                     const std::vector<Sentence>& corpus) {
  std::vector<IdSentence> out;
  out.reserve(corpus.size());
  for (const auto& s : corpus) out.push_back(vocab.EncodeSentence(s));
  return out;
}

void PrintEpoch(const EpochStats& stats, bool discriminative) {
  std::cerr << "epoch " << stats.epoch << ": train loss " << stats.train_loss_mean;
  if (stats.has_dev)
    std::cerr << (discriminative ? ", dev loss " : ", dev PPL ") << stats.dev_value;
  if (stats.has_margin_fraction)
    std::cerr << ", dev positive-margin fraction " << stats.dev_positive_margin_fraction;
  std::cerr << "\n";
}

MetricKind ParseMetric(const std::string& name) {
  if (name == "wer") return MetricKind::kWer;
  if (name == "bleu") return MetricKind::kBleu;
  throw MarginlmError("unknown metric: " + name);
}

struct Grid {
  double min = 0.0, max = 2.0, step = 0.05;
};

Grid ParseGrid(const std::string& spec) {
  Grid g;
  if (std::sscanf(spec.c_str(), "%lf:%lf:%lf", &g.min, &g.max, &g.step) != 3)
    throw MarginlmError("grid must look like min:max:step, got '" + spec + "'");
  return g;
}

// ------------------------------------------------------------------ synth

struct SynthOptions {
  std::uint64_t seed = 7;
  std::int32_t vocab_size = 64;
  std::int64_t train_n = 20000;
  std::int64_t dev_n = 1000;
  std::int64_t test_n = 1000;
  std::int64_t nbest_train_n = 2000;
  ChannelConfig channel;
  std::string out_dir;
};

int RunSynth(const SynthOptions& opt) {
  fs::create_directories(opt.out_dir);
  const fs::path dir(opt.out_dir);

  std::cerr << "sampling source chain and corpora...\n";
  GeneratedCorpus train = GenerateSourceCorpus(opt.vocab_size, opt.train_n, opt.seed);
  const std::vector<Sentence> dev =
      SampleCorpus(train.source, opt.dev_n, DeriveSeed(opt.seed, streams::kDevCorpus));
  const std::vector<Sentence> test =
      SampleCorpus(train.source, opt.test_n, DeriveSeed(opt.seed, streams::kTestCorpus));
  WriteCorpus(train.sentences, (dir / "train.txt").string());
  WriteCorpus(dev, (dir / "dev.txt").string());
  WriteCorpus(test, (dir / "test.txt").string());

  std::cerr << "corrupting references into n-best lists...\n";
  const std::int64_t nbest_n = std::min(opt.nbest_train_n, opt.train_n);
  const std::span<const Sentence> nbest_train_refs(train.sentences.data(),
                                                   static_cast<std::size_t>(nbest_n));
  ChannelConfig channel = opt.channel;
  channel.seed = DeriveSeed(opt.seed, streams::kChannelTrain);
  const auto nbest_train = GenerateNBest(nbest_train_refs, train.source, channel, "train-");
  channel.seed = DeriveSeed(opt.seed, streams::kChannelDev);
  const auto nbest_dev = GenerateNBest(dev, train.source, channel, "dev-");
  channel.seed = DeriveSeed(opt.seed, streams::kChannelTest);
  const auto nbest_test = GenerateNBest(test, train.source, channel, "test-");
  WriteNBest(nbest_train, (dir / "nbest_train.jsonl").string());
  WriteNBest(nbest_dev, (dir / "nbest_dev.jsonl").string());
  WriteNBest(nbest_test, (dir / "nbest_test.jsonl").string());

  // Hypotheses are written sorted by task score, so the file-order top-1
  // is the no-rescore baseline.
  json report;
  report["source_ppl"]["train"] = OracleSourcePpl(train.source, train.sentences);
  report["source_ppl"]["dev"] = OracleSourcePpl(train.source, dev);
  report["source_ppl"]["test"] = OracleSourcePpl(train.source, test);
  report["baseline_top1_wer"]["dev"] = EvaluateTop1(nbest_dev, MetricKind::kWer);
  report["baseline_top1_wer"]["test"] = EvaluateTop1(nbest_test, MetricKind::kWer);
  {
    std::ofstream out(dir / "oracle_report.json", std::ios::binary);
    if (!out) throw MarginlmError("cannot write oracle report");
    out << report.dump(2) << '\n';
  }

  json config{{"seed", opt.seed},
              {"vocab_size", opt.vocab_size},
              {"train_n", opt.train_n},
              {"dev_n", opt.dev_n},
              {"test_n", opt.test_n},
              {"nbest_train_n", opt.nbest_train_n},
              {"k", opt.channel.k},
              {"p_sub", opt.channel.p_sub},
              {"p_del", opt.channel.p_del},
              {"p_ins", opt.channel.p_ins},
              {"noise_sigma", opt.channel.noise_sigma}};
  json outputs{{"train", "train.txt"},         {"dev", "dev.txt"},
               {"test", "test.txt"},           {"nbest_train", "nbest_train.jsonl"},
               {"nbest_dev", "nbest_dev.jsonl"}, {"nbest_test", "nbest_test.jsonl"},
               {"oracle_report", "oracle_report.json"}};
  WriteManifest("synth", config, json::object(), outputs, dir / "manifest.json");
  std::cerr << "synth done: " << opt.out_dir << "\n";
  return 0;
}

// -------------------------------------------------------------- train-mle

struct TrainMleOptions {
  std::string corpus, dev, out, curve;
  std::int32_t vocab_size = 64;
  std::int32_t embed = 32;
  std::int32_t hidden = 64;
  TrainingConfig config;
};

int RunTrainMle(const TrainMleOptions& opt) {
  const std::vector<Sentence> corpus = ReadCorpus(opt.corpus);
  const Vocabulary vocab = Vocabulary::Build(corpus, opt.vocab_size);
  const std::vector<IdSentence> train_ids = EncodeCorpus(vocab, corpus);
  std::vector<IdSentence> dev_ids;
  if (!opt.dev.empty()) dev_ids = EncodeCorpus(vocab, ReadCorpus(opt.dev));

  ModelParams model =
      InitParams(vocab.size(), opt.embed, opt.hidden,
                 DeriveSeed(opt.config.seed, streams::kInitParams), /*zero_output=*/false);

  TrainingConfig config = opt.config;
  config.loss_kind = LossKind::kMle;
  const LossCurve curve = TrainMle(model, train_ids, dev_ids, config,
                                   [](const EpochStats& s) { PrintEpoch(s, false); });

  SaveCheckpoint(model, vocab, opt.out);
  if (!opt.curve.empty()) EmitLossCurve(curve, opt.curve);

  json config_json{{"vocab_size", opt.vocab_size}, {"embed", opt.embed},
                   {"hidden", opt.hidden},         {"epochs", config.epochs},
                   {"lr", config.lr},              {"batch", config.batch_size},
                   {"seed", config.seed}};
  if (config.grad_clip) config_json["grad_clip"] = *config.grad_clip;
  json inputs{{"corpus", opt.corpus}};
  if (!opt.dev.empty()) inputs["dev"] = opt.dev;
  json outputs{{"model", opt.out}};
  if (!opt.curve.empty()) outputs["curve"] = opt.curve;
  WriteManifest("train-mle", config_json, inputs, outputs, ManifestBeside(opt.out));
  return 0;
}

// ------------------------------------------------------------------ adapt

struct AdaptOptions {
  std::string model, corpus, dev, out, curve;
  TrainingConfig config;
};

int RunAdapt(const AdaptOptions& opt) {
  auto [model, vocab] = LoadCheckpoint(opt.model);
  const std::vector<IdSentence> corpus_ids = EncodeCorpus(vocab, ReadCorpus(opt.corpus));
  std::vector<IdSentence> dev_ids;
  if (!opt.dev.empty()) dev_ids = EncodeCorpus(vocab, ReadCorpus(opt.dev));

  TrainingConfig config = opt.config;
  config.loss_kind = LossKind::kMle;
  config.freeze = FreezeMask{.emb = true, .u = true, .v_rec = true, .w = false, .b = false};
  const LossCurve curve = AdaptSoftmax(model, corpus_ids, dev_ids, config,
                                       [](const EpochStats& s) { PrintEpoch(s, false); });

  SaveCheckpoint(model, vocab, opt.out);
  if (!opt.curve.empty()) EmitLossCurve(curve, opt.curve);

  json config_json{{"epochs", config.epochs},
                   {"lr", config.lr},
                   {"batch", config.batch_size},
                   {"seed", config.seed}};
  json inputs{{"model", opt.model}, {"corpus", opt.corpus}};
  if (!opt.dev.empty()) inputs["dev"] = opt.dev;
  json outputs{{"model", opt.out}};
  if (!opt.curve.empty()) outputs["curve"] = opt.curve;
  WriteManifest("adapt", config_json, inputs, outputs, ManifestBeside(opt.out));
  return 0;
}

// ----------------------------------------------------------- train-margin

struct TrainMarginOptions {
  std::string model, nbest, dev_nbest, out, curve;
  std::string loss = "margin";
  std::string metric = "wer";
  TrainingConfig config;
};

int RunTrainMargin(const TrainMarginOptions& opt) {
  auto [model, vocab] = LoadCheckpoint(opt.model);

  TrainingConfig config = opt.config;
  if (opt.loss == "naive") {
    config.loss_kind = LossKind::kNaive;
  } else if (opt.loss == "margin") {
    config.loss_kind = LossKind::kMargin;
  } else if (opt.loss == "rank") {
    config.loss_kind = LossKind::kRank;
  } else {
    throw MarginlmError("unknown loss kind: " + opt.loss);
  }
  config.sort_metric = ParseMetric(opt.metric);

  auto load_groups = [&](const std::string& path) {
    DiscriminativeData data;
    const std::vector<NBestGroup> groups = ReadNBest(path);
    if (config.loss_kind == LossKind::kRank) {
      std::vector<RankedGroup> ranked;
      ranked.reserve(groups.size());
      for (const auto& g : groups) ranked.push_back(SortCandidates(g, config.sort_metric));
      data.rank_groups = EncodeRankedGroups(vocab, ranked);
    } else {
      data.pair_groups = EncodeGroups(vocab, groups);
    }
    return data;
  };
  const DiscriminativeData train = load_groups(opt.nbest);
  DiscriminativeData dev;
  if (!opt.dev_nbest.empty()) dev = load_groups(opt.dev_nbest);

  const LossCurve curve = TrainDiscriminative(model, train, dev, config,
                                              [](const EpochStats& s) { PrintEpoch(s, true); });

  SaveCheckpoint(model, vocab, opt.out);
  if (!opt.curve.empty()) EmitLossCurve(curve, opt.curve);

  json config_json{{"loss", opt.loss},       {"tau", config.tau},
                   {"metric", opt.metric},   {"epochs", config.epochs},
                   {"lr", config.lr},        {"batch", config.batch_size},
                   {"seed", config.seed},    {"allow_cold_start", config.allow_cold_start}};
  if (config.grad_clip) config_json["grad_clip"] = *config.grad_clip;
  json inputs{{"model", opt.model}, {"nbest", opt.nbest}};
  if (!opt.dev_nbest.empty()) inputs["dev_nbest"] = opt.dev_nbest;
  json outputs{{"model", opt.out}};
  if (!opt.curve.empty()) outputs["curve"] = opt.curve;
  WriteManifest("train-margin", config_json, inputs, outputs, ManifestBeside(opt.out));
  return 0;
}

// ------------------------------------------------------------- ppl, score

int RunPpl(const std::string& model_path, const std::string& corpus_path) {
  auto [model, vocab] = LoadCheckpoint(model_path);
  const std::vector<IdSentence> ids = EncodeCorpus(vocab, ReadCorpus(corpus_path));
  std::cout << FormatDouble(CorpusPerplexity(model, ids)) << "\n";
  return 0;
}

int RunScore(const std::string& model_path, const std::string& input_path) {
  auto [model, vocab] = LoadCheckpoint(model_path);
  for (const auto& sentence : ReadCorpus(input_path))
    std::cout << FormatDouble(LmScore(model, vocab.EncodeSentence(sentence))) << "\n";
  return 0;
}

// ------------------------------------------------------------------- tune

struct TuneOptions {
  std::string model, nbest, out;
  std::string objective = "min-wer";
  std::string grid = "0:2:0.05";
  bool length_norm = false;
};

int RunTune(const TuneOptions& opt) {
  auto [model, vocab] = LoadCheckpoint(opt.model);
  const std::vector<NBestGroup> groups = ReadNBest(opt.nbest);
  const Grid grid = ParseGrid(opt.grid);

  RescoreConfig cfg;
  cfg.length_norm = opt.length_norm;
  cfg.grid_min = grid.min;
  cfg.grid_max = grid.max;
  cfg.grid_step = grid.step;

  TuneObjective objective;
  if (opt.objective == "min-wer") {
    objective = TuneObjective::kMinWer;
  } else if (opt.objective == "max-bleu") {
    objective = TuneObjective::kMaxBleu;
  } else {
    throw MarginlmError("unknown objective: " + opt.objective);
  }

  const TuneResult result = TuneWeight(groups, model, vocab, cfg, objective);
  std::cout << FormatDouble(result.best_weight) << "\t" << FormatDouble(result.best_objective)
            << "\n";

  if (!opt.out.empty()) {
    std::ofstream out(opt.out, std::ios::binary);
    if (!out) throw MarginlmError("cannot write tune table: " + opt.out);
    out << "weight,objective\n";
    for (const auto& point : result.table)
      out << FormatDouble(point.weight) << ',' << FormatDouble(point.objective) << '\n';
    json config_json{{"objective", opt.objective},
                     {"grid", opt.grid},
                     {"length_norm", opt.length_norm}};
    WriteManifest("tune", config_json, json{{"model", opt.model}, {"nbest", opt.nbest}},
                  json{{"table", opt.out}}, ManifestBeside(opt.out));
  }
  return 0;
}

// ---------------------------------------------------------------- rescore

struct RescoreOptions {
  std::string model, nbest, out;
  double weight = 0.0;
  bool length_norm = false;
};

int RunRescore(const RescoreOptions& opt) {
  auto [model, vocab] = LoadCheckpoint(opt.model);
  const std::vector<NBestGroup> groups = ReadNBest(opt.nbest);
  RescoreConfig cfg;
  cfg.weight = opt.weight;
  cfg.length_norm = opt.length_norm;
  const std::vector<NBestGroup> reranked = RescoreGroups(groups, model, vocab, cfg);
  WriteNBest(reranked, opt.out);

  json config_json{{"weight", opt.weight}, {"length_norm", opt.length_norm}};
  WriteManifest("rescore", config_json, json{{"model", opt.model}, {"nbest", opt.nbest}},
                json{{"nbest", opt.out}}, ManifestBeside(opt.out));
  return 0;
}

// ------------------------------------------------------------------- eval

int RunEval(const std::string& nbest_path, const std::string& metric_name) {
  const std::vector<NBestGroup> groups = ReadNBest(nbest_path);
  const MetricKind metric = ParseMetric(metric_name);
  const double score = EvaluateTop1(groups, metric);
  // Paper-style display scale: percent for WER, 0-100 for BLEU.
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * score);
  std::cout << buf << "\n";
  return 0;
}

// --------------------------------------------------------------- diagnose

struct DiagnoseOptions {
  std::string models;  // name=path,name=path,...
  std::string nbest, test_nbest, dev_corpus, test_corpus, out_dir;
  std::string metric = "wer";
  std::string grid = "0:2:0.05";
  bool length_norm = false;
  HistogramConfig hist;
};

int RunDiagnose(const DiagnoseOptions& opt) {
  fs::create_directories(opt.out_dir);
  const fs::path dir(opt.out_dir);
  const MetricKind metric = ParseMetric(opt.metric);

  // Parse name=path pairs, preserving order.
  std::vector<std::pair<std::string, std::string>> specs;
  {
    std::string token;
    std::istringstream iss(opt.models);
    while (std::getline(iss, token, ',')) {
      const auto eq = token.find('=');
      if (eq == std::string::npos || eq == 0 || eq + 1 == token.size())
        throw MarginlmError("--models expects name=path[,name=path...], got '" + token + "'");
      specs.emplace_back(token.substr(0, eq), token.substr(eq + 1));
    }
  }
  if (specs.empty()) throw MarginlmError("--models expects at least one name=path entry");

  std::vector<std::pair<std::string, std::pair<ModelParams, Vocabulary>>> loaded;
  loaded.reserve(specs.size());
  for (const auto& [name, path] : specs) loaded.emplace_back(name, LoadCheckpoint(path));
  const Vocabulary& vocab = loaded.front().second.second;
  for (const auto& [name, mv] : loaded)
    if (mv.second.tokens() != vocab.tokens())
      throw MarginlmError("diagnose: model '" + name + "' has a different vocabulary");

  const std::vector<NBestGroup> dev_groups = ReadNBest(opt.nbest);

  json outputs;
  if (loaded.size() >= 2) {
    const auto path = dir / "margin_histogram.csv";
    EmitMarginHistogram(loaded[0].second.first, loaded[1].second.first, vocab, dev_groups,
                        opt.hist, path.string());
    outputs["margin_histogram"] = "margin_histogram.csv";
  } else {
    std::cerr << "warning: margin histogram needs two models; skipping\n";
  }

  {
    std::vector<NamedModel> named;
    named.reserve(loaded.size());
    for (const auto& [name, mv] : loaded) named.push_back({name, &mv.first});
    const auto path = dir / "correlation_boxplot.csv";
    EmitCorrelationBoxplot(named, vocab, dev_groups, metric, path.string());
    outputs["correlation_boxplot"] = "correlation_boxplot.csv";
  }

  if (!opt.test_nbest.empty() && !opt.dev_corpus.empty() && !opt.test_corpus.empty()) {
    const std::vector<NBestGroup> test_groups = ReadNBest(opt.test_nbest);
    const std::vector<IdSentence> dev_ids = EncodeCorpus(vocab, ReadCorpus(opt.dev_corpus));
    const std::vector<IdSentence> test_ids = EncodeCorpus(vocab, ReadCorpus(opt.test_corpus));
    const Grid grid = ParseGrid(opt.grid);
    const TuneObjective objective =
        metric == MetricKind::kWer ? TuneObjective::kMinWer : TuneObjective::kMaxBleu;

    std::vector<ComparisonRow> rows;
    {
      RescoreConfig zero;
      zero.weight = 0.0;
      ComparisonRow baseline;
      baseline.model_name = "baseline";
      baseline.dev_objective =
          EvaluateTop1(RescoreGroups(dev_groups, loaded[0].second.first, vocab, zero), metric);
      baseline.test_objective =
          EvaluateTop1(RescoreGroups(test_groups, loaded[0].second.first, vocab, zero), metric);
      baseline.dev_ppl = std::nan("");
      baseline.test_ppl = std::nan("");
      rows.push_back(baseline);
    }
    for (const auto& [name, mv] : loaded) {
      const ModelParams& model = mv.first;
      RescoreConfig cfg;
      cfg.length_norm = opt.length_norm;
      cfg.grid_min = grid.min;
      cfg.grid_max = grid.max;
      cfg.grid_step = grid.step;
      const TuneResult tuned = TuneWeight(dev_groups, model, vocab, cfg, objective);
      cfg.weight = tuned.best_weight;
      ComparisonRow row;
      row.model_name = name;
      row.dev_objective = tuned.best_objective;
      row.test_objective =
          EvaluateTop1(RescoreGroups(test_groups, model, vocab, cfg), metric);
      row.dev_ppl = CorpusPerplexity(model, dev_ids);
      row.test_ppl = CorpusPerplexity(model, test_ids);
      rows.push_back(row);
      std::cerr << name << ": tuned weight " << tuned.best_weight << "\n";
    }
    const auto path = dir / "comparison.csv";
    EmitComparisonTable(rows, path.string());
    outputs["comparison"] = "comparison.csv";
  }

  json config_json{{"models", opt.models},
                   {"metric", opt.metric},
                   {"grid", opt.grid},
                   {"length_norm", opt.length_norm},
                   {"hist_bin", opt.hist.bin_width},
                   {"hist_lo", opt.hist.lo},
                   {"hist_hi", opt.hist.hi}};
  json inputs{{"nbest", opt.nbest}};
  if (!opt.test_nbest.empty()) inputs["test_nbest"] = opt.test_nbest;
  if (!opt.dev_corpus.empty()) inputs["dev_corpus"] = opt.dev_corpus;
  if (!opt.test_corpus.empty()) inputs["test_corpus"] = opt.test_corpus;
  WriteManifest("diagnose", config_json, inputs, outputs, dir / "manifest.json");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"marginlm: discriminative training and n-best rescoring for a recurrent LM"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate the synthetic noisy-channel task");
  synth_cmd->add_option("--seed", synth.seed, "Master seed")->capture_default_str();
  synth_cmd->add_option("--vocab-size", synth.vocab_size,
                        "Total vocabulary incl. 3 reserved ids (content tokens = size - 3)")
      ->capture_default_str();
  synth_cmd->add_option("--train-n", synth.train_n, "Training sentences")->capture_default_str();
  synth_cmd->add_option("--dev-n", synth.dev_n, "Dev sentences")->capture_default_str();
  synth_cmd->add_option("--test-n", synth.test_n, "Test sentences")->capture_default_str();
  synth_cmd->add_option("--nbest-train-n", synth.nbest_train_n,
                        "Training references that get n-best lists")
      ->capture_default_str();
  synth_cmd->add_option("--k", synth.channel.k, "Hypotheses per group")->capture_default_str();
  synth_cmd->add_option("--p-sub", synth.channel.p_sub, "Substitution probability")
      ->capture_default_str();
  synth_cmd->add_option("--p-del", synth.channel.p_del, "Deletion probability")
      ->capture_default_str();
  synth_cmd->add_option("--p-ins", synth.channel.p_ins, "Insertion probability")
      ->capture_default_str();
  synth_cmd->add_option("--noise-sigma", synth.channel.noise_sigma,
                        "Gaussian noise on task scores")
      ->capture_default_str();
  synth_cmd->add_option("--out-dir", synth.out_dir, "Output directory")->required();

  TrainMleOptions mle;
  mle.config.epochs = 10;
  mle.config.lr = 0.1;
  auto* mle_cmd = app.add_subcommand("train-mle", "Train the recurrent LM by minimum PPL");
  mle_cmd->add_option("--corpus", mle.corpus, "Training corpus")->required();
  mle_cmd->add_option("--dev", mle.dev, "Dev corpus for per-epoch PPL");
  mle_cmd->add_option("--vocab-size", mle.vocab_size, "Vocabulary cap")->capture_default_str();
  mle_cmd->add_option("--embed", mle.embed, "Embedding size")->capture_default_str();
  mle_cmd->add_option("--hidden", mle.hidden, "Hidden size")->capture_default_str();
  mle_cmd->add_option("--epochs", mle.config.epochs, "Epochs")->capture_default_str();
  mle_cmd->add_option("--lr", mle.config.lr, "Learning rate")->capture_default_str();
  mle_cmd->add_option("--batch", mle.config.batch_size, "Batch size")->capture_default_str();
  mle_cmd->add_option("--seed", mle.config.seed, "Run seed")->capture_default_str();
  double mle_clip = 0.0;
  auto* mle_clip_opt = mle_cmd->add_option("--grad-clip", mle_clip, "Global-norm gradient clip");
  mle_cmd->add_option("--out", mle.out, "Checkpoint output path")->required();
  mle_cmd->add_option("--curve", mle.curve, "Loss-curve CSV output");

  AdaptOptions adapt;
  adapt.config.epochs = 5;
  adapt.config.lr = 0.01;
  auto* adapt_cmd = app.add_subcommand("adapt", "Softmax-only fine-tuning");
  adapt_cmd->add_option("--model", adapt.model, "Warm-start checkpoint")->required();
  adapt_cmd->add_option("--corpus", adapt.corpus, "In-domain corpus")->required();
  adapt_cmd->add_option("--dev", adapt.dev, "Dev corpus for per-epoch PPL");
  adapt_cmd->add_option("--epochs", adapt.config.epochs, "Epochs")->capture_default_str();
  adapt_cmd->add_option("--lr", adapt.config.lr, "Learning rate")->capture_default_str();
  adapt_cmd->add_option("--batch", adapt.config.batch_size, "Batch size")->capture_default_str();
  adapt_cmd->add_option("--seed", adapt.config.seed, "Run seed")->capture_default_str();
  adapt_cmd->add_option("--out", adapt.out, "Checkpoint output path")->required();
  adapt_cmd->add_option("--curve", adapt.curve, "Loss-curve CSV output");

  TrainMarginOptions margin;
  margin.config.epochs = 5;
  margin.config.lr = 0.01;
  auto* margin_cmd =
      app.add_subcommand("train-margin", "Discriminative fine-tuning on n-best lists");
  margin_cmd->add_option("--model", margin.model, "Warm-start checkpoint")->required();
  margin_cmd->add_option("--nbest", margin.nbest, "Training n-best file")->required();
  margin_cmd->add_option("--loss", margin.loss, "naive | margin | rank")->capture_default_str();
  margin_cmd->add_option("--tau", margin.config.tau, "Hinge margin")->capture_default_str();
  margin_cmd->add_option("--metric", margin.metric, "Sort metric for rank: wer | bleu")
      ->capture_default_str();
  margin_cmd->add_option("--epochs", margin.config.epochs, "Epochs")->capture_default_str();
  margin_cmd->add_option("--lr", margin.config.lr, "Learning rate")->capture_default_str();
  margin_cmd->add_option("--batch", margin.config.batch_size, "Groups per batch")
      ->capture_default_str();
  margin_cmd->add_option("--seed", margin.config.seed, "Run seed")->capture_default_str();
  margin_cmd->add_option("--dev-nbest", margin.dev_nbest, "Dev n-best for epoch stats");
  double margin_clip = 0.0;
  auto* margin_clip_opt =
      margin_cmd->add_option("--grad-clip", margin_clip, "Global-norm gradient clip");
  margin_cmd->add_flag("--allow-cold-start", margin.config.allow_cold_start,
                       "Skip the warm-start check");
  margin_cmd->add_option("--out", margin.out, "Checkpoint output path")->required();
  margin_cmd->add_option("--curve", margin.curve, "Loss-curve CSV output");

  std::string ppl_model, ppl_corpus;
  auto* ppl_cmd = app.add_subcommand("ppl", "Corpus perplexity under a checkpoint");
  ppl_cmd->add_option("--model", ppl_model, "Checkpoint")->required();
  ppl_cmd->add_option("--corpus", ppl_corpus, "Corpus file")->required();

  std::string score_model, score_input;
  auto* score_cmd = app.add_subcommand("score", "Per-sentence LM-scores");
  score_cmd->add_option("--model", score_model, "Checkpoint")->required();
  score_cmd->add_option("--input", score_input, "Sentences, one per line")->required();

  TuneOptions tune;
  auto* tune_cmd = app.add_subcommand("tune", "Grid-search the interpolation weight");
  tune_cmd->add_option("--model", tune.model, "Checkpoint")->required();
  tune_cmd->add_option("--nbest", tune.nbest, "Dev n-best file")->required();
  tune_cmd->add_option("--objective", tune.objective, "min-wer | max-bleu")
      ->capture_default_str();
  tune_cmd->add_option("--grid", tune.grid, "min:max:step")->capture_default_str();
  tune_cmd->add_flag("--length-norm", tune.length_norm, "Normalize LM score by length");
  tune_cmd->add_option("--out", tune.out, "Objective-table CSV output");

  RescoreOptions rescore;
  auto* rescore_cmd = app.add_subcommand("rescore", "Rerank an n-best file");
  rescore_cmd->add_option("--model", rescore.model, "Checkpoint")->required();
  rescore_cmd->add_option("--nbest", rescore.nbest, "Input n-best file")->required();
  rescore_cmd->add_option("--weight", rescore.weight, "LM interpolation weight")->required();
  rescore_cmd->add_flag("--length-norm", rescore.length_norm, "Normalize LM score by length");
  rescore_cmd->add_option("--out", rescore.out, "Output n-best file")->required();

  std::string eval_nbest, eval_metric = "wer";
  auto* eval_cmd = app.add_subcommand("eval", "Top-1 corpus metric of an n-best file");
  eval_cmd->add_option("--nbest", eval_nbest, "N-best file (top-1 = first hypothesis)")
      ->required();
  eval_cmd->add_option("--metric", eval_metric, "wer | bleu")->capture_default_str();

  DiagnoseOptions diag;
  auto* diag_cmd = app.add_subcommand("diagnose", "Margin/correlation/comparison CSVs");
  diag_cmd->add_option("--models", diag.models, "name=path[,name=path...]")->required();
  diag_cmd->add_option("--nbest", diag.nbest, "Dev n-best file")->required();
  diag_cmd->add_option("--metric", diag.metric, "wer | bleu")->capture_default_str();
  diag_cmd->add_option("--test-nbest", diag.test_nbest, "Test n-best: enables comparison.csv");
  diag_cmd->add_option("--dev-corpus", diag.dev_corpus, "Dev corpus for PPL columns");
  diag_cmd->add_option("--test-corpus", diag.test_corpus, "Test corpus for PPL columns");
  diag_cmd->add_option("--grid", diag.grid, "Tuning grid min:max:step")->capture_default_str();
  diag_cmd->add_flag("--length-norm", diag.length_norm, "Normalize LM score by length");
  diag_cmd->add_option("--hist-bin", diag.hist.bin_width, "Histogram bin width")
      ->capture_default_str();
  diag_cmd->add_option("--hist-lo", diag.hist.lo, "Histogram lower edge")->capture_default_str();
  diag_cmd->add_option("--hist-hi", diag.hist.hi, "Histogram upper edge")->capture_default_str();
  diag_cmd->add_option("--out-dir", diag.out_dir, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth_cmd->parsed()) return RunSynth(synth);
    if (mle_cmd->parsed()) {
      if (mle_clip_opt->count() > 0) mle.config.grad_clip = mle_clip;
      return RunTrainMle(mle);
    }
    if (adapt_cmd->parsed()) return RunAdapt(adapt);
    if (margin_cmd->parsed()) {
      if (margin_clip_opt->count() > 0) margin.config.grad_clip = margin_clip;
      return RunTrainMargin(margin);
    }
    if (ppl_cmd->parsed()) return RunPpl(ppl_model, ppl_corpus);
    if (score_cmd->parsed()) return RunScore(score_model, score_input);
    if (tune_cmd->parsed()) return RunTune(tune);
    if (rescore_cmd->parsed()) return RunRescore(rescore);
    if (eval_cmd->parsed()) return RunEval(eval_nbest, eval_metric);
    if (diag_cmd->parsed()) return RunDiagnose(diag);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << "error: no subcommand\n";
  return 1;
}
