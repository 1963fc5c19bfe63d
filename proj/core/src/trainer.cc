#include "marginlm/trainer.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "marginlm/common.h"
#include "marginlm/parallel.h"
#include "marginlm/rng.h"
#include "marginlm/rnn.h"

namespace marginlm {

namespace {

// Unique sentences are backpropagated in fixed chunks and the chunk
// gradients reduced in index order, so results are identical for any
// worker count.
constexpr std::size_t kBackwardChunk = 16;

void AxpyInto(std::vector<double>& params, const std::vector<double>& grad, double factor) {
  for (std::size_t i = 0; i < params.size(); ++i) params[i] += factor * grad[i];
}

void ApplySgdUpdate(ModelParams& model, const Gradients& grads, double lr,
                    const FreezeMask& freeze) {
  if (!freeze.emb) AxpyInto(model.emb.data(), grads.emb.data(), -lr);
  if (!freeze.u) AxpyInto(model.u.data(), grads.u.data(), -lr);
  if (!freeze.v_rec) AxpyInto(model.v_rec.data(), grads.v_rec.data(), -lr);
  if (!freeze.w) AxpyInto(model.w.data(), grads.w.data(), -lr);
  if (!freeze.b) AxpyInto(model.b, grads.b, -lr);
}

void ClipGlobalNorm(Gradients& grads, double clip) {
  const double norm = std::sqrt(grads.SquaredNorm());
  if (norm > clip) grads.Scale(clip / norm);
}

// Forward all sentences into slots, backprop the weighted ones in chunks,
// and fold the chunks into `grads` in order. Returns per-slot scores.
std::vector<double> ForwardAll(const ModelParams& model,
                               std::span<const IdSentence> sentences,
                               std::vector<ForwardTrace>& traces) {
  traces.resize(sentences.size());
  std::vector<double> scores(sentences.size());
  ParallelFor(sentences.size(), [&](std::size_t i) {
    traces[i] = ForwardSequence(model, sentences[i]);
    scores[i] = traces[i].total;
  });
  return scores;
}

void BackwardAll(const ModelParams& model, std::span<const ForwardTrace> traces,
                 std::span<const double> weights, Gradients& grads) {
  const std::size_t n = traces.size();
  const std::size_t chunks = (n + kBackwardChunk - 1) / kBackwardChunk;
  std::vector<Gradients> chunk_grads(chunks);
  ParallelFor(chunks, [&](std::size_t c) {
    Gradients local(model);
    const std::size_t lo = c * kBackwardChunk;
    const std::size_t hi = std::min(n, lo + kBackwardChunk);
    for (std::size_t i = lo; i < hi; ++i)
      if (weights[i] != 0.0) BackwardSequence(model, traces[i], weights[i], local);
    chunk_grads[c] = std::move(local);
  });
  for (const Gradients& g : chunk_grads) grads.Add(g);
}

void CheckFinite(double value, std::int64_t step) {
  if (!std::isfinite(value))
    throw MarginlmError("training aborted: non-finite loss " + FormatDouble(value) +
                        " at step " + std::to_string(step));
}

bool OutputLayerIsZero(const ModelParams& model) {
  for (double x : model.w.data())
    if (x != 0.0) return false;
  for (double x : model.b)
    if (x != 0.0) return false;
  return true;
}

}  // namespace

void TrainingConfig::Validate() const {
  if (batch_size < 1) throw MarginlmError("training config: batch_size must be >= 1");
  if (epochs < 1) throw MarginlmError("training config: epochs must be >= 1");
  if (!(lr >= 0.0) || !std::isfinite(lr))
    throw MarginlmError("training config: lr must be a finite nonnegative real");
  if ((loss_kind == LossKind::kMargin || loss_kind == LossKind::kRank) && !(tau > 0.0))
    throw MarginlmError("training config: tau must be positive for hinge losses");
  if (grad_clip && !(*grad_clip > 0.0))
    throw MarginlmError("training config: grad_clip must be positive when set");
}

LossCurve TrainMle(ModelParams& model, std::span<const IdSentence> corpus,
                   std::span<const IdSentence> dev, const TrainingConfig& config,
                   const EpochCallback& on_epoch) {
  config.Validate();
  if (config.loss_kind != LossKind::kMle)
    throw MarginlmError("train_mle: config.loss_kind must be mle");
  if (corpus.empty()) throw MarginlmError("train_mle: empty corpus");

  Rng shuffle_rng(DeriveSeed(config.seed, streams::kShuffle));
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);

  LossCurve curve;
  std::int64_t step = 0;
  std::vector<ForwardTrace> traces;
  Gradients grads(model);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle_rng.Shuffle(order);
    double epoch_loss_sum = 0.0;
    std::int64_t epoch_steps = 0;

    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      std::vector<IdSentence> batch;
      batch.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) batch.push_back(corpus[order[i]]);

      const std::vector<double> scores = ForwardAll(model, batch, traces);
      std::vector<std::size_t> steps(batch.size());
      for (std::size_t i = 0; i < batch.size(); ++i) steps[i] = batch[i].size() + 1;
      std::vector<double> weights(batch.size(), 0.0);
      const ScoreLoss loss = MleFromScores(scores, steps, weights);

      ++step;
      CheckFinite(loss.value, step);
      curve.points.emplace_back(step, loss.value);
      epoch_loss_sum += loss.value;
      ++epoch_steps;

      grads.Zero();
      BackwardAll(model, traces, weights, grads);
      if (config.grad_clip) ClipGlobalNorm(grads, *config.grad_clip);
      ApplySgdUpdate(model, grads, config.lr, config.freeze);
    }

    if (on_epoch) {
      EpochStats stats;
      stats.epoch = epoch;
      stats.train_loss_mean = epoch_loss_sum / static_cast<double>(epoch_steps);
      if (!dev.empty()) {
        stats.has_dev = true;
        stats.dev_value = CorpusPerplexity(model, dev);
      }
      on_epoch(stats);
    }
  }
  return curve;
}

LossCurve AdaptSoftmax(ModelParams& model, std::span<const IdSentence> corpus,
                       std::span<const IdSentence> dev, const TrainingConfig& config,
                       const EpochCallback& on_epoch) {
  if (!(config.freeze.emb && config.freeze.u && config.freeze.v_rec && !config.freeze.w &&
        !config.freeze.b))
    throw MarginlmError("adapt_softmax: freeze mask must be exactly {emb, u, v_rec}");
  return TrainMle(model, corpus, dev, config, on_epoch);
}

namespace {

struct DevEval {
  bool valid = false;
  CompiledPairBatch pair_batch;
  CompiledRankBatch rank_batch;
};

DevEval CompileDev(const DiscriminativeData& dev, LossKind kind) {
  DevEval out;
  if (kind == LossKind::kRank) {
    if (dev.rank_groups.empty()) return out;
    out.rank_batch = CompileRankGroups(dev.rank_groups);
  } else {
    if (dev.pair_groups.empty()) return out;
    out.pair_batch = CompilePairGroups(dev.pair_groups, kind == LossKind::kMargin);
  }
  out.valid = true;
  return out;
}

// Dev loss plus the fraction of enforced pairs whose margin is positive.
std::pair<double, double> EvalDev(const ModelParams& model, const DevEval& dev,
                                  LossKind kind, double tau) {
  if (kind == LossKind::kRank) {
    const std::vector<double> scores = ScoreSentences(model, dev.rank_batch.sentences);
    std::vector<double> weights(scores.size(), 0.0);
    const ScoreLoss loss = RankFromScores(dev.rank_batch, scores, tau, weights);
    std::int64_t positive = 0, total = 0;
    for (const auto& g : dev.rank_batch.groups) {
      for (std::size_t k = 1; k < g.slots.size(); ++k) {
        ++total;
        if (scores[g.slots[0]] - scores[g.slots[k]] > 0.0) ++positive;
      }
    }
    const double fraction =
        total == 0 ? 0.0 : static_cast<double>(positive) / static_cast<double>(total);
    return {loss.value, fraction};
  }
  const std::vector<double> scores = ScoreSentences(model, dev.pair_batch.sentences);
  std::vector<double> weights(scores.size(), 0.0);
  const ScoreLoss loss = kind == LossKind::kNaive
                             ? NaiveFromScores(dev.pair_batch, scores, weights)
                             : MarginFromScores(dev.pair_batch, scores, tau, weights);
  std::int64_t positive = 0, total = 0;
  for (const auto& g : dev.pair_batch.groups) {
    for (std::size_t h : g.hyps) {
      ++total;
      if (scores[g.ref] - scores[h] > 0.0) ++positive;
    }
  }
  const double fraction =
      total == 0 ? 0.0 : static_cast<double>(positive) / static_cast<double>(total);
  return {loss.value, fraction};
}

}  // namespace

LossCurve TrainDiscriminative(ModelParams& model, const DiscriminativeData& train,
                              const DiscriminativeData& dev, const TrainingConfig& config,
                              const EpochCallback& on_epoch) {
  config.Validate();
  if (config.loss_kind == LossKind::kMle)
    throw MarginlmError("train_discriminative: loss_kind must be naive, margin or rank");
  const bool rank = config.loss_kind == LossKind::kRank;
  const std::size_t n_groups = rank ? train.rank_groups.size() : train.pair_groups.size();
  if (n_groups == 0)
    throw MarginlmError(rank ? "train_discriminative: no rank groups (expected pre-sorted input)"
                             : "train_discriminative: no n-best groups");
  if (OutputLayerIsZero(model) && !config.allow_cold_start)
    throw MarginlmError(
        "train_discriminative: model looks untrained (all-zero output layer); "
        "warm-start from an MLE checkpoint or set allow_cold_start");

  const DevEval dev_eval = CompileDev(dev, config.loss_kind);

  Rng shuffle_rng(DeriveSeed(config.seed, streams::kShuffle));
  std::vector<std::size_t> order(n_groups);
  std::iota(order.begin(), order.end(), 0);

  LossCurve curve;
  std::int64_t step = 0;
  std::vector<ForwardTrace> traces;
  Gradients grads(model);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle_rng.Shuffle(order);
    double epoch_loss_sum = 0.0;
    std::int64_t epoch_steps = 0;

    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));

      ScoreLoss loss;
      std::vector<double> weights;
      std::vector<IdSentence> sentences;
      if (rank) {
        std::vector<EncodedRankGroup> batch;
        batch.reserve(end - start);
        for (std::size_t i = start; i < end; ++i) batch.push_back(train.rank_groups[order[i]]);
        CompiledRankBatch compiled = CompileRankGroups(batch);
        const std::vector<double> scores = ForwardAll(model, compiled.sentences, traces);
        weights.assign(compiled.sentences.size(), 0.0);
        loss = RankFromScores(compiled, scores, config.tau, weights);
        sentences = std::move(compiled.sentences);
      } else {
        std::vector<EncodedPairGroup> batch;
        batch.reserve(end - start);
        for (std::size_t i = start; i < end; ++i) batch.push_back(train.pair_groups[order[i]]);
        CompiledPairBatch compiled =
            CompilePairGroups(batch, config.loss_kind == LossKind::kMargin);
        const std::vector<double> scores = ForwardAll(model, compiled.sentences, traces);
        weights.assign(compiled.sentences.size(), 0.0);
        loss = config.loss_kind == LossKind::kNaive
                   ? NaiveFromScores(compiled, scores, weights)
                   : MarginFromScores(compiled, scores, config.tau, weights);
        sentences = std::move(compiled.sentences);
      }

      ++step;
      CheckFinite(loss.value, step);
      curve.points.emplace_back(step, loss.value);
      epoch_loss_sum += loss.value;
      ++epoch_steps;

      grads.Zero();
      BackwardAll(model, traces, weights, grads);
      if (config.grad_clip) ClipGlobalNorm(grads, *config.grad_clip);
      ApplySgdUpdate(model, grads, config.lr, config.freeze);
    }

    if (on_epoch) {
      EpochStats stats;
      stats.epoch = epoch;
      stats.train_loss_mean = epoch_loss_sum / static_cast<double>(epoch_steps);
      if (dev_eval.valid) {
        const auto [dev_loss, fraction] = EvalDev(model, dev_eval, config.loss_kind, config.tau);
        stats.has_dev = true;
        stats.dev_value = dev_loss;
        stats.has_margin_fraction = true;
        stats.dev_positive_margin_fraction = fraction;
      }
      on_epoch(stats);
    }
  }
  return curve;
}

}  // namespace marginlm
