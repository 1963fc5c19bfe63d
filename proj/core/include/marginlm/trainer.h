// marginlm/trainer.h
//
// Plain SGD training loops for every criterion: MLE, softmax-only
// adaptation, and the discriminative losses warm-started from an MLE
// checkpoint. Shuffling, batch composition and the gradient reduction
// order are all fixed by the config seed, so a (seed, data, config)
// triple fully determines the final parameters bitwise; the worker count
// never enters the arithmetic.

#ifndef MARGINLM_TRAINER_H_
#define MARGINLM_TRAINER_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "marginlm/losses.h"
#include "marginlm/model.h"

namespace marginlm {

enum class LossKind { kMle, kNaive, kMargin, kRank };

struct FreezeMask {
  bool emb = false;
  bool u = false;
  bool v_rec = false;
  bool w = false;
  bool b = false;

  bool Any() const { return emb || u || v_rec || w || b; }
};

struct TrainingConfig {
  double lr = 0.1;
  int batch_size = 128;
  int epochs = 1;
  double tau = 1.0;
  std::uint64_t seed = 1;
  LossKind loss_kind = LossKind::kMle;
  MetricKind sort_metric = MetricKind::kWer;
  FreezeMask freeze;
  std::optional<double> grad_clip;  // global-norm clip; off by default
  bool length_norm = false;         // carried for the rescoring stage
  bool allow_cold_start = false;    // overrides the warm-start check

  void Validate() const;
};

struct LossCurve {
  // (global step index starting at 1, batch loss value)
  std::vector<std::pair<std::int64_t, double>> points;
};

struct EpochStats {
  int epoch = 0;  // 1-based
  double train_loss_mean = 0.0;
  bool has_dev = false;
  double dev_value = 0.0;  // dev PPL (MLE/adapt) or dev loss (discriminative)
  bool has_margin_fraction = false;
  double dev_positive_margin_fraction = 0.0;
};
using EpochCallback = std::function<void(const EpochStats&)>;

// Shuffled mini-batch SGD on the MLE objective; honors config.freeze.
// Logs the batch loss each step and, when dev is non-empty, the dev PPL
// each epoch. Throws with the step index if the loss goes non-finite.
LossCurve TrainMle(ModelParams& model, std::span<const IdSentence> corpus,
                   std::span<const IdSentence> dev, const TrainingConfig& config,
                   const EpochCallback& on_epoch = {});

// Softmax-only fine-tuning: requires freeze == {emb, u, v_rec} so only w
// and b move; the frozen arrays come back bit-identical.
LossCurve AdaptSoftmax(ModelParams& model, std::span<const IdSentence> corpus,
                       std::span<const IdSentence> dev, const TrainingConfig& config,
                       const EpochCallback& on_epoch = {});

// Group stream for discriminative training. Exactly one of the two
// containers is used, matching the configured loss kind.
struct DiscriminativeData {
  std::vector<EncodedPairGroup> pair_groups;  // naive | margin
  std::vector<EncodedRankGroup> rank_groups;  // rank (pre-sorted)
};

// Mini-batch SGD over n-best groups with the selected loss's coefficient
// decomposition: each unique sentence in a batch gets one forward and one
// weighted backward pass. Refuses a model whose output layer is still all
// zero (the untrained-initialization signature) unless
// config.allow_cold_start is set.
LossCurve TrainDiscriminative(ModelParams& model, const DiscriminativeData& train,
                              const DiscriminativeData& dev, const TrainingConfig& config,
                              const EpochCallback& on_epoch = {});

}  // namespace marginlm

#endif  // MARGINLM_TRAINER_H_
