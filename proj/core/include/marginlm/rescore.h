// marginlm/rescore.h
//
// Deployment path for every trained LM: combine the decoder's task score
// with a weighted LM score, tune the weight on dev data, evaluate the
// resulting top-1 output, and report score/accuracy correlations.

#ifndef MARGINLM_RESCORE_H_
#define MARGINLM_RESCORE_H_

#include <optional>
#include <span>
#include <vector>

#include "marginlm/metrics.h"
#include "marginlm/model.h"
#include "marginlm/nbest.h"
#include "marginlm/vocab.h"

namespace marginlm {

struct RescoreConfig {
  double weight = 0.0;       // LM interpolation weight
  bool length_norm = false;  // divide the LM score by L + 1 (EOS included)
  double grid_min = 0.0;     // tuning grid
  double grid_max = 2.0;
  double grid_step = 0.05;

  void ValidateGrid() const;  // step > 0, min <= max
};

// task_score + weight * lm_part, where lm_part is the LM-score (or the
// per-step LM-score when length_norm is on). OOV hypothesis tokens hit
// UNK through the vocabulary.
double CombinedScore(const Hypothesis& hyp, const ModelParams& model,
                     const Vocabulary& vocab, const RescoreConfig& cfg);

// Hypotheses reordered by combined score, descending; ties keep their
// original order, and the top-1 is the system output.
NBestGroup RescoreGroup(const NBestGroup& group, const ModelParams& model,
                        const Vocabulary& vocab, const RescoreConfig& cfg);

std::vector<NBestGroup> RescoreGroups(std::span<const NBestGroup> groups,
                                      const ModelParams& model, const Vocabulary& vocab,
                                      const RescoreConfig& cfg);

enum class TuneObjective { kMinWer, kMaxBleu };

struct TunePoint {
  double weight = 0.0;
  double objective = 0.0;  // mean top-1 WER or corpus BLEU at this weight
};

struct TuneResult {
  double best_weight = 0.0;
  double best_objective = 0.0;
  std::vector<TunePoint> table;
};

// Sweeps the grid, evaluating the corpus objective of the top-1 output at
// each weight. LM scores are computed once per hypothesis. Ties pick the
// smallest weight.
TuneResult TuneWeight(std::span<const NBestGroup> dev_groups, const ModelParams& model,
                      const Vocabulary& vocab, const RescoreConfig& cfg,
                      TuneObjective objective);

// Mean top-1 WER over groups (fraction), or corpus BLEU of the top-1
// hypotheses. Groups are expected to be reranked already; the first
// hypothesis is the system output.
double EvaluateTop1(std::span<const NBestGroup> groups, MetricKind metric);

struct CorrelationReport {
  std::vector<double> per_group_r;  // groups with defined correlation
  std::int64_t excluded = 0;        // zero-variance or fewer than 2 hypotheses
  BoxplotStats stats;               // over per_group_r
};

// Per group: Pearson r between hypothesis quality -- accuracy 1 - WER, or
// sentence BLEU -- and the raw LM-score (no task score, no weight).
CorrelationReport CorrelationByGroup(std::span<const NBestGroup> groups,
                                     const ModelParams& model, const Vocabulary& vocab,
                                     MetricKind metric);

}  // namespace marginlm

#endif  // MARGINLM_RESCORE_H_
