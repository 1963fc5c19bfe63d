// marginlm/losses.h
//
// Training objectives over n-best groups:
//   - MLE / perplexity (token-level, includes the EOS step)
//   - naive discriminative loss: reference NLL minus mean hypothesis NLL,
//     unbounded below by construction
//   - large-margin hinge loss: max{0, tau - (ref_score - hyp_score)}
//     summed over all (reference, hypothesis) pairs
//   - ranking hinge loss over all candidate pairs, candidates metric-
//     sorted best-first with the reference at index 0
//
// Every loss reports a scalar value plus per-sentence coefficients such
// that d(loss)/dtheta = sum_s weight_s * d(-lm_score(s))/dtheta, which is
// what the trainer feeds to BackwardSequence. The hinge losses are
// normalized by the enforced-pair count; term_sum keeps the unnormalized
// sum. A pair sitting exactly at margin == tau is inactive.

#ifndef MARGINLM_LOSSES_H_
#define MARGINLM_LOSSES_H_

#include <cstdint>
#include <span>
#include <vector>

#include "marginlm/metrics.h"
#include "marginlm/model.h"

namespace marginlm {

using IdSentence = std::vector<std::int32_t>;

struct EncodedPairGroup {
  IdSentence ref;
  std::vector<IdSentence> hyps;
};

// Candidates must be metric-sorted best-first with the reference at
// cands[0]; metric[i] is the candidate's raw WER (ascending) or BLEU
// (descending).
struct EncodedRankGroup {
  MetricKind kind = MetricKind::kWer;
  std::vector<IdSentence> cands;
  std::vector<double> metric;
};

struct SentenceCoeff {
  IdSentence ids;
  double weight = 0.0;
};

struct LossReport {
  double value = 0.0;
  double term_sum = 0.0;           // unnormalized term sum (hinge losses)
  std::int64_t pair_count = 0;     // enforced pairs (hinge) / scored units
  std::int64_t active_pairs = 0;   // hinge terms with positive loss
  std::vector<SentenceCoeff> coeffs;  // unique sentences, nonzero weights
};

struct MarginSample {
  double ref_score = 0.0;
  double hyp_score = 0.0;
  double margin = 0.0;  // ref_score - hyp_score
};

// Parallel LM scoring; result i is the LM-score of sentences[i]. The
// reduction order is fixed, so results do not depend on the worker count.
std::vector<double> ScoreSentences(const ModelParams& model,
                                   std::span<const IdSentence> sentences);

// exp(-(sum of sentence LM-scores) / (sum of per-sentence steps L+1)).
double CorpusPerplexity(const ModelParams& model, std::span<const IdSentence> corpus);

LossReport LossMle(const ModelParams& model, std::span<const IdSentence> batch);
LossReport LossNaive(const ModelParams& model, std::span<const EncodedPairGroup> groups);
LossReport LossMargin(const ModelParams& model, std::span<const EncodedPairGroup> groups,
                      double tau);
LossReport LossRank(const ModelParams& model, std::span<const EncodedRankGroup> groups,
                    double tau);

// One sample per (reference, hypothesis) pair in input order, before any
// dedup. Pure.
std::vector<MarginSample> MarginSamples(const ModelParams& model,
                                        std::span<const EncodedPairGroup> groups);

// ---------------------------------------------------------------------
// Score-level layer. The trainer compiles a batch to unique sentences,
// scores each once, evaluates the loss on scores, and backpropagates each
// unique sentence once with its aggregated weight. The public losses
// above are thin wrappers over the same code path.

struct CompiledPairBatch {
  std::vector<IdSentence> sentences;  // unique, first-occurrence order
  struct Group {
    std::size_t ref = 0;
    std::vector<std::size_t> hyps;
  };
  std::vector<Group> groups;
};

// dedup_identical_to_ref drops hypotheses equal to their group's
// reference (the large-margin losses assume imperfect hypotheses).
CompiledPairBatch CompilePairGroups(std::span<const EncodedPairGroup> groups,
                                    bool dedup_identical_to_ref);

struct CompiledRankBatch {
  std::vector<IdSentence> sentences;
  struct Group {
    std::vector<std::size_t> slots;
    std::vector<double> metric;
  };
  MetricKind kind = MetricKind::kWer;
  std::vector<Group> groups;
};

// Validates the metric ordering (throws on violation) and drops exact
// duplicates of the reference candidate.
CompiledRankBatch CompileRankGroups(std::span<const EncodedRankGroup> groups);

struct ScoreLoss {
  double value = 0.0;
  double term_sum = 0.0;
  std::int64_t pair_count = 0;
  std::int64_t active_pairs = 0;
};

// `weights` spans are aligned to the compiled sentence slots (or to the
// batch for MLE); they are overwritten, not accumulated.
ScoreLoss MleFromScores(std::span<const double> scores,
                        std::span<const std::size_t> steps, std::span<double> weights);
ScoreLoss NaiveFromScores(const CompiledPairBatch& batch, std::span<const double> scores,
                          std::span<double> weights);
ScoreLoss MarginFromScores(const CompiledPairBatch& batch, std::span<const double> scores,
                           double tau, std::span<double> weights);
ScoreLoss RankFromScores(const CompiledRankBatch& batch, std::span<const double> scores,
                         double tau, std::span<double> weights);

}  // namespace marginlm

#endif  // MARGINLM_LOSSES_H_
