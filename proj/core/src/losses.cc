#include "marginlm/losses.h"

#include <cmath>
#include <map>

#include "marginlm/common.h"
#include "marginlm/parallel.h"
#include "marginlm/rnn.h"

namespace marginlm {

namespace {

struct UniqueTable {
  std::map<IdSentence, std::size_t> index;
  std::vector<IdSentence> sentences;

  std::size_t Intern(const IdSentence& s) {
    auto [it, inserted] = index.try_emplace(s, sentences.size());
    if (inserted) sentences.push_back(s);
    return it->second;
  }
};

void CheckTau(double tau) {
  if (!(tau > 0.0)) throw MarginlmError("hinge loss: tau must be positive");
}

}  // namespace

std::vector<double> ScoreSentences(const ModelParams& model,
                                   std::span<const IdSentence> sentences) {
  std::vector<double> scores(sentences.size(), 0.0);
  ParallelFor(sentences.size(),
              [&](std::size_t i) { scores[i] = LmScore(model, sentences[i]); });
  return scores;
}

double CorpusPerplexity(const ModelParams& model, std::span<const IdSentence> corpus) {
  if (corpus.empty()) throw MarginlmError("corpus_perplexity: empty corpus");
  const std::vector<double> scores = ScoreSentences(model, corpus);
  double total = 0.0;
  std::int64_t steps = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    total += scores[i];
    steps += static_cast<std::int64_t>(corpus[i].size()) + 1;
  }
  return std::exp(-total / static_cast<double>(steps));
}

CompiledPairBatch CompilePairGroups(std::span<const EncodedPairGroup> groups,
                                    bool dedup_identical_to_ref) {
  UniqueTable table;
  CompiledPairBatch out;
  out.groups.reserve(groups.size());
  for (const auto& g : groups) {
    if (g.hyps.empty())
      throw MarginlmError("n-best group has zero hypotheses");
    CompiledPairBatch::Group cg;
    cg.ref = table.Intern(g.ref);
    cg.hyps.reserve(g.hyps.size());
    for (const auto& hyp : g.hyps) {
      const std::size_t slot = table.Intern(hyp);
      if (dedup_identical_to_ref && slot == cg.ref) continue;
      cg.hyps.push_back(slot);
    }
    out.groups.push_back(std::move(cg));
  }
  out.sentences = std::move(table.sentences);
  return out;
}

CompiledRankBatch CompileRankGroups(std::span<const EncodedRankGroup> groups) {
  UniqueTable table;
  CompiledRankBatch out;
  out.groups.reserve(groups.size());
  bool first = true;
  for (const auto& g : groups) {
    if (g.cands.empty()) throw MarginlmError("rank group has no candidates");
    if (g.cands.size() != g.metric.size())
      throw MarginlmError("rank group: candidate/metric size mismatch");
    if (first) {
      out.kind = g.kind;
      first = false;
    } else if (g.kind != out.kind) {
      throw MarginlmError("rank groups mix sort metrics");
    }
    for (std::size_t i = 0; i + 1 < g.metric.size(); ++i) {
      const bool ok = g.kind == MetricKind::kWer ? g.metric[i] <= g.metric[i + 1]
                                                 : g.metric[i] >= g.metric[i + 1];
      if (!ok)
        throw MarginlmError("rank group not sorted by its metric (position " +
                            std::to_string(i + 1) + ")");
    }
    CompiledRankBatch::Group cg;
    const std::size_t ref_slot = table.Intern(g.cands[0]);
    cg.slots.push_back(ref_slot);
    cg.metric.push_back(g.metric[0]);
    for (std::size_t j = 1; j < g.cands.size(); ++j) {
      const std::size_t slot = table.Intern(g.cands[j]);
      if (slot == ref_slot) continue;  // exact duplicate of the reference
      cg.slots.push_back(slot);
      cg.metric.push_back(g.metric[j]);
    }
    out.groups.push_back(std::move(cg));
  }
  out.sentences = std::move(table.sentences);
  return out;
}

ScoreLoss MleFromScores(std::span<const double> scores,
                        std::span<const std::size_t> steps, std::span<double> weights) {
  if (scores.empty()) throw MarginlmError("loss_mle: empty batch");
  if (scores.size() != steps.size() || scores.size() != weights.size())
    throw MarginlmError("loss_mle: size mismatch");
  const double inv_n = 1.0 / static_cast<double>(scores.size());
  ScoreLoss out;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out.term_sum += -scores[i] / static_cast<double>(steps[i]);
    weights[i] = inv_n / static_cast<double>(steps[i]);
  }
  out.value = out.term_sum * inv_n;
  out.pair_count = static_cast<std::int64_t>(scores.size());
  return out;
}

ScoreLoss NaiveFromScores(const CompiledPairBatch& batch, std::span<const double> scores,
                          std::span<double> weights) {
  if (batch.groups.empty()) throw MarginlmError("loss_naive: empty batch");
  std::fill(weights.begin(), weights.end(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(batch.groups.size());
  ScoreLoss out;
  for (const auto& g : batch.groups) {
    // Dedup is off for this loss, so every input hypothesis is present;
    // an identical hypothesis cancels exactly against its reference.
    const double inv_k = 1.0 / static_cast<double>(g.hyps.size());
    double term = 0.0;
    for (std::size_t h : g.hyps) {
      term += scores[h] - scores[g.ref];
      weights[h] -= inv_k;
    }
    out.term_sum += term * inv_k;
    weights[g.ref] += 1.0;
    out.pair_count += static_cast<std::int64_t>(g.hyps.size());
  }
  for (double& w : weights) w *= inv_n;
  out.value = out.term_sum * inv_n;
  return out;
}

ScoreLoss MarginFromScores(const CompiledPairBatch& batch, std::span<const double> scores,
                           double tau, std::span<double> weights) {
  CheckTau(tau);
  std::fill(weights.begin(), weights.end(), 0.0);
  ScoreLoss out;
  for (const auto& g : batch.groups)
    out.pair_count += static_cast<std::int64_t>(g.hyps.size());
  if (out.pair_count == 0) return out;

  for (const auto& g : batch.groups) {
    for (std::size_t h : g.hyps) {
      const double term = tau - (scores[g.ref] - scores[h]);
      if (term > 0.0) {
        out.term_sum += term;
        ++out.active_pairs;
        weights[g.ref] += 1.0;
        weights[h] -= 1.0;
      }
    }
  }
  const double inv_pairs = 1.0 / static_cast<double>(out.pair_count);
  for (double& w : weights) w *= inv_pairs;
  out.value = out.term_sum * inv_pairs;
  return out;
}

ScoreLoss RankFromScores(const CompiledRankBatch& batch, std::span<const double> scores,
                         double tau, std::span<double> weights) {
  CheckTau(tau);
  std::fill(weights.begin(), weights.end(), 0.0);
  ScoreLoss out;
  for (const auto& g : batch.groups) {
    const std::size_t n = g.slots.size();
    for (std::size_t j = 0; j + 1 < n; ++j)
      for (std::size_t k = j + 1; k < n; ++k)
        if (g.metric[j] != g.metric[k]) ++out.pair_count;
  }
  if (out.pair_count == 0) return out;

  for (const auto& g : batch.groups) {
    const std::size_t n = g.slots.size();
    for (std::size_t j = 0; j + 1 < n; ++j) {
      for (std::size_t k = j + 1; k < n; ++k) {
        if (g.metric[j] == g.metric[k]) continue;  // tied quality: no order enforced
        const double term = tau - (scores[g.slots[j]] - scores[g.slots[k]]);
        if (term > 0.0) {
          out.term_sum += term;
          ++out.active_pairs;
          weights[g.slots[j]] += 1.0;
          weights[g.slots[k]] -= 1.0;
        }
      }
    }
  }
  const double inv_pairs = 1.0 / static_cast<double>(out.pair_count);
  for (double& w : weights) w *= inv_pairs;
  out.value = out.term_sum * inv_pairs;
  return out;
}

namespace {

LossReport AssembleReport(const ScoreLoss& loss, std::vector<IdSentence> sentences,
                          std::span<const double> weights) {
  LossReport report;
  report.value = loss.value;
  report.term_sum = loss.term_sum;
  report.pair_count = loss.pair_count;
  report.active_pairs = loss.active_pairs;
  for (std::size_t i = 0; i < sentences.size(); ++i)
    if (weights[i] != 0.0)
      report.coeffs.push_back({std::move(sentences[i]), weights[i]});
  return report;
}

}  // namespace

LossReport LossMle(const ModelParams& model, std::span<const IdSentence> batch) {
  std::vector<double> scores = ScoreSentences(model, batch);
  std::vector<std::size_t> steps(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) steps[i] = batch[i].size() + 1;
  std::vector<double> weights(batch.size(), 0.0);
  const ScoreLoss loss = MleFromScores(scores, steps, weights);
  std::vector<IdSentence> sentences(batch.begin(), batch.end());
  return AssembleReport(loss, std::move(sentences), weights);
}

LossReport LossNaive(const ModelParams& model, std::span<const EncodedPairGroup> groups) {
  CompiledPairBatch batch = CompilePairGroups(groups, /*dedup_identical_to_ref=*/false);
  const std::vector<double> scores = ScoreSentences(model, batch.sentences);
  std::vector<double> weights(batch.sentences.size(), 0.0);
  const ScoreLoss loss = NaiveFromScores(batch, scores, weights);
  return AssembleReport(loss, std::move(batch.sentences), weights);
}

LossReport LossMargin(const ModelParams& model, std::span<const EncodedPairGroup> groups,
                      double tau) {
  CompiledPairBatch batch = CompilePairGroups(groups, /*dedup_identical_to_ref=*/true);
  const std::vector<double> scores = ScoreSentences(model, batch.sentences);
  std::vector<double> weights(batch.sentences.size(), 0.0);
  const ScoreLoss loss = MarginFromScores(batch, scores, tau, weights);
  return AssembleReport(loss, std::move(batch.sentences), weights);
}

LossReport LossRank(const ModelParams& model, std::span<const EncodedRankGroup> groups,
                    double tau) {
  CompiledRankBatch batch = CompileRankGroups(groups);
  const std::vector<double> scores = ScoreSentences(model, batch.sentences);
  std::vector<double> weights(batch.sentences.size(), 0.0);
  const ScoreLoss loss = RankFromScores(batch, scores, tau, weights);
  return AssembleReport(loss, std::move(batch.sentences), weights);
}

std::vector<MarginSample> MarginSamples(const ModelParams& model,
                                        std::span<const EncodedPairGroup> groups) {
  CompiledPairBatch batch = CompilePairGroups(groups, /*dedup_identical_to_ref=*/false);
  const std::vector<double> scores = ScoreSentences(model, batch.sentences);
  std::vector<MarginSample> samples;
  for (const auto& g : batch.groups) {
    for (std::size_t h : g.hyps) {
      MarginSample s;
      s.ref_score = scores[g.ref];
      s.hyp_score = scores[h];
      s.margin = s.ref_score - s.hyp_score;
      samples.push_back(s);
    }
  }
  return samples;
}

}  // namespace marginlm
