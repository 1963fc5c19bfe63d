#include "marginlm/rescore.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "marginlm/common.h"
#include "marginlm/losses.h"
#include "marginlm/parallel.h"
#include "marginlm/rnn.h"

namespace marginlm {

void RescoreConfig::ValidateGrid() const {
  if (!(grid_step > 0.0)) throw MarginlmError("tune: grid step must be positive");
  if (grid_min > grid_max) throw MarginlmError("tune: grid min must not exceed max");
  if (grid_min < 0.0) throw MarginlmError("tune: weights are nonnegative");
}

namespace {

double LmPart(const ModelParams& model, const Vocabulary& vocab, const Sentence& tokens,
              bool length_norm) {
  const double lm = LmScore(model, vocab.EncodeSentence(tokens));
  return length_norm ? lm / static_cast<double>(tokens.size() + 1) : lm;
}

}  // namespace

double CombinedScore(const Hypothesis& hyp, const ModelParams& model,
                     const Vocabulary& vocab, const RescoreConfig& cfg) {
  return hyp.task_score + cfg.weight * LmPart(model, vocab, hyp.tokens, cfg.length_norm);
}

NBestGroup RescoreGroup(const NBestGroup& group, const ModelParams& model,
                        const Vocabulary& vocab, const RescoreConfig& cfg) {
  NBestGroup out = group;
  std::vector<double> combined(group.hypotheses.size());
  for (std::size_t j = 0; j < group.hypotheses.size(); ++j)
    combined[j] = CombinedScore(group.hypotheses[j], model, vocab, cfg);
  std::vector<std::size_t> order(group.hypotheses.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return combined[a] > combined[b]; });
  for (std::size_t j = 0; j < order.size(); ++j) out.hypotheses[j] = group.hypotheses[order[j]];
  return out;
}

std::vector<NBestGroup> RescoreGroups(std::span<const NBestGroup> groups,
                                      const ModelParams& model, const Vocabulary& vocab,
                                      const RescoreConfig& cfg) {
  std::vector<NBestGroup> out(groups.size());
  ParallelFor(groups.size(),
              [&](std::size_t i) { out[i] = RescoreGroup(groups[i], model, vocab, cfg); });
  return out;
}

TuneResult TuneWeight(std::span<const NBestGroup> dev_groups, const ModelParams& model,
                      const Vocabulary& vocab, const RescoreConfig& cfg,
                      TuneObjective objective) {
  cfg.ValidateGrid();
  if (dev_groups.empty()) throw MarginlmError("tune: no dev groups");

  // Per-hypothesis pieces are weight-independent; compute them once.
  struct HypInfo {
    double task = 0.0, lm_part = 0.0, wer = 0.0;
  };
  std::vector<std::vector<HypInfo>> info(dev_groups.size());
  ParallelFor(dev_groups.size(), [&](std::size_t i) {
    const NBestGroup& g = dev_groups[i];
    info[i].resize(g.hypotheses.size());
    for (std::size_t j = 0; j < g.hypotheses.size(); ++j) {
      const Hypothesis& h = g.hypotheses[j];
      info[i][j].task = h.task_score;
      info[i][j].lm_part = LmPart(model, vocab, h.tokens, cfg.length_norm);
      if (objective == TuneObjective::kMinWer) info[i][j].wer = Wer(g.reference, h.tokens);
    }
  });

  TuneResult result;
  bool have_best = false;
  for (std::size_t step = 0;; ++step) {
    const double w = cfg.grid_min + static_cast<double>(step) * cfg.grid_step;
    if (w > cfg.grid_max + cfg.grid_step * 1e-9) break;

    double objective_value;
    std::vector<std::size_t> picks(dev_groups.size());
    for (std::size_t i = 0; i < dev_groups.size(); ++i) {
      std::size_t best_j = 0;
      double best_score = info[i][0].task + w * info[i][0].lm_part;
      for (std::size_t j = 1; j < info[i].size(); ++j) {
        const double s = info[i][j].task + w * info[i][j].lm_part;
        if (s > best_score) {
          best_score = s;
          best_j = j;
        }
      }
      picks[i] = best_j;
    }
    if (objective == TuneObjective::kMinWer) {
      double sum = 0.0;
      for (std::size_t i = 0; i < picks.size(); ++i) sum += info[i][picks[i]].wer;
      objective_value = sum / static_cast<double>(picks.size());
    } else {
      std::vector<BleuPair> pairs(dev_groups.size());
      for (std::size_t i = 0; i < picks.size(); ++i) {
        pairs[i].references = {dev_groups[i].reference};
        pairs[i].hypothesis = dev_groups[i].hypotheses[picks[i]].tokens;
      }
      objective_value = CorpusBleu(pairs);
    }
    result.table.push_back({w, objective_value});

    const bool better = !have_best ||
                        (objective == TuneObjective::kMinWer
                             ? objective_value < result.best_objective
                             : objective_value > result.best_objective);
    if (better) {
      have_best = true;
      result.best_weight = w;
      result.best_objective = objective_value;
    }
  }
  if (!have_best) throw MarginlmError("tune: empty grid");
  return result;
}

double EvaluateTop1(std::span<const NBestGroup> groups, MetricKind metric) {
  if (groups.empty()) throw MarginlmError("evaluate_top1: no groups");
  if (metric == MetricKind::kWer) {
    double sum = 0.0;
    for (const auto& g : groups) {
      if (g.hypotheses.empty()) throw MarginlmError("evaluate_top1: group without hypotheses");
      sum += Wer(g.reference, g.hypotheses[0].tokens);
    }
    return sum / static_cast<double>(groups.size());
  }
  std::vector<BleuPair> pairs(groups.size());
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (groups[i].hypotheses.empty())
      throw MarginlmError("evaluate_top1: group without hypotheses");
    pairs[i].references = {groups[i].reference};
    pairs[i].hypothesis = groups[i].hypotheses[0].tokens;
  }
  return CorpusBleu(pairs);
}

CorrelationReport CorrelationByGroup(std::span<const NBestGroup> groups,
                                     const ModelParams& model, const Vocabulary& vocab,
                                     MetricKind metric) {
  std::vector<std::optional<double>> rs(groups.size());
  ParallelFor(groups.size(), [&](std::size_t i) {
    const NBestGroup& g = groups[i];
    if (g.hypotheses.size() < 2) return;  // stays nullopt -> excluded
    std::vector<double> quality(g.hypotheses.size()), scores(g.hypotheses.size());
    for (std::size_t j = 0; j < g.hypotheses.size(); ++j) {
      if (metric == MetricKind::kWer) {
        quality[j] = 1.0 - Wer(g.reference, g.hypotheses[j].tokens);
      } else {
        const std::vector<Sentence> refs = {g.reference};
        quality[j] = SentenceBleu(refs, g.hypotheses[j].tokens);
      }
      scores[j] = LmScore(model, vocab.EncodeSentence(g.hypotheses[j].tokens));
    }
    rs[i] = Pearson(quality, scores);
  });

  CorrelationReport report;
  for (const auto& r : rs) {
    if (r.has_value()) {
      report.per_group_r.push_back(*r);
    } else {
      ++report.excluded;
    }
  }
  if (!report.per_group_r.empty()) report.stats = ComputeBoxplotStats(report.per_group_r);
  return report;
}

}  // namespace marginlm
