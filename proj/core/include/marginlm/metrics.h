// marginlm/metrics.h
//
// Task metrics (WER, BLEU) and the statistics used by the diagnostics:
// Pearson correlation, quantile summaries, histograms.

#ifndef MARGINLM_METRICS_H_
#define MARGINLM_METRICS_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace marginlm {

enum class MetricKind { kWer, kBleu };

struct EditAlignment {
  std::int64_t distance = 0;
  std::int64_t substitutions = 0;
  std::int64_t insertions = 0;
  std::int64_t deletions = 0;
  std::int64_t matches = 0;
};

// Word-level Levenshtein alignment with unit costs. Ties among optimal
// edit paths resolve match/substitution first, then deletion, then
// insertion. distance == subs + ins + dels and subs + dels + matches ==
// len(reference).
EditAlignment AlignEdits(std::span<const std::string> reference,
                         std::span<const std::string> hypothesis);

// Edit distance divided by reference length; a fraction >= 0 that can
// exceed 1. Throws on an empty reference.
double Wer(std::span<const std::string> reference,
           std::span<const std::string> hypothesis);

// Sentence BLEU-4. Modified n-gram precisions for n = 1..4; n >= 2 use
// add-one smoothing on both numerator and denominator so an exact match
// still scores 1. Brevity penalty exp(1 - r/c) when c < r, with r the
// reference length closest to c (ties -> shorter). Empty hypothesis
// returns 0.
double SentenceBleu(std::span<const std::vector<std::string>> references,
                    std::span<const std::string> hypothesis);

// Corpus BLEU-4 with counts pooled over segments, unsmoothed, brevity
// penalty on pooled lengths.
struct BleuPair {
  std::vector<std::vector<std::string>> references;
  std::vector<std::string> hypothesis;
};
double CorpusBleu(std::span<const BleuPair> pairs);

// Pearson r; nullopt when either variable has zero variance. Throws on
// length mismatch or fewer than two points.
std::optional<double> Pearson(std::span<const double> xs, std::span<const double> ys);

struct BoxplotStats {
  double median = 0, mean = 0, q05 = 0, q25 = 0, q75 = 0, q95 = 0;
};

// Quantiles by linear interpolation between order statistics at position
// p * (n - 1). Throws on empty input.
BoxplotStats ComputeBoxplotStats(std::span<const double> values);

struct HistogramBin {
  double left = 0, right = 0;
  std::int64_t count = 0;
};

// Fixed-width bins covering [lo, hi); values outside clamp into the edge
// bins. Bins are half-open [left, right) except the last, which is
// closed, so the counts always sum to len(values).
std::vector<HistogramBin> ComputeHistogram(std::span<const double> values,
                                           double bin_width, double lo, double hi);

}  // namespace marginlm

#endif  // MARGINLM_METRICS_H_
