#include "marginlm/metrics.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "marginlm/common.h"

namespace marginlm {

EditAlignment AlignEdits(std::span<const std::string> reference,
                         std::span<const std::string> hypothesis) {
  const std::size_t R = reference.size(), C = hypothesis.size();
  // dp[i][j] = distance between reference[0..i) and hypothesis[0..j)
  std::vector<std::vector<std::int32_t>> dp(R + 1, std::vector<std::int32_t>(C + 1));
  for (std::size_t i = 0; i <= R; ++i) dp[i][0] = static_cast<std::int32_t>(i);
  for (std::size_t j = 0; j <= C; ++j) dp[0][j] = static_cast<std::int32_t>(j);
  for (std::size_t i = 1; i <= R; ++i) {
    for (std::size_t j = 1; j <= C; ++j) {
      const std::int32_t diag = dp[i - 1][j - 1] + (reference[i - 1] == hypothesis[j - 1] ? 0 : 1);
      const std::int32_t del = dp[i - 1][j] + 1;
      const std::int32_t ins = dp[i][j - 1] + 1;
      dp[i][j] = std::min({diag, del, ins});
    }
  }

  EditAlignment a;
  a.distance = dp[R][C];
  std::size_t i = R, j = C;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const bool same = reference[i - 1] == hypothesis[j - 1];
      if (dp[i][j] == dp[i - 1][j - 1] + (same ? 0 : 1)) {
        same ? ++a.matches : ++a.substitutions;
        --i, --j;
        continue;
      }
    }
    if (i > 0 && dp[i][j] == dp[i - 1][j] + 1) {
      ++a.deletions;
      --i;
      continue;
    }
    ++a.insertions;
    --j;
  }
  return a;
}

double Wer(std::span<const std::string> reference,
           std::span<const std::string> hypothesis) {
  if (reference.empty()) throw MarginlmError("wer: empty reference");
  return static_cast<double>(AlignEdits(reference, hypothesis).distance) /
         static_cast<double>(reference.size());
}

namespace {

using NgramCounts = std::map<std::vector<std::string>, std::int64_t>;

NgramCounts CountNgrams(std::span<const std::string> tokens, std::size_t n) {
  NgramCounts counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i)
    ++counts[std::vector<std::string>(tokens.begin() + i, tokens.begin() + i + n)];
  return counts;
}

// Clipped matches of hypothesis n-grams against the per-reference maximum.
std::int64_t ClippedMatches(const NgramCounts& hyp,
                            std::span<const std::vector<std::string>> refs,
                            std::size_t n) {
  NgramCounts max_ref;
  for (const auto& ref : refs)
    for (const auto& [gram, c] : CountNgrams(ref, n)) {
      auto& slot = max_ref[gram];
      slot = std::max(slot, c);
    }
  std::int64_t matched = 0;
  for (const auto& [gram, c] : hyp) {
    auto it = max_ref.find(gram);
    if (it != max_ref.end()) matched += std::min(c, it->second);
  }
  return matched;
}

std::size_t ClosestRefLength(std::span<const std::vector<std::string>> refs,
                             std::size_t hyp_len) {
  std::size_t best = refs.front().size();
  for (const auto& ref : refs) {
    const std::size_t len = ref.size();
    const auto dist = [hyp_len](std::size_t l) {
      return l > hyp_len ? l - hyp_len : hyp_len - l;
    };
    if (dist(len) < dist(best) || (dist(len) == dist(best) && len < best)) best = len;
  }
  return best;
}

}  // namespace

double SentenceBleu(std::span<const std::vector<std::string>> references,
                    std::span<const std::string> hypothesis) {
  if (references.empty()) throw MarginlmError("sentence_bleu: no references");
  if (hypothesis.empty()) return 0.0;

  double product = 1.0;
  for (std::size_t n = 1; n <= 4; ++n) {
    const NgramCounts hyp = CountNgrams(hypothesis, n);
    std::int64_t total = 0;
    for (const auto& [gram, c] : hyp) total += c;
    std::int64_t matched = ClippedMatches(hyp, references, n);
    double precision;
    if (n == 1) {
      if (matched == 0) return 0.0;
      precision = static_cast<double>(matched) / static_cast<double>(total);
    } else {
      precision = static_cast<double>(matched + 1) / static_cast<double>(total + 1);
    }
    product *= precision;
  }
  double bleu = std::pow(product, 0.25);

  const double c = static_cast<double>(hypothesis.size());
  const double r = static_cast<double>(ClosestRefLength(references, hypothesis.size()));
  if (c < r) bleu *= std::exp(1.0 - r / c);
  return bleu;
}

double CorpusBleu(std::span<const BleuPair> pairs) {
  if (pairs.empty()) throw MarginlmError("corpus_bleu: no segments");
  std::int64_t matched[4] = {0, 0, 0, 0};
  std::int64_t total[4] = {0, 0, 0, 0};
  std::int64_t hyp_len = 0, ref_len = 0;

  for (const auto& pair : pairs) {
    if (pair.references.empty()) throw MarginlmError("corpus_bleu: segment without references");
    if (!pair.hypothesis.empty()) {
      for (std::size_t n = 1; n <= 4; ++n) {
        const NgramCounts hyp = CountNgrams(pair.hypothesis, n);
        for (const auto& [gram, c] : hyp) total[n - 1] += c;
        matched[n - 1] += ClippedMatches(hyp, pair.references, n);
      }
      ref_len += static_cast<std::int64_t>(
          ClosestRefLength(pair.references, pair.hypothesis.size()));
    } else {
      ref_len += static_cast<std::int64_t>(ClosestRefLength(pair.references, 0));
    }
    hyp_len += static_cast<std::int64_t>(pair.hypothesis.size());
  }

  double log_precision = 0.0;
  for (int n = 0; n < 4; ++n) {
    if (matched[n] == 0 || total[n] == 0) return 0.0;
    log_precision += std::log(static_cast<double>(matched[n]) / static_cast<double>(total[n]));
  }
  double bleu = std::exp(log_precision / 4.0);
  if (hyp_len < ref_len) {
    if (hyp_len == 0) return 0.0;
    bleu *= std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
  }
  return bleu;
}

std::optional<double> Pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw MarginlmError("pearson: length mismatch");
  if (xs.size() < 2) throw MarginlmError("pearson: need at least two points");
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

namespace {

double QuantileSorted(const std::vector<double>& sorted, double p) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double pos = p * static_cast<double>(n - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, n - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

BoxplotStats ComputeBoxplotStats(std::span<const double> values) {
  if (values.empty()) throw MarginlmError("boxplot_stats: empty input");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  double sum = 0;
  for (double v : sorted) sum += v;
  BoxplotStats s;
  s.mean = sum / static_cast<double>(sorted.size());
  s.median = QuantileSorted(sorted, 0.50);
  s.q05 = QuantileSorted(sorted, 0.05);
  s.q25 = QuantileSorted(sorted, 0.25);
  s.q75 = QuantileSorted(sorted, 0.75);
  s.q95 = QuantileSorted(sorted, 0.95);
  return s;
}

std::vector<HistogramBin> ComputeHistogram(std::span<const double> values,
                                           double bin_width, double lo, double hi) {
  if (bin_width <= 0) throw MarginlmError("histogram: bin_width must be positive");
  if (!(lo < hi)) throw MarginlmError("histogram: lo must be below hi");
  const int nbins = std::max(1, static_cast<int>(std::ceil((hi - lo) / bin_width - 1e-12)));
  std::vector<HistogramBin> bins(nbins);
  for (int i = 0; i < nbins; ++i) {
    bins[i].left = lo + i * bin_width;
    bins[i].right = std::min(lo + (i + 1) * bin_width, hi);
  }
  for (double v : values) {
    int idx = static_cast<int>(std::floor((v - lo) / bin_width));
    idx = std::clamp(idx, 0, nbins - 1);
    ++bins[idx].count;
  }
  return bins;
}

}  // namespace marginlm
