// marginlm/nbest.h
//
// N-best lists, their line-delimited JSON file format, metric-sorted
// candidate lists, and the seeded synthetic noisy-channel task that
// stands in for a beam-search decoder at desk scale.
//
// The synthetic source is an order-1 Markov chain over content tokens
// whose transition rows are drawn from a symmetric Dirichlet(1/2); the
// initial distribution is the chain's stationary distribution and
// sentence lengths follow a geometric law with mean 12 clipped to
// [3, 30]. Keeping the true chain around makes the exact corpus
// perplexity of generated text computable, which is what the oracle
// checks lean on.

#ifndef MARGINLM_NBEST_H_
#define MARGINLM_NBEST_H_

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "marginlm/corpus-io.h"
#include "marginlm/losses.h"
#include "marginlm/matrix.h"
#include "marginlm/metrics.h"
#include "marginlm/rng.h"
#include "marginlm/vocab.h"

namespace marginlm {

struct Hypothesis {
  Sentence tokens;
  double task_score = 0.0;  // decoder log-score stand-in
};

struct NBestGroup {
  std::string id;
  Sentence reference;
  std::vector<Hypothesis> hypotheses;
};

// Corruption channel. Per reference token: delete with p_del, otherwise
// substitute with p_sub (uniform over the four confusable neighbors at
// content-index offsets +-1, +-2 mod the content vocabulary); after each
// position, insert a uniform content token with p_ins.
struct ChannelConfig {
  double p_sub = 0.15;
  double p_del = 0.05;
  double p_ins = 0.05;
  int k = 16;                // hypotheses requested per group
  double noise_sigma = 1.0;  // Gaussian noise on the task score
  std::uint64_t seed = 7;

  void Validate() const;  // probabilities in [0, 1), p_sub + p_del < 1, k >= 1
};

struct SourceModel {
  std::vector<std::string> content_tokens;  // index -> spelling
  std::unordered_map<std::string, int> token_index;
  Matrix transitions;                       // m x m, rows sum to 1
  std::vector<double> initial;              // stationary distribution
  double length_mean = 12.0;                // geometric mean before clipping
  int min_len = 3;
  int max_len = 30;

  int ContentIndex(const std::string& token) const;  // -1 if unknown

  // Exact log P(length = len) under the clipped geometric law.
  double LengthLogProb(int len) const;
};

// Samples the source chain and a corpus of n_sentences from it. The
// content vocabulary has vocab_size - 3 tokens ("w000", "w001", ...) so
// that a vocabulary built from the corpus with max_size = vocab_size
// covers it exactly alongside the three reserved entries.
struct GeneratedCorpus {
  std::vector<Sentence> sentences;
  SourceModel source;
};
GeneratedCorpus GenerateSourceCorpus(std::int32_t vocab_size, std::int64_t n_sentences,
                                     std::uint64_t seed);

// Draws more sentences from an existing source chain (same spelling of
// seeding as GenerateSourceCorpus's corpus stream).
std::vector<Sentence> SampleCorpus(const SourceModel& source, std::int64_t n_sentences,
                                   std::uint64_t seed);

// Exact token-level corpus perplexity under the true chain, counting the
// end of sentence through the length model: each sentence contributes
// log P(len) + log pi(w_1) + sum log P(w_t | w_{t-1}) over len + 1 steps.
double OracleSourcePpl(const SourceModel& source, std::span<const Sentence> corpus);

// One corruption draw. Returns the hypothesis and the exact
// log-probability of the realized edit sequence under the channel.
struct CorruptionDraw {
  Sentence tokens;
  double channel_logprob = 0.0;
};
CorruptionDraw Corrupt(const Sentence& reference, const SourceModel& source,
                       const ChannelConfig& channel, Rng& rng);

// k corruption draws per reference with exact-duplicate and
// equal-to-reference hypotheses resampled (bounded retries, so a group
// may end up with fewer than k). task_score = channel_logprob +
// Normal(0, noise_sigma). Hypotheses come out sorted by task_score
// descending, so the file order is the no-rescore ranking.
std::vector<NBestGroup> GenerateNBest(std::span<const Sentence> corpus,
                                      const SourceModel& source,
                                      const ChannelConfig& channel,
                                      const std::string& id_prefix);

// Metric-sorted candidate list for the ranking loss: the reference sits
// at index 0 (WER 0 / BLEU 1), hypotheses follow in ascending-WER or
// descending-BLEU order (stable).
struct RankedGroup {
  std::string id;
  MetricKind kind = MetricKind::kWer;
  std::vector<Sentence> cands;
  std::vector<double> metric;
};
RankedGroup SortCandidates(const NBestGroup& group, MetricKind kind);

// Bridges into the loss layer: encode token strings to ids through the
// vocabulary (OOV -> UNK).
EncodedPairGroup EncodeGroup(const Vocabulary& vocab, const NBestGroup& group);
std::vector<EncodedPairGroup> EncodeGroups(const Vocabulary& vocab,
                                           std::span<const NBestGroup> groups);
EncodedRankGroup EncodeRankedGroup(const Vocabulary& vocab, const RankedGroup& group);
std::vector<EncodedRankGroup> EncodeRankedGroups(const Vocabulary& vocab,
                                                 std::span<const RankedGroup> groups);

// Line-delimited JSON: one object per line with fields "id" (string),
// "reference" (array of token strings) and "hypotheses" (array of
// {"tokens", "task_score"}). task_score round-trips exactly. Unknown
// fields are ignored with a warning on stderr; a malformed line reports
// its line number and field.
std::vector<NBestGroup> ReadNBest(const std::string& path);
void WriteNBest(std::span<const NBestGroup> groups, const std::string& path);

}  // namespace marginlm

#endif  // MARGINLM_NBEST_H_
