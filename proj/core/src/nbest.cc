#include "marginlm/nbest.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <set>

#include "json.hpp"
#include "marginlm/common.h"

namespace marginlm {

using json = nlohmann::json;

void ChannelConfig::Validate() const {
  auto prob = [](double p) { return p >= 0.0 && p < 1.0; };
  if (!prob(p_sub) || !prob(p_del) || !prob(p_ins))
    throw MarginlmError("channel: probabilities must lie in [0, 1)");
  if (p_sub + p_del >= 1.0)
    throw MarginlmError("channel: p_sub + p_del must be below 1");
  if (k < 1) throw MarginlmError("channel: k must be >= 1");
  if (noise_sigma < 0.0) throw MarginlmError("channel: noise_sigma must be >= 0");
}

int SourceModel::ContentIndex(const std::string& token) const {
  auto it = token_index.find(token);
  return it == token_index.end() ? -1 : it->second;
}

double SourceModel::LengthLogProb(int len) const {
  if (len < min_len || len > max_len)
    throw MarginlmError("source oracle: length " + std::to_string(len) +
                        " outside the length model support");
  const double p = 1.0 / length_mean;
  const double log_q = std::log1p(-p);
  if (len == min_len) return std::log1p(-std::exp(min_len * log_q));  // P(G <= min)
  if (len == max_len) return (max_len - 1) * log_q;                   // P(G >= max)
  return (len - 1) * log_q + std::log(p);
}

namespace {

std::vector<double> StationaryDistribution(const Matrix& transitions) {
  const int m = transitions.rows();
  std::vector<double> pi(m, 1.0 / m), next(m);
  for (int iter = 0; iter < 100000; ++iter) {
    std::fill(next.begin(), next.end(), 0.0);
    for (int i = 0; i < m; ++i) {
      const double pii = pi[i];
      const double* row = transitions.row(i);
      for (int j = 0; j < m; ++j) next[j] += pii * row[j];
    }
    double sum = std::accumulate(next.begin(), next.end(), 0.0);
    for (double& x : next) x /= sum;
    double tv = 0.0;
    for (int j = 0; j < m; ++j) tv += std::abs(next[j] - pi[j]);
    pi.swap(next);
    if (0.5 * tv < 1e-14) break;
  }
  return pi;
}

int SampleCategorical(std::span<const double> probs, Rng& rng) {
  const double u = rng.Uniform();
  double cum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    cum += probs[i];
    if (u < cum) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

std::string ContentTokenName(int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "w%03d", i);
  return buf;
}

Sentence SampleSentence(const SourceModel& source, Rng& rng) {
  const double p = 1.0 / source.length_mean;
  int len = std::clamp(rng.Geometric(p), source.min_len, source.max_len);
  Sentence s;
  s.reserve(len);
  int state = SampleCategorical(source.initial, rng);
  s.push_back(source.content_tokens[state]);
  for (int t = 1; t < len; ++t) {
    state = SampleCategorical(
        std::span<const double>(source.transitions.row(state),
                                static_cast<std::size_t>(source.transitions.cols())),
        rng);
    s.push_back(source.content_tokens[state]);
  }
  return s;
}

}  // namespace

GeneratedCorpus GenerateSourceCorpus(std::int32_t vocab_size, std::int64_t n_sentences,
                                     std::uint64_t seed) {
  if (vocab_size < 8)
    throw MarginlmError("generate_source_corpus: vocab_size must be >= 8");
  const int m = vocab_size - 3;  // content tokens; 3 ids are reserved

  GeneratedCorpus out;
  SourceModel& src = out.source;
  src.content_tokens.reserve(m);
  for (int i = 0; i < m; ++i) {
    src.content_tokens.push_back(ContentTokenName(i));
    src.token_index[src.content_tokens.back()] = i;
  }

  Rng model_rng(DeriveSeed(seed, streams::kSourceModel));
  src.transitions = Matrix(m, m);
  for (int i = 0; i < m; ++i) {
    const std::vector<double> row = model_rng.DirichletHalf(m);
    std::copy(row.begin(), row.end(), src.transitions.row(i));
  }
  src.initial = StationaryDistribution(src.transitions);

  out.sentences = SampleCorpus(src, n_sentences, DeriveSeed(seed, streams::kTrainCorpus));
  return out;
}

std::vector<Sentence> SampleCorpus(const SourceModel& source, std::int64_t n_sentences,
                                   std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Sentence> corpus;
  corpus.reserve(n_sentences);
  for (std::int64_t i = 0; i < n_sentences; ++i) corpus.push_back(SampleSentence(source, rng));
  return corpus;
}

double OracleSourcePpl(const SourceModel& source, std::span<const Sentence> corpus) {
  if (corpus.empty()) throw MarginlmError("source oracle: empty corpus");
  double total = 0.0;
  std::int64_t steps = 0;
  for (const auto& sentence : corpus) {
    total += source.LengthLogProb(static_cast<int>(sentence.size()));
    int prev = -1;
    for (const auto& tok : sentence) {
      const int idx = source.ContentIndex(tok);
      if (idx < 0)
        throw MarginlmError("source oracle: token '" + tok + "' outside source vocabulary");
      total += std::log(prev < 0 ? source.initial[idx] : source.transitions.at(prev, idx));
      prev = idx;
    }
    steps += static_cast<std::int64_t>(sentence.size()) + 1;
  }
  return std::exp(-total / static_cast<double>(steps));
}

CorruptionDraw Corrupt(const Sentence& reference, const SourceModel& source,
                       const ChannelConfig& channel, Rng& rng) {
  if (reference.empty()) throw MarginlmError("corrupt: empty reference");
  const int m = static_cast<int>(source.content_tokens.size());
  CorruptionDraw draw;
  double logprob = 0.0;

  for (const auto& tok : reference) {
    const int idx = source.ContentIndex(tok);
    if (idx < 0)
      throw MarginlmError("corrupt: token '" + tok + "' outside source vocabulary");

    if (rng.Uniform() < channel.p_del) {
      logprob += std::log(channel.p_del);
    } else {
      logprob += std::log1p(-channel.p_del);
      if (rng.Uniform() < channel.p_sub) {
        // Uniform over the four confusable neighbors in content space.
        static constexpr int kOffsets[4] = {1, 2, -1, -2};
        const int off = kOffsets[rng.Below(4)];
        const int sub = ((idx + off) % m + m) % m;
        draw.tokens.push_back(source.content_tokens[sub]);
        logprob += std::log(channel.p_sub) + std::log(0.25);
      } else {
        draw.tokens.push_back(tok);
        logprob += std::log1p(-channel.p_sub);
      }
    }

    if (rng.Uniform() < channel.p_ins) {
      const int ins = static_cast<int>(rng.Below(static_cast<std::uint64_t>(m)));
      draw.tokens.push_back(source.content_tokens[ins]);
      logprob += std::log(channel.p_ins) - std::log(static_cast<double>(m));
    } else {
      logprob += std::log1p(-channel.p_ins);
    }
  }
  draw.channel_logprob = logprob;
  return draw;
}

std::vector<NBestGroup> GenerateNBest(std::span<const Sentence> corpus,
                                      const SourceModel& source,
                                      const ChannelConfig& channel,
                                      const std::string& id_prefix) {
  channel.Validate();
  Rng rng(channel.seed);
  std::vector<NBestGroup> groups;
  groups.reserve(corpus.size());

  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const Sentence& reference = corpus[i];
    if (reference.empty()) {
      std::cerr << "warning: skipping empty reference at index " << i << "\n";
      continue;
    }
    NBestGroup group;
    group.id = id_prefix + std::to_string(i);
    group.reference = reference;

    std::set<Sentence> seen;
    const int max_attempts = 10 * channel.k;
    for (int attempt = 0;
         attempt < max_attempts && static_cast<int>(group.hypotheses.size()) < channel.k;
         ++attempt) {
      CorruptionDraw draw = Corrupt(reference, source, channel, rng);
      const double noise = channel.noise_sigma * rng.Normal();
      if (draw.tokens.empty() || draw.tokens == reference) continue;
      if (!seen.insert(draw.tokens).second) continue;
      group.hypotheses.push_back({std::move(draw.tokens), draw.channel_logprob + noise});
    }
    if (group.hypotheses.empty())
      throw MarginlmError("generate_nbest: channel produced no usable hypothesis for group " +
                          group.id);

    std::stable_sort(group.hypotheses.begin(), group.hypotheses.end(),
                     [](const Hypothesis& a, const Hypothesis& b) {
                       return a.task_score > b.task_score;
                     });
    groups.push_back(std::move(group));
  }
  return groups;
}

RankedGroup SortCandidates(const NBestGroup& group, MetricKind kind) {
  RankedGroup out;
  out.id = group.id;
  out.kind = kind;

  std::vector<double> metric(group.hypotheses.size());
  for (std::size_t j = 0; j < group.hypotheses.size(); ++j) {
    if (kind == MetricKind::kWer) {
      metric[j] = Wer(group.reference, group.hypotheses[j].tokens);
    } else {
      const std::vector<Sentence> refs = {group.reference};
      metric[j] = SentenceBleu(refs, group.hypotheses[j].tokens);
    }
  }
  std::vector<std::size_t> order(group.hypotheses.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return kind == MetricKind::kWer ? metric[a] < metric[b] : metric[a] > metric[b];
  });

  out.cands.push_back(group.reference);
  out.metric.push_back(kind == MetricKind::kWer ? 0.0 : 1.0);
  for (std::size_t j : order) {
    out.cands.push_back(group.hypotheses[j].tokens);
    out.metric.push_back(metric[j]);
  }
  return out;
}

EncodedPairGroup EncodeGroup(const Vocabulary& vocab, const NBestGroup& group) {
  EncodedPairGroup out;
  out.ref = vocab.EncodeSentence(group.reference);
  out.hyps.reserve(group.hypotheses.size());
  for (const auto& h : group.hypotheses) out.hyps.push_back(vocab.EncodeSentence(h.tokens));
  return out;
}

std::vector<EncodedPairGroup> EncodeGroups(const Vocabulary& vocab,
                                           std::span<const NBestGroup> groups) {
  std::vector<EncodedPairGroup> out;
  out.reserve(groups.size());
  for (const auto& g : groups) out.push_back(EncodeGroup(vocab, g));
  return out;
}

EncodedRankGroup EncodeRankedGroup(const Vocabulary& vocab, const RankedGroup& group) {
  EncodedRankGroup out;
  out.kind = group.kind;
  out.metric = group.metric;
  out.cands.reserve(group.cands.size());
  for (const auto& c : group.cands) out.cands.push_back(vocab.EncodeSentence(c));
  return out;
}

std::vector<EncodedRankGroup> EncodeRankedGroups(const Vocabulary& vocab,
                                                 std::span<const RankedGroup> groups) {
  std::vector<EncodedRankGroup> out;
  out.reserve(groups.size());
  for (const auto& g : groups) out.push_back(EncodeRankedGroup(vocab, g));
  return out;
}

namespace {

Sentence TokenArray(const json& arr, std::size_t line_no, const char* field) {
  if (!arr.is_array())
    throw MarginlmError("nbest line " + std::to_string(line_no) + ": field '" + field +
                        "' must be an array of strings");
  Sentence out;
  out.reserve(arr.size());
  for (const auto& item : arr) {
    if (!item.is_string())
      throw MarginlmError("nbest line " + std::to_string(line_no) + ": field '" + field +
                          "' must be an array of strings");
    out.push_back(item.get<std::string>());
  }
  return out;
}

void WarnUnknownKeys(const json& obj, std::initializer_list<const char*> known,
                     const std::string& path, std::set<std::string>& warned) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* k : known)
      if (key == k) ok = true;
    if (!ok && warned.insert(key).second)
      std::cerr << "warning: " << path << ": ignoring unknown field '" << key << "'\n";
  }
}

}  // namespace

std::vector<NBestGroup> ReadNBest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MarginlmError("cannot open n-best file: " + path);

  std::vector<NBestGroup> groups;
  std::set<std::string> warned;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw MarginlmError("nbest line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.is_object())
      throw MarginlmError("nbest line " + std::to_string(line_no) + ": record must be an object");
    WarnUnknownKeys(j, {"id", "reference", "hypotheses"}, path, warned);

    NBestGroup group;
    if (!j.contains("id") || !j["id"].is_string())
      throw MarginlmError("nbest line " + std::to_string(line_no) + ": missing string field 'id'");
    group.id = j["id"].get<std::string>();
    if (!j.contains("reference"))
      throw MarginlmError("nbest line " + std::to_string(line_no) + ": missing field 'reference'");
    group.reference = TokenArray(j["reference"], line_no, "reference");
    if (group.reference.empty())
      throw MarginlmError("nbest line " + std::to_string(line_no) + ": field 'reference' is empty");

    if (!j.contains("hypotheses") || !j["hypotheses"].is_array())
      throw MarginlmError("nbest line " + std::to_string(line_no) +
                          ": missing array field 'hypotheses'");
    const json& hyps = j["hypotheses"];
    if (hyps.empty())
      throw MarginlmError("nbest line " + std::to_string(line_no) +
                          ": field 'hypotheses' must be non-empty");
    for (const auto& h : hyps) {
      if (!h.is_object())
        throw MarginlmError("nbest line " + std::to_string(line_no) +
                            ": field 'hypotheses' entries must be objects");
      WarnUnknownKeys(h, {"tokens", "task_score"}, path, warned);
      Hypothesis hyp;
      if (!h.contains("tokens"))
        throw MarginlmError("nbest line " + std::to_string(line_no) + ": missing field 'tokens'");
      hyp.tokens = TokenArray(h["tokens"], line_no, "tokens");
      if (!h.contains("task_score") || !h["task_score"].is_number())
        throw MarginlmError("nbest line " + std::to_string(line_no) +
                            ": missing numeric field 'task_score'");
      hyp.task_score = h["task_score"].get<double>();
      if (!std::isfinite(hyp.task_score))
        throw MarginlmError("nbest line " + std::to_string(line_no) +
                            ": field 'task_score' must be finite");
      group.hypotheses.push_back(std::move(hyp));
    }
    groups.push_back(std::move(group));
  }
  return groups;
}

void WriteNBest(std::span<const NBestGroup> groups, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw MarginlmError("cannot write n-best file: " + path);
  for (const auto& group : groups) {
    json j;
    j["id"] = group.id;
    j["reference"] = group.reference;
    json hyps = json::array();
    for (const auto& h : group.hypotheses) {
      json hj;
      hj["tokens"] = h.tokens;
      hj["task_score"] = h.task_score;
      hyps.push_back(std::move(hj));
    }
    j["hypotheses"] = std::move(hyps);
    out << j.dump() << '\n';
  }
  if (!out) throw MarginlmError("write failed: " + path);
}

}  // namespace marginlm
