// Synthetic source chain, corruption channel, candidate sorting and the
// n-best file format.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "marginlm/common.h"
#include "marginlm/nbest.h"

using namespace marginlm;

namespace {

std::string Slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

std::string TempPath(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("source corpus generation is deterministic and length-clipped") {
  const GeneratedCorpus a = GenerateSourceCorpus(16, 500, 42);
  const GeneratedCorpus b = GenerateSourceCorpus(16, 500, 42);
  CHECK(a.sentences == b.sentences);
  CHECK(a.source.transitions == b.source.transitions);
  CHECK(a.source.initial == b.source.initial);

  const GeneratedCorpus c = GenerateSourceCorpus(16, 500, 43);
  CHECK(a.sentences != c.sentences);

  for (const auto& sentence : a.sentences) {
    CHECK(sentence.size() >= 3);
    CHECK(sentence.size() <= 30);
  }
  CHECK(a.source.content_tokens.size() == 13);
  CHECK_THROWS_AS(GenerateSourceCorpus(7, 10, 1), MarginlmError);
}

TEST_CASE("transition rows are distributions and the initial law is stationary") {
  const GeneratedCorpus gen = GenerateSourceCorpus(24, 1, 7);
  const Matrix& P = gen.source.transitions;
  for (int i = 0; i < P.rows(); ++i) {
    double sum = 0.0;
    for (int j = 0; j < P.cols(); ++j) {
      CHECK(P.at(i, j) >= 0.0);
      sum += P.at(i, j);
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
  // pi P == pi
  const std::vector<double>& pi = gen.source.initial;
  for (int j = 0; j < P.cols(); ++j) {
    double acc = 0.0;
    for (int i = 0; i < P.rows(); ++i) acc += pi[i] * P.at(i, j);
    CHECK(acc == doctest::Approx(pi[j]).epsilon(1e-9));
  }
}

TEST_CASE("empirical unigrams converge to the stationary distribution") {
  const GeneratedCorpus gen = GenerateSourceCorpus(32, 50000, 11);
  const int m = static_cast<int>(gen.source.content_tokens.size());
  std::vector<double> counts(m, 0.0);
  double total = 0.0;
  for (const auto& sentence : gen.sentences)
    for (const auto& tok : sentence) {
      ++counts[gen.source.ContentIndex(tok)];
      ++total;
    }
  double tv = 0.0;
  for (int i = 0; i < m; ++i) tv += std::abs(counts[i] / total - gen.source.initial[i]);
  CHECK(0.5 * tv < 0.05);
}

TEST_CASE("source oracle perplexity matches a raw recomputation") {
  const GeneratedCorpus gen = GenerateSourceCorpus(20, 200, 3);
  const SourceModel& src = gen.source;

  // Independent pass: clipped-geometric pmf written out directly.
  const double p = 1.0 / 12.0, q = 1.0 - p;
  auto len_logprob = [&](int len) {
    if (len == 3) return std::log(1.0 - q * q * q);
    if (len == 30) return 29.0 * std::log(q);
    return (len - 1) * std::log(q) + std::log(p);
  };
  double total = 0.0;
  std::int64_t steps = 0;
  for (const auto& sentence : gen.sentences) {
    total += len_logprob(static_cast<int>(sentence.size()));
    for (std::size_t t = 0; t < sentence.size(); ++t) {
      const int cur = src.ContentIndex(sentence[t]);
      if (t == 0) {
        total += std::log(src.initial[cur]);
      } else {
        total += std::log(src.transitions.at(src.ContentIndex(sentence[t - 1]), cur));
      }
    }
    steps += static_cast<std::int64_t>(sentence.size()) + 1;
  }
  const double oracle = std::exp(-total / static_cast<double>(steps));
  CHECK(OracleSourcePpl(src, gen.sentences) == doctest::Approx(oracle).epsilon(1e-9));

  const std::vector<Sentence> alien = {{"not-a-token", "w000", "w001"}};
  CHECK_THROWS_AS(OracleSourcePpl(src, alien), MarginlmError);
}

TEST_CASE("deterministic one-hot chain contributes nothing per content step") {
  GeneratedCorpus gen = GenerateSourceCorpus(12, 1, 5);
  SourceModel& src = gen.source;
  const int m = static_cast<int>(src.content_tokens.size());
  src.transitions.Fill(0.0);
  for (int i = 0; i < m; ++i) src.transitions.at(i, (i + 1) % m) = 1.0;
  std::fill(src.initial.begin(), src.initial.end(), 1.0 / m);

  // A cycle-following sentence: only the length and initial terms remain.
  Sentence sentence;
  for (int t = 0; t < 6; ++t) sentence.push_back(src.content_tokens[t % m]);
  const std::vector<Sentence> corpus = {sentence};
  const double expected =
      std::exp(-(src.LengthLogProb(6) + std::log(1.0 / m)) / 7.0);
  CHECK(OracleSourcePpl(src, corpus) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("source oracle lower-bounds a count-based model on fresh data") {
  for (std::uint64_t seed : {1ull, 5ull, 9ull}) {
    const GeneratedCorpus gen = GenerateSourceCorpus(20, 4000, seed);
    const std::vector<Sentence> dev = SampleCorpus(gen.source, 500, seed + 1000);
    const double oracle = OracleSourcePpl(gen.source, dev);

    // Add-one-smoothed unigram model with EOS, fit on the train sample.
    const int m = static_cast<int>(gen.source.content_tokens.size());
    std::vector<double> counts(m + 1, 1.0);  // slot m = EOS
    double total = static_cast<double>(m + 1);
    for (const auto& sentence : gen.sentences) {
      for (const auto& tok : sentence) {
        counts[gen.source.ContentIndex(tok)] += 1.0;
        total += 1.0;
      }
      counts[m] += 1.0;
      total += 1.0;
    }
    double loglik = 0.0;
    std::int64_t steps = 0;
    for (const auto& sentence : dev) {
      for (const auto& tok : sentence)
        loglik += std::log(counts[gen.source.ContentIndex(tok)] / total);
      loglik += std::log(counts[m] / total);
      steps += static_cast<std::int64_t>(sentence.size()) + 1;
    }
    const double unigram_ppl = std::exp(-loglik / static_cast<double>(steps));
    CHECK(oracle < unigram_ppl);
  }
}

TEST_CASE("degenerate channels: no edits and certain deletion") {
  const GeneratedCorpus gen = GenerateSourceCorpus(11, 1, 13);
  const Sentence ref = {"w000", "w003", "w007"};

  ChannelConfig silent;
  silent.p_sub = silent.p_del = silent.p_ins = 0.0;
  Rng rng(1);
  const CorruptionDraw clean = Corrupt(ref, gen.source, silent, rng);
  CHECK(clean.tokens == ref);
  CHECK(clean.channel_logprob == 0.0);

  ChannelConfig wipe;
  wipe.p_sub = 0.0;
  wipe.p_del = 1.0;
  wipe.p_ins = 0.0;
  const CorruptionDraw erased = Corrupt(ref, gen.source, wipe, rng);
  CHECK(erased.tokens.empty());
  CHECK(erased.channel_logprob == 0.0);  // the only possible outcome

  CHECK_THROWS_AS(Corrupt({}, gen.source, silent, rng), MarginlmError);
  const Sentence alien = {"zzz"};
  CHECK_THROWS_AS(Corrupt(alien, gen.source, silent, rng), MarginlmError);
}

TEST_CASE("per-draw channel log-probability matches the identified edit") {
  // Single-token reference with insertions off: the outcome identifies
  // the edit script, so its exact probability is checkable draw by draw.
  const GeneratedCorpus gen = GenerateSourceCorpus(11, 1, 17);  // m = 8
  const Sentence ref = {"w003"};
  ChannelConfig channel;
  channel.p_sub = 0.4;
  channel.p_del = 0.2;
  channel.p_ins = 0.0;

  const double lp_del = std::log(0.2);
  const double lp_keep = std::log1p(-0.2) + std::log1p(-0.4);
  const double lp_sub = std::log1p(-0.2) + std::log(0.4) + std::log(0.25);

  Rng rng(99);
  int dels = 0, keeps = 0, subs = 0;
  const int n = 4000;
  for (int i = 0; i < n; ++i) {
    const CorruptionDraw draw = Corrupt(ref, gen.source, channel, rng);
    if (draw.tokens.empty()) {
      ++dels;
      CHECK(draw.channel_logprob == doctest::Approx(lp_del).epsilon(1e-12));
    } else if (draw.tokens == ref) {
      ++keeps;
      CHECK(draw.channel_logprob == doctest::Approx(lp_keep).epsilon(1e-12));
    } else {
      ++subs;
      const Sentence neighbors = {"w004", "w005", "w002", "w001"};
      CHECK(std::find(neighbors.begin(), neighbors.end(), draw.tokens[0]) != neighbors.end());
      CHECK(draw.channel_logprob == doctest::Approx(lp_sub).epsilon(1e-12));
    }
  }
  CHECK(std::abs(dels / double(n) - 0.2) < 0.03);
  CHECK(std::abs(keeps / double(n) - 0.48) < 0.03);
  CHECK(std::abs(subs / double(n) - 0.32) < 0.03);
}

TEST_CASE("insertion-only channel log-probability is exact in the insert count") {
  const GeneratedCorpus gen = GenerateSourceCorpus(11, 1, 21);  // m = 8
  const Sentence ref = {"w000", "w001", "w002", "w003"};
  ChannelConfig channel;
  channel.p_sub = 0.0;
  channel.p_del = 0.0;
  channel.p_ins = 0.3;

  Rng rng(7);
  for (int i = 0; i < 500; ++i) {
    const CorruptionDraw draw = Corrupt(ref, gen.source, channel, rng);
    const int n_ins = static_cast<int>(draw.tokens.size()) - 4;
    REQUIRE(n_ins >= 0);
    const double expected = n_ins * (std::log(0.3) - std::log(8.0)) +
                            (4 - n_ins) * std::log1p(-0.3);
    CHECK(draw.channel_logprob == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("no-edit frequency converges to (1-p_del)(1-p_sub)") {
  const GeneratedCorpus gen = GenerateSourceCorpus(16, 800, 29);
  ChannelConfig channel;
  channel.p_sub = 0.15;
  channel.p_del = 0.05;
  channel.p_ins = 0.05;

  Rng rng(31);
  std::int64_t unchanged = 0, positions = 0;
  for (const auto& ref : gen.sentences) {
    if (positions >= 100000) break;
    const CorruptionDraw draw = Corrupt(ref, gen.source, channel, rng);
    // Count kept tokens via the alignment's match count against the
    // reference: with these probabilities matches are kept positions in
    // all but a vanishing fraction of draws.
    const EditAlignment align = AlignEdits(ref, draw.tokens);
    unchanged += align.matches;
    positions += static_cast<std::int64_t>(ref.size());
  }
  const double expected = (1.0 - 0.05) * (1.0 - 0.15);
  CHECK(std::abs(static_cast<double>(unchanged) / positions - expected) < 0.01);
}

TEST_CASE("generated n-best groups are deduplicated and deterministic") {
  const GeneratedCorpus gen = GenerateSourceCorpus(20, 80, 5);
  ChannelConfig channel;
  channel.k = 8;
  channel.seed = 101;
  const auto groups = GenerateNBest(gen.sentences, gen.source, channel, "g-");
  CHECK(groups.size() == gen.sentences.size());
  for (std::size_t i = 0; i < groups.size(); ++i) {
    CHECK(groups[i].id == "g-" + std::to_string(i));
    CHECK(!groups[i].hypotheses.empty());
    CHECK(groups[i].hypotheses.size() <= 8);
    for (std::size_t a = 0; a < groups[i].hypotheses.size(); ++a) {
      CHECK(groups[i].hypotheses[a].tokens != groups[i].reference);
      CHECK(std::isfinite(groups[i].hypotheses[a].task_score));
      for (std::size_t b = a + 1; b < groups[i].hypotheses.size(); ++b)
        CHECK(groups[i].hypotheses[a].tokens != groups[i].hypotheses[b].tokens);
    }
    // File order is the task-score ranking.
    for (std::size_t a = 1; a < groups[i].hypotheses.size(); ++a)
      CHECK(groups[i].hypotheses[a - 1].task_score >= groups[i].hypotheses[a].task_score);
  }

  const auto again = GenerateNBest(gen.sentences, gen.source, channel, "g-");
  const std::string p1 = TempPath("marginlm-nbest-a.jsonl");
  const std::string p2 = TempPath("marginlm-nbest-b.jsonl");
  WriteNBest(groups, p1);
  WriteNBest(again, p2);
  CHECK(Slurp(p1) == Slurp(p2));
  std::filesystem::remove(p1);
  std::filesystem::remove(p2);
}

TEST_CASE("with zero noise the task score is the channel log-probability ranking") {
  const GeneratedCorpus gen = GenerateSourceCorpus(20, 30, 55);
  ChannelConfig channel;
  channel.k = 6;
  channel.noise_sigma = 0.0;
  channel.seed = 77;
  const auto groups = GenerateNBest(gen.sentences, gen.source, channel, "q-");
  // task_score == channel_logprob, so every score is a log-probability.
  for (const auto& g : groups)
    for (const auto& h : g.hypotheses) CHECK(h.task_score <= 0.0);
}

TEST_CASE("candidate sorting: reference first, metric monotone, stable") {
  const GeneratedCorpus gen = GenerateSourceCorpus(20, 40, 61);
  ChannelConfig channel;
  channel.k = 8;
  channel.seed = 3;
  const auto groups = GenerateNBest(gen.sentences, gen.source, channel, "s-");

  for (const auto& g : groups) {
    const RankedGroup by_wer = SortCandidates(g, MetricKind::kWer);
    REQUIRE(by_wer.cands.size() == g.hypotheses.size() + 1);
    CHECK(by_wer.cands[0] == g.reference);
    CHECK(by_wer.metric[0] == 0.0);
    for (std::size_t j = 1; j + 1 < by_wer.metric.size(); ++j)
      CHECK(by_wer.metric[j] <= by_wer.metric[j + 1]);

    // Argsort oracle over independently recomputed metric values.
    std::vector<double> wers(g.hypotheses.size());
    for (std::size_t j = 0; j < g.hypotheses.size(); ++j)
      wers[j] = Wer(g.reference, g.hypotheses[j].tokens);
    std::vector<std::size_t> order(wers.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return wers[a] < wers[b]; });
    for (std::size_t j = 0; j < order.size(); ++j)
      CHECK(by_wer.cands[j + 1] == g.hypotheses[order[j]].tokens);

    const RankedGroup by_bleu = SortCandidates(g, MetricKind::kBleu);
    CHECK(by_bleu.metric[0] == 1.0);
    for (std::size_t j = 1; j + 1 < by_bleu.metric.size(); ++j)
      CHECK(by_bleu.metric[j] >= by_bleu.metric[j + 1]);
  }
}

TEST_CASE("n-best files round-trip exactly") {
  const GeneratedCorpus gen = GenerateSourceCorpus(24, 100, 71);
  ChannelConfig channel;
  channel.k = 5;
  channel.seed = 13;
  const auto groups = GenerateNBest(gen.sentences, gen.source, channel, "rt-");

  const std::string path = TempPath("marginlm-nbest-rt.jsonl");
  WriteNBest(groups, path);
  const auto loaded = ReadNBest(path);
  REQUIRE(loaded.size() == groups.size());
  for (std::size_t i = 0; i < groups.size(); ++i) {
    CHECK(loaded[i].id == groups[i].id);
    CHECK(loaded[i].reference == groups[i].reference);
    REQUIRE(loaded[i].hypotheses.size() == groups[i].hypotheses.size());
    for (std::size_t j = 0; j < groups[i].hypotheses.size(); ++j) {
      CHECK(loaded[i].hypotheses[j].tokens == groups[i].hypotheses[j].tokens);
      // Bit-exact score round-trip.
      CHECK(loaded[i].hypotheses[j].task_score == groups[i].hypotheses[j].task_score);
    }
  }
  std::filesystem::remove(path);
}

TEST_CASE("malformed n-best lines name the line and field") {
  const std::string path = TempPath("marginlm-nbest-bad.jsonl");
  auto write_and_expect = [&](const std::string& content, const char* needle) {
    std::ofstream out(path, std::ios::binary);
    out << content;
    out.close();
    try {
      ReadNBest(path);
      FAIL_CHECK("expected a format error for: " << content);
    } catch (const MarginlmError& e) {
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };

  const std::string good =
      R"({"id":"a","reference":["x"],"hypotheses":[{"tokens":["y"],"task_score":-1.5}]})";
  write_and_expect(good + "\nnot json\n", "line 2");
  write_and_expect(R"({"reference":["x"],"hypotheses":[]})", "id");
  write_and_expect(R"({"id":"a","hypotheses":[{"tokens":["y"],"task_score":1}]})", "reference");
  write_and_expect(R"({"id":"a","reference":["x"],"hypotheses":[]})", "hypotheses");
  write_and_expect(R"({"id":"a","reference":["x"]})", "hypotheses");
  write_and_expect(
      R"({"id":"a","reference":["x"],"hypotheses":[{"tokens":["y"]}]})", "task_score");
  write_and_expect(
      R"({"id":"a","reference":[],"hypotheses":[{"tokens":["y"],"task_score":1}]})",
      "reference");

  // Unknown fields are tolerated.
  {
    std::ofstream out(path, std::ios::binary);
    out << R"({"id":"a","reference":["x"],"hypotheses":[{"tokens":["y"],"task_score":-1.5}],"extra":42})"
        << "\n";
  }
  const auto loaded = ReadNBest(path);
  REQUIRE(loaded.size() == 1);
  CHECK(loaded[0].hypotheses[0].task_score == -1.5);
  std::filesystem::remove(path);
}

TEST_CASE("channel config validation") {
  ChannelConfig c;
  c.p_sub = 0.6;
  c.p_del = 0.5;
  CHECK_THROWS_AS(c.Validate(), MarginlmError);
  c.p_sub = 0.1;
  c.p_del = 0.1;
  c.k = 0;
  CHECK_THROWS_AS(c.Validate(), MarginlmError);
  c.k = 4;
  c.noise_sigma = -1.0;
  CHECK_THROWS_AS(c.Validate(), MarginlmError);
  c.noise_sigma = 0.5;
  CHECK_NOTHROW(c.Validate());
}
