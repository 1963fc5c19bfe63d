// Microbenchmarks for the hot paths: forward scoring, BPTT, WER
// alignment, sentence BLEU and margin-loss evaluation.

#include <benchmark/benchmark.h>

#include "marginlm/losses.h"
#include "marginlm/metrics.h"
#include "marginlm/model.h"
#include "marginlm/nbest.h"
#include "marginlm/rng.h"
#include "marginlm/rnn.h"

using namespace marginlm;

namespace {

IdSentence MakeSentence(Rng& rng, std::int32_t vocab, int len) {
  IdSentence s(len);
  for (int i = 0; i < len; ++i)
    s[i] = 3 + static_cast<std::int32_t>(rng.Below(vocab - 3));
  return s;
}

void BM_ForwardSequence(benchmark::State& state) {
  const ModelParams model = InitParams(64, 32, 64, 1, false);
  Rng rng(2);
  const IdSentence sentence = MakeSentence(rng, 64, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(ForwardSequence(model, sentence));
  state.SetItemsProcessed(state.iterations() * (state.range(0) + 1));
}
BENCHMARK(BM_ForwardSequence)->Arg(6)->Arg(12)->Arg(24);

void BM_BackwardSequence(benchmark::State& state) {
  const ModelParams model = InitParams(64, 32, 64, 1, false);
  Rng rng(2);
  const IdSentence sentence = MakeSentence(rng, 64, static_cast<int>(state.range(0)));
  const ForwardTrace trace = ForwardSequence(model, sentence);
  Gradients grads(model);
  for (auto _ : state) BackwardSequence(model, trace, 1.0, grads);
  state.SetItemsProcessed(state.iterations() * (state.range(0) + 1));
}
BENCHMARK(BM_BackwardSequence)->Arg(6)->Arg(12)->Arg(24);

void BM_WerAlign(benchmark::State& state) {
  Rng rng(3);
  const int len = static_cast<int>(state.range(0));
  Sentence a(len), b(len);
  for (int i = 0; i < len; ++i) {
    a[i] = "w" + std::to_string(rng.Below(30));
    b[i] = "w" + std::to_string(rng.Below(30));
  }
  for (auto _ : state) benchmark::DoNotOptimize(AlignEdits(a, b));
}
BENCHMARK(BM_WerAlign)->Arg(8)->Arg(16)->Arg(32);

void BM_SentenceBleu(benchmark::State& state) {
  Rng rng(4);
  const int len = static_cast<int>(state.range(0));
  std::vector<Sentence> refs(1, Sentence(len));
  Sentence hyp(len);
  for (int i = 0; i < len; ++i) {
    refs[0][i] = "w" + std::to_string(rng.Below(30));
    hyp[i] = rng.Uniform() < 0.7 ? refs[0][i] : "w" + std::to_string(rng.Below(30));
  }
  for (auto _ : state) benchmark::DoNotOptimize(SentenceBleu(refs, hyp));
}
BENCHMARK(BM_SentenceBleu)->Arg(8)->Arg(16)->Arg(32);

void BM_MarginLoss(benchmark::State& state) {
  const ModelParams model = InitParams(64, 32, 64, 1, false);
  Rng rng(5);
  std::vector<EncodedPairGroup> groups(state.range(0));
  for (auto& g : groups) {
    g.ref = MakeSentence(rng, 64, 12);
    for (int j = 0; j < 8; ++j) g.hyps.push_back(MakeSentence(rng, 64, 12));
  }
  for (auto _ : state) benchmark::DoNotOptimize(LossMargin(model, groups, 1.0));
}
BENCHMARK(BM_MarginLoss)->Arg(4)->Arg(16);

}  // namespace

BENCHMARK_MAIN();
