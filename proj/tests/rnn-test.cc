// Vocabulary, parameter init, forward scoring, BPTT gradients and the
// checkpoint format.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "marginlm/checkpoint.h"
#include "marginlm/common.h"
#include "marginlm/corpus-io.h"
#include "marginlm/losses.h"
#include "marginlm/model.h"
#include "marginlm/rnn.h"
#include "marginlm/vocab.h"
#include "test-util.h"

using namespace marginlm;

namespace {

std::vector<Sentence> Corpus(std::initializer_list<const char*> lines) {
  std::vector<Sentence> corpus;
  for (const char* line : lines) corpus.push_back(SplitTokens(line));
  return corpus;
}

}  // namespace

TEST_CASE("vocabulary keeps the most frequent tokens with reserved ids") {
  const auto corpus = Corpus({"a a b"});
  const Vocabulary vocab = Vocabulary::Build(corpus, 5);
  CHECK(vocab.size() == 5);
  CHECK(vocab.Decode(0) == "<s>");
  CHECK(vocab.Decode(1) == "</s>");
  CHECK(vocab.Decode(2) == "<unk>");
  CHECK(vocab.Decode(3) == "a");
  CHECK(vocab.Decode(4) == "b");
}

TEST_CASE("vocabulary truncates by frequency and maps the rest to UNK") {
  const auto corpus = Corpus({"a a b c"});
  const Vocabulary vocab = Vocabulary::Build(corpus, 4);
  CHECK(vocab.size() == 4);
  CHECK(vocab.Encode("a") == 3);
  CHECK(vocab.Encode("b") == Vocabulary::kUnk);
  CHECK(vocab.Encode("c") == Vocabulary::kUnk);
  CHECK(vocab.Encode("never-seen") == Vocabulary::kUnk);
}

TEST_CASE("vocabulary frequency ties break by first occurrence") {
  const auto corpus = Corpus({"z q z q m"});
  const Vocabulary vocab = Vocabulary::Build(corpus, 4);
  CHECK(vocab.Encode("z") == 3);  // same count as q, seen first
  CHECK(vocab.Encode("q") == Vocabulary::kUnk);
}

TEST_CASE("vocabulary round-trips ids and rejects bad input") {
  const auto corpus = Corpus({"a b c d e f", "a b c"});
  const Vocabulary vocab = Vocabulary::Build(corpus, 16);
  for (std::int32_t id = 0; id < vocab.size(); ++id)
    CHECK(vocab.Encode(vocab.Decode(id)) == id);
  CHECK_THROWS_AS(vocab.Decode(vocab.size()), MarginlmError);
  CHECK_THROWS_AS(vocab.Decode(-1), MarginlmError);
  CHECK_THROWS_AS(Vocabulary::Build({}, 10), MarginlmError);
  CHECK_THROWS_AS(Vocabulary::Build(corpus, 2), MarginlmError);
}

TEST_CASE("init_params is deterministic and validates dimensions") {
  const ModelParams a = InitParams(12, 4, 4, 99, false);
  const ModelParams b = InitParams(12, 4, 4, 99, false);
  CHECK(a.emb == b.emb);
  CHECK(a.u == b.u);
  CHECK(a.v_rec == b.v_rec);
  CHECK(a.w == b.w);
  CHECK(a.b == b.b);
  CHECK(a.AllFinite());
  for (double x : a.emb.data()) CHECK(std::abs(x) < 0.1);
  CHECK_THROWS_AS(InitParams(3, 4, 4, 0, false), MarginlmError);
  CHECK_THROWS_AS(InitParams(8, 0, 4, 0, false), MarginlmError);
}

TEST_CASE("zero-output init scores every step uniformly") {
  const ModelParams model = InitParams(10, 3, 5, 1, /*zero_output=*/true);
  const IdSentence sentence = {3, 7, 9};
  const ForwardTrace trace = ForwardSequence(model, sentence);
  const double expected = -std::log(10.0);
  for (double lp : trace.logprobs) CHECK(lp == doctest::Approx(expected).epsilon(1e-12));
  CHECK(LmScore(model, sentence) ==
        doctest::Approx(4.0 * std::log(0.1)).epsilon(1e-12));
  CHECK(LmScore(model, sentence) == doctest::Approx(-9.210340371976184).epsilon(1e-12));
}

TEST_CASE("forward trace shape, hidden range and normalization") {
  const ModelParams model = InitParams(12, 4, 4, 7, false);
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const IdSentence sentence = testutil::RandomSentence(rng, 12);
    const ForwardTrace trace = ForwardSequence(model, sentence);
    const std::size_t steps = sentence.size() + 1;
    CHECK(trace.inputs.size() == steps);
    CHECK(trace.targets.size() == steps);
    CHECK(trace.logprobs.size() == steps);
    CHECK(trace.hidden.rows() == static_cast<int>(steps));
    CHECK(trace.inputs[0] == Vocabulary::kBos);
    CHECK(trace.targets.back() == Vocabulary::kEos);
    CHECK(trace.total <= 0.0);

    double sum = 0.0;
    for (double lp : trace.logprobs) sum += lp;
    CHECK(std::abs(trace.total - sum) <= 1e-9 * static_cast<double>(steps));

    // Hidden activations are sigmoids; the full distribution at each step
    // must renormalize to 1.
    for (int t = 0; t < trace.hidden.rows(); ++t) {
      for (int i = 0; i < trace.hidden.cols(); ++i) {
        CHECK(trace.hidden.at(t, i) > 0.0);
        CHECK(trace.hidden.at(t, i) < 1.0);
      }
      std::vector<double> logits(model.vocab_size);
      for (int v = 0; v < model.vocab_size; ++v) {
        double acc = model.b[v];
        for (int i = 0; i < model.hidden_dim; ++i)
          acc += model.w.at(v, i) * trace.hidden.at(t, i);
        logits[v] = acc;
      }
      double zmax = logits[0];
      for (double z : logits) zmax = std::max(zmax, z);
      double norm = 0.0, lse_sum = 0.0;
      for (double z : logits) lse_sum += std::exp(z - zmax);
      const double lse = zmax + std::log(lse_sum);
      for (double z : logits) norm += std::exp(z - lse);
      CHECK(norm == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("forward rejects bad ids and empty sentences") {
  const ModelParams model = InitParams(8, 2, 2, 5, false);
  CHECK_THROWS_AS(ForwardSequence(model, IdSentence{3, 8}), MarginlmError);
  CHECK_THROWS_AS(ForwardSequence(model, IdSentence{-1}), MarginlmError);
  CHECK_THROWS_AS(ForwardSequence(model, IdSentence{}), MarginlmError);
}

TEST_CASE("forward matches a step-by-step scalar recomputation") {
  // V=4, E=2, H=2 hand-set model, recomputed below with plain scalar
  // arithmetic and an unsubtracted softmax.
  ModelParams m;
  m.vocab_size = 4;
  m.embed_dim = 2;
  m.hidden_dim = 2;
  m.emb = Matrix(4, 2);
  m.u = Matrix(2, 2);
  m.v_rec = Matrix(2, 2);
  m.w = Matrix(4, 2);
  m.b = {0.01, -0.01, 0.02, 0.0};
  const double emb[4][2] = {{0.05, -0.02}, {0.01, 0.03}, {-0.04, 0.02}, {0.06, -0.03}};
  const double u[2][2] = {{0.07, -0.05}, {0.02, 0.04}};
  const double v[2][2] = {{0.03, 0.01}, {-0.02, 0.05}};
  const double w[4][2] = {{0.04, -0.01}, {-0.03, 0.02}, {0.05, 0.06}, {-0.02, -0.04}};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 2; ++j) m.emb.at(i, j) = emb[i][j];
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      m.u.at(i, j) = u[i][j];
      m.v_rec.at(i, j) = v[i][j];
    }
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 2; ++j) m.w.at(i, j) = w[i][j];

  const IdSentence sentence = {3, 2};
  const ForwardTrace trace = ForwardSequence(m, sentence);

  auto sigmoid = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
  const int inputs[3] = {0, 3, 2};
  const int targets[3] = {3, 2, 1};
  double h0 = 0.0, h1 = 0.0;
  double expected_total = 0.0;
  for (int t = 0; t < 3; ++t) {
    const double x0 = emb[inputs[t]][0], x1 = emb[inputs[t]][1];
    const double a0 = u[0][0] * x0 + u[0][1] * x1 + v[0][0] * h0 + v[0][1] * h1;
    const double a1 = u[1][0] * x0 + u[1][1] * x1 + v[1][0] * h0 + v[1][1] * h1;
    const double nh0 = sigmoid(a0), nh1 = sigmoid(a1);
    double z[4], denom = 0.0;
    for (int c = 0; c < 4; ++c) {
      z[c] = w[c][0] * nh0 + w[c][1] * nh1 + m.b[c];
      denom += std::exp(z[c]);
    }
    expected_total += std::log(std::exp(z[targets[t]]) / denom);
    h0 = nh0;
    h1 = nh1;
  }
  CHECK(trace.total == doctest::Approx(expected_total).epsilon(1e-12));
}

TEST_CASE("forward and lm_score never mutate the model") {
  const ModelParams model = InitParams(10, 3, 3, 11, false);
  const ModelParams copy = model;
  (void)ForwardSequence(model, IdSentence{4, 5, 6});
  (void)LmScore(model, IdSentence{3});
  CHECK(model.emb == copy.emb);
  CHECK(model.u == copy.u);
  CHECK(model.v_rec == copy.v_rec);
  CHECK(model.w == copy.w);
  CHECK(model.b == copy.b);
}

TEST_CASE("BPTT gradient matches central finite differences") {
  ModelParams model = InitParams(12, 4, 4, 42, false);
  Rng rng(17);
  const IdSentence sentence = testutil::RandomSentence(rng, 12, 3, 7);

  Gradients grads(model);
  const ForwardTrace trace = ForwardSequence(model, sentence);
  BackwardSequence(model, trace, 1.0, grads);

  const double err = testutil::MaxGradError(
      model, grads, [&]() { return -LmScore(model, sentence); });
  CHECK(err < 1e-4);
}

TEST_CASE("backward weight semantics: zero, linearity, sign") {
  const ModelParams model = InitParams(9, 3, 3, 5, false);
  const IdSentence sentence = {3, 4, 5, 6};
  const ForwardTrace trace = ForwardSequence(model, sentence);

  Gradients untouched(model);
  BackwardSequence(model, trace, 0.0, untouched);
  for (double g : untouched.w.data()) CHECK(g == 0.0);

  Gradients twice(model), doubled(model);
  BackwardSequence(model, trace, 1.0, twice);
  BackwardSequence(model, trace, 1.0, twice);
  BackwardSequence(model, trace, 2.0, doubled);
  CHECK(twice.emb == doubled.emb);
  CHECK(twice.u == doubled.u);
  CHECK(twice.v_rec == doubled.v_rec);
  CHECK(twice.w == doubled.w);
  CHECK(twice.b == doubled.b);

  // weight -1 accumulates the gradient of +total: the exact negation.
  Gradients pos(model), neg(model);
  BackwardSequence(model, trace, 1.0, pos);
  BackwardSequence(model, trace, -1.0, neg);
  for (std::size_t i = 0; i < pos.w.data().size(); ++i)
    CHECK(pos.w.data()[i] == -neg.w.data()[i]);
}

TEST_CASE("backward validates shapes") {
  const ModelParams model = InitParams(9, 3, 3, 5, false);
  const ModelParams other = InitParams(9, 3, 4, 5, false);
  const ForwardTrace trace = ForwardSequence(model, IdSentence{3, 4});
  Gradients wrong(other);
  CHECK_THROWS_AS(BackwardSequence(model, trace, 1.0, wrong), MarginlmError);
}

TEST_CASE("identical inputs give bit-identical traces") {
  const ModelParams model = InitParams(11, 4, 5, 23, false);
  const IdSentence sentence = {3, 9, 4, 10};
  const ForwardTrace a = ForwardSequence(model, sentence);
  const ForwardTrace b = ForwardSequence(model, sentence);
  CHECK(a.total == b.total);
  CHECK(a.hidden == b.hidden);
  CHECK(a.logprobs == b.logprobs);
}

TEST_CASE("checkpoint round-trip is bit-exact") {
  const auto corpus = Corpus({"a b c d e f g h i"});
  const Vocabulary vocab = Vocabulary::Build(corpus, 12);
  const ModelParams model = InitParams(vocab.size(), 3, 4, 77, false);

  const std::string path =
      (std::filesystem::temp_directory_path() / "marginlm-ckpt-test.bin").string();
  SaveCheckpoint(model, vocab, path);
  const auto [loaded, loaded_vocab] = LoadCheckpoint(path);

  CHECK(loaded.vocab_size == model.vocab_size);
  CHECK(loaded.emb == model.emb);
  CHECK(loaded.u == model.u);
  CHECK(loaded.v_rec == model.v_rec);
  CHECK(loaded.w == model.w);
  CHECK(loaded.b == model.b);
  CHECK(loaded_vocab.tokens() == vocab.tokens());
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint loading rejects malformed files") {
  const auto corpus = Corpus({"a b c d e"});
  const Vocabulary vocab = Vocabulary::Build(corpus, 8);
  const ModelParams model = InitParams(vocab.size(), 2, 3, 5, false);
  const auto dir = std::filesystem::temp_directory_path();
  const std::string path = (dir / "marginlm-ckpt-bad.bin").string();
  SaveCheckpoint(model, vocab, path);

  // Truncation at several prefixes must all fail cleanly.
  std::ifstream in(path, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  for (std::size_t keep : {std::size_t(0), std::size_t(3), std::size_t(10),
                           bytes.size() / 2, bytes.size() - 1}) {
    std::ofstream out(path, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(keep));
    out.close();
    CHECK_THROWS_AS(LoadCheckpoint(path), MarginlmError);
  }

  // Bad magic.
  {
    std::string bad = bytes;
    bad[0] = 'X';
    std::ofstream out(path, std::ios::binary);
    out.write(bad.data(), static_cast<std::streamsize>(bad.size()));
  }
  CHECK_THROWS_AS(LoadCheckpoint(path), MarginlmError);

  // Trailing garbage.
  {
    std::string bad = bytes + "zzz";
    std::ofstream out(path, std::ios::binary);
    out.write(bad.data(), static_cast<std::streamsize>(bad.size()));
  }
  CHECK_THROWS_AS(LoadCheckpoint(path), MarginlmError);
  std::filesystem::remove(path);
}

TEST_CASE("zero-output checkpoint reloads with uniform scoring intact") {
  const auto corpus = Corpus({"a b c d e"});
  const Vocabulary vocab = Vocabulary::Build(corpus, 8);
  const ModelParams model = InitParams(vocab.size(), 2, 3, 5, /*zero_output=*/true);
  const std::string path =
      (std::filesystem::temp_directory_path() / "marginlm-ckpt-zero.bin").string();
  SaveCheckpoint(model, vocab, path);
  const auto [loaded, loaded_vocab] = LoadCheckpoint(path);
  const std::vector<IdSentence> ids = {{3, 4}, {5, 6, 7}};
  CHECK(CorpusPerplexity(loaded, ids) == doctest::Approx(8.0).epsilon(1e-9));
  std::filesystem::remove(path);
}
