#include "marginlm/rnn.h"

#include <cmath>

#include "marginlm/common.h"
#include "marginlm/vocab.h"

namespace marginlm {

namespace {

inline double Sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Dot product in four fixed lanes so the compiler can vectorize the
// reduction; the lane layout is part of the numeric contract (results are
// bit-stable, merely summed in this fixed order).
inline double Dot(const double* __restrict a, const double* __restrict b, int n) {
  double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
  int j = 0;
  for (; j + 4 <= n; j += 4) {
    acc0 += a[j] * b[j];
    acc1 += a[j + 1] * b[j + 1];
    acc2 += a[j + 2] * b[j + 2];
    acc3 += a[j + 3] * b[j + 3];
  }
  for (; j < n; ++j) acc0 += a[j] * b[j];
  return (acc0 + acc1) + (acc2 + acc3);
}

// y = M x, M is rows x cols, x has cols entries.
inline void MatVec(const Matrix& m, const double* x, double* y) {
  const int rows = m.rows(), cols = m.cols();
  for (int i = 0; i < rows; ++i) y[i] = Dot(m.row(i), x, cols);
}

// y += M^T s, s has rows entries, y has cols entries.
inline void MatTVecAdd(const Matrix& m, const double* s, double* y) {
  const int rows = m.rows(), cols = m.cols();
  for (int i = 0; i < rows; ++i) {
    const double si = s[i];
    if (si == 0.0) continue;
    const double* mr = m.row(i);
    for (int j = 0; j < cols; ++j) y[j] += mr[j] * si;
  }
}

// M += s x^T (outer product accumulate), s has rows entries.
inline void OuterAdd(Matrix& m, const double* s, const double* x) {
  const int rows = m.rows(), cols = m.cols();
  for (int i = 0; i < rows; ++i) {
    const double si = s[i];
    if (si == 0.0) continue;
    double* mr = m.row(i);
    for (int j = 0; j < cols; ++j) mr[j] += si * x[j];
  }
}

inline double LogSumExp(const double* z, int n) {
  double zmax = z[0];
  for (int i = 1; i < n; ++i)
    if (z[i] > zmax) zmax = z[i];
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += std::exp(z[i] - zmax);
  return zmax + std::log(sum);
}

}  // namespace

ForwardTrace ForwardSequence(const ModelParams& model,
                             std::span<const std::int32_t> sentence) {
  const int V = model.vocab_size, H = model.hidden_dim;
  if (sentence.empty()) throw MarginlmError("forward_sequence: empty sentence");
  for (std::int32_t id : sentence)
    if (id < 0 || id >= V)
      throw MarginlmError("forward_sequence: token id " + std::to_string(id) +
                          " out of range for vocab size " + std::to_string(V));

  const int steps = static_cast<int>(sentence.size()) + 1;
  ForwardTrace trace;
  trace.inputs.reserve(steps);
  trace.targets.reserve(steps);
  trace.inputs.push_back(Vocabulary::kBos);
  for (std::int32_t id : sentence) {
    trace.inputs.push_back(id);
    trace.targets.push_back(id);
  }
  trace.targets.push_back(Vocabulary::kEos);
  trace.hidden = Matrix(steps, H);
  trace.logprobs.assign(steps, 0.0);

  std::vector<double> act(H);
  std::vector<double> logits(V);
  const double* hprev = nullptr;  // null encodes h_{-1} = 0

  for (int t = 0; t < steps; ++t) {
    const double* x = model.emb.row(trace.inputs[t]);
    MatVec(model.u, x, act.data());
    if (hprev != nullptr) {
      for (int i = 0; i < H; ++i) {
        const double* vr = model.v_rec.row(i);
        double acc = act[i];
        for (int j = 0; j < H; ++j) acc += vr[j] * hprev[j];
        act[i] = acc;
      }
    }
    double* h = trace.hidden.row(t);
    for (int i = 0; i < H; ++i) h[i] = Sigmoid(act[i]);

    MatVec(model.w, h, logits.data());
    for (int v = 0; v < V; ++v) logits[v] += model.b[v];
    const double lse = LogSumExp(logits.data(), V);
    trace.logprobs[t] = logits[trace.targets[t]] - lse;
    hprev = h;
  }

  double total = 0.0;
  for (double lp : trace.logprobs) total += lp;
  trace.total = total;
  return trace;
}

double LmScore(const ModelParams& model, std::span<const std::int32_t> sentence) {
  return ForwardSequence(model, sentence).total;
}

void BackwardSequence(const ModelParams& model, const ForwardTrace& trace,
                      double weight, Gradients& grads) {
  if (weight == 0.0) return;

  const int V = model.vocab_size, E = model.embed_dim, H = model.hidden_dim;
  const int steps = static_cast<int>(trace.targets.size());
  if (static_cast<int>(trace.inputs.size()) != steps || trace.hidden.rows() != steps ||
      trace.hidden.cols() != H)
    throw MarginlmError("backward_sequence: trace shape does not match model");
  if (grads.emb.rows() != V || grads.emb.cols() != E || grads.u.rows() != H ||
      grads.u.cols() != E || grads.v_rec.rows() != H || grads.v_rec.cols() != H ||
      grads.w.rows() != V || grads.w.cols() != H ||
      static_cast<int>(grads.b.size()) != V)
    throw MarginlmError("backward_sequence: gradient shape does not match model");

  // Contribution of this call, folded into grads at the end. Building it
  // separately keeps accumulation exactly linear in `weight`.
  Gradients local(model);

  std::vector<double> logits(V), dz(V), dh(H), da(H), carry(H, 0.0);

  for (int t = steps - 1; t >= 0; --t) {
    const double* h = trace.hidden.row(t);

    MatVec(model.w, h, logits.data());
    for (int v = 0; v < V; ++v) logits[v] += model.b[v];
    const double lse = LogSumExp(logits.data(), V);
    for (int v = 0; v < V; ++v) dz[v] = weight * std::exp(logits[v] - lse);
    dz[trace.targets[t]] -= weight;

    OuterAdd(local.w, dz.data(), h);
    for (int v = 0; v < V; ++v) local.b[v] += dz[v];

    std::fill(dh.begin(), dh.end(), 0.0);
    MatTVecAdd(model.w, dz.data(), dh.data());
    for (int i = 0; i < H; ++i) dh[i] += carry[i];

    for (int i = 0; i < H; ++i) da[i] = dh[i] * h[i] * (1.0 - h[i]);

    const double* x = model.emb.row(trace.inputs[t]);
    OuterAdd(local.u, da.data(), x);
    if (t > 0) OuterAdd(local.v_rec, da.data(), trace.hidden.row(t - 1));

    double* demb = local.emb.row(trace.inputs[t]);
    for (int i = 0; i < H; ++i) {
      const double dai = da[i];
      if (dai == 0.0) continue;
      const double* ur = model.u.row(i);
      for (int j = 0; j < E; ++j) demb[j] += ur[j] * dai;
    }

    std::fill(carry.begin(), carry.end(), 0.0);
    MatTVecAdd(model.v_rec, da.data(), carry.data());
  }

  grads.Add(local);
}

}  // namespace marginlm
