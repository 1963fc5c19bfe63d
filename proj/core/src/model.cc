#include "marginlm/model.h"

#include <cmath>

#include "marginlm/common.h"
#include "marginlm/rng.h"

namespace marginlm {

bool ModelParams::SameShape(const ModelParams& o) const {
  return vocab_size == o.vocab_size && embed_dim == o.embed_dim &&
         hidden_dim == o.hidden_dim;
}

bool ModelParams::AllFinite() const {
  auto finite = [](const std::vector<double>& v) {
    for (double x : v)
      if (!std::isfinite(x)) return false;
    return true;
  };
  return finite(emb.data()) && finite(u.data()) && finite(v_rec.data()) &&
         finite(w.data()) && finite(b);
}

Gradients::Gradients(const ModelParams& model)
    : emb(model.vocab_size, model.embed_dim),
      u(model.hidden_dim, model.embed_dim),
      v_rec(model.hidden_dim, model.hidden_dim),
      w(model.vocab_size, model.hidden_dim),
      b(model.vocab_size, 0.0) {}

void Gradients::Zero() {
  emb.Fill(0.0);
  u.Fill(0.0);
  v_rec.Fill(0.0);
  w.Fill(0.0);
  std::fill(b.begin(), b.end(), 0.0);
}

void Gradients::Add(const Gradients& other) {
  auto add = [](std::vector<double>& dst, const std::vector<double>& src) {
    if (dst.size() != src.size()) throw MarginlmError("Gradients::Add: shape mismatch");
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  };
  add(emb.data(), other.emb.data());
  add(u.data(), other.u.data());
  add(v_rec.data(), other.v_rec.data());
  add(w.data(), other.w.data());
  add(b, other.b);
}

double Gradients::SquaredNorm() const {
  double total = 0.0;
  auto acc = [&total](const std::vector<double>& v) {
    for (double x : v) total += x * x;
  };
  acc(emb.data());
  acc(u.data());
  acc(v_rec.data());
  acc(w.data());
  acc(b);
  return total;
}

void Gradients::Scale(double factor) {
  auto scale = [factor](std::vector<double>& v) {
    for (double& x : v) x *= factor;
  };
  scale(emb.data());
  scale(u.data());
  scale(v_rec.data());
  scale(w.data());
  scale(b);
}

ModelParams InitParams(std::int32_t vocab_size, std::int32_t embed_dim,
                       std::int32_t hidden_dim, std::uint64_t seed,
                       bool zero_output) {
  if (vocab_size < 4) throw MarginlmError("init_params: vocab_size must be >= 4");
  if (embed_dim < 1 || hidden_dim < 1)
    throw MarginlmError("init_params: embed_dim and hidden_dim must be >= 1");

  ModelParams m;
  m.vocab_size = vocab_size;
  m.embed_dim = embed_dim;
  m.hidden_dim = hidden_dim;
  m.emb = Matrix(vocab_size, embed_dim);
  m.u = Matrix(hidden_dim, embed_dim);
  m.v_rec = Matrix(hidden_dim, hidden_dim);
  m.w = Matrix(vocab_size, hidden_dim);
  m.b.assign(vocab_size, 0.0);

  Rng rng(seed);
  auto fill = [&rng](Matrix& mat) {
    for (double& x : mat.data()) x = rng.UniformRange(-0.1, 0.1);
  };
  fill(m.emb);
  fill(m.u);
  fill(m.v_rec);
  if (!zero_output) fill(m.w);
  return m;
}

}  // namespace marginlm
