// marginlm/model.h
//
// Parameter set of the prototypical recurrent LM:
//   emb   V x E   token embeddings
//   u     H x E   input projection
//   v_rec H x H   recurrent projection
//   w     V x H   output projection
//   b     V       output bias
// All arithmetic is 64-bit floating point.

#ifndef MARGINLM_MODEL_H_
#define MARGINLM_MODEL_H_

#include <cstdint>
#include <vector>

#include "marginlm/matrix.h"

namespace marginlm {

struct ModelParams {
  std::int32_t vocab_size = 0;   // V
  std::int32_t embed_dim = 0;    // E
  std::int32_t hidden_dim = 0;   // H
  Matrix emb;
  Matrix u;
  Matrix v_rec;
  Matrix w;
  std::vector<double> b;

  bool SameShape(const ModelParams& o) const;
  bool AllFinite() const;
};

// Gradient accumulator, shape-matched to ModelParams.
struct Gradients {
  Matrix emb;
  Matrix u;
  Matrix v_rec;
  Matrix w;
  std::vector<double> b;

  Gradients() = default;
  explicit Gradients(const ModelParams& model);

  void Zero();
  void Add(const Gradients& other);          // entrywise +=
  double SquaredNorm() const;
  void Scale(double factor);
};

// emb, u, v_rec drawn uniform(-0.1, 0.1) in that order (row-major) from
// one Rng stream seeded with `seed`; then w uniform(-0.1, 0.1) unless
// zero_output, in which case w = 0. b is always 0. zero_output therefore
// yields an exactly uniform output distribution at every step.
ModelParams InitParams(std::int32_t vocab_size, std::int32_t embed_dim,
                       std::int32_t hidden_dim, std::uint64_t seed,
                       bool zero_output);

}  // namespace marginlm

#endif  // MARGINLM_MODEL_H_
