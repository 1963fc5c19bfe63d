// marginlm/rnn.h
//
// Forward scoring and backpropagation through time for the sigmoid-cell
// recurrent LM.
//
// A sentence w_1..w_L is scored over L+1 prediction steps: the inputs are
// [BOS, w_1..w_L], the targets [w_1..w_L, EOS], and
//   h_t = sigmoid(U x_t + V h_{t-1}),  h_{-1} = 0
//   log p_t = log_softmax(W h_t + b)
// The LM-score of the sentence is the sum of target log-probabilities,
// so scores are comparable across lengths including the EOS step.

#ifndef MARGINLM_RNN_H_
#define MARGINLM_RNN_H_

#include <cstdint>
#include <span>
#include <vector>

#include "marginlm/matrix.h"
#include "marginlm/model.h"

namespace marginlm {

struct ForwardTrace {
  std::vector<std::int32_t> inputs;   // [BOS, w_1..w_L], length L+1
  std::vector<std::int32_t> targets;  // [w_1..w_L, EOS], length L+1
  Matrix hidden;                      // (L+1) x H, row t = h_t
  std::vector<double> logprobs;       // log p(target_t), length L+1
  double total = 0.0;                 // sum of logprobs == LM-score
};

// Runs the recurrence over the whole sentence. Log-probabilities use a
// max-subtracted log-softmax. Throws if the sentence is empty or any id
// is outside [0, V).
ForwardTrace ForwardSequence(const ModelParams& model,
                             std::span<const std::int32_t> sentence);

// LM-score: sum over steps of log p(target | prefix). Pure.
double LmScore(const ModelParams& model, std::span<const std::int32_t> sentence);

// Accumulates weight * d(-total)/dtheta into grads by full BPTT (no
// truncation). weight = -1 therefore accumulates the gradient of +total.
// The trace must come from ForwardSequence on the same model. Each call
// first forms its own contribution and then adds it to grads entrywise,
// so a weight-2 call equals two weight-1 calls bitwise. weight = 0 leaves
// grads untouched.
void BackwardSequence(const ModelParams& model, const ForwardTrace& trace,
                      double weight, Gradients& grads);

}  // namespace marginlm

#endif  // MARGINLM_RNN_H_
