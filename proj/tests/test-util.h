// tests/test-util.h
//
// Shared helpers: seeded random instances and the central finite
// difference oracle used by every gradient test.

#ifndef MARGINLM_TESTS_TEST_UTIL_H_
#define MARGINLM_TESTS_TEST_UTIL_H_

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "marginlm/losses.h"
#include "marginlm/model.h"
#include "marginlm/rng.h"
#include "marginlm/rnn.h"
#include "marginlm/vocab.h"

namespace testutil {

using marginlm::IdSentence;
using marginlm::ModelParams;

inline IdSentence RandomSentence(marginlm::Rng& rng, std::int32_t vocab_size,
                                 int min_len = 1, int max_len = 8) {
  const int len = min_len + static_cast<int>(rng.Below(max_len - min_len + 1));
  IdSentence s(len);
  for (int i = 0; i < len; ++i)
    s[i] = marginlm::Vocabulary::kNumReserved +
           static_cast<std::int32_t>(
               rng.Below(vocab_size - marginlm::Vocabulary::kNumReserved));
  return s;
}

// Central finite differences of `loss` over every model parameter,
// compared entrywise against `analytic`. The error metric is
// |g - fd| / max(1, |g|, |fd|): relative for large gradients, absolute
// near zero where the finite-difference noise floor dominates.
inline double MaxGradError(ModelParams& model, const marginlm::Gradients& analytic,
                           const std::function<double()>& loss, double h = 1e-5) {
  double worst = 0.0;
  auto sweep = [&](std::vector<double>& params, const std::vector<double>& grad) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double saved = params[i];
      params[i] = saved + h;
      const double up = loss();
      params[i] = saved - h;
      const double down = loss();
      params[i] = saved;
      const double fd = (up - down) / (2.0 * h);
      const double err =
          std::abs(grad[i] - fd) / std::max({1.0, std::abs(grad[i]), std::abs(fd)});
      worst = std::max(worst, err);
    }
  };
  sweep(model.emb.data(), analytic.emb.data());
  sweep(model.u.data(), analytic.u.data());
  sweep(model.v_rec.data(), analytic.v_rec.data());
  sweep(model.w.data(), analytic.w.data());
  sweep(model.b, analytic.b);
  return worst;
}

// Gradient of a LossReport assembled from its coefficient decomposition:
// sum over coeffs of weight * d(-lm_score)/dtheta.
inline marginlm::Gradients AssembleFromCoeffs(const ModelParams& model,
                                              const marginlm::LossReport& report) {
  marginlm::Gradients grads(model);
  for (const auto& coeff : report.coeffs) {
    const marginlm::ForwardTrace trace = marginlm::ForwardSequence(model, coeff.ids);
    marginlm::BackwardSequence(model, trace, coeff.weight, grads);
  }
  return grads;
}

}  // namespace testutil

#endif  // MARGINLM_TESTS_TEST_UTIL_H_
