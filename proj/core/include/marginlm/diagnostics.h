// marginlm/diagnostics.h
//
// CSV emission of the training and rescoring diagnostics: loss curves,
// margin histograms, correlation boxplots and side-by-side comparison
// tables. Every file is a pure function of its inputs -- no timestamps,
// no environment -- so repeated runs diff bytewise.

#ifndef MARGINLM_DIAGNOSTICS_H_
#define MARGINLM_DIAGNOSTICS_H_

#include <span>
#include <string>
#include <vector>

#include "marginlm/model.h"
#include "marginlm/nbest.h"
#include "marginlm/rescore.h"
#include "marginlm/trainer.h"
#include "marginlm/vocab.h"

namespace marginlm {

struct HistogramConfig {
  double bin_width = 2.0;
  double lo = -40.0;
  double hi = 40.0;
};

struct NamedModel {
  std::string name;
  const ModelParams* model = nullptr;
};

struct ComparisonRow {
  std::string model_name;
  double dev_objective = 0.0;
  double test_objective = 0.0;
  double dev_ppl = 0.0;   // NaN marks not-applicable (baseline row)
  double test_ppl = 0.0;  // NaN marks not-applicable
};

// CSV "step,loss"; an empty curve leaves just the header.
void EmitLossCurve(const LossCurve& curve, const std::string& path);

// CSV "bin_left,bin_right,count_a,count_b" over the margins of both
// models on the same groups, followed by a comment line with each
// model's fraction of positive margins.
void EmitMarginHistogram(const ModelParams& model_a, const ModelParams& model_b,
                         const Vocabulary& vocab, std::span<const NBestGroup> groups,
                         const HistogramConfig& config, const std::string& path);

// CSV "model,mean,median,q05,q25,q75,q95,excluded_count", one row per model.
void EmitCorrelationBoxplot(std::span<const NamedModel> models, const Vocabulary& vocab,
                            std::span<const NBestGroup> groups, MetricKind metric,
                            const std::string& path);

// CSV "model,dev_objective,test_objective,dev_ppl,test_ppl"; NaN cells
// are left empty.
void EmitComparisonTable(std::span<const ComparisonRow> rows, const std::string& path);

}  // namespace marginlm

#endif  // MARGINLM_DIAGNOSTICS_H_
