#include "marginlm/diagnostics.h"

#include <cmath>
#include <fstream>

#include "marginlm/common.h"
#include "marginlm/losses.h"

namespace marginlm {

namespace {

std::ofstream OpenOut(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw MarginlmError("cannot write file: " + path);
  return out;
}

void FinishOut(std::ofstream& out, const std::string& path) {
  if (!out) throw MarginlmError("write failed: " + path);
}

double PositiveFraction(std::span<const MarginSample> samples) {
  if (samples.empty()) return 0.0;
  std::int64_t positive = 0;
  for (const auto& s : samples)
    if (s.margin > 0.0) ++positive;
  return static_cast<double>(positive) / static_cast<double>(samples.size());
}

}  // namespace

void EmitLossCurve(const LossCurve& curve, const std::string& path) {
  std::ofstream out = OpenOut(path);
  out << "step,loss\n";
  for (const auto& [step, loss] : curve.points)
    out << step << ',' << FormatDouble(loss) << '\n';
  FinishOut(out, path);
}

void EmitMarginHistogram(const ModelParams& model_a, const ModelParams& model_b,
                         const Vocabulary& vocab, std::span<const NBestGroup> groups,
                         const HistogramConfig& config, const std::string& path) {
  const std::vector<EncodedPairGroup> encoded = EncodeGroups(vocab, groups);
  const std::vector<MarginSample> samples_a = MarginSamples(model_a, encoded);
  const std::vector<MarginSample> samples_b = MarginSamples(model_b, encoded);

  auto margins = [](const std::vector<MarginSample>& samples) {
    std::vector<double> m(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) m[i] = samples[i].margin;
    return m;
  };
  const std::vector<HistogramBin> bins_a =
      ComputeHistogram(margins(samples_a), config.bin_width, config.lo, config.hi);
  const std::vector<HistogramBin> bins_b =
      ComputeHistogram(margins(samples_b), config.bin_width, config.lo, config.hi);

  std::ofstream out = OpenOut(path);
  out << "bin_left,bin_right,count_a,count_b\n";
  for (std::size_t i = 0; i < bins_a.size(); ++i)
    out << FormatDouble(bins_a[i].left) << ',' << FormatDouble(bins_a[i].right) << ','
        << bins_a[i].count << ',' << bins_b[i].count << '\n';
  out << "# positive_fraction_a=" << FormatDouble(PositiveFraction(samples_a))
      << ",positive_fraction_b=" << FormatDouble(PositiveFraction(samples_b)) << '\n';
  FinishOut(out, path);
}

void EmitCorrelationBoxplot(std::span<const NamedModel> models, const Vocabulary& vocab,
                            std::span<const NBestGroup> groups, MetricKind metric,
                            const std::string& path) {
  std::ofstream out = OpenOut(path);
  out << "model,mean,median,q05,q25,q75,q95,excluded_count\n";
  for (const auto& named : models) {
    const CorrelationReport report = CorrelationByGroup(groups, *named.model, vocab, metric);
    out << named.name << ',' << FormatDouble(report.stats.mean) << ','
        << FormatDouble(report.stats.median) << ',' << FormatDouble(report.stats.q05) << ','
        << FormatDouble(report.stats.q25) << ',' << FormatDouble(report.stats.q75) << ','
        << FormatDouble(report.stats.q95) << ',' << report.excluded << '\n';
  }
  FinishOut(out, path);
}

void EmitComparisonTable(std::span<const ComparisonRow> rows, const std::string& path) {
  std::ofstream out = OpenOut(path);
  out << "model,dev_objective,test_objective,dev_ppl,test_ppl\n";
  auto cell = [](double v) { return std::isnan(v) ? std::string() : FormatDouble(v); };
  for (const auto& row : rows)
    out << row.model_name << ',' << cell(row.dev_objective) << ',' << cell(row.test_objective)
        << ',' << cell(row.dev_ppl) << ',' << cell(row.test_ppl) << '\n';
  FinishOut(out, path);
}

}  // namespace marginlm
