#include "uwfqa/evaluation.hpp"

#include "uwfqa/errors.hpp"

namespace uwfqa {

ArtifactLabelVector threshold_predictions(const ProbabilityVector& probs, double tau) {
  ArtifactLabelVector flags;
  for (std::size_t c = 0; c < kNumArtifacts; ++c) flags.set(c, probs.values[c] >= tau);
  return flags;
}

BinaryConfusion confusion(std::span<const ArtifactLabelVector> preds,
                          std::span<const ArtifactLabelVector> truth, Artifact cls) {
  if (preds.size() != truth.size()) {
    throw ArgumentError("prediction/truth length mismatch: " + std::to_string(preds.size()) +
                        " vs " + std::to_string(truth.size()));
  }
  if (preds.empty()) throw ArgumentError("confusion needs at least one image");
  BinaryConfusion m;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const bool p = preds[i][cls];
    const bool t = truth[i][cls];
    if (p && t) {
      ++m.tp;
    } else if (p) {
      ++m.fp;
    } else if (t) {
      ++m.fn;
    } else {
      ++m.tn;
    }
  }
  return m;
}

std::array<BinaryConfusion, kNumArtifacts> confusion_all(
    std::span<const ArtifactLabelVector> preds, std::span<const ArtifactLabelVector> truth) {
  std::array<BinaryConfusion, kNumArtifacts> out{};
  for (auto a : kAllArtifacts) out[index_of(a)] = confusion(preds, truth, a);
  return out;
}

std::string_view metric_name(Metric m) {
  switch (m) {
    case Metric::kAccuracy:
      return "accuracy";
    case Metric::kPrecision:
      return "precision";
    case Metric::kRecall:
      return "recall";
    case Metric::kSpecificity:
      return "specificity";
  }
  return "";
}

std::optional<double>& metric_ref(ClassMetrics& m, Metric which) {
  switch (which) {
    case Metric::kAccuracy:
      return m.accuracy;
    case Metric::kPrecision:
      return m.precision;
    case Metric::kRecall:
      return m.recall;
    case Metric::kSpecificity:
      break;
  }
  return m.specificity;
}

const std::optional<double>& metric_ref(const ClassMetrics& m, Metric which) {
  return metric_ref(const_cast<ClassMetrics&>(m), which);
}

namespace {
std::optional<double> ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}
}  // namespace

ClassMetrics metrics(const BinaryConfusion& c) {
  ClassMetrics m;
  m.accuracy = ratio(c.tp + c.tn, c.n());
  m.precision = ratio(c.tp, c.tp + c.fp);
  m.recall = ratio(c.tp, c.tp + c.fn);
  m.specificity = ratio(c.tn, c.tn + c.fp);
  return m;
}

ClassMetrics macro_average(std::span<const ClassMetrics> per_class, UndefinedCounts* undefined) {
  ClassMetrics out;
  UndefinedCounts missing{};
  for (std::size_t k = 0; k < kAllMetrics.size(); ++k) {
    const Metric which = kAllMetrics[k];
    double sum = 0.0;
    std::size_t defined = 0;
    for (const auto& m : per_class) {
      if (const auto& v = metric_ref(m, which)) {
        sum += *v;
        ++defined;
      } else {
        ++missing[k];
      }
    }
    if (defined > 0) metric_ref(out, which) = sum / static_cast<double>(defined);
  }
  if (undefined) *undefined = missing;
  return out;
}

}  // namespace uwfqa
