#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>

#include "uwfqa/labels.hpp"
#include "uwfqa/scores.hpp"

namespace uwfqa {

inline constexpr double kDefaultThreshold = 0.5;

/// flag_c = probability_c >= tau (ties are positive).
ArtifactLabelVector threshold_predictions(const ProbabilityVector& probs,
                                          double tau = kDefaultThreshold);

struct BinaryConfusion {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t n() const { return tp + fp + tn + fn; }
  friend bool operator==(const BinaryConfusion&, const BinaryConfusion&) = default;
};

/// Throws ArgumentError if lengths differ or are zero.
BinaryConfusion confusion(std::span<const ArtifactLabelVector> preds,
                          std::span<const ArtifactLabelVector> truth, Artifact cls);

std::array<BinaryConfusion, kNumArtifacts> confusion_all(
    std::span<const ArtifactLabelVector> preds, std::span<const ArtifactLabelVector> truth);

/// nullopt is the undefined marker (zero denominator).
struct ClassMetrics {
  std::optional<double> accuracy;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> specificity;

  /// Identical to recall.
  std::optional<double> sensitivity() const { return recall; }

  friend bool operator==(const ClassMetrics&, const ClassMetrics&) = default;
};

enum class Metric { kAccuracy, kPrecision, kRecall, kSpecificity };
inline constexpr std::array<Metric, 4> kAllMetrics = {Metric::kAccuracy, Metric::kPrecision,
                                                      Metric::kRecall, Metric::kSpecificity};
std::string_view metric_name(Metric m);
std::optional<double>& metric_ref(ClassMetrics& m, Metric which);
const std::optional<double>& metric_ref(const ClassMetrics& m, Metric which);

ClassMetrics metrics(const BinaryConfusion& c);

/// Number of classes whose value was undefined, per metric.
using UndefinedCounts = std::array<std::size_t, 4>;

/// Unweighted mean over classes with a defined value; a metric undefined for
/// every class stays undefined.
ClassMetrics macro_average(std::span<const ClassMetrics> per_class,
                           UndefinedCounts* undefined = nullptr);

}  // namespace uwfqa
