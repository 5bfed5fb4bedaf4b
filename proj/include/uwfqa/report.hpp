#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "uwfqa/evaluation.hpp"

namespace uwfqa {

inline constexpr std::string_view kEvalSchema = "eval/1";
inline constexpr std::string_view kCvSchema = "cv/1";

struct EvalReport {
  double threshold = kDefaultThreshold;
  std::array<BinaryConfusion, kNumArtifacts> confusions{};
  std::array<ClassMetrics, kNumArtifacts> per_class{};
  ClassMetrics macro;
  UndefinedCounts undefined_counts{};
  std::string model_version;
  std::string dataset_digest;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

EvalReport build_report(std::span<const ArtifactLabelVector> preds,
                        std::span<const ArtifactLabelVector> truth, double threshold,
                        std::string model_version, std::string dataset_digest);

/// Recomputes metrics and macro values from stored confusions.
EvalReport report_from_confusions(const std::array<BinaryConfusion, kNumArtifacts>& confusions,
                                  double threshold, std::string model_version,
                                  std::string dataset_digest);

nlohmann::ordered_json to_json(const EvalReport& report);
/// Throws ValidationError on a schema mismatch.
EvalReport eval_report_from_json(const nlohmann::json& j);

std::string render_text(const EvalReport& report);
std::string render_json(const EvalReport& report);

/// Per-fold, per-class holdout accuracies (k x 6, fractions in [0, 1]).
struct CvResult {
  std::vector<std::array<double, kNumArtifacts>> fold_accuracy;

  std::array<double, kNumArtifacts> mean() const;
  /// Population standard deviation (divides by k).
  std::array<double, kNumArtifacts> stddev() const;
};

/// "84.9+/-2.1"-style cell; value and spread in percent, one decimal.
std::string format_mean_std(double mean_pct, double std_pct);

/// Table with one row per fold plus an "Overall" mean+/-std row.
std::string render_cv_table(const CvResult& cv);
nlohmann::ordered_json to_json(const CvResult& cv);
std::string render_cv_json(const CvResult& cv);
CvResult cv_result_from_json(const nlohmann::json& j);

}  // namespace uwfqa
