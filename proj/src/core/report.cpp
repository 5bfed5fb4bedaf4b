#include "uwfqa/report.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "uwfqa/errors.hpp"

namespace uwfqa {
namespace {

nlohmann::ordered_json optional_to_json(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

std::optional<double> optional_from_json(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

nlohmann::ordered_json metrics_json(const ClassMetrics& m) {
  nlohmann::ordered_json j;
  for (auto which : kAllMetrics) j[std::string(metric_name(which))] = optional_to_json(metric_ref(m, which));
  return j;
}

ClassMetrics metrics_from(const nlohmann::json& j) {
  ClassMetrics m;
  for (auto which : kAllMetrics) {
    metric_ref(m, which) = optional_from_json(j.at(std::string(metric_name(which))));
  }
  return m;
}

std::string percent_cell(const std::optional<double>& v) {
  return v ? fmt::format("{:.1f}", *v * 100.0) : std::string("n/a(k=0)");
}

}  // namespace

EvalReport report_from_confusions(const std::array<BinaryConfusion, kNumArtifacts>& confusions,
                                  double threshold, std::string model_version,
                                  std::string dataset_digest) {
  EvalReport r;
  r.threshold = threshold;
  r.confusions = confusions;
  for (std::size_t c = 0; c < kNumArtifacts; ++c) r.per_class[c] = metrics(confusions[c]);
  r.macro = macro_average(r.per_class, &r.undefined_counts);
  r.model_version = std::move(model_version);
  r.dataset_digest = std::move(dataset_digest);
  return r;
}

EvalReport build_report(std::span<const ArtifactLabelVector> preds,
                        std::span<const ArtifactLabelVector> truth, double threshold,
                        std::string model_version, std::string dataset_digest) {
  return report_from_confusions(confusion_all(preds, truth), threshold, std::move(model_version),
                                std::move(dataset_digest));
}

nlohmann::ordered_json to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["schema"] = kEvalSchema;
  j["threshold"] = report.threshold;
  nlohmann::ordered_json classes = nlohmann::ordered_json::object();
  for (std::size_t c = 0; c < kNumArtifacts; ++c) {
    const auto& m = report.confusions[c];
    nlohmann::ordered_json cls;
    cls["tp"] = m.tp;
    cls["fp"] = m.fp;
    cls["tn"] = m.tn;
    cls["fn"] = m.fn;
    const auto metric_values = metrics_json(report.per_class[c]);
    for (const auto& [k, v] : metric_values.items()) cls[k] = v;
    classes[std::string(kArtifactNames[c])] = cls;
  }
  j["classes"] = classes;
  j["macro"] = metrics_json(report.macro);
  nlohmann::ordered_json undef;
  for (std::size_t k = 0; k < kAllMetrics.size(); ++k) {
    undef[std::string(metric_name(kAllMetrics[k]))] = report.undefined_counts[k];
  }
  j["undefined_counts"] = undef;
  j["model_version"] = report.model_version;
  j["dataset_digest"] = report.dataset_digest;
  return j;
}

EvalReport eval_report_from_json(const nlohmann::json& j) {
  try {
    if (j.at("schema").get<std::string>() != kEvalSchema) {
      throw ValidationError("unsupported report schema " + j.at("schema").dump());
    }
    EvalReport r;
    r.threshold = j.at("threshold").get<double>();
    const auto& classes = j.at("classes");
    for (std::size_t c = 0; c < kNumArtifacts; ++c) {
      const auto& cls = classes.at(std::string(kArtifactNames[c]));
      r.confusions[c] = {cls.at("tp").get<std::uint64_t>(), cls.at("fp").get<std::uint64_t>(),
                         cls.at("tn").get<std::uint64_t>(), cls.at("fn").get<std::uint64_t>()};
      r.per_class[c] = metrics_from(cls);
    }
    r.macro = metrics_from(j.at("macro"));
    for (std::size_t k = 0; k < kAllMetrics.size(); ++k) {
      r.undefined_counts[k] =
          j.at("undefined_counts").at(std::string(metric_name(kAllMetrics[k]))).get<std::size_t>();
    }
    r.model_version = j.at("model_version").get<std::string>();
    r.dataset_digest = j.at("dataset_digest").get<std::string>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed evaluation report: ") + e.what());
  }
}

std::string render_text(const EvalReport& report) {
  std::size_t name_w = std::string_view("Macro average").size();
  for (auto t : kArtifactTitles) name_w = std::max(name_w, t.size());

  std::string out;
  out += fmt::format("Evaluation report (threshold {:.2f})\n", report.threshold);
  out += fmt::format("model: {}\ndataset: {}\n\n", report.model_version, report.dataset_digest);
  out += fmt::format("{:<{}}  {:>5} {:>5} {:>5} {:>5}  {:>9} {:>9} {:>9} {:>11}\n", "Class",
                     name_w, "TP", "FP", "TN", "FN", "Accuracy", "Precision", "Recall",
                     "Specificity");
  for (std::size_t c = 0; c < kNumArtifacts; ++c) {
    const auto& m = report.confusions[c];
    const auto& x = report.per_class[c];
    out += fmt::format("{:<{}}  {:>5} {:>5} {:>5} {:>5}  {:>9} {:>9} {:>9} {:>11}\n",
                       kArtifactTitles[c], name_w, m.tp, m.fp, m.tn, m.fn,
                       percent_cell(x.accuracy), percent_cell(x.precision),
                       percent_cell(x.recall), percent_cell(x.specificity));
  }
  const auto& mm = report.macro;
  out += fmt::format("{:<{}}  {:>5} {:>5} {:>5} {:>5}  {:>9} {:>9} {:>9} {:>11}\n",
                     "Macro average", name_w, "", "", "", "", percent_cell(mm.accuracy),
                     percent_cell(mm.precision), percent_cell(mm.recall),
                     percent_cell(mm.specificity));
  out += "\nSensitivity equals recall. Classes excluded from the macro mean (undefined):";
  for (std::size_t k = 0; k < kAllMetrics.size(); ++k) {
    out += fmt::format(" {}={}", metric_name(kAllMetrics[k]), report.undefined_counts[k]);
  }
  out += "\n";
  return out;
}

std::string render_json(const EvalReport& report) { return to_json(report).dump(2) + "\n"; }

std::array<double, kNumArtifacts> CvResult::mean() const {
  std::array<double, kNumArtifacts> m{};
  if (fold_accuracy.empty()) return m;
  for (const auto& row : fold_accuracy) {
    for (std::size_t c = 0; c < kNumArtifacts; ++c) m[c] += row[c];
  }
  for (auto& v : m) v /= static_cast<double>(fold_accuracy.size());
  return m;
}

std::array<double, kNumArtifacts> CvResult::stddev() const {
  std::array<double, kNumArtifacts> s{};
  if (fold_accuracy.empty()) return s;
  const auto m = mean();
  for (const auto& row : fold_accuracy) {
    for (std::size_t c = 0; c < kNumArtifacts; ++c) s[c] += (row[c] - m[c]) * (row[c] - m[c]);
  }
  for (auto& v : s) v = std::sqrt(v / static_cast<double>(fold_accuracy.size()));
  return s;
}

std::string format_mean_std(double mean_pct, double std_pct) {
  return fmt::format("{:.1f}+/-{:.1f}", mean_pct, std_pct);
}

std::string render_cv_table(const CvResult& cv) {
  std::vector<std::vector<std::string>> rows;
  for (std::size_t f = 0; f < cv.fold_accuracy.size(); ++f) {
    std::vector<std::string> row{fmt::format("Fold {}", f + 1)};
    for (double v : cv.fold_accuracy[f]) row.push_back(fmt::format("{:.1f}", v * 100.0));
    rows.push_back(std::move(row));
  }
  const auto mean = cv.mean();
  const auto sd = cv.stddev();
  std::vector<std::string> overall{"Overall"};
  for (std::size_t c = 0; c < kNumArtifacts; ++c) {
    overall.push_back(format_mean_std(mean[c] * 100.0, sd[c] * 100.0));
  }
  rows.push_back(std::move(overall));

  std::array<std::size_t, kNumArtifacts + 1> width{};
  width[0] = std::string_view("Overall").size();
  for (std::size_t c = 0; c < kNumArtifacts; ++c) width[c + 1] = kArtifactTitles[c].size();
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  }

  std::string out = fmt::format("{:<{}}", "", width[0]);
  for (std::size_t c = 0; c < kNumArtifacts; ++c) {
    out += fmt::format("  {:>{}}", kArtifactTitles[c], width[c + 1]);
  }
  out += "\n";
  for (const auto& row : rows) {
    out += fmt::format("{:<{}}", row[0], width[0]);
    for (std::size_t i = 1; i < row.size(); ++i) out += fmt::format("  {:>{}}", row[i], width[i]);
    out += "\n";
  }
  return out;
}

nlohmann::ordered_json to_json(const CvResult& cv) {
  nlohmann::ordered_json j;
  j["schema"] = kCvSchema;
  j["k"] = cv.fold_accuracy.size();
  j["classes"] = kArtifactNames;
  j["fold_accuracy"] = cv.fold_accuracy;
  j["mean"] = cv.mean();
  j["std"] = cv.stddev();
  nlohmann::ordered_json overall = nlohmann::ordered_json::array();
  const auto mean = cv.mean();
  const auto sd = cv.stddev();
  for (std::size_t c = 0; c < kNumArtifacts; ++c) {
    overall.push_back(format_mean_std(mean[c] * 100.0, sd[c] * 100.0));
  }
  j["overall"] = overall;
  return j;
}

std::string render_cv_json(const CvResult& cv) { return to_json(cv).dump(2) + "\n"; }

CvResult cv_result_from_json(const nlohmann::json& j) {
  try {
    if (j.at("schema").get<std::string>() != kCvSchema) {
      throw ValidationError("unsupported cv schema " + j.at("schema").dump());
    }
    CvResult cv;
    cv.fold_accuracy = j.at("fold_accuracy").get<std::vector<std::array<double, kNumArtifacts>>>();
    return cv;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed cv result: ") + e.what());
  }
}

}  // namespace uwfqa
