#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "json.hpp"
#include "uwfqa/labels.hpp"
#include "uwfqa/preprocess.hpp"
#include "uwfqa/raster.hpp"
#include "uwfqa/scores.hpp"

namespace httplib {
class Server;
}

namespace uwfqa::service {

enum class Recommendation { kRetake, kAcceptableWithWarnings, kAcceptable };
std::string_view to_string(Recommendation r);

/// Which flagged artifacts force a retake; flagged artifacts outside the set
/// only warn.
struct RetakePolicy {
  std::array<bool, kNumArtifacts> retake{};

  static RetakePolicy standard();  // eyelids, too dark, not centered
};

struct Verdict {
  Recommendation recommendation = Recommendation::kAcceptable;
  std::vector<Artifact> reasons;  // flagged artifacts that drove the verdict
};

Verdict recommend(const ArtifactLabelVector& flags, const RetakePolicy& policy);

/// Anything that maps a preprocessed image to six logits.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual LogitVector predict(const FloatImage& image) = 0;
  virtual std::string version() const = 0;
};

struct ServiceConfig {
  std::string host = "0.0.0.0";
  int port = 8080;
  std::filesystem::path model_path;  // empty = no model
  double threshold = 0.5;
  std::size_t max_upload_bytes = 32u << 20;
  std::filesystem::path audit_path = "audit.jsonl";
  bool store_images = false;
  std::filesystem::path image_store_dir = "stored_images";
  std::string cors_origin = "*";
  RetakePolicy retake_policy = RetakePolicy::standard();
  PreprocessConfig preprocess;

  void validate() const;  // ConfigError
};

nlohmann::ordered_json to_json(const ServiceConfig& cfg);
/// Strict: unknown keys are a ConfigError.
ServiceConfig service_config_from_json(const nlohmann::json& j);
/// Applies UWFQA_PORT, UWFQA_MODEL_PATH, UWFQA_THRESHOLD,
/// UWFQA_MAX_UPLOAD_BYTES, UWFQA_AUDIT_PATH, UWFQA_STORE_IMAGES.
void apply_env_overrides(ServiceConfig& cfg);

struct ClassPrediction {
  double probability = 0.0;
  bool flag = false;
};

struct PredictionResponse {
  std::array<ClassPrediction, kNumArtifacts> classes{};
  double threshold = 0.5;
  std::string model_version;
  Recommendation recommendation = Recommendation::kAcceptable;
  std::vector<Artifact> reasons;
  double latency_ms = 0.0;
};

PredictionResponse make_response(const LogitVector& logits, double threshold,
                                 const RetakePolicy& policy, std::string model_version);
nlohmann::ordered_json to_json(const PredictionResponse& r);
/// Throws ValidationError if the document does not match the response schema.
PredictionResponse prediction_response_from_json(const nlohmann::json& j);

/// Microseconds since the Unix epoch.
using Timestamp = std::int64_t;
std::string format_timestamp(Timestamp us);
/// Accepts Unix seconds (integer or fractional) or ISO-8601 UTC
/// (YYYY-MM-DDTHH:MM:SS[.ffffff]Z).
std::optional<Timestamp> parse_timestamp(std::string_view text);

struct AuditEntry {
  Timestamp timestamp = 0;
  std::string request_digest;  // SHA-256 of the uploaded bytes
  nlohmann::ordered_json response;
  std::string model_version;
  std::string stored_image;  // empty unless image storage is enabled
};

nlohmann::ordered_json to_json(const AuditEntry& e);
AuditEntry audit_entry_from_json(const nlohmann::json& j);

struct AuditPage {
  std::vector<AuditEntry> entries;
  std::optional<std::string> next_token;
};

/// Append-only JSON-lines log. Appends are serialized and flushed before
/// append() returns; timestamps are strictly increasing within a process.
class AuditLog {
 public:
  static constexpr std::size_t kPageSize = 1000;

  /// Loads existing entries from `path` (created if missing).
  explicit AuditLog(std::filesystem::path path);

  /// Stamps and persists the entry; returns the stored copy.
  AuditEntry append(AuditEntry entry);

  /// Entries with timestamp >= since, ascending, at most `limit`; the token
  /// resumes after the last returned entry.
  AuditPage query(Timestamp since, std::size_t limit = kPageSize) const;
  /// Continue from a token returned by query().
  AuditPage resume(std::string_view token, std::size_t limit = kPageSize) const;

  std::size_t size() const;

 private:
  AuditPage page_from(std::size_t first, std::size_t limit) const;

  std::filesystem::path path_;
  mutable std::mutex mutex_;
  std::ofstream out_;
  std::vector<AuditEntry> entries_;
  Timestamp last_ = 0;
};

/// HTTP front end: POST /v1/predict, GET /v1/health, GET /v1/audit.
class InferenceService {
 public:
  InferenceService(ServiceConfig cfg, std::shared_ptr<Predictor> predictor);
  ~InferenceService();

  InferenceService(const InferenceService&) = delete;
  InferenceService& operator=(const InferenceService&) = delete;

  /// Binds cfg.port (0 = any free port) and serves on a background thread.
  /// Returns the bound port.
  int start();
  /// Blocks serving on the calling thread until stop().
  void run();
  void stop();

  /// Replaces the model; waits for in-flight predictions to finish.
  void swap_predictor(std::shared_ptr<Predictor> predictor);

  const ServiceConfig& config() const { return cfg_; }
  AuditLog& audit() { return audit_; }

 private:
  void install_routes();
  std::shared_ptr<Predictor> current_predictor() const;

  ServiceConfig cfg_;
  std::unique_ptr<httplib::Server> server_;
  mutable std::shared_mutex model_mutex_;
  std::shared_ptr<Predictor> predictor_;
  AuditLog audit_;
  std::thread thread_;
  int bound_port_ = -1;
};

}  // namespace uwfqa::service
