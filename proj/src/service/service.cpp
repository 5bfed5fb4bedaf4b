#include "uwfqa/service.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <ctime>

#include "uwfqa/digest.hpp"
#include "uwfqa/errors.hpp"
#include "uwfqa/evaluation.hpp"
#include "uwfqa/image_io.hpp"

namespace uwfqa::service {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(Recommendation r) {
  switch (r) {
    case Recommendation::kRetake:
      return "retake";
    case Recommendation::kAcceptableWithWarnings:
      return "acceptable_with_warnings";
    case Recommendation::kAcceptable:
      return "acceptable";
  }
  return "acceptable";
}

namespace {

std::optional<Recommendation> recommendation_from_string(std::string_view s) {
  for (auto r : {Recommendation::kRetake, Recommendation::kAcceptableWithWarnings,
                 Recommendation::kAcceptable}) {
    if (to_string(r) == s) return r;
  }
  return std::nullopt;
}

Timestamp now_us() {
  return std::chrono::duration_cast<std::chrono::microseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

json error_body(std::string_view message) { return json{{"error", message}}; }

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

}  // namespace

RetakePolicy RetakePolicy::standard() {
  RetakePolicy p;
  for (auto a : {Artifact::kUpperEyelidObstructing, Artifact::kLowerEyelidObstructing,
                 Artifact::kImageTooDark, Artifact::kImageNotCentered}) {
    p.retake[index_of(a)] = true;
  }
  return p;
}

Verdict recommend(const ArtifactLabelVector& flags, const RetakePolicy& policy) {
  Verdict v;
  std::vector<Artifact> retake;
  std::vector<Artifact> warn;
  for (auto a : kAllArtifacts) {
    if (!flags[a]) continue;
    (policy.retake[index_of(a)] ? retake : warn).push_back(a);
  }
  if (!retake.empty()) {
    v.recommendation = Recommendation::kRetake;
    v.reasons = std::move(retake);
  } else if (!warn.empty()) {
    v.recommendation = Recommendation::kAcceptableWithWarnings;
    v.reasons = std::move(warn);
  }
  return v;
}

// ---------------------------------------------------------------- config

void ServiceConfig::validate() const {
  if (port < 0 || port > 65535) throw ConfigError("service.port must be in [0, 65535]");
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ConfigError("service.threshold must be in (0, 1)");
  }
  if (max_upload_bytes == 0) throw ConfigError("service.max_upload_bytes must be positive");
  if (audit_path.empty()) throw ConfigError("service.audit_path must not be empty");
  if (store_images && image_store_dir.empty()) {
    throw ConfigError("service.image_store_dir is required when store_images is on");
  }
  if (preprocess.target_side <= 0) throw ConfigError("preprocess.target_side must be positive");
}

ordered_json to_json(const ServiceConfig& cfg) {
  ordered_json retake = ordered_json::array();
  for (auto a : kAllArtifacts) {
    if (cfg.retake_policy.retake[index_of(a)]) retake.push_back(name_of(a));
  }
  return {{"host", cfg.host},
          {"port", cfg.port},
          {"model_path", cfg.model_path.string()},
          {"threshold", cfg.threshold},
          {"max_upload_bytes", cfg.max_upload_bytes},
          {"audit_path", cfg.audit_path.string()},
          {"store_images", cfg.store_images},
          {"image_store_dir", cfg.image_store_dir.string()},
          {"cors_origin", cfg.cors_origin},
          {"retake_on", retake}};
}

ServiceConfig service_config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("service: expected an object");
  ServiceConfig cfg;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "host") {
        cfg.host = value.get<std::string>();
      } else if (key == "port") {
        cfg.port = value.get<int>();
      } else if (key == "model_path") {
        cfg.model_path = value.get<std::string>();
      } else if (key == "threshold") {
        cfg.threshold = value.get<double>();
      } else if (key == "max_upload_bytes") {
        cfg.max_upload_bytes = value.get<std::size_t>();
      } else if (key == "audit_path") {
        cfg.audit_path = value.get<std::string>();
      } else if (key == "store_images") {
        cfg.store_images = value.get<bool>();
      } else if (key == "image_store_dir") {
        cfg.image_store_dir = value.get<std::string>();
      } else if (key == "cors_origin") {
        cfg.cors_origin = value.get<std::string>();
      } else if (key == "retake_on") {
        cfg.retake_policy.retake.fill(false);
        for (const auto& name : value) {
          const auto a = artifact_from_name(name.get<std::string>());
          if (!a) throw ConfigError("service.retake_on: unknown artifact " + name.dump());
          cfg.retake_policy.retake[index_of(*a)] = true;
        }
      } else {
        throw ConfigError("service: unknown key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("service: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

void apply_env_overrides(ServiceConfig& cfg) {
  auto env = [](const char* name) -> std::optional<std::string> {
    const char* v = std::getenv(name);
    if (v == nullptr || *v == '\0') return std::nullopt;
    return std::string(v);
  };
  auto number = [](const std::string& name, const std::string& text) {
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (end == text.c_str() || *end != '\0') throw ConfigError(name + ": not a number: " + text);
    return v;
  };
  if (auto v = env("UWFQA_PORT")) cfg.port = static_cast<int>(number("UWFQA_PORT", *v));
  if (auto v = env("UWFQA_MODEL_PATH")) cfg.model_path = *v;
  if (auto v = env("UWFQA_THRESHOLD")) cfg.threshold = number("UWFQA_THRESHOLD", *v);
  if (auto v = env("UWFQA_MAX_UPLOAD_BYTES")) {
    cfg.max_upload_bytes = static_cast<std::size_t>(number("UWFQA_MAX_UPLOAD_BYTES", *v));
  }
  if (auto v = env("UWFQA_AUDIT_PATH")) cfg.audit_path = *v;
  if (auto v = env("UWFQA_STORE_IMAGES")) {
    if (*v == "1" || *v == "true") {
      cfg.store_images = true;
    } else if (*v == "0" || *v == "false") {
      cfg.store_images = false;
    } else {
      throw ConfigError("UWFQA_STORE_IMAGES must be 0/1/true/false");
    }
  }
  cfg.validate();
}

// -------------------------------------------------------------- response

PredictionResponse make_response(const LogitVector& logits, double threshold,
                                 const RetakePolicy& policy, std::string model_version) {
  PredictionResponse r;
  const auto probs = to_probabilities(logits);
  const auto flags = threshold_predictions(probs, threshold);
  for (std::size_t c = 0; c < kNumArtifacts; ++c) {
    r.classes[c] = {probs.values[c], flags.test(c)};
  }
  r.threshold = threshold;
  r.model_version = std::move(model_version);
  auto verdict = recommend(flags, policy);
  r.recommendation = verdict.recommendation;
  r.reasons = std::move(verdict.reasons);
  return r;
}

ordered_json to_json(const PredictionResponse& r) {
  ordered_json classes = ordered_json::object();
  for (auto a : kAllArtifacts) {
    const auto& c = r.classes[index_of(a)];
    classes[std::string(name_of(a))] = {{"probability", c.probability}, {"flag", c.flag}};
  }
  ordered_json reasons = ordered_json::array();
  for (auto a : r.reasons) reasons.push_back(name_of(a));
  return {{"classes", classes},
          {"threshold", r.threshold},
          {"model_version", r.model_version},
          {"recommendation", to_string(r.recommendation)},
          {"reasons", reasons},
          {"latency_ms", r.latency_ms}};
}

PredictionResponse prediction_response_from_json(const json& j) {
  auto fail = [](const std::string& what) -> ValidationError {
    return ValidationError("prediction response: " + what);
  };
  if (!j.is_object()) throw fail("not an object");
  for (const char* key :
       {"classes", "threshold", "model_version", "recommendation", "reasons", "latency_ms"}) {
    if (!j.contains(key)) throw fail(std::string("missing '") + key + "'");
  }
  if (j.size() != 6) throw fail("unexpected keys");
  PredictionResponse r;
  const auto& classes = j["classes"];
  if (!classes.is_object() || classes.size() != kNumArtifacts) {
    throw fail("classes must hold exactly six entries");
  }
  for (auto a : kAllArtifacts) {
    const std::string name(name_of(a));
    if (!classes.contains(name)) throw fail("classes." + name + " missing");
    const auto& c = classes[name];
    if (!c.is_object() || c.size() != 2 || !c.contains("probability") || !c.contains("flag") ||
        !c["probability"].is_number() || !c["flag"].is_boolean()) {
      throw fail("classes." + name + " must be {probability, flag}");
    }
    const double p = c["probability"].get<double>();
    if (!(p >= 0.0 && p <= 1.0)) throw fail("classes." + name + ".probability outside [0, 1]");
    r.classes[index_of(a)] = {p, c["flag"].get<bool>()};
  }
  if (!j["threshold"].is_number()) throw fail("threshold must be a number");
  r.threshold = j["threshold"].get<double>();
  if (!j["model_version"].is_string()) throw fail("model_version must be a string");
  r.model_version = j["model_version"].get<std::string>();
  if (!j["recommendation"].is_string()) throw fail("recommendation must be a string");
  const auto rec = recommendation_from_string(j["recommendation"].get<std::string>());
  if (!rec) throw fail("unknown recommendation");
  r.recommendation = *rec;
  if (!j["reasons"].is_array()) throw fail("reasons must be an array");
  for (const auto& name : j["reasons"]) {
    const auto a = name.is_string() ? artifact_from_name(name.get<std::string>()) : std::nullopt;
    if (!a) throw fail("unknown reason " + name.dump());
    r.reasons.push_back(*a);
  }
  if (!j["latency_ms"].is_number()) throw fail("latency_ms must be a number");
  r.latency_ms = j["latency_ms"].get<double>();
  return r;
}

// ------------------------------------------------------------ timestamps

std::string format_timestamp(Timestamp us) {
  const auto secs = static_cast<std::time_t>(us >= 0 ? us / 1'000'000 : (us - 999'999) / 1'000'000);
  const auto frac = us - static_cast<Timestamp>(secs) * 1'000'000;
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[40];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%06lldZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec,
                static_cast<long long>(frac));
  return buf;
}

std::optional<Timestamp> parse_timestamp(std::string_view text) {
  if (text.empty()) return std::nullopt;
  const std::string s(text);
  if (s.find('T') == std::string::npos) {
    char* end = nullptr;
    const double secs = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0' || !std::isfinite(secs) || secs < 0) return std::nullopt;
    return static_cast<Timestamp>(std::llround(secs * 1e6));
  }
  std::tm tm{};
  int consumed = 0;
  if (std::sscanf(s.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%n", &tm.tm_year, &tm.tm_mon, &tm.tm_mday,
                  &tm.tm_hour, &tm.tm_min, &tm.tm_sec, &consumed) != 6 ||
      consumed != 19) {
    return std::nullopt;
  }
  if (tm.tm_mon < 1 || tm.tm_mon > 12 || tm.tm_mday < 1 || tm.tm_mday > 31 || tm.tm_hour > 23 ||
      tm.tm_min > 59 || tm.tm_sec > 60) {
    return std::nullopt;
  }
  std::size_t pos = 19;
  Timestamp micros = 0;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    int digits = 0;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
      if (digits < 6) micros = micros * 10 + (s[pos] - '0');
      ++digits;
      ++pos;
    }
    if (digits == 0) return std::nullopt;
    for (; digits < 6; ++digits) micros *= 10;
  }
  if (pos + 1 != s.size() || s[pos] != 'Z') return std::nullopt;
  tm.tm_year -= 1900;
  tm.tm_mon -= 1;
  const std::time_t secs = timegm(&tm);
  return static_cast<Timestamp>(secs) * 1'000'000 + micros;
}

// ----------------------------------------------------------------- audit

ordered_json to_json(const AuditEntry& e) {
  ordered_json j = {{"timestamp", format_timestamp(e.timestamp)},
                    {"timestamp_us", e.timestamp},
                    {"request_digest", e.request_digest},
                    {"model_version", e.model_version},
                    {"response", e.response}};
  if (!e.stored_image.empty()) j["stored_image"] = e.stored_image;
  return j;
}

AuditEntry audit_entry_from_json(const json& j) {
  try {
    AuditEntry e;
    e.timestamp = j.at("timestamp_us").get<Timestamp>();
    e.request_digest = j.at("request_digest").get<std::string>();
    e.model_version = j.at("model_version").get<std::string>();
    e.response = j.at("response");
    if (j.contains("stored_image")) e.stored_image = j["stored_image"].get<std::string>();
    return e;
  } catch (const json::exception& ex) {
    throw ValidationError(std::string("audit entry: ") + ex.what());
  }
}

AuditLog::AuditLog(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  if (std::filesystem::exists(path_)) {
    std::ifstream in(path_);
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
      ++row;
      if (line.empty()) continue;
      try {
        entries_.push_back(audit_entry_from_json(json::parse(line)));
      } catch (const std::exception& e) {
        throw IoError(path_.string() + ": line " + std::to_string(row) + ": " + e.what());
      }
      last_ = std::max(last_, entries_.back().timestamp);
    }
  }
  out_.open(path_, std::ios::app);
  if (!out_) throw IoError("cannot open audit log " + path_.string());
}

AuditEntry AuditLog::append(AuditEntry entry) {
  std::lock_guard lock(mutex_);
  entry.timestamp = std::max(now_us(), last_ + 1);
  out_ << to_json(entry).dump() << '\n';
  out_.flush();
  if (!out_) throw IoError("audit log write failed: " + path_.string());
  last_ = entry.timestamp;
  entries_.push_back(entry);
  return entry;
}

AuditPage AuditLog::page_from(std::size_t first, std::size_t limit) const {
  AuditPage page;
  const std::size_t last = std::min(entries_.size(), first + limit);
  page.entries.assign(entries_.begin() + static_cast<std::ptrdiff_t>(first),
                      entries_.begin() + static_cast<std::ptrdiff_t>(last));
  if (last < entries_.size()) page.next_token = std::to_string(last);
  return page;
}

AuditPage AuditLog::query(Timestamp since, std::size_t limit) const {
  std::lock_guard lock(mutex_);
  const auto it = std::lower_bound(
      entries_.begin(), entries_.end(), since,
      [](const AuditEntry& e, Timestamp t) { return e.timestamp < t; });
  return page_from(static_cast<std::size_t>(it - entries_.begin()), limit);
}

AuditPage AuditLog::resume(std::string_view token, std::size_t limit) const {
  std::size_t first = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), first);
  std::lock_guard lock(mutex_);
  if (ec != std::errc() || ptr != token.data() + token.size() || first > entries_.size()) {
    throw ArgumentError("invalid continuation token");
  }
  return page_from(first, limit);
}

std::size_t AuditLog::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

// --------------------------------------------------------------- service

InferenceService::InferenceService(ServiceConfig cfg, std::shared_ptr<Predictor> predictor)
    : cfg_(std::move(cfg)),
      server_(std::make_unique<httplib::Server>()),
      predictor_(std::move(predictor)),
      audit_(cfg_.audit_path) {
  cfg_.validate();
  if (cfg_.store_images) std::filesystem::create_directories(cfg_.image_store_dir);
  install_routes();
}

InferenceService::~InferenceService() { stop(); }

std::shared_ptr<Predictor> InferenceService::current_predictor() const {
  std::shared_lock lock(model_mutex_);
  return predictor_;
}

void InferenceService::swap_predictor(std::shared_ptr<Predictor> predictor) {
  std::unique_lock lock(model_mutex_);
  predictor_ = std::move(predictor);
}

void InferenceService::install_routes() {
  auto& srv = *server_;
  srv.set_payload_max_length(cfg_.max_upload_bytes);
  srv.set_default_headers({{"Access-Control-Allow-Origin", cfg_.cors_origin},
                           {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                           {"Access-Control-Allow-Headers", "Content-Type"}});

  srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
    std::string message = httplib::status_message(res.status);
    if (res.status == 413) message = "upload exceeds the configured size limit";
    reply(res, res.status, error_body(message));
    return httplib::Server::HandlerResponse::Handled;
  });
  srv.set_exception_handler(
      [](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string message = "internal error";
        try {
          std::rethrow_exception(ep);
        } catch (const std::exception& e) {
          message = e.what();
        } catch (...) {
        }
        spdlog::error("request failed: {}", message);
        reply(res, 500, error_body(message));
      });

  srv.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  srv.Get("/v1/health", [this](const httplib::Request&, httplib::Response& res) {
    std::shared_lock lock(model_mutex_);
    json body = {{"status", "degraded"}, {"model_loaded", predictor_ != nullptr},
                 {"model_version", nullptr}};
    if (predictor_) {
      body["model_version"] = predictor_->version();
      try {
        const int side = cfg_.preprocess.target_side;
        FloatImage probe(side, side, 3, 0.f);
        const auto z = predictor_->predict(probe);
        const bool finite = std::all_of(z.values.begin(), z.values.end(),
                                        [](double v) { return std::isfinite(v); });
        if (finite) body["status"] = "ok";
      } catch (const std::exception& e) {
        spdlog::warn("health probe failed: {}", e.what());
      }
    }
    reply(res, 200, body);
  });

  srv.Post("/v1/predict", [this](const httplib::Request& req, httplib::Response& res) {
    const auto started = std::chrono::steady_clock::now();
    std::shared_lock lock(model_mutex_);
    if (!predictor_) return reply(res, 503, error_body("no model loaded"));

    const std::string* payload = &req.body;
    httplib::MultipartFormData part;
    if (req.is_multipart_form_data()) {
      if (!req.has_file("image")) {
        return reply(res, 400, error_body("multipart body has no 'image' field"));
      }
      part = req.get_file_value("image");
      payload = &part.content;
    }
    if (payload->empty()) return reply(res, 400, error_body("empty upload"));
    const auto bytes = std::span(reinterpret_cast<const std::uint8_t*>(payload->data()),
                                 payload->size());

    RgbImage raw;
    FloatImage input;
    try {
      raw = decode_image(bytes);
      input = preprocess(raw, cfg_.preprocess);
    } catch (const IoError& e) {
      return reply(res, 400, error_body(std::string("undecodable image: ") + e.what()));
    } catch (const ShapeError& e) {
      return reply(res, 400, error_body(std::string("unsupported image: ") + e.what()));
    }

    auto response = make_response(predictor_->predict(input), cfg_.threshold,
                                  cfg_.retake_policy, predictor_->version());
    response.latency_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started)
            .count();

    AuditEntry entry;
    entry.request_digest = sha256_hex(std::as_bytes(bytes));
    entry.response = to_json(response);
    entry.model_version = response.model_version;
    if (cfg_.store_images) {
      const auto path = cfg_.image_store_dir / (entry.request_digest + ".png");
      if (!std::filesystem::exists(path)) write_png(raw, path);
      entry.stored_image = path.string();
    }
    audit_.append(std::move(entry));
    reply(res, 200, to_json(response));
  });

  srv.Get("/v1/audit", [this](const httplib::Request& req, httplib::Response& res) {
    AuditPage page;
    if (req.has_param("token")) {
      try {
        page = audit_.resume(req.get_param_value("token"));
      } catch (const ArgumentError& e) {
        return reply(res, 400, error_body(e.what()));
      }
    } else {
      Timestamp since = 0;
      if (req.has_param("since")) {
        const auto parsed = parse_timestamp(req.get_param_value("since"));
        if (!parsed) return reply(res, 400, error_body("since: unparseable timestamp"));
        since = *parsed;
      }
      page = audit_.query(since);
    }
    ordered_json entries = ordered_json::array();
    for (const auto& e : page.entries) entries.push_back(to_json(e));
    ordered_json body = {{"entries", entries}, {"next_token", nullptr}};
    if (page.next_token) body["next_token"] = *page.next_token;
    res.status = 200;
    res.set_content(body.dump(), "application/json");
  });
}

int InferenceService::start() {
  if (thread_.joinable()) throw StateError("service already started");
  bound_port_ = cfg_.port == 0 ? server_->bind_to_any_port(cfg_.host)
                               : (server_->bind_to_port(cfg_.host, cfg_.port) ? cfg_.port : -1);
  if (bound_port_ < 0) {
    throw IoError("cannot bind " + cfg_.host + ":" + std::to_string(cfg_.port));
  }
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return bound_port_;
}

void InferenceService::run() {
  if (!server_->listen(cfg_.host, cfg_.port)) {
    throw IoError("cannot serve on " + cfg_.host + ":" + std::to_string(cfg_.port));
  }
}

void InferenceService::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace uwfqa::service
