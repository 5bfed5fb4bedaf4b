#include "uwfqa/run_config.hpp"

#include <algorithm>
#include <fstream>

#include "uwfqa/errors.hpp"

namespace uwfqa {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

void reject_unknown(const json& j, std::initializer_list<std::string_view> known,
                    const std::string& section) {
  if (!j.is_object()) throw ConfigError(section + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError(section + ": unknown key '" + key + "'");
    }
  }
}

template <typename T>
void read_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

void RunConfig::set_seed(std::uint64_t seed) {
  train.seed = seed;
  synth.seed = seed;
  split_seed = seed;
  model.init_seed = seed;
}

void RunConfig::validate() const {
  if (config_version != kRunConfigVersion) {
    throw ConfigError("config_version " + std::to_string(config_version) + " is not supported (expected " +
                      std::to_string(kRunConfigVersion) + ")");
  }
  if (preprocess.target_side <= 0) throw ConfigError("preprocess.target_side must be positive");
  if (preprocess.target_side != model.input_side) {
    throw ConfigError("preprocess.target_side must equal model.input_side");
  }
  model.validate();
  train.validate();
  if (!(split.train > 0 && split.val > 0 && split.test > 0)) {
    throw ConfigError("split ratios must be positive");
  }
  if (crossval.k < 2) throw ConfigError("crossval.k must be at least 2");
  if (!(crossval.threshold > 0.0 && crossval.threshold < 1.0)) {
    throw ConfigError("crossval.threshold must be in (0, 1)");
  }
  try {
    synth.validate();
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string("synth: ") + e.what());
  }
  service.validate();
}

RunConfig run_config_from_json(const json& j) {
  reject_unknown(j,
                 {"config_version", "preprocess", "model", "train", "split", "crossval", "synth",
                  "service"},
                 "config");
  if (!j.contains("config_version")) throw ConfigError("config: config_version is required");
  RunConfig cfg;
  try {
    cfg.config_version = j.at("config_version").get<int>();
    if (cfg.config_version != kRunConfigVersion) cfg.validate();
    if (j.contains("preprocess")) {
      const auto& p = j.at("preprocess");
      reject_unknown(p, {"target_side", "source_side"}, "preprocess");
      read_if(p, "target_side", cfg.preprocess.target_side);
      read_if(p, "source_side", cfg.preprocess.source_side);
    }
    if (j.contains("model")) cfg.model = classifier_config_from_json(j.at("model"));
    if (j.contains("train")) cfg.train = train_config_from_json(j.at("train"));
    if (j.contains("split")) {
      const auto& s = j.at("split");
      reject_unknown(s, {"train", "val", "test", "seed"}, "split");
      read_if(s, "train", cfg.split.train);
      read_if(s, "val", cfg.split.val);
      read_if(s, "test", cfg.split.test);
      read_if(s, "seed", cfg.split_seed);
    }
    if (j.contains("crossval")) {
      const auto& c = j.at("crossval");
      reject_unknown(c, {"k", "threshold"}, "crossval");
      read_if(c, "k", cfg.crossval.k);
      read_if(c, "threshold", cfg.crossval.threshold);
    }
    if (j.contains("synth")) {
      const auto& s = j.at("synth");
      reject_unknown(s, {"n_images", "prevalence", "image_side", "seed"}, "synth");
      read_if(s, "n_images", cfg.synth.n_images);
      read_if(s, "prevalence", cfg.synth.prevalence);
      read_if(s, "image_side", cfg.synth.image_side);
      read_if(s, "seed", cfg.synth.seed);
    }
    if (j.contains("service")) cfg.service = service::service_config_from_json(j.at("service"));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  cfg.service.preprocess = cfg.preprocess;
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

ordered_json to_json(const RunConfig& cfg) {
  ordered_json j;
  j["config_version"] = cfg.config_version;
  j["preprocess"] = {{"target_side", cfg.preprocess.target_side},
                     {"source_side", cfg.preprocess.source_side}};
  j["model"] = to_json(cfg.model);
  j["train"] = to_json(cfg.train);
  j["split"] = {{"train", cfg.split.train},
                {"val", cfg.split.val},
                {"test", cfg.split.test},
                {"seed", cfg.split_seed}};
  j["crossval"] = {{"k", cfg.crossval.k}, {"threshold", cfg.crossval.threshold}};
  j["synth"] = {{"n_images", cfg.synth.n_images},
                {"prevalence", cfg.synth.prevalence},
                {"image_side", cfg.synth.image_side},
                {"seed", cfg.synth.seed}};
  j["service"] = service::to_json(cfg.service);
  return j;
}

}  // namespace uwfqa
