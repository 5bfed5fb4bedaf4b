// uwfqa: command-line entry point for the artifact classifier pipeline.

#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

#include "uwfqa/dataset.hpp"
#include "uwfqa/errors.hpp"
#include "uwfqa/evaluation.hpp"
#include "uwfqa/image_io.hpp"
#include "uwfqa/log.hpp"
#include "uwfqa/manifest.hpp"
#include "uwfqa/nn/checkpoint.hpp"
#include "uwfqa/nn/fit.hpp"
#include "uwfqa/nn/predictor.hpp"
#include "uwfqa/report.hpp"
#include "uwfqa/run_config.hpp"
#include "uwfqa/service.hpp"
#include "uwfqa/split.hpp"
#include "uwfqa/synthetic.hpp"

#ifndef UWFQA_VERSION
#define UWFQA_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

enum ExitCode : int { kOk = 0, kPartial = 1, kConfig = 2, kData = 3, kRuntime = 4 };

struct Options {
  fs::path config;
  fs::path manifest;
  fs::path eval_manifest;
  fs::path out;
  fs::path checkpoint;
  std::optional<std::uint64_t> seed;
  std::optional<double> threshold;
  std::optional<int> port;
  std::optional<std::size_t> k;
  std::optional<std::size_t> n_images;
  std::vector<fs::path> images;
  bool final_fit = false;
  bool no_model = false;
};

uwfqa::RunConfig load_config(const Options& opt) {
  uwfqa::RunConfig cfg;
  if (!opt.config.empty()) cfg = uwfqa::load_run_config(opt.config);
  if (opt.seed) cfg.set_seed(*opt.seed);
  if (opt.threshold) {
    cfg.service.threshold = *opt.threshold;
    cfg.crossval.threshold = *opt.threshold;
  }
  if (opt.port) cfg.service.port = *opt.port;
  if (opt.k) cfg.crossval.k = *opt.k;
  if (opt.n_images) cfg.synth.n_images = *opt.n_images;
  cfg.validate();
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw uwfqa::IoError("cannot write " + path.string());
}

uwfqa::DatasetManifest require_manifest(const fs::path& path) {
  if (path.empty()) throw uwfqa::ConfigError("--manifest is required");
  return uwfqa::load_manifest(path);
}

uwfqa::LabeledImages load_split(const uwfqa::DatasetManifest& m, uwfqa::Split split,
                                const uwfqa::PreprocessConfig& pre) {
  const auto records = m.subset(split);
  return uwfqa::load_labeled_images(m, records, pre);
}

void require_assigned(const uwfqa::DatasetManifest& m) {
  if (m.n_total() == 0) throw uwfqa::ValidationError("manifest has no records");
  if (m.count(uwfqa::Split::kUnassigned) > 0) {
    throw uwfqa::ValidationError(std::to_string(m.count(uwfqa::Split::kUnassigned)) +
                                 " records have no split; run `uwfqa split` first");
  }
}

int cmd_synth(const Options& opt) {
  const auto cfg = load_config(opt);
  if (opt.out.empty()) throw uwfqa::ConfigError("--out is required");
  const auto manifest = uwfqa::synth::generate_dataset(cfg.synth, opt.out);
  uwfqa::log::info(uwfqa::log::printf("wrote %zu synthetic images to %s", manifest.n_total(),
                                      opt.out.c_str()));
  return kOk;
}

int cmd_split(const Options& opt) {
  const auto cfg = load_config(opt);
  const auto manifest = require_manifest(opt.manifest);
  const auto split = uwfqa::split_dataset(manifest, cfg.split, cfg.split_seed);
  const fs::path out = opt.out.empty() ? opt.manifest : opt.out;
  uwfqa::save_manifest(split, out);
  uwfqa::log::info(uwfqa::log::printf(
      "split %zu records: train %zu, val %zu, test %zu -> %s", split.n_total(),
      split.count(uwfqa::Split::kTrain), split.count(uwfqa::Split::kVal),
      split.count(uwfqa::Split::kTest), out.c_str()));
  return kOk;
}

int cmd_train(const Options& opt) {
  const auto cfg = load_config(opt);
  if (opt.out.empty()) throw uwfqa::ConfigError("--out is required");
  const auto manifest = require_manifest(opt.manifest);
  require_assigned(manifest);
  fs::create_directories(opt.out);

  const auto train = load_split(manifest, uwfqa::Split::kTrain, cfg.preprocess);
  const auto val = load_split(manifest, uwfqa::Split::kVal, cfg.preprocess);
  auto model = uwfqa::nn::build_classifier(cfg.model);

  std::ofstream epoch_log(opt.out / "epochs.jsonl");
  auto on_epoch = [&](const uwfqa::EpochStats& s) {
    epoch_log << uwfqa::to_json(s).dump() << '\n' << std::flush;
    uwfqa::log::info(uwfqa::log::printf("epoch %3d  lr %.6g  train %.5f  val %.5f", s.epoch, s.lr,
                                        s.train_loss, s.val_loss));
  };
  const auto outcome =
      opt.final_fit ? uwfqa::nn::fit_final(*model, uwfqa::LabeledImages::concat(train, val),
                                           cfg.train, on_epoch)
                    : uwfqa::nn::fit(*model, train, val, cfg.train, on_epoch);

  const auto weights = opt.out / "model.pt";
  const auto digest = uwfqa::nn::save_checkpoint(*model, outcome.metadata, weights);

  ordered_json run;
  run["tool_version"] = UWFQA_VERSION;
  run["command"] = opt.final_fit ? "train --final" : "train";
  run["seed"] = cfg.train.seed;
  run["manifest"] = fs::absolute(opt.manifest).string();
  run["dataset_digest"] = manifest.digest();
  run["config"] = uwfqa::to_json(cfg);
  run["pos_weights"] = outcome.pos_weights;
  run["checkpoint"] = weights.filename().string();
  run["weights_sha256"] = digest;
  run["best_epoch"] = outcome.loop.best_epoch;
  run["best_val_loss"] = outcome.loop.best_val_loss;
  run["epochs_run"] = outcome.loop.history.size();
  run["stopped_early"] = outcome.loop.stopped_early;
  run["validation_source"] = outcome.metadata.validation_source;
  write_text(opt.out / "run.json", run.dump(2) + "\n");
  uwfqa::log::info(uwfqa::log::printf("checkpoint %s (best epoch %d, val loss %.5f)",
                                      weights.c_str(), outcome.loop.best_epoch,
                                      outcome.loop.best_val_loss));
  return kOk;
}

int cmd_crossval(const Options& opt) {
  const auto cfg = load_config(opt);
  if (opt.out.empty()) throw uwfqa::ConfigError("--out is required");
  const auto manifest = require_manifest(opt.manifest);
  require_assigned(manifest);

  auto pool = uwfqa::LabeledImages::concat(load_split(manifest, uwfqa::Split::kTrain, cfg.preprocess),
                                           load_split(manifest, uwfqa::Split::kVal, cfg.preprocess));
  if (cfg.crossval.k > pool.size()) {
    throw uwfqa::ConfigError("k = " + std::to_string(cfg.crossval.k) + " exceeds the " +
                             std::to_string(pool.size()) + " train+val records");
  }
  uwfqa::LabeledImages eval_set;
  if (opt.eval_manifest.empty()) {
    eval_set = load_split(manifest, uwfqa::Split::kTest, cfg.preprocess);
  } else {
    const auto em = uwfqa::load_manifest(opt.eval_manifest);
    eval_set = uwfqa::load_labeled_images(em, em.records(), cfg.preprocess);
  }
  const auto cv = uwfqa::nn::cross_validate_classifier(
      cfg.model, pool, eval_set, cfg.train, cfg.crossval.k, cfg.crossval.threshold,
      [](std::size_t fold, const uwfqa::nn::FitOutcome& o) {
        uwfqa::log::info(uwfqa::log::printf("fold %zu: best epoch %d, val loss %.5f", fold + 1,
                                            o.loop.best_epoch, o.loop.best_val_loss));
      });
  const auto table = uwfqa::render_cv_table(cv);
  write_text(opt.out / "cv.txt", table);
  write_text(opt.out / "cv.json", uwfqa::render_cv_json(cv));
  std::cout << table;
  return kOk;
}

uwfqa::nn::ModelCheckpoint require_checkpoint(const fs::path& path) {
  if (path.empty()) throw uwfqa::ConfigError("--checkpoint is required");
  return uwfqa::nn::load_checkpoint(path);
}

int cmd_evaluate(const Options& opt) {
  const auto cfg = load_config(opt);
  const auto ckpt = require_checkpoint(opt.checkpoint);
  const auto manifest = require_manifest(opt.manifest);
  auto records = manifest.subset(uwfqa::Split::kTest);
  if (records.empty() && manifest.count(uwfqa::Split::kUnassigned) == manifest.n_total()) {
    records = manifest.records();
  }
  if (records.empty()) throw uwfqa::ValidationError("manifest has no test records");
  const auto data = uwfqa::load_labeled_images(manifest, records, cfg.preprocess);
  const double threshold = opt.threshold.value_or(0.5);

  std::vector<uwfqa::ArtifactLabelVector> preds;
  for (const auto& z : uwfqa::nn::predict_logits(*ckpt.model, data.images, cfg.train.batch_size)) {
    preds.push_back(uwfqa::threshold_predictions(uwfqa::to_probabilities(z), threshold));
  }
  const auto report = uwfqa::build_report(preds, data.labels, threshold, ckpt.model_version(),
                                          manifest.digest());
  const auto text = uwfqa::render_text(report);
  if (!opt.out.empty()) {
    write_text(opt.out / "report.txt", text);
    write_text(opt.out / "report.json", uwfqa::render_json(report));
  }
  std::cout << text;
  return kOk;
}

int cmd_predict(const Options& opt) {
  const auto cfg = load_config(opt);
  const auto ckpt = require_checkpoint(opt.checkpoint);
  uwfqa::nn::CheckpointPredictor predictor(ckpt);
  const double threshold = opt.threshold.value_or(cfg.service.threshold);
  int failures = 0;
  for (const auto& path : opt.images) {
    try {
      const auto started = std::chrono::steady_clock::now();
      const auto input = uwfqa::preprocess(uwfqa::read_image(path), cfg.preprocess);
      auto response = uwfqa::service::make_response(predictor.predict(input), threshold,
                                                    cfg.service.retake_policy, predictor.version());
      response.latency_ms = std::chrono::duration<double, std::milli>(
                                std::chrono::steady_clock::now() - started)
                                .count();
      std::cout << uwfqa::service::to_json(response).dump() << '\n';
    } catch (const uwfqa::Error& e) {
      ++failures;
      std::cout << ordered_json{{"image", path.string()}, {"error", e.what()}}.dump() << '\n';
    }
  }
  return failures > 0 ? kPartial : kOk;
}

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

int cmd_serve(const Options& opt) {
  auto cfg = load_config(opt);
  uwfqa::service::apply_env_overrides(cfg.service);
  if (opt.port) cfg.service.port = *opt.port;
  if (opt.threshold) cfg.service.threshold = *opt.threshold;
  if (!opt.checkpoint.empty()) cfg.service.model_path = opt.checkpoint;

  std::shared_ptr<uwfqa::service::Predictor> predictor;
  if (!opt.no_model) {
    if (cfg.service.model_path.empty()) {
      throw uwfqa::ConfigError("no model configured; pass --checkpoint or --no-model");
    }
    predictor = uwfqa::nn::CheckpointPredictor::load(cfg.service.model_path);
  }
  uwfqa::service::InferenceService service(cfg.service, predictor);
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  const int port = service.start();
  uwfqa::log::info(uwfqa::log::printf(
      "serving on %s:%d (%s)", cfg.service.host.c_str(), port,
      predictor ? predictor->version().c_str() : "no model"));
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  service.stop();
  return kOk;
}

int run_guarded(const std::function<int()>& fn) {
  try {
    return fn();
  } catch (const uwfqa::ConfigError& e) {
    uwfqa::log::error(std::string("config error: ") + e.what());
    return kConfig;
  } catch (const uwfqa::InitializationError& e) {
    uwfqa::log::error(std::string("initialization error: ") + e.what());
    return kConfig;
  } catch (const uwfqa::TrainingAbort& e) {
    uwfqa::log::error(std::string("training aborted: ") + e.what());
    return kRuntime;
  } catch (const uwfqa::Error& e) {
    uwfqa::log::error(std::string("data error: ") + e.what());
    return kData;
  } catch (const std::exception& e) {
    uwfqa::log::error(std::string("runtime error: ") + e.what());
    return kRuntime;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-label image-quality artifact classifier for widefield fundus photographs"};
  app.set_version_flag("--version", UWFQA_VERSION);
  app.require_subcommand(1);
  Options opt;

  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "JSON run configuration file");
    sub->add_option("--seed", opt.seed, "Override every seed in the configuration");
  };

  auto* synth = app.add_subcommand("synth", "Generate a synthetic labeled image corpus");
  add_config(synth);
  synth->add_option("--out", opt.out, "Output directory")->required();
  synth->add_option("--n", opt.n_images, "Number of images (overrides synth.n_images)");

  auto* split = app.add_subcommand("split", "Assign stratified train/val/test splits");
  add_config(split);
  split->add_option("--manifest", opt.manifest, "Input manifest CSV")->required();
  split->add_option("--out", opt.out, "Output manifest (default: overwrite input)");

  auto* train = app.add_subcommand("train", "Train the classifier on a split manifest");
  add_config(train);
  train->add_option("--manifest", opt.manifest, "Manifest with assigned splits")->required();
  train->add_option("--out", opt.out, "Output directory for checkpoint and logs")->required();
  train->add_flag("--final", opt.final_fit,
                  "Train on train+val, early-stopping on an internal holdout");

  auto* crossval = app.add_subcommand("crossval", "k-fold cross-validation over train+val");
  add_config(crossval);
  crossval->add_option("--manifest", opt.manifest, "Manifest with assigned splits")->required();
  crossval->add_option("--eval-manifest", opt.eval_manifest,
                       "Evaluation set scored by every fold (default: the manifest's test split; "
                       "note this reuses the test set during model selection)");
  crossval->add_option("--out", opt.out, "Output directory for cv.txt and cv.json")->required();
  crossval->add_option("--k", opt.k, "Number of folds (overrides crossval.k)");
  crossval->add_option("--threshold", opt.threshold, "Decision threshold");

  auto* evaluate = app.add_subcommand("evaluate", "Score a checkpoint on the test split");
  add_config(evaluate);
  evaluate->add_option("--checkpoint", opt.checkpoint, "Model checkpoint")->required();
  evaluate->add_option("--manifest", opt.manifest, "Manifest (test split is scored)")->required();
  evaluate->add_option("--out", opt.out, "Directory for report.txt and report.json");
  evaluate->add_option("--threshold", opt.threshold, "Decision threshold (default 0.5)");

  auto* predict = app.add_subcommand("predict", "Print one prediction JSON per image");
  add_config(predict);
  predict->add_option("--checkpoint", opt.checkpoint, "Model checkpoint")->required();
  predict->add_option("--threshold", opt.threshold, "Decision threshold");
  predict->add_option("images", opt.images, "Image files")->required();

  auto* serve = app.add_subcommand("serve", "Run the HTTP inference service");
  add_config(serve);
  serve->add_option("--checkpoint", opt.checkpoint, "Model checkpoint (overrides service.model_path)");
  serve->add_option("--port", opt.port, "Listening port (overrides config and UWFQA_PORT)");
  serve->add_option("--threshold", opt.threshold, "Decision threshold");
  serve->add_flag("--no-model", opt.no_model, "Start without a model (health reports degraded)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  if (*synth) return run_guarded([&] { return cmd_synth(opt); });
  if (*split) return run_guarded([&] { return cmd_split(opt); });
  if (*train) return run_guarded([&] { return cmd_train(opt); });
  if (*crossval) return run_guarded([&] { return cmd_crossval(opt); });
  if (*evaluate) return run_guarded([&] { return cmd_evaluate(opt); });
  if (*predict) return run_guarded([&] { return cmd_predict(opt); });
  if (*serve) return run_guarded([&] { return cmd_serve(opt); });
  return kConfig;
}
