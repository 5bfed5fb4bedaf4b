#include <gtest/gtest.h>
#include <httplib.h>
#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "support.hpp"
#include "uwfqa/manifest.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(UWFQA_BIN) + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

// A 14-image corpus split and trained once for the whole suite.
class CliPipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new uwfqa::testutil::TempDir("uwfqa-cli");
    std::ofstream(*dir_ / "cfg.json") << R"({
      "config_version": 1,
      "model": {"pretrained_init": false},
      "train": {"max_epochs": 2, "patience": 1, "batch_size": 4},
      "synth": {"image_side": 224},
      "crossval": {"k": 2}
    })";
    ASSERT_EQ(run("synth --config " + q(*dir_ / "cfg.json") + " --n 14 --seed 4 --out " +
                  q(*dir_ / "corpus"))
                  .code,
              0);
    fs::copy_file(*dir_ / "corpus/manifest.csv", *dir_ / "corpus/unsplit.csv");
    ASSERT_EQ(run("split --manifest " + q(*dir_ / "corpus/manifest.csv") + " --seed 4").code, 0);
    ASSERT_EQ(run("train --config " + q(*dir_ / "cfg.json") + " --manifest " +
                  q(*dir_ / "corpus/manifest.csv") + " --seed 4 --out " + q(*dir_ / "run"))
                  .code,
              0);
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }
  static fs::path path(const std::string& rel) { return *dir_ / rel; }
  static std::string cfg() { return " --config " + q(path("cfg.json")); }

  static uwfqa::testutil::TempDir* dir_;
};

uwfqa::testutil::TempDir* CliPipeline::dir_ = nullptr;

}  // namespace

TEST(Cli, HelpOnEverySubcommand) {
  const std::map<std::string, std::vector<std::string>> flags{
      {"synth", {"--config", "--out", "--seed", "--n"}},
      {"split", {"--config", "--manifest", "--out", "--seed"}},
      {"train", {"--config", "--manifest", "--out", "--seed", "--final"}},
      {"crossval", {"--config", "--manifest", "--out", "--seed", "--k", "--eval-manifest"}},
      {"evaluate", {"--checkpoint", "--manifest", "--out", "--threshold"}},
      {"predict", {"--checkpoint", "--threshold"}},
      {"serve", {"--config", "--checkpoint", "--port", "--threshold", "--no-model"}},
  };
  EXPECT_EQ(run("--help").code, 0);
  for (const auto& [sub, expected] : flags) {
    const auto r = run(sub + " --help");
    EXPECT_EQ(r.code, 0) << sub;
    for (const auto& f : expected) EXPECT_NE(r.out.find(f), std::string::npos) << sub << " " << f;
  }
}

TEST(Cli, SynthWithZeroImages) {
  uwfqa::testutil::TempDir dir;
  EXPECT_EQ(run("synth --n 0 --out " + q(dir / "empty")).code, 0);
  EXPECT_EQ(uwfqa::load_manifest(dir / "empty/manifest.csv").n_total(), 0u);
}

TEST(Cli, ConfigErrorsExitTwo) {
  uwfqa::testutil::TempDir dir;
  std::ofstream(dir / "bad.json") << R"({"config_version": 1, "train": {"max_epochs": 5, "patience": 5}})";
  std::ofstream(dir / "noversion.json") << R"({"train": {}})";
  std::ofstream(dir / "m.csv") << uwfqa::kManifestHeader << "\n";
  EXPECT_EQ(run("train --config " + q(dir / "bad.json") + " --manifest " + q(dir / "m.csv") +
                " --out " + q(dir / "o"))
                .code,
            2);
  EXPECT_EQ(run("train --config " + q(dir / "noversion.json") + " --manifest " + q(dir / "m.csv") +
                " --out " + q(dir / "o"))
                .code,
            2);
  EXPECT_EQ(run("train --bogus-flag").code, 2);
}

TEST_F(CliPipeline, TrainWritesArtifacts) {
  EXPECT_TRUE(fs::exists(path("run/model.pt")));
  EXPECT_TRUE(fs::exists(path("run/model.pt.json")));
  const auto run_json = json::parse(read_file(path("run/run.json")));
  EXPECT_EQ(run_json["seed"], 4);
  EXPECT_EQ(run_json["dataset_digest"],
            uwfqa::load_manifest(path("corpus/manifest.csv")).digest());
  std::ifstream log(path("run/epochs.jsonl"));
  std::string line;
  int lines = 0;
  while (std::getline(log, line)) {
    EXPECT_TRUE(json::parse(line).contains("val_loss"));
    ++lines;
  }
  EXPECT_EQ(lines, run_json["epochs_run"].get<int>());
}

TEST_F(CliPipeline, TrainWithoutSplitsIsDataError) {
  EXPECT_EQ(run("train" + cfg() + " --manifest " + q(path("corpus/unsplit.csv")) + " --out " +
                q(path("nosplit")))
                .code,
            3);
}

TEST_F(CliPipeline, EvaluateWritesBothFormats) {
  const auto r = run("evaluate --checkpoint " + q(path("run/model.pt")) + " --manifest " +
                     q(path("corpus/manifest.csv")) + " --out " + q(path("eval")));
  ASSERT_EQ(r.code, 0);
  const auto report = json::parse(read_file(path("eval/report.json")));
  ASSERT_EQ(report["classes"].size(), 6u);
  for (const auto& [name, c] : report["classes"].items()) {
    for (const char* cell : {"tp", "fp", "tn", "fn"}) EXPECT_TRUE(c[cell].is_number()) << name;
  }
  EXPECT_FALSE(read_file(path("eval/report.txt")).empty());
  EXPECT_EQ(run("evaluate --checkpoint " + q(path("nope.pt")) + " --manifest " +
                q(path("corpus/manifest.csv")))
                .code,
            3);
}

TEST_F(CliPipeline, PredictPrintsOneResponsePerImage) {
  std::ofstream(path("broken.png")) << "garbage";
  const auto r = run("predict --checkpoint " + q(path("run/model.pt")) + " " +
                     q(path("corpus/img_00000.png")) + " " + q(path("broken.png")));
  EXPECT_EQ(r.code, 1);
  std::istringstream lines(r.out);
  std::string first, second;
  std::getline(lines, first);
  std::getline(lines, second);
  const auto ok = json::parse(first);
  EXPECT_EQ(ok["classes"].size(), 6u);
  for (const auto& [name, c] : ok["classes"].items()) EXPECT_TRUE(c["probability"].is_number());
  EXPECT_TRUE(json::parse(second).contains("error"));

  EXPECT_EQ(run("predict --checkpoint " + q(path("run/model.pt")) + " " +
                q(path("corpus/img_00001.png")))
                .code,
            0);
}

TEST_F(CliPipeline, CrossvalIsReproducible) {
  const std::string args = "crossval" + cfg() + " --manifest " + q(path("corpus/manifest.csv")) +
                           " --seed 4 --out ";
  ASSERT_EQ(run(args + q(path("cv1"))).code, 0);
  ASSERT_EQ(run(args + q(path("cv2"))).code, 0);
  EXPECT_EQ(read_file(path("cv1/cv.json")), read_file(path("cv2/cv.json")));
  const auto table = read_file(path("cv1/cv.txt"));
  EXPECT_NE(table.find("Fold 2"), std::string::npos);
  EXPECT_NE(table.find("+/-"), std::string::npos);
  EXPECT_EQ(run(args + q(path("cv3")) + " --k 50").code, 2);
}

TEST_F(CliPipeline, ServeFailsFastOnCorruptCheckpoint) {
  fs::copy_file(path("run/model.pt"), path("corrupt.pt"));
  fs::copy_file(path("run/model.pt.json"), path("corrupt.pt.json"));
  fs::resize_file(path("corrupt.pt"), 1000);
  setenv("UWFQA_AUDIT_PATH", path("audit.jsonl").c_str(), 1);
  const auto r = run("serve --checkpoint " + q(path("corrupt.pt")) + " --port 0");
  EXPECT_NE(r.code, 0);
}

TEST_F(CliPipeline, ServeAnswersHealthAndStopsOnSignal) {
  const int port = 20000 + static_cast<int>(getpid() % 20000);
  const auto pidfile = path("serve.pid");
  setenv("UWFQA_AUDIT_PATH", path("audit.jsonl").c_str(), 1);
  std::thread server([&] {
    run("serve --checkpoint " + q(path("run/model.pt")) + " --port " + std::to_string(port) +
        " & echo $! > " + q(pidfile) + "; wait");
  });
  httplib::Client cli("127.0.0.1", port);
  json health;
  for (int i = 0; i < 100 && health.is_null(); ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
    if (auto res = cli.Get("/v1/health")) health = json::parse(res->body);
  }
  EXPECT_EQ(health["status"], "ok");
  EXPECT_EQ(health["model_loaded"], true);
  const auto pid = read_file(pidfile);
  std::system(("kill " + pid).c_str());
  server.join();
}
