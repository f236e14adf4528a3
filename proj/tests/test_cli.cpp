#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "chimp/cli.hpp"

using namespace chimp;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("chimp-cli-" + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json read_json(const std::string& path) { return nlohmann::json::parse(slurp(path)); }

int run(std::vector<std::string> args) { return run_cli(args); }

int shell(const std::string& args) {
  const std::string cmd = std::string(CHIMP_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("generate, train, eval, explain pipeline") {
  TempDir dir;
  REQUIRE(run({"generate", "--measure", "FM4", "--rows", "80", "--noise", "0.1", "--seed", "3", "--out", dir / "gen"}) ==
          kExitOk);
  CHECK(fs::exists(dir / "gen/data.csv"));
  CHECK(fs::exists(dir / "gen/target.json"));

  REQUIRE(run({"train", "--data", dir / "gen/data.csv", "--target", dir / "gen/target.json", "--epochs", "20",
               "--seed", "1", "--out", dir / "train"}) == kExitOk);
  const auto metrics = read_json(dir / "train/metrics.json");
  CHECK(metrics.contains("train_mse"));
  CHECK(metrics.contains("fm_mse"));
  CHECK(metrics.contains("trial_seed"));
  CHECK(slurp(dir / "train/history.csv").rfind("epoch,train_mse\n", 0) == 0);

  REQUIRE(run({"eval", "--measure", dir / "train/params.json", "--data", dir / "gen/data.csv", "--out",
               dir / "eval"}) == kExitOk);
  CHECK(fs::exists(dir / "eval/predictions.csv"));

  REQUIRE(run({"explain", "--measure", dir / "train/measure.json", "--data", dir / "gen/data.csv", "--svg", "--out",
               dir / "explain"}) == kExitOk);
  const auto xai = read_json(dir / "explain/xai.json");
  CHECK(xai["shapley"].size() == 3);
  CHECK(fs::exists(dir / "explain/shapley.svg"));

  SUBCASE("manifest records the run") {
    const auto m = read_json(dir / "train/manifest.json");
    for (const char* key : {"tool", "version", "argv", "replay_argv", "seed", "config", "inputs", "outputs",
                            "timings", "exit_code"}) {
      CHECK(m.contains(key));
    }
    CHECK(m["exit_code"] == 0);
    CHECK(fs::exists(dir / "train/inputs/data.csv"));
  }

  SUBCASE("replay reproduces the metrics byte for byte") {
    REQUIRE(run({"replay", "--manifest", dir / "train/manifest.json", "--out", dir / "again"}) == kExitOk);
    CHECK(slurp(dir / "again/metrics.json") == slurp(dir / "train/metrics.json"));
    CHECK(slurp(dir / "again/params.json") == slurp(dir / "train/params.json"));
  }
}

TEST_CASE("exp1 output is deterministic") {
  TempDir dir;
  const std::vector<std::string> base{"exp1", "--epochs", "10", "--trials", "2", "--rows", "40", "--measures", "1",
                                      "3",    "--seed",   "5"};
  auto a = base, b = base;
  a.insert(a.end(), {"--out", dir / "a"});
  b.insert(b.end(), {"--out", dir / "b"});
  REQUIRE(run(a) == kExitOk);
  REQUIRE(run(b) == kExitOk);
  CHECK(slurp(dir / "a/table2.csv") == slurp(dir / "b/table2.csv"));
  CHECK(slurp(dir / "a/cells.csv") == slurp(dir / "b/cells.csv"));
  CHECK(slurp(dir / "a/table2.csv").rfind("measure,label_0,", 0) == 0);
}

TEST_CASE("fuse, gradcheck and flops") {
  TempDir dir;
  REQUIRE(run({"fuse", "--fixture", "complementary", "--rows", "60", "--epochs", "50", "--out", dir / "fuse"}) ==
          kExitOk);
  CHECK(fs::exists(dir / "fuse/fusion.json"));
  CHECK(fs::exists(dir / "fuse/accuracy.csv"));

  CHECK(run({"gradcheck", "--n", "4", "--cases", "100", "--out", dir / "gc"}) == kExitOk);
  const auto summary = read_json(dir / "gc/summary.json");
  CHECK(summary["max_rel_error"].get<double>() < 1e-5);

  CHECK(run({"gradcheck", "--n", "3", "--cases", "5", "--threshold", "0", "--out", dir / "gc0"}) == kExitNumeric);

  REQUIRE(run({"flops", "--n", "8", "--out", dir / "flops"}) == kExitOk);
  CHECK(slurp(dir / "flops/flops.csv").find("8,2802,2802,") != std::string::npos);
}

TEST_CASE("exit codes") {
  TempDir dir;
  CHECK(run({"--help"}) == kExitOk);
  CHECK(run({}) == kExitUsage);
  CHECK(run({"train"}) == kExitUsage);
  CHECK(run({"frobnicate"}) == kExitUsage);
  CHECK(run({"train", "--data", dir / "missing.csv", "--out", dir / "t"}) == kExitError);
  CHECK(run({"fuse", "--fixture", "redundant", "--posteriors", "x.csv", "--out", dir / "f"}) == kExitError);

  CHECK(shell("--version") == 0);
  CHECK(shell("train --epochs") == kExitUsage);
  CHECK(shell("eval --measure " + (dir / "nope.json") + " --data " + (dir / "nope.csv") + " --out " + (dir / "e")) ==
        kExitError);
}

TEST_CASE("run root from the environment") {
  TempDir dir;
  ::setenv(kRunRootEnv, dir.path.c_str(), 1);
  REQUIRE(run({"flops", "--n", "3", "--seed", "9"}) == kExitOk);
  ::unsetenv(kRunRootEnv);
  bool found = false;
  for (const auto& e : fs::directory_iterator(dir.path)) {
    const auto name = e.path().filename().string();
    found = found || (name.rfind("flops-", 0) == 0 && name.find("-s9") != std::string::npos);
  }
  CHECK(found);
}
