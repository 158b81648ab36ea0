#include <doctest.h>

#include "fastsurv/cli.hpp"
#include "fastsurv/errors.hpp"
#include "fastsurv/metrics.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <sys/wait.h>

using namespace fastsurv;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("fastsurv_cli_" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  return json::parse(in);
}

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string toy(const TempDir& dir, const std::string& seed = "3") {
  const std::string path = dir / "toy.csv";
  const auto r = run({"generate", "--n", "120", "--p", "6", "--k", "2", "--rho", "0.3", "--seed", seed, "--out", path});
  REQUIRE(r.code == 0);
  return path;
}

}  // namespace

TEST_CASE("usage errors exit with 1") {
  TempDir dir;
  const auto data = toy(dir);
  CHECK(run({}).code == kExitUsage);
  CHECK(run({"frobnicate"}).code == kExitUsage);
  CHECK(run({"generate", "--n", "10", "--p", "5", "--k", "6", "--out", dir / "x.csv"}).code == kExitUsage);
  CHECK(run({"train", "--data", data, "--method", "sgd", "--out", dir / "m"}).code == kExitUsage);
  const auto rejected = run({"train", "--data", data, "--method", "exact_newton", "--lambda1", "1", "--out", dir / "m"});
  CHECK(rejected.code == kExitUsage);
  CHECK(rejected.err.find("lambda1") != std::string::npos);
  CHECK(run({"select", "--data", data, "--k-max", "7", "--out", dir / "s"}).code == kExitUsage);
  CHECK(run({"--help"}).code == kExitOk);
  CHECK(run({"--version"}).code == kExitOk);
}

TEST_CASE("data errors exit with 2") {
  TempDir dir;
  CHECK(run({"train", "--data", dir / "missing.csv", "--out", dir / "m"}).code == kExitData);
  {
    std::ofstream bad(dir / "bad.csv");
    bad << "time,event,x\n1,1,0\n2,5,1\n";
  }
  CHECK(run({"train", "--data", dir / "bad.csv", "--out", dir / "m"}).code == kExitData);
  const auto data = toy(dir);
  CHECK(run({"train", "--data", data, "--time-col", "futime", "--out", dir / "m"}).code == kExitData);
}

TEST_CASE("generate is deterministic and writes ground truth") {
  TempDir a;
  TempDir b;
  const auto first = toy(a, "11");
  const auto second = toy(b, "11");
  CHECK(read_bytes(first) == read_bytes(second));
  CHECK(fnv1a_64(read_bytes(first)) == fnv1a_64(read_bytes(second)));
  const auto truth = read_json(a / "toy.truth.json");
  CHECK(truth["support"] == json::array({2, 5}));
  CHECK(truth["support_feature_names"] == json::array({"x2", "x5"}));
  CHECK(truth["manifest"]["version"] == kVersion);
  CHECK(truth["manifest"]["dataset"]["rows"] == 120);
  TempDir c;
  CHECK(read_bytes(toy(c, "12")) != read_bytes(first));
}

TEST_CASE("fnv1a reference values") {
  CHECK(fnv1a_64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a_64("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("train then evaluate reproduces the training loss") {
  TempDir dir;
  const auto data = toy(dir);
  for (const std::string method : {"quad_cd", "cubic_cd", "prox_newton"}) {
    const auto out = dir / ("model_" + method);
    const auto r = run({"train", "--data", data, "--method", method, "--lambda1", "0.5", "--lambda2", "1",
                        "--tol", "1e-9", "--max-sweeps", "5000", "--assert-monotone", "--out", out});
    REQUIRE(r.code == 0);
    const auto model = read_json(out + "/model.json");
    CHECK(model["method"] == method);
    CHECK(model["converged"] == true);
    CHECK(fs::exists(out + "/trace.csv"));
    if (method != "prox_newton") CHECK(model["monotone_violations"] == 0);

    const auto ev = run({"evaluate", "--data", data, "--model", out + "/model.json", "--out", out + "/metrics.json"});
    REQUIRE(ev.code == 0);
    const auto metrics = read_json(out + "/metrics.json");
    CHECK(std::abs(metrics["cph_loss"].get<double>() - model["final_loss"].get<double>()) <= 1e-8);
    CHECK(metrics["cindex"].get<double>() > 0.5);
  }
}

TEST_CASE("a zero model has concordance 0.5 and unknown features are rejected") {
  TempDir dir;
  const auto data = toy(dir);
  ModelFile zero{{"x0", "x1", "x2", "x3", "x4", "x5"}, Vector::Zero(6), 0, 0, "quad_cd", 0};
  {
    std::ofstream f(dir / "zero.json");
    f << model_to_json(zero).dump();
  }
  const auto r = run({"evaluate", "--data", data, "--model", dir / "zero.json"});
  REQUIRE(r.code == 0);
  CHECK(json::parse(r.out)["cindex"] == 0.5);

  ModelFile unknown{{"x1", "bogus"}, Vector::Ones(2), 0, 0, "quad_cd", 0};
  {
    std::ofstream f(dir / "unknown.json");
    f << model_to_json(unknown).dump();
  }
  CHECK(run({"evaluate", "--data", data, "--model", dir / "unknown.json"}).code == kExitData);

  json broken = model_to_json(zero);
  broken.erase("coefficients");
  CHECK_THROWS_AS(model_from_json(broken), SchemaError);
  const auto back = model_from_json(model_to_json(zero));
  CHECK(back.feature_names == zero.feature_names);
  CHECK(back.coefficients == zero.coefficients);
}

TEST_CASE("config files supply defaults and the command line wins") {
  TempDir dir;
  const auto data = toy(dir);
  {
    std::ofstream f(dir / "cfg.json");
    f << json{{"method", "cubic_cd"}, {"lambda2", 2.0}, {"max-sweeps", 50}, {"assert-monotone", true}}.dump();
  }
  const auto merged = merge_config_args({"train", "--config", dir / "cfg.json", "--lambda2", "3"});
  CHECK(std::find(merged.begin(), merged.end(), "--method") != merged.end());
  CHECK(std::count(merged.begin(), merged.end(), "--lambda2") == 1);

  const auto out = dir / "m";
  REQUIRE(run({"train", "--config", dir / "cfg.json", "--data", data, "--lambda2", "3", "--out", out}).code == 0);
  const auto model = read_json(out + "/model.json");
  CHECK(model["method"] == "cubic_cd");
  CHECK(model["lambda2"] == 3.0);
  CHECK(model.contains("monotone_checks"));
  CHECK(model["manifest"]["command"] == "train");

  {
    std::ofstream f(dir / "broken.json");
    f << "{not json";
  }
  CHECK(run({"train", "--config", dir / "broken.json", "--data", data, "--out", out}).code != kExitOk);
}

TEST_CASE("benchmark writes one trace per method and penalty pair") {
  TempDir dir;
  const auto data = toy(dir);
  const auto out = dir / "bench";
  REQUIRE(run({"benchmark", "--data", data, "--max-sweeps", "100", "--out-dir", out}).code == 0);
  std::size_t traces = 0;
  for (const auto& entry : fs::directory_iterator(out)) {
    if (entry.path().extension() == ".csv") ++traces;
  }
  CHECK(traces == 20);
  const auto summary = read_json(out + "/summary.json");
  REQUIRE(summary["runs"].size() == 20);
  for (const auto& row : summary["runs"]) {
    const std::string method = row["method"];
    if (method == "exact_newton" && row["lambda1"].get<double>() > 0) {
      CHECK(row["status"] == "skipped");
    } else if (method == "quad_cd" || method == "cubic_cd") {
      CHECK(row["trace_monotone"] == true);
      CHECK(row["monotone_violations"] == 0);
    }
  }
}

TEST_CASE("select without cross-validation uses all rows once") {
  TempDir dir;
  const auto data = toy(dir);
  const auto out = dir / "sel";
  const std::vector<std::string> args = {"select", "--data", data, "--truth", dir / "toy.truth.json", "--k-max", "3",
                                         "--beam-width", "2", "--candidates", "2", "--folds", "1", "--out", out};
  REQUIRE(run(args).code == 0);
  const auto path = read_json(out + "/path.json");
  REQUIRE(path["folds"].size() == 1);
  REQUIRE(path["folds"][0]["path"].size() == 3);
  CHECK(path["folds"][0]["path"][1]["support_size"] == 2);
  CHECK(path["folds"][0]["path"][1]["feature_names"].size() == 2);
  const auto metrics = read_json(out + "/metrics.json");
  CHECK(metrics["rows"].size() == 3);
  for (const auto& row : metrics["rows"]) CHECK(row["split"] == "train");
  CHECK(metrics["rows"][1]["f1"].get<double>() >= 0.0);

  const std::string first = read_bytes(out + "/path.json");
  REQUIRE(run(args).code == 0);
  auto strip = [](json j) {
    j.erase("manifest");
    return j;
  };
  CHECK(strip(json::parse(first)) == strip(read_json(out + "/path.json")));
}

TEST_CASE("select with folds reports train and test rows") {
  TempDir dir;
  const auto data = toy(dir);
  const auto out = dir / "cv";
  REQUIRE(run({"select", "--data", data, "--k-max", "2", "--beam-width", "2", "--candidates", "2", "--folds", "3",
               "--seed", "4", "--out", out})
              .code == 0);
  const auto metrics = read_json(out + "/metrics.json");
  CHECK(metrics["rows"].size() == 3 * 2 * 2);
}

TEST_CASE("the installed binary forwards arguments and exit codes") {
  TempDir dir;
  const std::string binary = FASTSURV_CLI_PATH;
  CHECK(std::system((binary + " --version > " + (dir / "v.txt")).c_str()) == 0);
  CHECK(read_bytes(dir / "v.txt").find(kVersion) != std::string::npos);
  const int status = std::system((binary + " train --data " + (dir / "none.csv") + " --out " + (dir / "m") +
                                  " 2> " + (dir / "e.txt"))
                                     .c_str());
  CHECK(WEXITSTATUS(status) == kExitData);
}
