#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "dcl/cli.hpp"
#include "dcl/io.hpp"
#include "dcl/taskgen.hpp"

using namespace dcl;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("dcl_cli_" + name);
  fs::remove_all(p);
  return p;
}

const std::vector<std::string> kTiny = {"--set", "stream.n_train=20", "--set", "stream.n_dev=5",
                                        "--set", "stream.n_test=10", "--epochs", "1", "--tasks", "2"};

std::vector<std::string> with_tiny(std::vector<std::string> args) {
  args.insert(args.end(), kTiny.begin(), kTiny.end());
  return args;
}

}  // namespace

TEST_CASE("gen-data writes a deterministic dump") {
  const auto a = scratch("gen_a"), b = scratch("gen_b");
  REQUIRE(run({"gen-data", "--out", a.string(), "--seed", "3"}).code == 0);
  REQUIRE(run({"gen-data", "--out", b.string(), "--seed", "3"}).code == 0);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    ++files;
    CHECK(io::read_file(e.path()) == io::read_file(b / e.path().filename()));
  }
  CHECK(files == 5);
  CHECK(fs::exists(a / "manifest.json"));

  const auto s = scratch("gen_slot");
  REQUIRE(run({"gen-data", "--out", s.string(), "--kind", "slot"}).code == 0);
  bool saw_pair = false;
  for (const auto& e : fs::directory_iterator(s)) {
    if (e.path().extension() != ".tsv") continue;
    std::istringstream in(io::read_file(e.path()));
    for (const auto& sample : data::read_samples(in)) {
      for (const auto& y : sample.y) saw_pair |= y.find(':') != std::string::npos;
    }
  }
  CHECK(saw_pair);
  for (const auto& p : {a, b, s}) fs::remove_all(p);
}

TEST_CASE("train writes artifacts and report reads them") {
  const auto dir = scratch("train");
  const auto r = run(with_tiny({"train", "--out", dir.string(), "--mode", "finetune", "--kd", "none",
                                "--rehearsal", "off"}));
  REQUIRE_MESSAGE(r.code == 0, r.err);
  for (const char* f : {"metrics.json", "curve.csv", "pseudo.tsv", "model.ckpt"}) CHECK(fs::exists(dir / f));
  const auto m = json::parse(io::read_file(dir / "metrics.json"));
  CHECK(m.at("config").at("mode") == "finetune");
  CHECK(m.contains("timestamp"));

  const auto rep = run({"report", dir.string()});
  CHECK(rep.code == 0);
  CHECK(rep.out.find("avg accuracy") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("train from a generated dataset") {
  const auto data_dir = scratch("train_data"), out = scratch("train_data_out");
  REQUIRE(run({"gen-data", "--out", data_dir.string(), "--tasks", "2", "--n-train", "20", "--n-dev", "5",
               "--n-test", "10"}).code == 0);
  const auto r = run({"train", "--data", data_dir.string(), "--out", out.string(), "--epochs", "1"});
  CHECK_MESSAGE(r.code == 0, r.err);
  fs::remove_all(data_dir);
  fs::remove_all(out);
}

TEST_CASE("ablation flags reach the config echo") {
  const auto dir = scratch("ablation");
  REQUIRE(run(with_tiny({"train", "--out", dir.string(), "--latent", "gaussian", "--kd", "kl"})).code == 0);
  const auto cfg = json::parse(io::read_file(dir / "metrics.json")).at("config");
  CHECK(cfg.at("model").at("latent") == "gaussian");
  CHECK(cfg.at("training").at("kd") == "kl");
  fs::remove_all(dir);
}

TEST_CASE("exit codes") {
  CHECK(run({"train", "--lr", "-1"}).code == cli::kExitConfig);
  CHECK(run({"train", "--set", "training.nope=1"}).code == cli::kExitConfig);
  CHECK(run({"train", "--kd", "mmd"}).code == cli::kExitConfig);
  CHECK(run({"no-such-command"}).code == cli::kExitConfig);
  const auto err = run({"train", "--set", "training.lrate=1"});
  CHECK(err.err.find("training.lrate") != std::string::npos);
  const auto dir = scratch("numerical");
  CHECK(run(with_tiny({"train", "--out", dir.string(), "--lr", "1e200"})).code == cli::kExitNumerical);
  CHECK(run({"report", scratch("nothing").string()}).code == cli::kExitFailure);
  fs::remove_all(dir);
}

TEST_CASE("output root comes from the environment") {
  const auto root = scratch("root");
  ::setenv(cli::kOutputRootEnv, root.c_str(), 1);
  CHECK(cli::default_output_root() == root);
  ::unsetenv(cli::kOutputRootEnv);
  CHECK(cli::default_output_root() == fs::path("dcl-runs"));
}

TEST_CASE("sweep counts runs and summarizes per arm") {
  const auto dir = scratch("sweep");
  const auto r = run(with_tiny({"sweep", "--arms", "finetune;dcl", "--orders", "0,1,2,3,4,5", "--seeds", "0",
                                "--out", dir.string(), "--jobs", "2"}));
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto sweep = json::parse(io::read_file(dir / "sweep.json"));
  CHECK(sweep.at("cells").size() == 12);
  CHECK(sweep.at("arms") == json::array({"finetune", "dcl"}));

  const auto csv = io::read_file(dir / "summary.csv");
  std::istringstream lines(csv);
  std::string header, first, second, extra;
  std::getline(lines, header);
  std::getline(lines, first);
  std::getline(lines, second);
  CHECK(header == "arm,runs,missing,avg_mean,avg_std,lca_mean,lca_std");
  CHECK(first.rfind("finetune,6,0,", 0) == 0);
  CHECK(second.rfind("dcl,6,0,", 0) == 0);
  CHECK_FALSE(std::getline(lines, extra));

  double total = 0;
  for (const auto& c : sweep.at("cells")) {
    if (c.at("arm") == "dcl") total += c.at("avg_metric").get<double>();
  }
  const auto rows = cli::summarize({"finetune", "dcl"}, sweep.at("cells").get<std::vector<json>>());
  CHECK(rows[1].avg_mean == doctest::Approx(total / 6));

  const auto rep = run({"report", dir.string()});
  CHECK(rep.code == 0);
  CHECK(rep.out == io::read_file(dir / "summary.txt"));
  fs::remove_all(dir);
}

TEST_CASE("partial sweeps exit with 4") {
  const auto dir = scratch("partial");
  const auto r = run(with_tiny({"sweep", "--arms", "dcl;boom:training.lr=1e200", "--orders", "0", "--seeds",
                                "0", "--out", dir.string()}));
  CHECK(r.code == cli::kExitPartialSweep);
  const auto rows = cli::summarize({"dcl", "boom"},
                                   json::parse(io::read_file(dir / "sweep.json")).at("cells").get<std::vector<json>>());
  CHECK(rows[0].missing == 0);
  CHECK(rows[1].missing == 1);
  CHECK(run({"report", dir.string()}).code == cli::kExitPartialSweep);
  fs::remove_all(dir);
}

TEST_CASE("arm presets") {
  CHECK(cli::arm_name("ratio-0.1") == "ratio-0.1");
  CHECK(cli::arm_name("mine:training.lr=0.1,seed=2") == "mine");
  const auto o = cli::arm_overrides("mine:training.lr=0.1,seed=2");
  CHECK(o == std::vector<std::string>{"training.lr=0.1", "seed=2"});
  CHECK_FALSE(cli::arm_overrides("gaussian-kl").empty());
  CHECK_THROWS(cli::arm_overrides("unknown-arm"));
}

TEST_CASE("timestamps are stripped for comparison") {
  json j = {{"timestamp", "x"}, {"a", 1}};
  CHECK(cli::strip_timestamp(j) == json{{"a", 1}});
}

TEST_CASE("selftest subcommand") {
  const auto r = run({"selftest"});
  CHECK(r.code == 0);
  CHECK(r.out.find("PASS") != std::string::npos);
}
