#include "doctest.h"

#include "dsvgp/harness/cli.hpp"

#include <json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "dsvgp");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = dsvgp::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);)
    if (!l.empty()) out.push_back(l);
  return out;
}

struct Workspace {
  fs::path dir;
  Workspace() {
    dir = fs::temp_directory_path() / "dsvgp_cli_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    REQUIRE(cli({"make-data", "--kind", "moons", "--n", "400", "--seed", "1", "--out", (dir / "train.csv").string()}).code == 0);
    REQUIRE(cli({"make-data", "--kind", "moons", "--n", "200", "--seed", "2", "--out", (dir / "test.csv").string()}).code == 0);
    std::ofstream(dir / "banana.cfg") << "seed = 5\n"
                                         "[data]\n"
                                         "train = " << (dir / "train.csv").string() << "\n"
                                         "test = " << (dir / "test.csv").string() << "\n"
                                         "num_batches = 4\n"
                                         "[model]\n"
                                         "likelihood = bernoulli\n"
                                         "num_inducing = 25\n"
                                         "[sequential]\n"
                                         "memory_size = 20\n"
                                         "hyper_steps = 5\n";
  }
  std::string cfg() const { return (dir / "banana.cfg").string(); }
};

}  // namespace

TEST_CASE("stream writes one record per batch and predict/eval reproduce the metrics") {
  Workspace w;
  const fs::path out = w.dir / "run";
  const CliResult r = cli({"stream", "--config", w.cfg(), "--out", out.string()});
  INFO(r.err);
  REQUIRE(r.code == 0);
  const auto records = lines(slurp(out / "log.jsonl"));
  CHECK(records.size() == 4);
  for (const auto& l : records) {
    const json j = json::parse(l);
    CHECK(j.contains("config_hash"));
    CHECK(j["seed"] == 5);
    CHECK(j["wall_ms"] == 0.0);
  }
  for (const char* f : {"config.resolved", "checkpoint.json", "batch_metrics.csv", "predictions.csv", "summary.json"}) {
    CHECK(fs::exists(out / f));
  }

  const json summary = json::parse(slurp(out / "summary.json"));
  const CliResult p = cli({"predict", "--checkpoint", (out / "checkpoint.json").string(), "--data",
                           (w.dir / "test.csv").string(), "--out", (w.dir / "p.csv").string()});
  REQUIRE(p.code == 0);
  const CliResult e = cli({"eval", "--predictions", (w.dir / "p.csv").string(), "--data", (w.dir / "test.csv").string()});
  REQUIRE(e.code == 0);
  const json m = json::parse(e.out);
  CHECK(std::abs(m["nlpd"].get<double>() - summary["final_metrics"]["nlpd"].get<double>()) < 1e-10);
  CHECK(std::abs(m["accuracy"].get<double>() - summary["final_metrics"]["accuracy"].get<double>()) < 1e-10);
  const json last = json::parse(records.back());
  CHECK(std::abs(m["nlpd"].get<double>() - last["nlpd"].get<double>()) < 1e-10);
}

TEST_CASE("the same seed gives byte-identical logs") {
  Workspace w;
  REQUIRE(cli({"stream", "--config", w.cfg(), "--out", (w.dir / "a").string()}).code == 0);
  REQUIRE(cli({"stream", "--config", w.cfg(), "--out", (w.dir / "b").string()}).code == 0);
  CHECK(slurp(w.dir / "a" / "log.jsonl") == slurp(w.dir / "b" / "log.jsonl"));
  CHECK(slurp(w.dir / "a" / "checkpoint.json") == slurp(w.dir / "b" / "checkpoint.json"));
  REQUIRE(cli({"stream", "--config", w.cfg(), "--seed", "6", "--out", (w.dir / "c").string()}).code == 0);
  CHECK(slurp(w.dir / "a" / "log.jsonl") != slurp(w.dir / "c" / "log.jsonl"));
}

TEST_CASE("fit and bo subcommands run") {
  Workspace w;
  REQUIRE(cli({"fit", "--config", w.cfg(), "--out", (w.dir / "fit").string()}).code == 0);
  CHECK(lines(slurp(w.dir / "fit" / "log.jsonl")).size() == 4);
  const CliResult b = cli({"bo", "--seed", "1", "--out", (w.dir / "bo").string(), "--set", "bo.objective=forrester",
                           "--set", "bo.iterations=2", "--set", "bo.batch_size=2", "--set", "bo.search_budget=128",
                           "--set", "sequential.hyper_steps=2"});
  INFO(b.err);
  REQUIRE(b.code == 0);
  CHECK(lines(slurp(w.dir / "bo" / "log.jsonl")).size() >= 2);
  CHECK(fs::exists(w.dir / "bo" / "bo_evaluations.csv"));
}

TEST_CASE("usage and runtime errors have distinct exit codes") {
  Workspace w;
  CHECK(cli({"--help"}).code == 0);
  CHECK(cli({}).code == 2);
  CHECK(cli({"frobnicate"}).code == 2);
  CHECK(cli({"stream", "--out", (w.dir / "x").string()}).code == 2);
  CHECK(cli({"stream", "--config", w.cfg(), "--set", "model.bogus=1"}).code == 2);
  const CliResult missing = cli({"stream", "--seed", "1", "--set", "data.train=/nonexistent.csv", "--out", (w.dir / "y").string()});
  CHECK(missing.code == 1);
  CHECK(missing.err.rfind("error:", 0) == 0);
  CHECK(cli({"eval", "--predictions", "/nonexistent.csv", "--data", "/nonexistent.csv"}).code == 1);
}

TEST_CASE("the installed binary reports exit codes") {
  const std::string bin = DSVGP_CLI_PATH;
  CHECK(std::system((bin + " --help > /dev/null").c_str()) == 0);
  const int rc = std::system((bin + " bogus > /dev/null 2>&1").c_str());
  CHECK(WEXITSTATUS(rc) == 2);
}
