#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "itemrec/cli.hpp"
#include "itemrec/model_io.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run itemrec_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = itemrec::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Workspace {
  fs::path root;
  explicit Workspace(const std::string& name) : root(fs::temp_directory_path() / name) {
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~Workspace() { fs::remove_all(root); }
  std::string operator/(const std::string& leaf) const { return (root / leaf).string(); }
};

void simulate(const Workspace& w, const std::string& dir, const std::string& players = "300") {
  auto r = itemrec_cli({"simulate", "--players", players, "--epsilon", "0.1", "--seed", "3", "--out", w / dir});
  REQUIRE(r.code == 0);
}

std::vector<std::string> data_args(const Workspace& w, const std::string& dir) {
  return {"--telemetry", w / (dir + "/telemetry.jsonl"), "--catalog", w / (dir + "/catalog.txt"), "--cutoff-day", "20",
          "--holdout-fraction", "0.25"};
}

std::vector<std::string> operator+(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST_CASE("pipeline smoke run") {
  Workspace w("itemrec_cli_smoke");
  simulate(w, "data");
  CHECK(fs::exists(w / "data/ground_truth.json"));
  CHECK(fs::exists(w / "data/manifest_simulate.json"));

  auto f = itemrec_cli(std::vector<std::string>{"featurize", "--out", w / "feat"} + data_args(w, "data"));
  REQUIRE(f.code == 0);
  CHECK(slurp(w / "feat/features.csv").rfind("player_id", 0) == 0);

  for (std::string kind : {"ert", "mlp"}) {
    auto t = itemrec_cli(std::vector<std::string>{"train", "--model", kind, "--iterations", "3", "--batch-users", "100",
                                                  "--hidden", "16", "16", "--out", w / kind} +
                         data_args(w, "data"));
    REQUIRE_MESSAGE(t.code == 0, t.err);
    auto p = itemrec_cli(std::vector<std::string>{"predict", "--model", w / (kind + "/model.json"), "--heatmap",
                                                  "--split", "test", "--out", w / kind} +
                         data_args(w, "data"));
    REQUIRE_MESSAGE(p.code == 0, p.err);
    CHECK(slurp(w / (kind + "/heatmap.pgm")).rfind("P5\n", 0) == 0);
    auto e = itemrec_cli(std::vector<std::string>{"evaluate", "--model", w / (kind + "/model.json"), "--out", w / kind} +
                         data_args(w, "data"));
    REQUIRE_MESSAGE(e.code == 0, e.err);
    CHECK(e.out.find("isNextPurchase") != std::string::npos);
    auto report = itemrec::read_json_file(w / (kind + "/report.json"));
    CHECK(report.at("evaluated").get<int>() > 0);
    CHECK(fs::exists(w / (kind + "/manifest_evaluate.json")));
  }
  auto ert = itemrec::read_json_file(w / "ert/model.json");
  CHECK(ert.at("trees").size() == 60);
}

TEST_CASE("reports are byte identical across runs and thread counts") {
  Workspace w("itemrec_cli_determinism");
  simulate(w, "data");
  for (std::string kind : {"ert", "mlp"}) {
    std::vector<std::string> reports, models;
    for (std::string threads : {"1", "3", "1"}) {
      const std::string out = w / (kind + threads + std::to_string(reports.size()));
      auto t = itemrec_cli(std::vector<std::string>{"train", "--model", kind, "--iterations", "2", "--batch-users",
                                                    "100", "--hidden", "8", "8", "--threads", threads, "--out", out} +
                           data_args(w, "data"));
      REQUIRE(t.code == 0);
      auto e = itemrec_cli(std::vector<std::string>{"evaluate", "--model", out + "/model.json", "--threads", threads,
                                                    "--out", out} +
                           data_args(w, "data"));
      REQUIRE(e.code == 0);
      models.push_back(slurp(out + "/model.json"));
      reports.push_back(slurp(out + "/report.txt") + slurp(out + "/report.json"));
    }
    CHECK(models[0] == models[1]);
    CHECK(models[0] == models[2]);
    CHECK(reports[0] == reports[1]);
    CHECK(reports[0] == reports[2]);
  }
}

TEST_CASE("catalog mismatch is reported") {
  Workspace w("itemrec_cli_mismatch");
  simulate(w, "data");
  REQUIRE(itemrec_cli(std::vector<std::string>{"train", "--iterations", "1", "--out", w / "m"} + data_args(w, "data")).code == 0);
  auto r = itemrec_cli({"simulate", "--players", "50", "--items", "6", "--out", w / "other"});
  REQUIRE(r.code == 0);
  auto e = itemrec_cli({"evaluate", "--model", w / "m/model.json", "--telemetry", w / "other/telemetry.jsonl",
                        "--catalog", w / "other/catalog.txt", "--cutoff-day", "20", "--out", w / "e"});
  CHECK(e.code != 0);
  CHECK(e.err.find("version mismatch") != std::string::npos);
}

TEST_CASE("unsupported schema version is rejected") {
  Workspace w("itemrec_cli_schema");
  simulate(w, "data");
  REQUIRE(itemrec_cli(std::vector<std::string>{"train", "--iterations", "1", "--out", w / "m"} + data_args(w, "data")).code == 0);
  auto j = itemrec::read_json_file(w / "m/model.json");
  j["schema_version"] = 2;
  itemrec::write_json_file(w / "m/model.json", j);
  auto e = itemrec_cli(std::vector<std::string>{"evaluate", "--model", w / "m/model.json", "--out", w / "e"} +
                       data_args(w, "data"));
  CHECK(e.code != 0);
  CHECK(e.err.find("schema_version") != std::string::npos);
}

TEST_CASE("config file supplies options") {
  Workspace w("itemrec_cli_config");
  std::ofstream(w / "sim.toml") << "players = 40\nitems = 4\nseed = 12\n";
  auto r = itemrec_cli({"simulate", "--config", w / "sim.toml", "--out", w / "data"});
  REQUIRE(r.code == 0);
  CHECK(slurp(w / "data/catalog.txt") == "gacha_0\ngacha_1\ngacha_2\ngacha_3\n");
  std::ofstream(w / "all.toml") << "seed = 4\nunrelated = 1\n[simulate]\nplayers = 30\nitems = 5\n[train]\nitems = 9\n";
  r = itemrec_cli({"simulate", "--config", w / "all.toml", "--items", "2", "--out", w / "two"});
  REQUIRE(r.code == 0);
  CHECK(slurp(w / "two/catalog.txt") == "gacha_0\ngacha_1\n");
  auto manifest = itemrec::read_json_file(w / "two/manifest_simulate.json");
  CHECK(manifest.at("options").at("--players") == "30");
  CHECK(manifest.at("seed") == 4);
  CHECK(itemrec_cli({"simulate", "--config", w / "missing.toml"}).code != 0);
}

TEST_CASE("bad input exits non zero") {
  CHECK(itemrec_cli({"simulate", "--no-such-flag"}).code != 0);
  CHECK(itemrec_cli({}).code != 0);
  CHECK(itemrec_cli({"train", "--model", "svm", "--cutoff-day", "3"}).code != 0);
  CHECK(itemrec_cli({"evaluate", "--cutoff-day", "3", "--model", "/nonexistent/model.json"}).code != 0);
  const std::string cmd = std::string(ITEMREC_CLI_PATH) + " simulate --bogus >/dev/null 2>&1";
  CHECK(std::system(cmd.c_str()) != 0);
}
