#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "oracles.hpp"

namespace {

namespace fs = std::filesystem;

struct CliResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr interleaved
};

CliResult run_cli(const std::string& args) {
  const std::string command = std::string(SPLITKIT_CLI_PATH) + " " + args + " 2>&1";
  CliResult result;
  FILE* pipe = popen(command.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buffer[4096];
  while (std::size_t n = std::fread(buffer, 1, sizeof(buffer), pipe)) {
    result.output.append(buffer, n);
  }
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

void write_file(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path);
  out << text;
}

std::string q(const fs::path& path) { return "'" + path.string() + "'"; }

const char* kSynthConfig = R"({
  "n_users": 50,
  "n_items": 20,
  "baskets_per_user": [4, 8],
  "items_per_basket": [1, 4],
  "horizon": 1000,
  "user_activity_spread": 0.6,
  "seed": 7,
  "windows": [
    {"begin": 0, "end": 500,
     "weights": [9,9,9,9,9,9,9,1,1,1,1,1,1,1,0,0,0,0,0,0]},
    {"begin": 500, "end": 1000,
     "weights": [1,1,1,1,1,1,1,4,4,4,4,4,4,4,9,9,9,9,9,9]}
  ]
})";

}  // namespace

TEST_CASE("version flag prints and exits cleanly") {
  const auto result = run_cli("--version");
  CHECK(result.exit_code == 0);
  CHECK(result.output.find("0.1.0") != std::string::npos);
}

TEST_CASE("help lists the subcommands") {
  const auto result = run_cli("--help");
  CHECK(result.exit_code == 0);
  for (const char* name :
       {"ingest", "synth", "filter", "split", "train", "eval", "compare",
        "run", "manifest"}) {
    CHECK(result.output.find(name) != std::string::npos);
  }
}

TEST_CASE("full pipeline from raw log to comparison table") {
  const auto dir = oracle::temp_dir("cli-pipeline");

  // ingest a small handwritten log
  write_file(dir / "log.csv",
             "user,item,timestamp,order\n"
             "u1,apple,1,o1\nu1,pear,2,o2\nu1,plum,3,o3\n"
             "u2,apple,1,o4\nu2,plum,2,o5\nu2,pear,3,o6\n");
  auto result = run_cli("ingest " + q(dir / "log.csv") + " --out " +
                        q(dir / "tiny") + " --basket-col order");
  CHECK(result.exit_code == 0);
  CHECK(fs::exists(dir / "tiny" / "interactions.csv"));

  // synth data carries enough structure for the rest of the pipeline
  write_file(dir / "synth.json", kSynthConfig);
  result = run_cli("synth --config " + q(dir / "synth.json") + " --out " +
                   q(dir / "data"));
  CHECK(result.exit_code == 0);
  CHECK(fs::exists(dir / "data" / "synth.json"));

  result = run_cli("filter " + q(dir / "data") + " --out " +
                   q(dir / "filtered") + " --min-item-purchases 2");
  CHECK(result.exit_code == 0);

  for (const char* strategy : {"leave-one-last-item", "temporal-user"}) {
    result = run_cli("split " + q(dir / "filtered") + " --strategy " +
                     strategy + " --out " + q(dir / "splits" / strategy));
    CHECK(result.exit_code == 0);
    CHECK(fs::exists(dir / "splits" / strategy / "manifest.json"));

    for (const char* model : {"popularity", "itemknn"}) {
      const auto ckpt =
          dir / "ckpt" / (std::string(strategy) + "-" + model + ".ckpt");
      result = run_cli(std::string("train --model ") + model + " --split " +
                       q(dir / "splits" / strategy) + " --data " +
                       q(dir / "filtered") + " --out " + q(ckpt));
      CHECK(result.exit_code == 0);

      result = run_cli("eval --model-ckpt " + q(ckpt) + " --split " +
                       q(dir / "splits" / strategy) + " --data " +
                       q(dir / "filtered") + " --out " +
                       q(dir / "reports" / (std::string(strategy) + "-" + model)));
      CHECK(result.exit_code == 0);
    }
  }

  std::string reports;
  for (const char* strategy : {"leave-one-last-item", "temporal-user"}) {
    for (const char* model : {"popularity", "itemknn"}) {
      reports += " " + q(dir / "reports" /
                         (std::string(strategy) + "-" + model + ".json"));
    }
  }
  result = run_cli("compare --reports" + reports + " --out " +
                   q(dir / "cmp" / "ndcg"));
  CHECK(result.exit_code == 0);
  CHECK(result.output.find("tau per strategy pair:") != std::string::npos);
  CHECK(fs::exists(dir / "cmp" / "ndcg.json"));
  CHECK(fs::exists(dir / "cmp" / "ndcg.csv"));
  CHECK(fs::exists(dir / "cmp" / "ndcg.txt"));

  // the manifest inspector understands each artifact kind
  result = run_cli("manifest " + q(dir / "splits" / "leave-one-last-item"));
  CHECK(result.exit_code == 0);
  CHECK(result.output.find("leave-one-last-item") != std::string::npos);
  result = run_cli("manifest " + q(dir / "filtered"));
  CHECK(result.exit_code == 0);

  fs::remove_all(dir);
}

TEST_CASE("run executes a config file end to end") {
  const auto dir = oracle::temp_dir("cli-run");
  std::string config = R"({
  "synth": )" + std::string(kSynthConfig) + R"(,
  "filter": {},
  "strategies": [
    {"strategy": "leave-one-last-item"},
    {"strategy": "temporal-global"}
  ],
  "models": [
    {"model": "popularity"},
    {"model": "itemknn"},
    {"model": "mfbpr", "hp": {"embedding_dim": 4, "epochs": 5}}
  ],
  "seed": 11
})";
  write_file(dir / "experiment.json", config);
  const auto result = run_cli("run --config " + q(dir / "experiment.json") +
                              " --out " + q(dir / "out") + " --threads 2");
  CHECK(result.exit_code == 0);
  CHECK(result.output.find("bundle") != std::string::npos);
  CHECK(fs::exists(dir / "out" / "bundle.json"));

  const auto inspect = run_cli("manifest " + q(dir / "out"));
  CHECK(inspect.exit_code == 0);
  fs::remove_all(dir);
}

TEST_CASE("exit codes distinguish config data and io failures") {
  const auto dir = oracle::temp_dir("cli-exits");
  write_file(dir / "log.csv", "user,item,timestamp\nu1,a,1\n");
  auto ingest = run_cli("ingest " + q(dir / "log.csv") + " --out " +
                        q(dir / "ds"));
  REQUIRE(ingest.exit_code == 0);

  // unknown strategy name: config error
  auto result = run_cli("split " + q(dir / "ds") +
                        " --strategy sideways --out " + q(dir / "s"));
  CHECK(result.exit_code == 2);
  CHECK(result.output.find("config error") != std::string::npos);

  // filter that removes everything: data error
  result = run_cli("filter " + q(dir / "ds") + " --out " + q(dir / "f") +
                   " --min-item-purchases 99");
  CHECK(result.exit_code == 3);

  // missing input file: io error
  result = run_cli("ingest " + q(dir / "nosuch.csv") + " --out " +
                   q(dir / "x"));
  CHECK(result.exit_code == 4);

  // bad flags: usage error
  result = run_cli("split");
  CHECK(result.exit_code == 2);
  fs::remove_all(dir);
}
