#include "sda/cli.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "sda");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = sda::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("sda_cli_test_" + std::to_string(std::rand()) + std::to_string(::getpid()));
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

std::vector<std::vector<std::string>> table(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> f;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, '\t')) f.push_back(cell);
    rows.push_back(f);
  }
  return rows;
}

int kept_count(const std::string& report) {
  int n = 0;
  const auto rows = table(report);
  for (std::size_t i = 1; i < rows.size(); ++i) n += rows[i][5] == "1";
  return n;
}

void simulate(const TempDir& d, const std::string& stem, const std::vector<std::string>& extra) {
  std::vector<std::string> args{"simulate", "--out-matrix", d / (stem + ".tsv"), "--out-labels", d / (stem + ".labels"),
                                "--out-truth", d / (stem + ".truth")};
  args.insert(args.end(), extra.begin(), extra.end());
  const auto r = cli(args);
  REQUIRE(r.code == 0);
}

}  // namespace

TEST_CASE("help and version") {
  const auto h = cli({"--help"});
  CHECK(h.code == 0);
  CHECK(h.out.find("crossval") != std::string::npos);
  const auto v = cli({"--version"});
  CHECK(v.code == 0);
  CHECK(v.out.find(sda::kVersion) != std::string::npos);
}

TEST_CASE("usage errors exit with 2") {
  CHECK(cli({}).code == 2);
  const auto r = cli({"train", "--bogus"});
  CHECK(r.code == 2);
  CHECK(r.err.rfind("error: usage:", 0) == 0);
  CHECK(cli({"select", "-x", "a", "-y", "b", "--rule", "lasso"}).code == 2);
}

TEST_CASE("data and io errors exit with 1 and a single error line") {
  TempDir d;
  const auto missing = cli({"rank", "-x", d / "none.tsv", "-y", d / "none.labels"});
  CHECK(missing.code == 1);
  CHECK(missing.err.rfind("error: io:", 0) == 0);

  std::ofstream(d / "bad.tsv") << "id\tg1\tg2\ns1\t1\tx\ns2\t2\t3\n";
  std::ofstream(d / "bad.labels") << "s1\ta\ns2\tb\n";
  const auto bad = cli({"rank", "-x", d / "bad.tsv", "-y", d / "bad.labels"});
  CHECK(bad.code == 1);
  CHECK(bad.err.rfind("error: data_error:", 0) == 0);
  CHECK(std::count(bad.err.begin(), bad.err.end(), '\n') == 1);
}

TEST_CASE("the installed binary reports the same exit codes") {
  const std::string exe = SDA_CLI_PATH;
  CHECK(std::system((exe + " --version > /dev/null").c_str()) == 0);
  const int usage = std::system((exe + " --no-such-flag > /dev/null 2>&1").c_str());
  CHECK(WEXITSTATUS(usage) == 2);
  const int data = std::system((exe + " rank -x /nonexistent -y /nonexistent > /dev/null 2>&1").c_str());
  CHECK(WEXITSTATUS(data) == 1);
}

TEST_CASE("simulate, rank and select") {
  TempDir d;
  simulate(d, "sim", {"--class-sizes", "15", "15", "--features", "300", "--fraction", "0.05", "--effect", "2",
                      "--seed", "4"});
  const auto truth = table(slurp(d / "sim.truth"));
  CHECK(truth.size() == 15);

  const auto rank = cli({"rank", "-x", d / "sim.tsv", "-y", d / "sim.labels"});
  REQUIRE(rank.code == 0);
  const auto rows = table(rank.out);
  CHECK(rows[0] == std::vector<std::string>{"feature", "t.c1", "t.c2", "cat.c1", "cat.c2", "S", "S_pam"});
  CHECK(rows.size() == 301);
  CHECK(rank.out.rfind("# config: ", 0) == 0);

  const auto fndr = cli({"select", "-x", d / "sim.tsv", "-y", d / "sim.labels", "--rule", "fndr"});
  const auto fdr = cli({"select", "-x", d / "sim.tsv", "-y", d / "sim.labels", "--rule", "fdr"});
  REQUIRE(fndr.code == 0);
  REQUIRE(fdr.code == 0);
  CHECK(kept_count(fndr.out) >= kept_count(fdr.out));
  CHECK(kept_count(fndr.out) > 0);
  const auto wh = cli({"select", "-x", d / "sim.tsv", "-y", d / "sim.labels", "--transform", "wh"});
  CHECK(wh.code == 0);
  CHECK(wh.out.find("\"transform\":\"wh\"") != std::string::npos);
}

TEST_CASE("crossval writes 200 split errors by default") {
  TempDir d;
  simulate(d, "cv", {"--class-sizes", "12", "12", "--features", "30", "--effect", "1.5", "--seed", "5"});
  const auto r = cli({"crossval", "-x", d / "cv.tsv", "-y", d / "cv.labels", "--rule", "all", "--seed", "7",
                      "-o", d / "report.json"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(slurp(d / "report.json"));
  CHECK(j["split_errors"].size() == 200);
  CHECK(j["config"]["plan"]["seed"] == 7);
  CHECK(j["config"]["data"]["samples"] == 24);
  const auto again = cli({"crossval", "-x", d / "cv.tsv", "-y", d / "cv.labels", "--rule", "all", "--seed", "7",
                          "--threads", "1"});
  CHECK(nlohmann::json::parse(again.out)["split_errors"] == j["split_errors"]);
}

TEST_CASE("train then predict") {
  TempDir d;
  simulate(d, "tr", {"--class-sizes", "20", "20", "--features", "250", "--fraction", "0.04", "--effect", "6",
                     "--seed", "6"});
  REQUIRE(cli({"train", "-x", d / "tr.tsv", "-y", d / "tr.labels", "--rule", "fndr", "-o", d / "m.json"}).code == 0);
  const auto model = nlohmann::json::parse(slurp(d / "m.json"));
  CHECK(model["format"] == "sda-model");

  const auto p = cli({"predict", "-x", d / "tr.tsv", "-m", d / "m.json"});
  REQUIRE(p.code == 0);
  const auto rows = table(p.out);
  REQUIRE(rows.size() == 41);
  CHECK(rows[0][0] == "sample");
  const auto labels = table(slurp(d / "tr.labels"));
  int wrong = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) wrong += rows[i][1] != labels[i][1];
  CHECK(wrong == 0);

  // columns are matched by id, so a reordered file predicts the same
  std::ifstream in(d / "tr.tsv");
  std::ofstream re(d / "rev.tsv");
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, '\t')) f.push_back(cell);
    re << f[0];
    for (std::size_t j = f.size() - 1; j >= 1; --j) re << '\t' << f[j];
    re << '\n';
  }
  re.close();
  const auto q = cli({"predict", "-x", d / "rev.tsv", "-m", d / "m.json"});
  REQUIRE(q.code == 0);
  CHECK(table(q.out) == rows);
}
