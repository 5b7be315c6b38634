// Exercises the installed CLI end to end through its real process boundary.

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const fs::path kWorkDir = fs::temp_directory_path() / "nnlm_cli_test";

int run_cli(const std::string& args) {
  const std::string cmd = std::string(CLI_BINARY) + " " + args + " > " +
                          (kWorkDir / "stdout.txt").string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string last_stdout() { return read_file(kWorkDir / "stdout.txt"); }

int count_lines(const std::string& text) {
  int n = 0;
  for (char c : text)
    if (c == '\n') ++n;
  return n;
}

struct Setup {
  Setup() {
    fs::remove_all(kWorkDir);
    fs::create_directories(kWorkDir);
  }
};
const Setup setup;

std::string path(const std::string& name) { return (kWorkDir / name).string(); }

}  // namespace

TEST_CASE("gen engine preset writes the expected CSV shape deterministically") {
  REQUIRE(run_cli("--seed 7 gen --preset engine --out " + path("a.csv")) == 0);
  const std::string a = read_file(path("a.csv"));
  CHECK(count_lines(a) == 6401);  // header + 6400 rows
  int marks = 0;
  std::istringstream in(a);
  std::string line;
  while (std::getline(in, line))
    if (line.size() >= 2 && line.compare(line.size() - 2, 2, ",1") == 0) ++marks;
  CHECK(marks == 32);

  REQUIRE(run_cli("--seed 7 gen --preset engine --out " + path("b.csv")) == 0);
  CHECK(read_file(path("b.csv")) == a);
}

TEST_CASE("gen sinc preset writes 100 rows") {
  REQUIRE(run_cli("--seed 1 gen --preset sinc --out " + path("sinc.csv")) == 0);
  CHECK(count_lines(read_file(path("sinc.csv"))) == 101);
}

TEST_CASE("omitting the seed still prints one") {
  REQUIRE(run_cli("gen --preset sinc --out " + path("s2.csv")) == 0);
  CHECK(last_stdout().find("seed ") == 0);
}

TEST_CASE("train then detect round trip") {
  REQUIRE(run_cli("--seed 3 gen --preset engine --events 8 --samples-per-event 50"
                  " --out " + path("small.csv")) == 0);
  REQUIRE(run_cli("--seed 3 train --data " + path("small.csv") +
                  " --hidden 16 --optimizer lm --epochs 40 --patience 3"
                  " --train-events 4 --model-out " + path("m.txt") +
                  " --report-out " + path("r.json")) == 0);
  CHECK(fs::exists(path("m.txt")));
  CHECK(read_file(path("r.json")).find("nnlm-train-report v1") != std::string::npos);

  REQUIRE(run_cli("detect --model " + path("m.txt") + " --data " + path("small.csv") +
                  " --train-events 4 --report-out " + path("ar.json") +
                  " --residuals-out " + path("res.csv")) == 0);
  // residual CSV row count = series length
  CHECK(count_lines(read_file(path("res.csv"))) == 401);
  CHECK(read_file(path("ar.json")).find("nnlm-anomaly-report v1") != std::string::npos);

  // unreachable threshold flags nothing
  REQUIRE(run_cli("detect --model " + path("m.txt") + " --data " + path("small.csv") +
                  " --train-events 4 --threshold 1e9 --report-out " + path("ar2.json") +
                  " --residuals-out " + path("res2.csv")) == 0);
  CHECK(read_file(path("ar2.json")).find("\"flagged_events\": []") != std::string::npos);
}

TEST_CASE("consensus subcommand aggregates runs") {
  REQUIRE(run_cli("--seed 5 consensus --data " + path("small.csv") +
                  " --hidden 12 --epochs 25 --train-events 4 -k 3 --quorum 1.0"
                  " --report-out " + path("cons.json")) == 0);
  const std::string report = read_file(path("cons.json"));
  CHECK(report.find("nnlm-consensus-report v1") != std::string::npos);
  CHECK(report.find("\"n_runs\": 3") != std::string::npos);
}

TEST_CASE("bench emits a schema-versioned CSV") {
  REQUIRE(run_cli("--seed 1 bench --scenario sinc --seeds 1 --epoch-scale 0.1"
                  " --out " + path("bench.csv")) == 0);
  const std::string csv = read_file(path("bench.csv"));
  CHECK(csv.find("# nnlm-bench-csv v1") == 0);
  CHECK(csv.find("scenario,optimizer,architecture") != std::string::npos);
  CHECK(count_lines(csv) == 4);  // schema + header + lm + adam
}

TEST_CASE("input errors exit with the input-error code") {
  CHECK(run_cli("train --data " + path("missing.csv")) == 2);
  CHECK(run_cli("gen --preset nosuch --out " + path("x.csv")) == 2);
  CHECK(run_cli("consensus --data " + path("small.csv") + " -k 1") == 2);
}
