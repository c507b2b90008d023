#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result cli(const std::string& args) {
  const std::string cmd = std::string(HIROUTE_CLI) + " " + args + " 2>&1";
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  while (std::fgets(buf, sizeof buf, p)) r.out += buf;
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path tmp(const std::string& name) {
  const fs::path d = fs::path(HIROUTE_TEST_TMP) / "cli" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("run prints one summary row and writes outputs") {
  const auto dir = tmp("run");
  const auto r = cli("run --override total_jobs=400 --override seeds=[1,2] --out " + dir.string());
  CHECK(r.code == 0);
  CHECK(r.out.find("vr_ly_exp4") != std::string::npos);
  CHECK(fs::exists(dir / "experiment-vr_ly_exp4-greedy-k3-s1" / "metrics.csv"));
  CHECK(fs::exists(dir / "experiment-vr_ly_exp4-greedy-k3-s2" / "summary.json"));

  const auto local = cli("run --override policy=pure_local --override total_jobs=300 "
                         "--override seeds=[1] --out " + dir.string());
  CHECK(local.code == 0);
  CHECK(local.out.find("pure_local") != std::string::npos);
  CHECK(local.out.find("0.0000 +- 0.0000   0.0000 +- 0.0000") != std::string::npos);

  const auto rep = cli("report " + dir.string());
  CHECK(rep.code == 0);
  CHECK(rep.out.find("pure_local") != std::string::npos);
}

TEST_CASE("config errors exit 1 and name the field") {
  auto r = cli("run --override learning.lambda=1.5");
  CHECK(r.code == 1);
  CHECK(r.out.find("learning.lambda") != std::string::npos);

  const auto dir = tmp("cfg");
  std::ofstream(dir / "bad.json") << R"({"learning": {"lamda": 0.1}})";
  r = cli("run --config " + (dir / "bad.json").string());
  CHECK(r.code == 1);
  CHECK(r.out.find("learning.lamda") != std::string::npos);

  std::ofstream(dir / "broken.json") << "{";
  CHECK(cli("run --config " + (dir / "broken.json").string()).code == 1);
  CHECK(cli("run --config " + (dir / "missing.json").string()).code == 1);
}

TEST_CASE("runtime failures exit 2") {
  const auto r = cli("run --override workload.mode=trace --override workload.trace_path=/nonexistent.jsonl");
  CHECK(r.code == 2);
}

TEST_CASE("sweep") {
  const auto dir = tmp("sweep");
  CHECK(cli("sweep --override total_jobs=200 --out " + dir.string()).code == 1);  // empty

  const auto r = cli("sweep --override total_jobs=300 --override seeds=[1,2] "
                     "--override sweep.policies=[\\\"random\\\",\\\"pure_local\\\"] "
                     "--override sweep.placements=[\\\"greedy\\\",\\\"layer_diverse\\\"] "
                     "--jobs 2 --out " + dir.string());
  CHECK(r.code == 0);
  std::ifstream in(dir / "experiment-comparison.csv");
  std::string line;
  int rows = 0;
  std::getline(in, line);
  CHECK(line.rfind("policy,layers,placement,runs,failed,", 0) == 0);
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 4);
}

TEST_CASE("validate and its negative control") {
  const auto ok = cli("validate");
  CHECK(ok.code == 0);
  CHECK(ok.out.find("FAIL") == std::string::npos);
  const auto bad = cli("validate --inject-beta-sign-bug");
  CHECK(bad.code != 0);
  CHECK(bad.out.find("FAIL unbiasedness") != std::string::npos);
}

TEST_CASE("trace mode end to end") {
  const auto dir = tmp("trace");
  std::ofstream t(dir / "toy.jsonl");
  t << R"({"models": [{"id": "small", "size": 1, "modalities": ["text"]}, {"id": "big", "size": 20, "modalities": ["text", "vision"]}]})" "\n";
  for (int i = 0; i < 40; ++i) {
    t << R"({"job_id": "j)" << i << R"(", "task_type": ")" << (i % 2 ? "qa" : "vqa")
      << R"(", "modality": ")" << (i % 2 ? "text" : "vision") << R"(", "size_units": )"
      << (i % 2 ? 2 : 12) << R"(, "correctness": {"small": )" << (i % 3 == 0)
      << R"(, "big": )" << (i % 5 != 0) << "}}\n";
  }
  t.close();
  const auto r = cli("run --override workload.mode=trace --override workload.trace_path=" +
                     (dir / "toy.jsonl").string() +
                     " --override total_jobs=300 --override seeds=[1] --out " + dir.string());
  CHECK(r.code == 0);
}
