#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

namespace fs = std::filesystem;

namespace {

std::string cli_path() {
  const char* p = std::getenv("SWARMSHARE_CLI");
  REQUIRE_MESSAGE(p != nullptr, "SWARMSHARE_CLI must point at the binary");
  return p;
}

std::string fixtures_dir() {
  const char* p = std::getenv("SWARMSHARE_FIXTURES");
  REQUIRE_MESSAGE(p != nullptr, "SWARMSHARE_FIXTURES must point at fixtures/");
  return p;
}

struct RunResult {
  int status = -1;
  std::string out;
};

RunResult run_cli(const std::string& args) {
  RunResult r;
  std::string cmd = cli_path() + " " + args + " 2>/dev/null";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = ::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  int rc = ::pclose(pipe);
  r.status = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  return r;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("swarmshare_cli_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write_file(const fs::path& p, const std::string& data) {
  std::ofstream out(p, std::ios::binary);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
}

std::string random_payload(std::size_t n) {
  std::mt19937_64 rng(0xc11);
  std::string s(n, '\0');
  for (char& c : s) c = static_cast<char>(rng());
  return s;
}

}  // namespace

TEST_CASE("usage errors exit 2") {
  CHECK(run_cli("").status == 2);
  CHECK(run_cli("frobnicate").status == 2);
  CHECK(run_cli("create").status == 2);
  CHECK(run_cli("verify only-one-arg").status == 2);
  CHECK(run_cli("sim /nonexistent/scenario.json").status == 2);
  CHECK(run_cli("project /nonexistent/datasets.json").status == 2);
  CHECK(run_cli("--help").status == 0);
}

TEST_CASE("create then verify round-trips") {
  TempDir dir;
  fs::path payload = dir.path / "data.bin";
  write_file(payload, random_payload(200000));

  RunResult created = run_cli(
      "create " + payload.string() +
      " --announce http://127.0.0.1:9999/announce --piece-length 16KiB");
  CHECK(created.status == 0);
  CHECK(created.out.find("info_hash ") != std::string::npos);
  CHECK(created.out.find("pieces 13") != std::string::npos);
  REQUIRE(fs::exists(payload.string() + ".torrent"));

  RunResult ok = run_cli("verify " + payload.string() + ".torrent " +
                         payload.string());
  CHECK(ok.status == 0);
  CHECK(ok.out.find("result PASS") != std::string::npos);

  // Tamper one byte: domain failure, not usage failure.
  std::string tampered = random_payload(200000);
  tampered[5] = static_cast<char>(tampered[5] ^ 1);
  write_file(payload, tampered);
  RunResult bad = run_cli("verify " + payload.string() + ".torrent " +
                          payload.string());
  CHECK(bad.status == 1);
  CHECK(bad.out.find("result FAIL") != std::string::npos);

  CHECK(run_cli("verify " + payload.string() + " " + payload.string()).status ==
        2);
  CHECK(run_cli("create " + payload.string() +
                " --announce http://x/announce --piece-length 10000")
            .status == 2);
}

TEST_CASE("sim runs fixture scenarios") {
  std::string scen = fixtures_dir() + "/scenarios/flash_crowd.json";
  RunResult human = run_cli("sim " + scen);
  CHECK(human.status == 0);
  CHECK(human.out.find("amplification ") != std::string::npos);
  CHECK(human.out.find("trace_digest ") != std::string::npos);

  RunResult json = run_cli("sim " + scen + " --json");
  CHECK(json.status == 0);
  CHECK(json.out.find("\"trace_digest\"") != std::string::npos);

  RunResult csv = run_cli("sim " + scen + " --csv");
  CHECK(csv.status == 0);
  CHECK(csv.out.rfind("t,active,server_rate,peer_rate", 0) == 0);

  TempDir dir;
  fs::path bad = dir.path / "bad.json";
  write_file(bad, R"({"file_size": "1MB", "server_up": "1KB", "nope": 1})");
  CHECK(run_cli("sim " + bad.string()).status == 2);

  fs::path stalled = dir.path / "stalled.json";
  write_file(stalled, R"({"file_size": "100MB", "server_up": "1KB",
    "time_cap": 5, "peers": [{"arrival_time": 0}]})");
  CHECK(run_cli("sim " + stalled.string()).status == 1);
}

TEST_CASE("project renders the fixture table and ledger") {
  RunResult table = run_cli("project " + fixtures_dir() + "/table1_datasets.json");
  CHECK(table.status == 0);
  CHECK(table.out.find("imagenet-fall2011") != std::string::npos);
  CHECK(table.out.find("422.29") != std::string::npos);

  RunResult ledger =
      run_cli("project --ledger " + fixtures_dir() + "/reddit_ledger.json");
  CHECK(ledger.status == 0);
  CHECK(ledger.out.find("amplification 42.08") != std::string::npos);
  CHECK(ledger.out.find("http_equivalent_usd 424.32") != std::string::npos);
  CHECK(ledger.out.find("per_download_usd 4.42") != std::string::npos);

  CHECK(run_cli("project").status == 2);
}
