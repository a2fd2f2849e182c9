#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "swarmshare/swarmsim.hpp"

using namespace swarmshare;
using namespace swarmshare::sim;

namespace {

SwarmScenario flash(std::uint32_t n, double file_size, double server_up,
                    double down, double up, Mode mode) {
  SwarmScenario s;
  s.file_size = file_size;
  s.server_up = server_up;
  s.mode = mode;
  for (std::uint32_t i = 0; i < n; ++i) s.peers.push_back({0.0, down, up});
  return s;
}

}  // namespace

TEST_CASE("max-min allocation") {
  // One slow cap, remainder to the other: {1, 20} at pool 10 -> {1, 9}.
  RateState st;
  st.pool = 10;
  st.caps = {1, 20};
  std::vector<double> rates = allocate_rates(st);
  REQUIRE(rates.size() == 2);
  CHECK(rates[0] == doctest::Approx(1.0));
  CHECK(rates[1] == doctest::Approx(9.0));

  // Pool beyond demand leaves everyone at cap.
  st.pool = 100;
  rates = allocate_rates(st);
  CHECK(rates[0] == doctest::Approx(1.0));
  CHECK(rates[1] == doctest::Approx(20.0));

  // Equal split among equals; cap 0 means unlimited.
  st.pool = 9;
  st.caps = {0, 0, 0};
  rates = allocate_rates(st);
  for (double r : rates) CHECK(r == doctest::Approx(3.0));

  st.caps.clear();
  CHECK(allocate_rates(st).empty());
}

TEST_CASE("http_only closed form") {
  // n simultaneous unlimited peers against a server of rate U finish
  // together at exactly n*S/U.
  for (std::uint32_t n : {1u, 3u, 8u}) {
    SwarmScenario s = flash(n, 50e6, 5e6, 0, 0, Mode::HttpOnly);
    SimReport rep = simulate(s);
    double expect = n * 50e6 / 5e6;
    double dt = 0.01 * 50e6 / 5e6;
    CHECK(std::abs(rep.makespan - expect) <= dt + 1e-9);
    CHECK(rep.server_uploaded == rep.total_downloaded);
    CHECK(rep.amplification == 1.0);
    CHECK(rep.total_downloaded == static_cast<std::uint64_t>(n) * 50000000);
    for (const PeerOutcome& p : rep.peers) {
      CHECK(p.downloaded == 50000000);
      CHECK(p.uploaded == 0);
      CHECK(p.completion_time <= rep.makespan);
    }
  }
}

TEST_CASE("client-side cap binds when the server has headroom") {
  SwarmScenario s = flash(1, 40e6, 100e6, 2e6, 0, Mode::HttpOnly);
  SimReport rep = simulate(s);
  double dt = 0.01 * 40e6 / 100e6;
  CHECK(std::abs(rep.makespan - 20.0) <= dt + 1e-9);
}

TEST_CASE("staggered arrivals complete in order") {
  SwarmScenario s;
  s.file_size = 10e6;
  s.server_up = 10e6;
  s.mode = Mode::HttpOnly;
  s.peers = {{0, 0, 0}, {5, 0, 0}, {50, 0, 0}};
  SimReport rep = simulate(s);
  REQUIRE(rep.peers.size() == 3);
  for (const PeerOutcome& p : rep.peers) {
    CHECK(p.completion_time > p.arrival_time);
    CHECK(p.downloaded == 10000000);
  }
  CHECK(rep.peers[0].completion_time < rep.peers[1].completion_time);
  CHECK(rep.peers[1].completion_time < rep.peers[2].completion_time);
  // The last peer arrives alone after the flock has left: it gets the
  // whole server and finishes in ~1 s.
  CHECK(rep.peers[2].completion_time ==
        doctest::Approx(51.0).epsilon(0.05));
}

TEST_CASE("hybrid mode beats http_only") {
  SwarmScenario http = flash(8, 100e6, 10e6, 20e6, 5e6, Mode::HttpOnly);
  SwarmScenario hyb = flash(8, 100e6, 10e6, 20e6, 5e6, Mode::Hybrid);
  SimReport a = simulate(http);
  SimReport b = simulate(hyb);
  CHECK(b.makespan < a.makespan);
  CHECK(b.server_uploaded <= a.server_uploaded);
  CHECK(b.amplification > 1.0);
  CHECK(b.total_downloaded == a.total_downloaded);
}

TEST_CASE("fluid conservation") {
  SwarmScenario s = flash(5, 33e6, 3e6, 12e6, 2e6, Mode::Hybrid);
  SimReport rep = simulate(s);
  CHECK(rep.total_downloaded == 5 * 33000000);
  std::uint64_t sum = 0;
  for (const PeerOutcome& p : rep.peers) sum += p.downloaded;
  CHECK(sum == rep.total_downloaded);
}

TEST_CASE("piece level conservation is exact") {
  SwarmScenario s = flash(6, 16 * 262144.0 * 4, 2e6, 8e6, 3e6, Mode::Hybrid);
  s.fidelity = Fidelity::PieceLevel;
  s.rng_seed = 11;
  SimReport rep = simulate(s);
  const std::uint64_t file = 16ull * 262144 * 4;
  CHECK(rep.total_downloaded == 6 * file);
  std::uint64_t sum_down = 0, sum_up = 0;
  for (const PeerOutcome& p : rep.peers) {
    CHECK(p.downloaded == file);
    sum_down += p.downloaded;
    sum_up += p.uploaded;
  }
  CHECK(sum_down == rep.total_downloaded);
  // Every byte that arrived left either the server or a peer.
  CHECK(rep.server_uploaded + sum_up == rep.total_downloaded);
}

TEST_CASE("determinism: seed pins the trace digest") {
  SwarmScenario s = flash(7, 64 * 262144.0, 1e6, 4e6, 2e6, Mode::Hybrid);
  s.fidelity = Fidelity::PieceLevel;
  s.rng_seed = 1234;
  SimReport a = simulate(s);
  SimReport b = simulate(s);
  CHECK(a.trace_digest == b.trace_digest);
  CHECK(a.trace_digest.size() == 40);
  CHECK(a.makespan == b.makespan);
  CHECK(a.server_uploaded == b.server_uploaded);

  s.rng_seed = 4321;
  SimReport c = simulate(s);
  CHECK(c.trace_digest != a.trace_digest);

  SwarmScenario f = flash(4, 20e6, 2e6, 8e6, 1e6, Mode::Hybrid);
  SimReport fa = simulate(f);
  SimReport fb = simulate(f);
  CHECK(fa.trace_digest == fb.trace_digest);
}

TEST_CASE("fluid and piece level agree on completion") {
  // 64-piece file, enough peers that both models exercise peer upload.
  SwarmScenario s = flash(6, 64 * 262144.0, 2e6, 0, 2e6, Mode::Hybrid);
  SwarmScenario p = s;
  p.fidelity = Fidelity::PieceLevel;
  p.rng_seed = 5;
  SimReport fluid = simulate(s);
  SimReport pieces = simulate(p);
  CHECK(std::abs(pieces.makespan - fluid.makespan) / fluid.makespan < 0.10);
}

TEST_CASE("a peer that leaves stops uploading") {
  SwarmScenario keep;
  keep.file_size = 40e6;
  keep.server_up = 2e6;
  keep.mode = Mode::Hybrid;
  keep.peers = {{0, 0, 4e6}, {15, 0, 4e6}, {30, 0, 4e6}};
  SwarmScenario leave = keep;
  leave.seed_after = false;
  SimReport stay = simulate(keep);
  SimReport gone = simulate(leave);
  CHECK(gone.makespan > stay.makespan);
  CHECK(gone.server_uploaded >= stay.server_uploaded);
}

TEST_CASE("time cap stalls out") {
  SwarmScenario s = flash(2, 100e6, 1e3, 0, 0, Mode::HttpOnly);
  s.time_cap = 10.0;
  CHECK_THROWS_AS(simulate(s), StalledScenario);
  s.fidelity = Fidelity::PieceLevel;
  CHECK_THROWS_AS(simulate(s), StalledScenario);
}

TEST_CASE("scenario json parsing") {
  SwarmScenario s = scenario_from_json(R"({
    "file_size": "10MB",
    "mode": "http_only",
    "server_up": "1MB",
    "dt": 0.05,
    "peers": [
      {"arrival_time": 0, "down_cap": "2MB", "up_cap": 0, "count": 3},
      {"arrival_time": 9.5}
    ]
  })");
  CHECK(s.file_size == 10e6);
  CHECK(s.mode == Mode::HttpOnly);
  CHECK(s.fidelity == Fidelity::Fluid);
  REQUIRE(s.peers.size() == 4);
  CHECK(s.peers[0].down_cap == 2e6);
  CHECK(s.peers[2].down_cap == 2e6);
  CHECK(s.peers[3].arrival_time == 9.5);
  CHECK(s.peers[3].down_cap == 0);
  CHECK(s.dt == 0.05);

  CHECK_THROWS_AS(scenario_from_json("not json"), SchemaError);
  CHECK_THROWS_AS(scenario_from_json(R"({"file_size": 1})"), SchemaError);
  CHECK_THROWS_AS(scenario_from_json(
                      R"({"file_size": 1e6, "server_up": 1e3, "peers": [],
                          "bogus": true})"),
                  SchemaError);
  CHECK_THROWS_AS(scenario_from_json(
                      R"({"file_size": 1e6, "server_up": 1e3,
                          "peers": [{"arrival_time": -1}]})"),
                  SchemaError);
  CHECK_THROWS_AS(scenario_from_json(
                      R"({"file_size": 1e6, "server_up": 1e3,
                          "peers": [{"arrival_time": 0, "count": 0}]})"),
                  SchemaError);
  CHECK_THROWS_AS(scenario_from_json(
                      R"({"file_size": 1e6, "server_up": 1e3, "peers": [],
                          "mode": "carrier_pigeon"})"),
                  SchemaError);
}

TEST_CASE("report serialization") {
  SwarmScenario s = flash(2, 8e6, 2e6, 0, 0, Mode::HttpOnly);
  SimReport rep = simulate(s);

  nlohmann::json j = nlohmann::json::parse(report_to_json(rep));
  CHECK(j.at("makespan").get<double>() == doctest::Approx(rep.makespan));
  CHECK(j.at("amplification").get<double>() == 1.0);
  CHECK(j.at("server_uploaded").get<std::uint64_t>() == rep.server_uploaded);
  CHECK(j.at("peers").size() == 2);

  std::string csv = report_to_csv(rep);
  CHECK(csv.rfind("t,active,server_rate,peer_rate\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') >= 2);
}
