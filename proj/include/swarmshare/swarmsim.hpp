#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace swarmshare::sim {

enum class Mode { HttpOnly, Hybrid };
enum class Fidelity { Fluid, PieceLevel };

struct PeerSpec {
  double arrival_time = 0;
  // bytes/s. down_cap 0 means unlimited; up_cap 0 means the peer never
  // uploads, so it contributes nothing to the swarm pool.
  double down_cap = 0;
  double up_cap = 0;
};

struct SwarmScenario {
  std::uint64_t file_size = 0;
  Mode mode = Mode::Hybrid;
  double server_up = 0;  // bytes/s, > 0
  std::vector<PeerSpec> peers;
  // Fluid integration step; 0 picks 1% of the server-only transfer
  // time, clamped to [1 ms, 1 s].
  double dt = 0;
  std::uint64_t rng_seed = 1;
  Fidelity fidelity = Fidelity::Fluid;
  std::uint32_t piece_length = 262144;
  // Completed peers keep uploading instead of leaving.
  bool seed_after = true;
  // Simulated seconds before the run is declared stuck.
  double time_cap = 1e6;
};

struct PeerOutcome {
  double arrival_time = 0;
  double completion_time = 0;
  std::uint64_t downloaded = 0;
  std::uint64_t uploaded = 0;
  std::uint64_t from_server = 0;
};

struct SeriesSample {
  double t = 0;
  std::uint32_t active = 0;
  double server_rate = 0;  // bytes/s leaving the origin server
  double peer_rate = 0;    // bytes/s moving peer to peer
};

struct SimReport {
  std::vector<PeerOutcome> peers;
  std::uint64_t server_uploaded = 0;
  std::uint64_t total_downloaded = 0;
  double makespan = 0;
  // total_downloaded / server_uploaded; 0 when the server sent nothing.
  double amplification = 0;
  std::string trace_digest;  // hex digest of the event log
  std::vector<SeriesSample> series;
};

class SimError : public std::runtime_error {
 public:
  explicit SimError(const std::string& what) : std::runtime_error(what) {}
};

class SchemaError : public SimError {
 public:
  using SimError::SimError;
};

class StalledScenario : public SimError {
 public:
  using SimError::SimError;
};

class ZeroServerUpload : public SimError {
 public:
  using SimError::SimError;
};

// Max-min fair split of a shared pool over capped demands. A cap of 0
// means unlimited. Rates come back in demand order and sum to
// min(pool, sum of caps).
struct RateState {
  double pool = 0;
  std::vector<double> caps;
};
std::vector<double> allocate_rates(const RateState& state);

SimReport simulate(const SwarmScenario& scenario);

// Amplification with a loud failure instead of a division by zero.
double report_amplification(const SimReport& report);

SwarmScenario scenario_from_json(const std::string& json_text);
std::string report_to_json(const SimReport& report);
std::string report_to_csv(const SimReport& report);

}  // namespace swarmshare::sim
