#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "swarmshare/util.hpp"

namespace swarmshare::tracker {

using util::Digest20;
using PeerId = std::array<std::uint8_t, 20>;

enum class AnnounceEvent { None, Started, Stopped, Completed };

struct AnnounceRequest {
  Digest20 info_hash{};
  PeerId peer_id{};
  std::uint32_t ip = 0;  // IPv4, host byte order
  std::uint16_t port = 0;
  std::uint64_t uploaded = 0;
  std::uint64_t downloaded = 0;
  std::uint64_t left = 0;
  AnnounceEvent event = AnnounceEvent::None;
  bool compact = true;
};

// Bytes pushed by the designated origin seeder vs. bytes pulled by
// everyone; the numerator and denominator of the amplification ratio.
struct TransferLedger {
  std::uint64_t seeder_uploaded = 0;
  std::uint64_t total_downloaded = 0;
};

struct PeerEndpoint {
  std::uint32_t ip = 0;
  std::uint16_t port = 0;
  bool operator==(const PeerEndpoint&) const = default;
};

struct AnnounceResponse {
  std::optional<std::string> failure;
  std::uint32_t interval = 1800;
  std::uint32_t complete = 0;
  std::uint32_t incomplete = 0;
  std::vector<PeerEndpoint> peers;
};

struct SwarmReport {
  std::uint32_t complete = 0;
  std::uint32_t incomplete = 0;
  // "Download count" is ambiguous in the wild; both are exposed.
  std::uint64_t completed_events = 0;
  std::uint64_t unique_peers = 0;
  TransferLedger ledger;
};

struct JournalRecord {
  double timestamp = 0;
  Digest20 info_hash{};
  PeerId peer_id{};
  std::uint64_t up_delta = 0;
  std::uint64_t down_delta = 0;
};

std::string format_journal_line(const JournalRecord& rec);
std::optional<JournalRecord> parse_journal_line(std::string_view line);

struct RegistryConfig {
  std::uint32_t interval_s = 1800;
  std::uint32_t ttl_s = 0;  // 0 -> 2 * interval
  std::size_t max_peers = 50;
  // Peers whose id starts with this prefix count as the origin seeder.
  std::string origin_prefix = "ORIG";
  // Closed mode only serves swarms added via register_swarm().
  bool closed = false;

  std::uint32_t ttl() const { return ttl_s ? ttl_s : 2 * interval_s; }
};

class TrackerError : public std::runtime_error {
 public:
  explicit TrackerError(const std::string& what) : std::runtime_error(what) {}
};

class UnknownSwarm : public TrackerError {
 public:
  using TrackerError::TrackerError;
};

class MalformedAnnounce : public TrackerError {
 public:
  using TrackerError::TrackerError;
};

class NonV4Address : public TrackerError {
 public:
  using TrackerError::TrackerError;
};

// Per-swarm peer registry and transfer ledger. Thread-safe; announces
// are serialized per registry.
class SwarmRegistry {
 public:
  explicit SwarmRegistry(RegistryConfig cfg = {});

  void register_swarm(const Digest20& info_hash);
  AnnounceResponse handle_announce(const AnnounceRequest& req, double now_s);
  // Drops peers not seen within the ttl; ledgers are never touched.
  std::size_t expire_peers(double now_s);
  SwarmReport swarm_report(const Digest20& info_hash) const;
  std::vector<Digest20> swarms() const;
  const RegistryConfig& config() const { return cfg_; }

  // Called under the registry lock for every announce that was applied.
  void set_journal_sink(std::function<void(const JournalRecord&)> sink);
  // Re-applies a journaled delta (startup replay).
  void apply_journal(const JournalRecord& rec);

 private:
  struct PeerState {
    std::uint32_t ip = 0;
    std::uint16_t port = 0;
    double last_seen = 0;
    std::uint64_t left = 0;
    std::uint64_t last_uploaded = 0;
    std::uint64_t last_downloaded = 0;
  };
  struct Swarm {
    std::map<PeerId, PeerState> peers;
    TransferLedger ledger;
    std::uint64_t completed_events = 0;
    std::set<PeerId> ever_seen;
  };

  bool is_origin(const PeerId& id) const;

  RegistryConfig cfg_;
  std::map<Digest20, Swarm> swarms_;
  std::set<Digest20> allowed_;
  std::function<void(const JournalRecord&)> journal_;
  mutable std::mutex mu_;
};

// 6 bytes per peer: 4-byte big-endian IPv4, 2-byte big-endian port.
std::string encode_compact_peers(const std::vector<PeerEndpoint>& peers);
// String-address variant; rejects anything that is not dotted-quad v4.
std::string encode_compact_peers(
    const std::vector<std::pair<std::string, std::uint16_t>>& peers);
std::vector<PeerEndpoint> decode_compact_peers(std::string_view blob);

std::string encode_announce_response(const AnnounceResponse& resp);
AnnounceResponse parse_announce_response(std::string_view body);

// HTTP front-end: GET /announce and GET /scrape over a SwarmRegistry,
// with an optional append-only ledger journal.
class TrackerService {
 public:
  struct Options {
    std::string bind = "127.0.0.1";
    int port = 0;  // 0 -> ephemeral
    RegistryConfig registry;
    std::string journal_path;  // empty -> no journal
  };

  explicit TrackerService(Options opts);
  ~TrackerService();

  TrackerService(const TrackerService&) = delete;
  TrackerService& operator=(const TrackerService&) = delete;

  // Binds, replays any existing journal, and starts serving.
  // Returns the bound port.
  int start();
  void stop();
  bool running() const;

  SwarmRegistry& registry() { return *registry_; }
  int port() const { return port_; }
  std::string announce_url() const;

 private:
  struct Impl;
  Options opts_;
  std::unique_ptr<SwarmRegistry> registry_;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
};

// Client-side announce over HTTP. Throws TrackerError on transport
// failure; a tracker "failure reason" comes back in the response.
AnnounceResponse http_announce(const std::string& announce_url,
                               const AnnounceRequest& req,
                               double timeout_s = 5.0);

}  // namespace swarmshare::tracker
