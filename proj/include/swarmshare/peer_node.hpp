#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "swarmshare/metainfo.hpp"
#include "swarmshare/piece_store.hpp"
#include "swarmshare/tracker.hpp"
#include "swarmshare/wire.hpp"

namespace swarmshare::peer {

enum class Role { Seed, Fetch };

struct Limits {
  std::uint64_t up_rate = 0;    // payload bytes/s, 0 = unlimited
  std::uint64_t down_rate = 0;  // payload bytes/s, 0 = unlimited
  std::uint16_t listen_port = 0;
  std::size_t max_sessions = 32;
  double announce_interval_s = 2.0;
  // Fetchers fall back to the HTTP mirrors after this long with no
  // connected peer offering a needed piece.
  double webseed_fallback_s = 5.0;
  // With no mirrors configured, the same condition fails the run.
  double no_source_timeout_s = 30.0;
  // A session that leaves requests unanswered this long is dropped.
  double request_timeout_s = 10.0;
  // Hard wall-clock cap on run(); 0 means none.
  double run_deadline_s = 0;
  std::string peer_id_prefix = "SWRM";
};

struct SessionReport {
  std::uint64_t bytes_up = 0;       // peer-wire payload only
  std::uint64_t bytes_down = 0;     // peer-wire payload only
  std::uint64_t bytes_webseed = 0;  // payload fetched over HTTP
  double duration_s = 0;
  std::uint32_t pieces_from_peers = 0;
  std::uint32_t pieces_from_webseed = 0;
  std::uint32_t corrupt_pieces = 0;
  bool completed = false;
};

class PeerNodeError : public std::runtime_error {
 public:
  explicit PeerNodeError(const std::string& what) : std::runtime_error(what) {}
};

// No connected peer and no mirror can supply what is still missing.
class NoSources : public PeerNodeError {
 public:
  using PeerNodeError::PeerNodeError;
};

class Timeout : public PeerNodeError {
 public:
  using PeerNodeError::PeerNodeError;
};

// One swarm participant: listener, tracker announcer, peer sessions,
// and the HTTP mirror fallback, over a shared piece store.
class PeerNode {
 public:
  PeerNode(Role role, metainfo::Metainfo meta, Limits limits = {});
  ~PeerNode();

  PeerNode(const PeerNode&) = delete;
  PeerNode& operator=(const PeerNode&) = delete;

  // Seed role only; call before start(). Content must verify.
  void load_content(std::string content);

  // Binds the listener, announces, and spawns the work threads.
  void start();
  // Announces departure and joins every thread. Idempotent.
  void stop();

  // Fetch role: start(), block until the payload verifies or the run
  // fails, then stop(). Throws NoSources or Timeout on failure.
  SessionReport run();

  SessionReport report() const;
  const PieceStore& store() const { return *store_; }
  std::uint16_t listen_port() const { return listen_port_; }
  const PeerId& peer_id() const { return peer_id_; }
  bool complete() const { return store_->complete(); }

 private:
  struct Session;

  void listener_loop();
  void announcer_loop();
  void webseed_loop();
  void session_loop(std::shared_ptr<Session> sess);
  bool register_session(const std::shared_ptr<Session>& sess);
  void unregister_session(const Session& sess);
  void dial(std::uint32_t ip, std::uint16_t port);
  bool handle_message(Session& sess, const PeerMessage& msg);
  void pump_requests(Session& sess);
  void broadcast_have(std::uint32_t index, const Session* skip);
  void on_piece_verified(std::uint32_t index, bool from_peers);
  bool send_frame(Session& sess, const PeerMessage& msg);
  void announce(tracker::AnnounceEvent event);
  void check_clocks(double now);
  void fail(std::exception_ptr err);

  Role role_;
  metainfo::Metainfo meta_;
  Limits limits_;
  PeerId peer_id_{};
  Digest20 info_hash_{};
  std::unique_ptr<PieceStore> store_;
  util::TokenBucket up_bucket_;
  util::TokenBucket down_bucket_;

  std::atomic<bool> stopping_{false};
  std::atomic<bool> started_{false};

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::vector<std::shared_ptr<Session>> sessions_;
  std::vector<std::thread> finished_;  // joined on stop
  std::set<std::uint32_t> claims_;
  std::vector<std::uint32_t> availability_;
  std::mt19937_64 rng_;
  std::uint64_t bytes_up_ = 0;
  std::uint64_t bytes_down_ = 0;
  std::uint64_t bytes_webseed_ = 0;
  std::uint32_t pieces_from_peers_ = 0;
  std::uint32_t pieces_from_webseed_ = 0;
  bool done_ = false;
  bool announced_complete_ = false;
  bool webseed_running_ = false;
  std::exception_ptr failure_;
  double started_at_ = 0;
  double last_peer_avail_ = 0;
  double last_progress_ = 0;
  double stopped_at_ = 0;

  int listen_fd_ = -1;
  std::uint16_t listen_port_ = 0;
  std::thread listener_;
  std::thread announcer_;
  std::thread webseed_;
};

// Convenience for tests and tools: run several fetchers against a live
// swarm and collect their reports in order.
std::vector<SessionReport> run_fetchers(
    std::vector<std::unique_ptr<PeerNode>>& nodes);

}  // namespace swarmshare::peer
