#include "swarmshare/peer_node.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <optional>

#include "swarmshare/selector.hpp"
#include "swarmshare/webseed.hpp"

namespace swarmshare::peer {

namespace {

constexpr double kHandshakeTimeoutS = 10.0;
constexpr double kFrameTimeoutS = 10.0;
constexpr double kWriteTimeoutS = 30.0;
constexpr double kConnectTimeoutS = 5.0;
constexpr double kKeepAliveIntervalS = 30.0;
constexpr double kMirrorTimeoutS = 5.0;
constexpr int kPollSliceMs = 100;

void set_nonblock(int fd) {
  int flags = ::fcntl(fd, F_GETFL, 0);
  if (flags >= 0) ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}

int tcp_listen(std::uint16_t port, std::uint16_t* bound) {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) return -1;
  int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_ANY);
  addr.sin_port = htons(port);
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 ||
      ::listen(fd, 64) < 0) {
    ::close(fd);
    return -1;
  }
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  *bound = ntohs(addr.sin_port);
  set_nonblock(fd);
  return fd;
}

int tcp_connect(std::uint32_t ip, std::uint16_t port, double timeout_s,
                const std::atomic<bool>& stop) {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) return -1;
  set_nonblock(fd);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(ip);
  addr.sin_port = htons(port);
  int rc = ::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
  if (rc < 0 && errno != EINPROGRESS) {
    ::close(fd);
    return -1;
  }
  if (rc < 0) {
    double deadline = util::monotonic_seconds() + timeout_s;
    for (;;) {
      if (stop.load() || util::monotonic_seconds() > deadline) {
        ::close(fd);
        return -1;
      }
      pollfd pf{fd, POLLOUT, 0};
      if (::poll(&pf, 1, kPollSliceMs) > 0) {
        int err = 0;
        socklen_t len = sizeof err;
        ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
        if (err) {
          ::close(fd);
          return -1;
        }
        break;
      }
    }
  }
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  return fd;
}

bool read_exact(int fd, void* buf, std::size_t n, double timeout_s,
                const std::atomic<bool>& stop, const std::atomic<bool>& dead) {
  auto* p = static_cast<char*>(buf);
  std::size_t got = 0;
  double deadline = util::monotonic_seconds() + timeout_s;
  while (got < n) {
    if (stop.load() || dead.load()) return false;
    ssize_t r = ::recv(fd, p + got, n - got, 0);
    if (r > 0) {
      got += static_cast<std::size_t>(r);
      continue;
    }
    if (r == 0) return false;
    if (errno != EAGAIN && errno != EWOULDBLOCK && errno != EINTR) return false;
    if (util::monotonic_seconds() > deadline) return false;
    pollfd pf{fd, POLLIN, 0};
    ::poll(&pf, 1, kPollSliceMs);
  }
  return true;
}

bool write_all(int fd, const void* buf, std::size_t n,
               const std::atomic<bool>& stop, const std::atomic<bool>& dead) {
  const auto* p = static_cast<const char*>(buf);
  std::size_t sent = 0;
  double deadline = util::monotonic_seconds() + kWriteTimeoutS;
  while (sent < n) {
    if (stop.load() || dead.load()) return false;
    ssize_t r = ::send(fd, p + sent, n - sent, MSG_NOSIGNAL);
    if (r > 0) {
      sent += static_cast<std::size_t>(r);
      continue;
    }
    if (r < 0 && errno != EAGAIN && errno != EWOULDBLOCK && errno != EINTR)
      return false;
    if (util::monotonic_seconds() > deadline) return false;
    pollfd pf{fd, POLLOUT, 0};
    ::poll(&pf, 1, kPollSliceMs);
  }
  return true;
}

}  // namespace

struct PeerNode::Session {
  int fd = -1;
  bool inbound = false;
  std::uint32_t remote_ip = 0;
  std::uint16_t remote_port = 0;  // dialed listen port; 0 for inbound
  PeerId remote_id{};
  bool registered = false;
  Bitfield remote_have;
  bool am_choked = true;
  bool remote_interested = false;
  bool sent_interested = false;

  struct Pending {
    std::uint32_t index = 0;
    std::uint32_t begin = 0;
    std::uint32_t length = 0;
    double sent_at = 0;
  };
  std::vector<Pending> pending;
  std::set<std::uint32_t> my_claims;
  std::optional<std::uint32_t> active;
  std::uint32_t next_block = 0;
  double last_tx = 0;

  std::mutex write_mu;
  std::atomic<bool> dead{false};
  std::thread thread;

  ~Session() {
    if (fd >= 0) ::close(fd);
  }

  void kill() {
    dead = true;
    if (fd >= 0) ::shutdown(fd, SHUT_RDWR);
  }
};

PeerNode::PeerNode(Role role, metainfo::Metainfo meta, Limits limits)
    : role_(role),
      meta_(std::move(meta)),
      limits_(std::move(limits)),
      store_(std::make_unique<PieceStore>(meta_)),
      up_bucket_(limits_.up_rate),
      down_bucket_(limits_.down_rate) {
  info_hash_ = metainfo::info_hash(meta_);

  std::random_device rd;
  std::seed_seq seq{rd(), rd(), rd(),
                    static_cast<unsigned>(
                        std::chrono::steady_clock::now().time_since_epoch().count()),
                    static_cast<unsigned>(reinterpret_cast<std::uintptr_t>(this))};
  std::mt19937_64 gen(seq);
  std::size_t n = std::min<std::size_t>(limits_.peer_id_prefix.size(), 20);
  for (std::size_t i = 0; i < n; ++i)
    peer_id_[i] = static_cast<std::uint8_t>(limits_.peer_id_prefix[i]);
  for (std::size_t i = n; i < 20; ++i)
    peer_id_[i] = static_cast<std::uint8_t>(gen() & 0xFF);
  rng_.seed(gen());

  availability_.assign(meta_.piece_count(), 0);
}

PeerNode::~PeerNode() { stop(); }

void PeerNode::load_content(std::string content) {
  if (started_.load()) throw PeerNodeError("cannot load content while running");
  store_ = std::make_unique<PieceStore>(meta_, std::move(content));
}

void PeerNode::start() {
  if (started_.exchange(true)) return;
  if (role_ == Role::Seed && !store_->complete()) {
    started_ = false;
    throw PeerNodeError("seed started without verified content");
  }

  listen_fd_ = tcp_listen(limits_.listen_port, &listen_port_);
  if (listen_fd_ < 0) {
    started_ = false;
    throw PeerNodeError("cannot bind peer listener");
  }

  started_at_ = util::monotonic_seconds();
  last_peer_avail_ = started_at_;
  last_progress_ = started_at_;

  listener_ = std::thread([this] { listener_loop(); });
  announcer_ = std::thread([this] { announcer_loop(); });
}

void PeerNode::stop() {
  if (!started_.load() || stopping_.exchange(true)) return;
  cv_.notify_all();
  up_bucket_.shutdown();
  down_bucket_.shutdown();
  if (listen_fd_ >= 0) ::shutdown(listen_fd_, SHUT_RDWR);

  {
    std::lock_guard<std::mutex> lock(mu_);
    for (auto& sess : sessions_) sess->kill();
  }

  if (listener_.joinable()) listener_.join();
  if (announcer_.joinable()) announcer_.join();
  if (webseed_.joinable()) webseed_.join();

  std::vector<std::shared_ptr<Session>> leftovers;
  {
    std::lock_guard<std::mutex> lock(mu_);
    leftovers.swap(sessions_);
  }
  for (auto& sess : leftovers)
    if (sess->thread.joinable()) sess->thread.join();
  leftovers.clear();

  if (listen_fd_ >= 0) {
    ::close(listen_fd_);
    listen_fd_ = -1;
  }

  {
    std::lock_guard<std::mutex> lock(mu_);
    stopped_at_ = util::monotonic_seconds();
  }
  try {
    announce(tracker::AnnounceEvent::Stopped);
  } catch (const std::exception&) {
    // The tracker may already be gone; departure is best effort.
  }
}

SessionReport PeerNode::run() {
  start();
  std::exception_ptr err;
  {
    std::unique_lock<std::mutex> lock(mu_);
    cv_.wait(lock, [&] { return done_ || failure_ || stopping_.load(); });
    err = done_ ? nullptr : failure_;
  }
  bool announce_done = false;
  {
    std::lock_guard<std::mutex> lock(mu_);
    if (done_ && !announced_complete_) {
      announced_complete_ = true;
      announce_done = true;
    }
  }
  if (announce_done) {
    try {
      announce(tracker::AnnounceEvent::Completed);
    } catch (const std::exception&) {
    }
  }
  stop();
  if (err) std::rethrow_exception(err);
  return report();
}

SessionReport PeerNode::report() const {
  std::lock_guard<std::mutex> lock(mu_);
  SessionReport rep;
  rep.bytes_up = bytes_up_;
  rep.bytes_down = bytes_down_;
  rep.bytes_webseed = bytes_webseed_;
  rep.pieces_from_peers = pieces_from_peers_;
  rep.pieces_from_webseed = pieces_from_webseed_;
  rep.corrupt_pieces = static_cast<std::uint32_t>(store_->corrupt_count());
  rep.completed = store_->complete();
  double end = stopped_at_ > 0 ? stopped_at_ : util::monotonic_seconds();
  rep.duration_s = started_at_ > 0 ? end - started_at_ : 0;
  return rep;
}

void PeerNode::fail(std::exception_ptr err) {
  std::lock_guard<std::mutex> lock(mu_);
  if (!failure_ && !done_) failure_ = std::move(err);
  cv_.notify_all();
}

void PeerNode::announce(tracker::AnnounceEvent event) {
  tracker::AnnounceRequest req;
  req.info_hash = info_hash_;
  req.peer_id = peer_id_;
  req.port = listen_port_;
  {
    std::lock_guard<std::mutex> lock(mu_);
    req.uploaded = bytes_up_;
    req.downloaded = bytes_down_;
  }
  std::uint64_t have = store_->verified_bytes();
  req.left = meta_.total_length > have ? meta_.total_length - have : 0;
  req.event = event;

  tracker::AnnounceResponse resp =
      tracker::http_announce(meta_.announce, req, 5.0);
  if (resp.failure) return;
  if (role_ != Role::Fetch || event == tracker::AnnounceEvent::Stopped) return;

  for (const tracker::PeerEndpoint& ep : resp.peers) {
    if (stopping_.load()) break;
    dial(ep.ip, ep.port);
  }
}

void PeerNode::dial(std::uint32_t ip, std::uint16_t port) {
  std::lock_guard<std::mutex> lock(mu_);
  if (done_ || sessions_.size() >= limits_.max_sessions) return;
  for (const auto& sess : sessions_)
    if (!sess->dead.load() && !sess->inbound && sess->remote_ip == ip &&
        sess->remote_port == port)
      return;
  auto sess = std::make_shared<Session>();
  sess->inbound = false;
  sess->remote_ip = ip;
  sess->remote_port = port;
  sessions_.push_back(sess);
  sess->thread = std::thread([this, sess] { session_loop(sess); });
}

void PeerNode::listener_loop() {
  while (!stopping_.load()) {
    pollfd pf{listen_fd_, POLLIN, 0};
    int rc = ::poll(&pf, 1, 2 * kPollSliceMs);
    if (rc <= 0) continue;
    sockaddr_in addr{};
    socklen_t len = sizeof addr;
    int fd = ::accept(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    if (fd < 0) continue;
    set_nonblock(fd);
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);

    std::lock_guard<std::mutex> lock(mu_);
    if (stopping_.load() || sessions_.size() >= limits_.max_sessions) {
      ::close(fd);
      continue;
    }
    auto sess = std::make_shared<Session>();
    sess->fd = fd;
    sess->inbound = true;
    sess->remote_ip = ntohl(addr.sin_addr.s_addr);
    sessions_.push_back(sess);
    sess->thread = std::thread([this, sess] { session_loop(sess); });
  }
}

void PeerNode::announcer_loop() {
  double next_announce = 0;
  bool sent_started = false;
  while (!stopping_.load()) {
    double now = util::monotonic_seconds();
    bool want_complete = false;
    {
      std::lock_guard<std::mutex> lock(mu_);
      if (done_ && !announced_complete_) {
        announced_complete_ = true;
        want_complete = true;
      }
    }
    if (want_complete || now >= next_announce) {
      auto event = want_complete ? tracker::AnnounceEvent::Completed
                   : sent_started ? tracker::AnnounceEvent::None
                                  : tracker::AnnounceEvent::Started;
      try {
        announce(event);
        sent_started = true;
      } catch (const std::exception&) {
        // Unreachable tracker: keep retrying; mirrors may still serve.
      }
      if (!want_complete) next_announce = now + limits_.announce_interval_s;
    }

    check_clocks(now);

    // Reap finished sessions so long-lived nodes do not hoard threads.
    std::vector<std::shared_ptr<Session>> dead;
    {
      std::lock_guard<std::mutex> lock(mu_);
      for (auto it = sessions_.begin(); it != sessions_.end();) {
        if ((*it)->dead.load() && (*it)->thread.joinable()) {
          dead.push_back(*it);
          it = sessions_.erase(it);
        } else {
          ++it;
        }
      }
    }
    for (auto& sess : dead) sess->thread.join();
    dead.clear();

    std::unique_lock<std::mutex> lock(mu_);
    cv_.wait_for(lock, std::chrono::milliseconds(kPollSliceMs),
                 [&] { return stopping_.load(); });
  }
}

void PeerNode::check_clocks(double now) {
  if (role_ != Role::Fetch) return;

  bool complete;
  bool peer_has_needed = false;
  {
    Bitfield have = store_->have();
    std::lock_guard<std::mutex> lock(mu_);
    complete = have.count() == meta_.piece_count();
    if (!complete) {
      for (std::uint32_t i = 0; i < availability_.size(); ++i) {
        if (!have.test(i) && availability_[i] > 0) {
          peer_has_needed = true;
          break;
        }
      }
      if (peer_has_needed) last_peer_avail_ = now;
    }
    if (complete && !done_) {
      done_ = true;
      cv_.notify_all();
    }
  }
  if (complete) return;

  double starved_for = now - last_peer_avail_;
  if (!meta_.webseeds.empty()) {
    std::lock_guard<std::mutex> lock(mu_);
    if (!webseed_running_ && starved_for >= limits_.webseed_fallback_s) {
      webseed_running_ = true;
      webseed_ = std::thread([this] { webseed_loop(); });
    }
  } else if (starved_for >= limits_.no_source_timeout_s) {
    fail(std::make_exception_ptr(
        NoSources("no peer offered a needed piece for " +
                  std::to_string(limits_.no_source_timeout_s) + " s")));
  }
  if (limits_.run_deadline_s > 0 && now - started_at_ >= limits_.run_deadline_s)
    fail(std::make_exception_ptr(Timeout("transfer exceeded the deadline")));
}

void PeerNode::webseed_loop() {
  std::size_t url_index = 0;
  while (!stopping_.load() && !store_->complete()) {
    std::optional<std::uint32_t> piece;
    {
      Bitfield have = store_->have();
      std::lock_guard<std::mutex> lock(mu_);
      for (std::uint32_t i = 0; i < meta_.piece_count(); ++i) {
        if (!have.test(i) && !claims_.count(i)) {
          claims_.insert(i);
          piece = i;
          break;
        }
      }
    }
    if (!piece) {
      // Everything left is claimed by peer sessions; wait for them.
      std::unique_lock<std::mutex> lock(mu_);
      cv_.wait_for(lock, std::chrono::milliseconds(kPollSliceMs));
      continue;
    }

    const std::string& url = meta_.webseeds[url_index % meta_.webseeds.size()];
    try {
      std::string data = webseed::fetch_piece(meta_, url, *piece, kMirrorTimeoutS);
      if (!down_bucket_.acquire(data.size())) break;
      store_->store_piece(*piece, data);
      double now = util::monotonic_seconds();
      {
        std::lock_guard<std::mutex> lock(mu_);
        claims_.erase(*piece);
        bytes_webseed_ += data.size();
        ++pieces_from_webseed_;
        last_progress_ = now;
        if (store_->complete() && !done_) {
          done_ = true;
          cv_.notify_all();
        }
      }
      broadcast_have(*piece, nullptr);
    } catch (const webseed::WebSeedError&) {
      bool starved;
      {
        std::lock_guard<std::mutex> lock(mu_);
        claims_.erase(*piece);
        starved = util::monotonic_seconds() - last_progress_ >
                  limits_.no_source_timeout_s;
        if (starved) {
          double now = util::monotonic_seconds();
          starved = now - last_peer_avail_ > limits_.no_source_timeout_s;
        }
      }
      ++url_index;
      if (starved) {
        fail(std::make_exception_ptr(
            NoSources("mirrors unreachable and no peer has a needed piece")));
        break;
      }
      std::unique_lock<std::mutex> lock(mu_);
      cv_.wait_for(lock, std::chrono::milliseconds(2 * kPollSliceMs));
    }
  }
}

bool PeerNode::register_session(const std::shared_ptr<Session>& sess) {
  std::lock_guard<std::mutex> lock(mu_);
  if (stopping_.load()) return false;

  // One session per remote. When both ends dialed each other, keep the
  // one initiated by the smaller peer id; both sides agree on that.
  for (auto& other : sessions_) {
    if (other.get() == sess.get() || other->dead.load() || !other->registered)
      continue;
    if (other->remote_id != sess->remote_id) continue;
    const PeerId& preferred = std::min(peer_id_, sess->remote_id);
    const PeerId& new_initiator = sess->inbound ? sess->remote_id : peer_id_;
    if (new_initiator != preferred) return false;
    other->kill();
  }

  sess->registered = true;
  sess->remote_have = Bitfield(meta_.piece_count());
  return true;
}

void PeerNode::unregister_session(const Session& sess) {
  std::lock_guard<std::mutex> lock(mu_);
  if (sess.registered) {
    for (std::uint32_t i = 0; i < availability_.size(); ++i)
      if (sess.remote_have.test(i) && availability_[i] > 0) --availability_[i];
  }
  for (std::uint32_t piece : sess.my_claims) claims_.erase(piece);
}

bool PeerNode::send_frame(Session& sess, const PeerMessage& msg) {
  std::string bytes = frame_message(msg);
  if (msg.kind == PeerMessage::Kind::Piece) {
    if (!up_bucket_.acquire(msg.payload.size())) return false;
  }
  std::lock_guard<std::mutex> lock(sess.write_mu);
  if (sess.dead.load()) return false;
  if (!write_all(sess.fd, bytes.data(), bytes.size(), stopping_, sess.dead)) {
    sess.kill();
    return false;
  }
  sess.last_tx = util::monotonic_seconds();
  if (msg.kind == PeerMessage::Kind::Piece) {
    std::lock_guard<std::mutex> nlock(mu_);
    bytes_up_ += msg.payload.size();
  }
  return true;
}

void PeerNode::broadcast_have(std::uint32_t index, const Session* skip) {
  std::vector<std::shared_ptr<Session>> targets;
  {
    std::lock_guard<std::mutex> lock(mu_);
    for (auto& sess : sessions_)
      if (sess->registered && !sess->dead.load() && sess.get() != skip)
        targets.push_back(sess);
  }
  PeerMessage have = PeerMessage::have(index);
  for (auto& sess : targets) send_frame(*sess, have);
}

void PeerNode::on_piece_verified(std::uint32_t index, bool from_peers) {
  {
    std::lock_guard<std::mutex> lock(mu_);
    claims_.erase(index);
    if (from_peers) ++pieces_from_peers_;
    last_progress_ = util::monotonic_seconds();
    if (store_->complete() && !done_) {
      done_ = true;
      cv_.notify_all();
    }
  }
  broadcast_have(index, nullptr);
}

void PeerNode::pump_requests(Session& sess) {
  if (role_ != Role::Fetch || sess.am_choked || sess.dead.load()) return;
  double now = util::monotonic_seconds();

  if (!sess.pending.empty() &&
      now - sess.pending.front().sent_at > limits_.request_timeout_s) {
    // The remote sat on a request too long; drop the session and let
    // another source pick the pieces up.
    sess.kill();
    return;
  }

  while (sess.pending.size() < kPipelineDepth) {
    if (!sess.active) {
      std::lock_guard<std::mutex> lock(mu_);
      Bitfield mask = store_->have();
      for (std::uint32_t claimed : claims_) mask.set(claimed);
      auto next =
          select_next_piece_from(mask, sess.remote_have, availability_, &rng_);
      if (!next) break;
      claims_.insert(*next);
      sess.my_claims.insert(*next);
      sess.active = *next;
      sess.next_block = 0;
    }
    std::uint32_t size = meta_.piece_size(*sess.active);
    if (sess.next_block >= size) {
      sess.active.reset();
      continue;
    }
    std::uint32_t len = std::min(kBlockLength, size - sess.next_block);
    Session::Pending pending{*sess.active, sess.next_block, len, now};
    if (!send_frame(sess, PeerMessage::request(pending.index, pending.begin,
                                               pending.length)))
      return;
    sess.pending.push_back(pending);
    sess.next_block += len;
  }
}

bool PeerNode::handle_message(Session& sess, const PeerMessage& msg) {
  switch (msg.kind) {
    case PeerMessage::Kind::KeepAlive:
      return true;

    case PeerMessage::Kind::Choke: {
      sess.am_choked = true;
      sess.pending.clear();
      sess.active.reset();
      std::lock_guard<std::mutex> lock(mu_);
      for (std::uint32_t piece : sess.my_claims) claims_.erase(piece);
      sess.my_claims.clear();
      return true;
    }

    case PeerMessage::Kind::Unchoke:
      sess.am_choked = false;
      return true;

    case PeerMessage::Kind::Interested:
      sess.remote_interested = true;
      return true;

    case PeerMessage::Kind::NotInterested:
      sess.remote_interested = false;
      return true;

    case PeerMessage::Kind::Have: {
      if (msg.index >= meta_.piece_count()) return false;
      bool fresh = false;
      {
        std::lock_guard<std::mutex> lock(mu_);
        if (!sess.remote_have.test(msg.index)) {
          sess.remote_have.set(msg.index);
          ++availability_[msg.index];
          fresh = true;
        }
        if (fresh && !store_->has_piece(msg.index))
          last_peer_avail_ = util::monotonic_seconds();
      }
      if (role_ == Role::Fetch && !sess.sent_interested &&
          !store_->has_piece(msg.index)) {
        sess.sent_interested = true;
        send_frame(sess, PeerMessage::interested());
      }
      return true;
    }

    case PeerMessage::Kind::Bitfield: {
      Bitfield incoming = Bitfield::from_bytes(msg.payload, meta_.piece_count());
      bool wants = false;
      {
        Bitfield have = store_->have();
        std::lock_guard<std::mutex> lock(mu_);
        for (std::uint32_t i = 0; i < availability_.size(); ++i) {
          if (sess.remote_have.test(i) && availability_[i] > 0)
            --availability_[i];
          if (incoming.test(i)) {
            ++availability_[i];
            if (!have.test(i)) wants = true;
          }
        }
        sess.remote_have = std::move(incoming);
        if (wants) last_peer_avail_ = util::monotonic_seconds();
      }
      if (role_ == Role::Fetch && wants && !sess.sent_interested) {
        sess.sent_interested = true;
        send_frame(sess, PeerMessage::interested());
      }
      return true;
    }

    case PeerMessage::Kind::Request: {
      if (msg.length == 0 || msg.length > kBlockLength) return false;
      if (msg.index >= meta_.piece_count() || !store_->has_piece(msg.index))
        return false;
      std::string block;
      try {
        block = store_->read_block(msg.index, msg.begin, msg.length);
      } catch (const StoreError&) {
        return false;
      }
      return send_frame(sess,
                        PeerMessage::piece(msg.index, msg.begin, std::move(block)));
    }

    case PeerMessage::Kind::Piece: {
      if (!down_bucket_.acquire(msg.payload.size())) return false;
      {
        std::lock_guard<std::mutex> lock(mu_);
        bytes_down_ += msg.payload.size();
      }
      std::erase_if(sess.pending, [&](const Session::Pending& p) {
        return p.index == msg.index && p.begin == msg.begin &&
               p.length == msg.payload.size();
      });
      if (msg.index >= meta_.piece_count() || store_->has_piece(msg.index))
        return true;  // late or duplicate data; already counted
      BlockResult result;
      try {
        result = store_->on_block(msg.index, msg.begin, msg.payload);
      } catch (const StoreError&) {
        return false;
      }
      if (result == BlockResult::PieceVerified) {
        sess.my_claims.erase(msg.index);
        if (sess.active && *sess.active == msg.index) sess.active.reset();
        on_piece_verified(msg.index, true);
      } else if (result == BlockResult::PieceCorrupt) {
        sess.my_claims.erase(msg.index);
        if (sess.active && *sess.active == msg.index) sess.active.reset();
        std::lock_guard<std::mutex> lock(mu_);
        claims_.erase(msg.index);
      }
      return true;
    }

    case PeerMessage::Kind::Cancel:
      // Blocks are served inline, so there is no queue to cancel from.
      return true;
  }
  return false;
}

void PeerNode::session_loop(std::shared_ptr<Session> sess) {
  bool handshaken = false;

  if (!sess->inbound) {
    sess->fd = tcp_connect(sess->remote_ip, sess->remote_port,
                           kConnectTimeoutS, stopping_);
    if (sess->fd < 0) {
      sess->dead = true;
      return;
    }
  }

  Handshake ours{info_hash_, peer_id_};
  std::string hs_bytes = encode_handshake(ours);
  char buf[kHandshakeLength];

  auto do_handshake = [&]() -> bool {
    if (!sess->inbound) {
      if (!write_all(sess->fd, hs_bytes.data(), hs_bytes.size(), stopping_,
                     sess->dead))
        return false;
      if (!read_exact(sess->fd, buf, sizeof buf, kHandshakeTimeoutS, stopping_,
                      sess->dead))
        return false;
    } else {
      if (!read_exact(sess->fd, buf, sizeof buf, kHandshakeTimeoutS, stopping_,
                      sess->dead))
        return false;
      if (!write_all(sess->fd, hs_bytes.data(), hs_bytes.size(), stopping_,
                     sess->dead))
        return false;
    }
    Handshake theirs;
    try {
      theirs = decode_handshake(std::string_view(buf, sizeof buf));
    } catch (const WireError&) {
      return false;
    }
    if (theirs.info_hash != info_hash_) return false;
    if (theirs.peer_id == peer_id_) return false;  // talked to ourselves
    sess->remote_id = theirs.peer_id;
    return true;
  };

  if (do_handshake() && register_session(sess)) {
    handshaken = true;
    Bitfield have = store_->have();
    bool ok = true;
    if (have.count() > 0) ok = send_frame(*sess, PeerMessage::bitfield(have));
    if (ok) ok = send_frame(*sess, PeerMessage::unchoke());

    std::uint8_t prefix[4];
    while (ok && !stopping_.load() && !sess->dead.load()) {
      pump_requests(*sess);
      if (sess->dead.load()) break;

      pollfd pf{sess->fd, POLLIN, 0};
      int rc = ::poll(&pf, 1, kPollSliceMs);
      if (rc < 0 && errno != EINTR) break;
      if (rc <= 0) {
        double now = util::monotonic_seconds();
        if (now - sess->last_tx > kKeepAliveIntervalS)
          send_frame(*sess, PeerMessage::keep_alive());
        continue;
      }
      if (pf.revents & (POLLERR | POLLNVAL)) break;

      if (!read_exact(sess->fd, prefix, 4, kFrameTimeoutS, stopping_,
                      sess->dead))
        break;
      std::uint32_t len;
      std::string body;
      try {
        len = parse_frame_length(prefix);
        if (len > 0) {
          body.resize(len);
          if (!read_exact(sess->fd, body.data(), len, kFrameTimeoutS,
                          stopping_, sess->dead))
            break;
        }
        if (!handle_message(*sess, parse_message(body))) break;
      } catch (const WireError&) {
        break;
      }
    }
  }

  if (handshaken) unregister_session(*sess);
  sess->kill();
}

std::vector<SessionReport> run_fetchers(
    std::vector<std::unique_ptr<PeerNode>>& nodes) {
  std::vector<SessionReport> reports(nodes.size());
  std::vector<std::exception_ptr> errors(nodes.size());
  std::vector<std::thread> threads;
  threads.reserve(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    threads.emplace_back([&, i] {
      try {
        reports[i] = nodes[i]->run();
      } catch (...) {
        errors[i] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& err : errors)
    if (err) std::rethrow_exception(err);
  return reports;
}

}  // namespace swarmshare::peer
