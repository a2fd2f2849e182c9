#include "swarmshare/tracker.hpp"

#include <httplib.h>

#include <atomic>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <thread>

#include "swarmshare/bencode.hpp"

namespace swarmshare::tracker {

std::string format_journal_line(const JournalRecord& rec) {
  char head[64];
  std::snprintf(head, sizeof(head), "%.3f", rec.timestamp);
  std::string line = head;
  line += ' ';
  line += util::to_hex(rec.info_hash);
  line += ' ';
  line += util::to_hex(rec.peer_id.data(), rec.peer_id.size());
  line += ' ';
  line += std::to_string(rec.up_delta);
  line += ' ';
  line += std::to_string(rec.down_delta);
  return line;
}

std::optional<JournalRecord> parse_journal_line(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (start <= line.size()) {
    std::size_t sp = line.find(' ', start);
    if (sp == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, sp - start));
    start = sp + 1;
  }
  if (fields.size() != 5) return std::nullopt;
  JournalRecord rec;
  try {
    rec.timestamp = std::stod(std::string(fields[0]));
  } catch (const std::exception&) {
    return std::nullopt;
  }
  auto hash = util::digest_from_hex(fields[1]);
  auto pid = util::digest_from_hex(fields[2]);
  if (!hash || !pid) return std::nullopt;
  rec.info_hash = *hash;
  std::copy(pid->begin(), pid->end(), rec.peer_id.begin());
  auto parse_u64 = [](std::string_view s, std::uint64_t& out) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && p == s.data() + s.size();
  };
  if (!parse_u64(fields[3], rec.up_delta)) return std::nullopt;
  if (!parse_u64(fields[4], rec.down_delta)) return std::nullopt;
  return rec;
}

SwarmRegistry::SwarmRegistry(RegistryConfig cfg) : cfg_(std::move(cfg)) {}

void SwarmRegistry::register_swarm(const Digest20& info_hash) {
  std::lock_guard<std::mutex> lock(mu_);
  allowed_.insert(info_hash);
  swarms_.try_emplace(info_hash);
}

bool SwarmRegistry::is_origin(const PeerId& id) const {
  const std::string& p = cfg_.origin_prefix;
  if (p.empty() || p.size() > id.size()) return false;
  return std::equal(p.begin(), p.end(), id.begin(),
                    [](char a, std::uint8_t b) {
                      return static_cast<std::uint8_t>(a) == b;
                    });
}

AnnounceResponse SwarmRegistry::handle_announce(const AnnounceRequest& req,
                                                double now_s) {
  if (req.port == 0) throw MalformedAnnounce("port must be 1-65535");
  std::lock_guard<std::mutex> lock(mu_);
  auto it = swarms_.find(req.info_hash);
  if (it == swarms_.end()) {
    if (cfg_.closed && !allowed_.count(req.info_hash))
      throw UnknownSwarm("info_hash not registered with this tracker");
    it = swarms_.try_emplace(req.info_hash).first;
  }
  Swarm& swarm = it->second;

  std::uint64_t up_delta = 0;
  std::uint64_t down_delta = 0;
  auto pit = swarm.peers.find(req.peer_id);

  if (req.event == AnnounceEvent::Stopped) {
    if (pit != swarm.peers.end()) {
      // Count whatever the peer reports on the way out.
      if (req.uploaded >= pit->second.last_uploaded)
        up_delta = req.uploaded - pit->second.last_uploaded;
      if (req.downloaded >= pit->second.last_downloaded)
        down_delta = req.downloaded - pit->second.last_downloaded;
      swarm.peers.erase(pit);
    }
  } else {
    if (pit == swarm.peers.end() || req.event == AnnounceEvent::Started) {
      // New peer, or restart: counters re-baseline at the reported values.
      PeerState st;
      st.last_uploaded = req.uploaded;
      st.last_downloaded = req.downloaded;
      if (pit == swarm.peers.end())
        pit = swarm.peers.emplace(req.peer_id, st).first;
      else
        pit->second = st;
    } else {
      PeerState& st = pit->second;
      // A counter that went backwards means the client restarted
      // without a started event; treat the report as a fresh baseline.
      up_delta = req.uploaded >= st.last_uploaded
                     ? req.uploaded - st.last_uploaded
                     : 0;
      down_delta = req.downloaded >= st.last_downloaded
                       ? req.downloaded - st.last_downloaded
                       : 0;
      st.last_uploaded = req.uploaded;
      st.last_downloaded = req.downloaded;
    }
    PeerState& st = pit->second;
    st.ip = req.ip;
    st.port = req.port;
    st.last_seen = now_s;
    st.left = req.event == AnnounceEvent::Completed ? 0 : req.left;
    if (req.event == AnnounceEvent::Completed) ++swarm.completed_events;
    swarm.ever_seen.insert(req.peer_id);
  }

  if (is_origin(req.peer_id)) swarm.ledger.seeder_uploaded += up_delta;
  swarm.ledger.total_downloaded += down_delta;

  if (journal_) {
    JournalRecord rec;
    rec.timestamp = now_s;
    rec.info_hash = req.info_hash;
    rec.peer_id = req.peer_id;
    rec.up_delta = up_delta;
    rec.down_delta = down_delta;
    journal_(rec);
  }

  AnnounceResponse resp;
  resp.interval = cfg_.interval_s;
  for (const auto& [id, st] : swarm.peers) {
    if (st.left == 0)
      ++resp.complete;
    else
      ++resp.incomplete;
    if (id != req.peer_id && resp.peers.size() < cfg_.max_peers)
      resp.peers.push_back({st.ip, st.port});
  }
  return resp;
}

std::size_t SwarmRegistry::expire_peers(double now_s) {
  std::lock_guard<std::mutex> lock(mu_);
  double ttl = cfg_.ttl();
  std::size_t removed = 0;
  for (auto& [hash, swarm] : swarms_) {
    for (auto it = swarm.peers.begin(); it != swarm.peers.end();) {
      if (it->second.last_seen < now_s - ttl) {
        it = swarm.peers.erase(it);
        ++removed;
      } else {
        ++it;
      }
    }
  }
  return removed;
}

SwarmReport SwarmRegistry::swarm_report(const Digest20& info_hash) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = swarms_.find(info_hash);
  if (it == swarms_.end()) throw UnknownSwarm("no such swarm");
  const Swarm& swarm = it->second;
  SwarmReport report;
  for (const auto& [id, st] : swarm.peers) {
    if (st.left == 0)
      ++report.complete;
    else
      ++report.incomplete;
  }
  report.completed_events = swarm.completed_events;
  report.unique_peers = swarm.ever_seen.size();
  report.ledger = swarm.ledger;
  return report;
}

std::vector<Digest20> SwarmRegistry::swarms() const {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<Digest20> out;
  out.reserve(swarms_.size());
  for (const auto& [hash, swarm] : swarms_) out.push_back(hash);
  return out;
}

void SwarmRegistry::set_journal_sink(
    std::function<void(const JournalRecord&)> sink) {
  std::lock_guard<std::mutex> lock(mu_);
  journal_ = std::move(sink);
}

void SwarmRegistry::apply_journal(const JournalRecord& rec) {
  std::lock_guard<std::mutex> lock(mu_);
  Swarm& swarm = swarms_[rec.info_hash];
  if (is_origin(rec.peer_id)) swarm.ledger.seeder_uploaded += rec.up_delta;
  swarm.ledger.total_downloaded += rec.down_delta;
}

std::string encode_compact_peers(const std::vector<PeerEndpoint>& peers) {
  std::string out;
  out.reserve(peers.size() * 6);
  for (const PeerEndpoint& p : peers) {
    out.push_back(static_cast<char>(p.ip >> 24 & 0xFF));
    out.push_back(static_cast<char>(p.ip >> 16 & 0xFF));
    out.push_back(static_cast<char>(p.ip >> 8 & 0xFF));
    out.push_back(static_cast<char>(p.ip & 0xFF));
    out.push_back(static_cast<char>(p.port >> 8 & 0xFF));
    out.push_back(static_cast<char>(p.port & 0xFF));
  }
  return out;
}

std::string encode_compact_peers(
    const std::vector<std::pair<std::string, std::uint16_t>>& peers) {
  std::vector<PeerEndpoint> eps;
  eps.reserve(peers.size());
  for (const auto& [addr, port] : peers) {
    auto ip = util::parse_ipv4(addr);
    if (!ip) throw NonV4Address("not an IPv4 address: " + addr);
    eps.push_back({*ip, port});
  }
  return encode_compact_peers(eps);
}

std::vector<PeerEndpoint> decode_compact_peers(std::string_view blob) {
  if (blob.size() % 6 != 0)
    throw TrackerError("compact peer blob length not a multiple of 6");
  std::vector<PeerEndpoint> out;
  out.reserve(blob.size() / 6);
  for (std::size_t off = 0; off < blob.size(); off += 6) {
    const auto* b = reinterpret_cast<const std::uint8_t*>(blob.data()) + off;
    PeerEndpoint p;
    p.ip = static_cast<std::uint32_t>(b[0]) << 24 |
           static_cast<std::uint32_t>(b[1]) << 16 |
           static_cast<std::uint32_t>(b[2]) << 8 |
           static_cast<std::uint32_t>(b[3]);
    p.port = static_cast<std::uint16_t>(b[4] << 8 | b[5]);
    out.push_back(p);
  }
  return out;
}

std::string encode_announce_response(const AnnounceResponse& resp) {
  bencode::BDict d;
  if (resp.failure) {
    d.emplace("failure reason", bencode::BValue(*resp.failure));
    return bencode::encode(bencode::BValue(std::move(d)));
  }
  d.emplace("complete", bencode::BValue(static_cast<std::int64_t>(resp.complete)));
  d.emplace("incomplete",
            bencode::BValue(static_cast<std::int64_t>(resp.incomplete)));
  d.emplace("interval", bencode::BValue(static_cast<std::int64_t>(resp.interval)));
  d.emplace("peers", bencode::BValue(encode_compact_peers(resp.peers)));
  return bencode::encode(bencode::BValue(std::move(d)));
}

AnnounceResponse parse_announce_response(std::string_view body) {
  bencode::BValue root = bencode::decode(body);
  if (!root.is_dict()) throw TrackerError("announce response must be a dict");
  const bencode::BDict& d = root.as_dict();
  AnnounceResponse resp;
  if (auto it = d.find("failure reason"); it != d.end()) {
    resp.failure = it->second.as_bytes();
    return resp;
  }
  if (auto it = d.find("interval"); it != d.end())
    resp.interval = static_cast<std::uint32_t>(it->second.as_int());
  if (auto it = d.find("complete"); it != d.end())
    resp.complete = static_cast<std::uint32_t>(it->second.as_int());
  if (auto it = d.find("incomplete"); it != d.end())
    resp.incomplete = static_cast<std::uint32_t>(it->second.as_int());
  if (auto it = d.find("peers"); it != d.end())
    resp.peers = decode_compact_peers(it->second.as_bytes());
  return resp;
}

// ---- HTTP front-end ----

namespace {

// httplib's own query parser converts '+' to space and knows %uXXXX;
// announce parameters carry raw binary, so parse the target ourselves
// with plain %XX decoding only.
std::vector<std::pair<std::string, std::string>> parse_raw_query(
    const std::string& target) {
  std::vector<std::pair<std::string, std::string>> out;
  auto qpos = target.find('?');
  if (qpos == std::string::npos) return out;
  std::string_view query(target);
  query.remove_prefix(qpos + 1);
  std::size_t start = 0;
  while (start <= query.size()) {
    std::size_t amp = query.find('&', start);
    std::string_view pair = amp == std::string_view::npos
                                ? query.substr(start)
                                : query.substr(start, amp - start);
    if (!pair.empty()) {
      std::size_t eq = pair.find('=');
      std::string_view k = eq == std::string_view::npos ? pair : pair.substr(0, eq);
      std::string_view v =
          eq == std::string_view::npos ? std::string_view{} : pair.substr(eq + 1);
      auto kd = util::percent_decode(k);
      auto vd = util::percent_decode(v);
      if (kd && vd) out.emplace_back(*kd, *vd);
    }
    if (amp == std::string_view::npos) break;
    start = amp + 1;
  }
  return out;
}

std::optional<std::string> find_param(
    const std::vector<std::pair<std::string, std::string>>& params,
    std::string_view key) {
  for (const auto& [k, v] : params)
    if (k == key) return v;
  return std::nullopt;
}

std::optional<std::uint64_t> parse_u64_text(std::string_view s) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return out;
}

AnnounceRequest request_from_params(
    const std::vector<std::pair<std::string, std::string>>& params,
    const std::string& remote_addr) {
  AnnounceRequest req;
  auto hash = find_param(params, "info_hash");
  if (!hash || hash->size() != 20)
    throw MalformedAnnounce("info_hash must be 20 bytes");
  std::copy_n(reinterpret_cast<const std::uint8_t*>(hash->data()), 20,
              req.info_hash.begin());
  auto pid = find_param(params, "peer_id");
  if (!pid || pid->size() != 20)
    throw MalformedAnnounce("peer_id must be 20 bytes");
  std::copy_n(reinterpret_cast<const std::uint8_t*>(pid->data()), 20,
              req.peer_id.begin());
  auto port = find_param(params, "port");
  auto port_num = port ? parse_u64_text(*port) : std::nullopt;
  if (!port_num || *port_num == 0 || *port_num > 65535)
    throw MalformedAnnounce("port must be 1-65535");
  req.port = static_cast<std::uint16_t>(*port_num);

  auto read_counter = [&](std::string_view key, std::uint64_t& out) {
    if (auto v = find_param(params, key)) {
      auto n = parse_u64_text(*v);
      if (!n) throw MalformedAnnounce(std::string(key) + " must be a non-negative integer");
      out = *n;
    }
  };
  read_counter("uploaded", req.uploaded);
  read_counter("downloaded", req.downloaded);
  read_counter("left", req.left);

  if (auto ev = find_param(params, "event")) {
    if (*ev == "started")
      req.event = AnnounceEvent::Started;
    else if (*ev == "stopped")
      req.event = AnnounceEvent::Stopped;
    else if (*ev == "completed")
      req.event = AnnounceEvent::Completed;
    else if (ev->empty())
      req.event = AnnounceEvent::None;
    else
      throw MalformedAnnounce("unknown event: " + *ev);
  }

  if (auto c = find_param(params, "compact")) {
    if (*c == "0")
      throw MalformedAnnounce("this tracker only serves compact responses");
    req.compact = true;
  }

  std::string addr = remote_addr;
  if (auto ip = find_param(params, "ip")) addr = *ip;
  auto v4 = util::parse_ipv4(addr);
  if (!v4) throw NonV4Address("peer address is not IPv4: " + addr);
  req.ip = *v4;
  return req;
}

}  // namespace

struct TrackerService::Impl {
  httplib::Server server;
  std::thread serve_thread;
  std::ofstream journal;
  std::mutex journal_mu;
  std::atomic<bool> running{false};
};

TrackerService::TrackerService(Options opts)
    : opts_(std::move(opts)),
      registry_(std::make_unique<SwarmRegistry>(opts_.registry)),
      impl_(std::make_unique<Impl>()) {}

TrackerService::~TrackerService() { stop(); }

int TrackerService::start() {
  if (impl_->running.load()) return port_;

  if (!opts_.journal_path.empty()) {
    // Replay first, then append.
    std::ifstream in(opts_.journal_path);
    std::string line;
    while (std::getline(in, line)) {
      if (auto rec = parse_journal_line(line)) registry_->apply_journal(*rec);
    }
    impl_->journal.open(opts_.journal_path, std::ios::app);
    if (!impl_->journal)
      throw TrackerError("cannot open journal " + opts_.journal_path);
    registry_->set_journal_sink([this](const JournalRecord& rec) {
      std::lock_guard<std::mutex> lock(impl_->journal_mu);
      impl_->journal << format_journal_line(rec) << '\n';
      impl_->journal.flush();
    });
  }

  impl_->server.Get("/announce", [this](const httplib::Request& req,
                                        httplib::Response& res) {
    AnnounceResponse resp;
    try {
      auto params = parse_raw_query(req.target);
      AnnounceRequest areq = request_from_params(params, req.remote_addr);
      resp = registry_->handle_announce(areq, util::wall_seconds());
    } catch (const TrackerError& e) {
      resp.failure = e.what();
    }
    res.set_content(encode_announce_response(resp), "text/plain");
  });

  impl_->server.Get("/scrape", [this](const httplib::Request& req,
                                      httplib::Response& res) {
    auto params = parse_raw_query(req.target);
    bencode::BDict files;
    for (const auto& [k, v] : params) {
      if (k != "info_hash" || v.size() != 20) continue;
      Digest20 hash;
      std::copy_n(reinterpret_cast<const std::uint8_t*>(v.data()), 20,
                  hash.begin());
      try {
        SwarmReport rep = registry_->swarm_report(hash);
        bencode::BDict entry;
        entry.emplace("complete",
                      bencode::BValue(static_cast<std::int64_t>(rep.complete)));
        entry.emplace("downloaded", bencode::BValue(static_cast<std::int64_t>(
                                        rep.completed_events)));
        entry.emplace("incomplete", bencode::BValue(static_cast<std::int64_t>(
                                        rep.incomplete)));
        files.emplace(v, bencode::BValue(std::move(entry)));
      } catch (const UnknownSwarm&) {
        // Unknown hashes are simply omitted.
      }
    }
    bencode::BDict top;
    top.emplace("files", bencode::BValue(std::move(files)));
    res.set_content(bencode::encode(bencode::BValue(std::move(top))),
                    "text/plain");
  });

  int port = opts_.port;
  if (port == 0) {
    port = impl_->server.bind_to_any_port(opts_.bind);
    if (port <= 0) throw TrackerError("cannot bind tracker socket");
  } else {
    if (!impl_->server.bind_to_port(opts_.bind, port))
      throw TrackerError("cannot bind tracker to port " + std::to_string(port));
  }
  port_ = port;
  impl_->running = true;
  impl_->serve_thread = std::thread([this] {
    impl_->server.listen_after_bind();
  });
  impl_->server.wait_until_ready();
  return port_;
}

void TrackerService::stop() {
  if (!impl_ || !impl_->running.exchange(false)) return;
  impl_->server.stop();
  if (impl_->serve_thread.joinable()) impl_->serve_thread.join();
  registry_->set_journal_sink(nullptr);
  std::lock_guard<std::mutex> lock(impl_->journal_mu);
  if (impl_->journal.is_open()) {
    impl_->journal.flush();
    impl_->journal.close();
  }
}

bool TrackerService::running() const { return impl_->running.load(); }

std::string TrackerService::announce_url() const {
  return "http://" + opts_.bind + ":" + std::to_string(port_) + "/announce";
}

AnnounceResponse http_announce(const std::string& announce_url,
                               const AnnounceRequest& req, double timeout_s) {
  auto url = util::parse_http_url(announce_url);
  if (!url) throw TrackerError("bad announce URL: " + announce_url);

  std::string query;
  query += "info_hash=" + util::percent_encode(std::string_view(
                              reinterpret_cast<const char*>(req.info_hash.data()),
                              req.info_hash.size()));
  query += "&peer_id=" + util::percent_encode(std::string_view(
                             reinterpret_cast<const char*>(req.peer_id.data()),
                             req.peer_id.size()));
  query += "&port=" + std::to_string(req.port);
  query += "&uploaded=" + std::to_string(req.uploaded);
  query += "&downloaded=" + std::to_string(req.downloaded);
  query += "&left=" + std::to_string(req.left);
  query += "&compact=1";
  switch (req.event) {
    case AnnounceEvent::Started: query += "&event=started"; break;
    case AnnounceEvent::Stopped: query += "&event=stopped"; break;
    case AnnounceEvent::Completed: query += "&event=completed"; break;
    case AnnounceEvent::None: break;
  }
  if (req.ip != 0) query += "&ip=" + util::format_ipv4(req.ip);

  httplib::Client client(url->host, url->port);
  client.set_connection_timeout(std::chrono::duration<double>(timeout_s));
  client.set_read_timeout(std::chrono::duration<double>(timeout_s));
  auto res = client.Get(url->path + "?" + query);
  if (!res) throw TrackerError("announce request failed: no response");
  if (res->status != 200)
    throw TrackerError("announce request failed: HTTP " +
                       std::to_string(res->status));
  return parse_announce_response(res->body);
}

}  // namespace swarmshare::tracker
