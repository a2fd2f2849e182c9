#include "swarmshare/swarmsim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <set>

#include <json.hpp>

#include "swarmshare/util.hpp"

namespace swarmshare::sim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kReceiverSlots = 8;

double auto_dt(const SwarmScenario& sc) {
  if (sc.dt > 0) return sc.dt;
  double dt = 0.01 * (static_cast<double>(sc.file_size) / sc.server_up);
  return std::clamp(dt, 0.001, 1.0);
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

// Keeps a bounded, evenly thinned sample of a long series.
class SeriesRecorder {
 public:
  void push(const SeriesSample& s) {
    if (tick_++ % stride_ != 0) return;
    samples_.push_back(s);
    if (samples_.size() >= 1024) {
      std::vector<SeriesSample> kept;
      kept.reserve(512);
      for (std::size_t i = 0; i < samples_.size(); i += 2)
        kept.push_back(samples_[i]);
      samples_ = std::move(kept);
      stride_ *= 2;
    }
  }
  std::vector<SeriesSample> take() { return std::move(samples_); }

 private:
  std::vector<SeriesSample> samples_;
  std::uint64_t tick_ = 0;
  std::uint64_t stride_ = 1;
};

void validate(const SwarmScenario& sc) {
  if (sc.file_size == 0) throw SchemaError("file_size must be positive");
  if (!(sc.server_up > 0)) throw SchemaError("server_up must be positive");
  if (sc.piece_length == 0) throw SchemaError("piece_length must be positive");
  if (!(sc.time_cap > 0)) throw SchemaError("time_cap must be positive");
  if (sc.dt < 0) throw SchemaError("dt cannot be negative");
  for (const PeerSpec& p : sc.peers) {
    if (p.arrival_time < 0) throw SchemaError("arrival_time cannot be negative");
    if (p.down_cap < 0 || p.up_cap < 0)
      throw SchemaError("peer rate caps cannot be negative");
  }
}

SimReport simulate_fluid(const SwarmScenario& sc) {
  const double file = static_cast<double>(sc.file_size);
  const double dt = auto_dt(sc);
  const std::size_t n = sc.peers.size();

  struct Peer {
    double progress = 0;
    double downloaded = 0;
    double uploaded = 0;
    double from_server = 0;
    double completion = -1;
    bool left = false;
  };
  std::vector<Peer> ps(n);

  double t = 0;
  double server_uploaded = 0;
  double total_downloaded = 0;
  std::string trace = "fluid file=" + std::to_string(sc.file_size) +
                      " server=" + fmt("%.6f", sc.server_up) + " mode=" +
                      (sc.mode == Mode::HttpOnly ? "http" : "hybrid") + "\n";
  SeriesRecorder series;
  std::vector<std::size_t> active;
  std::vector<double> caps;

  for (;;) {
    active.clear();
    bool all_done = true;
    double next_arrival = kInf;
    for (std::size_t i = 0; i < n; ++i) {
      if (ps[i].completion >= 0) continue;
      all_done = false;
      if (sc.peers[i].arrival_time > t) {
        next_arrival = std::min(next_arrival, sc.peers[i].arrival_time);
        continue;
      }
      active.push_back(i);
    }
    if (all_done) break;
    if (active.empty()) {
      t = next_arrival;
      continue;
    }
    if (t >= sc.time_cap)
      throw StalledScenario("fluid run passed the time cap at t=" +
                            fmt("%.3f", t));

    double peer_pool = 0;
    if (sc.mode == Mode::Hybrid) {
      for (std::size_t j = 0; j < n; ++j) {
        if (sc.peers[j].arrival_time > t || ps[j].left) continue;
        peer_pool += sc.peers[j].up_cap * std::min(ps[j].progress / file, 1.0);
      }
    }
    const double pool = sc.server_up + peer_pool;

    caps.clear();
    for (std::size_t i : active) caps.push_back(sc.peers[i].down_cap);
    std::vector<double> rates = allocate_rates({pool, caps});

    double step_total = 0;
    for (std::size_t k = 0; k < active.size(); ++k) {
      double remaining = file - ps[active[k]].progress;
      step_total += std::min(rates[k] * dt, remaining);
    }

    total_downloaded += step_total;
    double server_share = 1.0;
    if (sc.mode == Mode::HttpOnly) {
      // Same accumulator value on both sides keeps the two totals
      // bitwise equal, so the ratio is exactly one.
      server_uploaded += step_total;
    } else {
      server_share = sc.server_up / pool;
      server_uploaded += step_total * server_share;
      if (peer_pool > 0) {
        for (std::size_t j = 0; j < n; ++j) {
          if (sc.peers[j].arrival_time > t || ps[j].left) continue;
          double contrib =
              sc.peers[j].up_cap * std::min(ps[j].progress / file, 1.0);
          ps[j].uploaded += step_total * (contrib / pool);
        }
      }
    }

    for (std::size_t k = 0; k < active.size(); ++k) {
      Peer& p = ps[active[k]];
      double remaining = file - p.progress;
      double delta = std::min(rates[k] * dt, remaining);
      p.downloaded += delta;
      p.from_server += delta * server_share;
      if (delta >= remaining) {
        p.progress = file;
        p.completion = rates[k] > 0 ? t + remaining / rates[k] : t + dt;
        if (!sc.seed_after) p.left = true;
        trace += "done peer=" + std::to_string(active[k]) +
                 " t=" + fmt("%.9f", p.completion) + "\n";
      } else {
        p.progress += delta;
      }
    }

    series.push({t, static_cast<std::uint32_t>(active.size()),
                 step_total * server_share / dt,
                 step_total * (1.0 - server_share) / dt});
    t += dt;
  }

  SimReport rep;
  rep.peers.resize(n);
  double makespan = 0;
  for (std::size_t i = 0; i < n; ++i) {
    rep.peers[i].arrival_time = sc.peers[i].arrival_time;
    rep.peers[i].completion_time = ps[i].completion;
    rep.peers[i].downloaded = static_cast<std::uint64_t>(std::llround(ps[i].downloaded));
    rep.peers[i].uploaded = static_cast<std::uint64_t>(std::llround(ps[i].uploaded));
    rep.peers[i].from_server =
        static_cast<std::uint64_t>(std::llround(ps[i].from_server));
    makespan = std::max(makespan, ps[i].completion);
  }
  rep.server_uploaded = static_cast<std::uint64_t>(std::llround(server_uploaded));
  rep.total_downloaded =
      static_cast<std::uint64_t>(std::llround(total_downloaded));
  rep.makespan = makespan;
  rep.amplification =
      rep.server_uploaded > 0
          ? static_cast<double>(rep.total_downloaded) / rep.server_uploaded
          : 0;
  trace += "end makespan=" + fmt("%.9f", makespan) +
           " server=" + std::to_string(rep.server_uploaded) +
           " total=" + std::to_string(rep.total_downloaded) + "\n";
  rep.trace_digest = util::sha1_hex(trace);
  rep.series = series.take();
  return rep;
}

SimReport simulate_pieces(const SwarmScenario& sc) {
  const std::size_t n = sc.peers.size();
  const std::uint32_t piece_count = static_cast<std::uint32_t>(
      (sc.file_size + sc.piece_length - 1) / sc.piece_length);
  auto piece_size = [&](std::uint32_t p) -> std::uint32_t {
    std::uint64_t off = static_cast<std::uint64_t>(p) * sc.piece_length;
    return static_cast<std::uint32_t>(
        std::min<std::uint64_t>(sc.piece_length, sc.file_size - off));
  };

  struct Peer {
    std::vector<bool> have;
    std::uint32_t have_count = 0;
    std::uint64_t downloaded = 0;
    std::uint64_t uploaded = 0;
    std::uint64_t from_server = 0;
    double completion = -1;
    bool left = false;
    std::set<std::uint32_t> inflight;
  };
  struct Transfer {
    std::uint64_t id = 0;
    int src = -1;  // -1 is the origin server
    int dst = 0;
    std::uint32_t piece = 0;
    double remaining = 0;
    double rate = 0;
  };

  std::mt19937_64 rng(sc.rng_seed);
  std::vector<Peer> ps(n);
  for (Peer& p : ps) p.have.assign(piece_count, false);
  std::vector<std::uint32_t> holders(piece_count, 0);  // peer copies only
  std::vector<Transfer> transfers;
  std::uint64_t next_id = 0;
  std::uint64_t server_uploaded = 0;
  std::uint64_t total_downloaded = 0;
  double t = 0;
  std::string trace =
      "pieces file=" + std::to_string(sc.file_size) +
      " pieces=" + std::to_string(piece_count) +
      " server=" + fmt("%.6f", sc.server_up) +
      " mode=" + (sc.mode == Mode::HttpOnly ? "http" : "hybrid") +
      " seed=" + std::to_string(sc.rng_seed) + "\n";
  SeriesRecorder series;

  auto arrived = [&](std::size_t j) { return sc.peers[j].arrival_time <= t; };
  auto complete = [&](std::size_t j) { return ps[j].have_count == piece_count; };

  auto outgoing_count = [&](int node) {
    std::size_t c = 0;
    for (const Transfer& tx : transfers)
      if (tx.src == node) ++c;
    return c;
  };

  // Pipelining depth tracks how many nodes could plausibly serve the
  // receiver; a lone source gets one request at a time, so the first
  // pieces land quickly and redistribution starts early.
  auto slots_for = [&](std::size_t d) {
    std::size_t c = 1;  // the origin is always a source
    if (sc.mode == Mode::Hybrid) {
      for (std::size_t j = 0; j < n; ++j) {
        if (j == d || !arrived(j) || ps[j].left) continue;
        if (sc.peers[j].up_cap > 0 && ps[j].have_count > 0) ++c;
      }
    }
    return std::min(c, kReceiverSlots);
  };

  auto start_transfers = [&]() {
    // In-flight copies count toward availability so concurrent picks
    // spread over distinct pieces instead of duplicating server sends.
    std::vector<std::uint32_t> pending(piece_count, 0);
    for (const Transfer& tx : transfers) ++pending[tx.piece];
    for (std::size_t d = 0; d < n; ++d) {
      if (!arrived(d) || complete(d)) continue;
      while (ps[d].inflight.size() < slots_for(d)) {
        // Rarest piece first; reservoir draw over ties.
        std::uint32_t best_holders = 0;
        std::uint32_t best_piece = 0;
        std::size_t tied = 0;
        for (std::uint32_t p = 0; p < piece_count; ++p) {
          if (ps[d].have[p] || ps[d].inflight.count(p)) continue;
          std::uint32_t h = holders[p] + pending[p];
          if (tied == 0 || h < best_holders) {
            best_holders = h;
            best_piece = p;
            tied = 1;
          } else if (h == best_holders) {
            ++tied;
            if (std::uniform_int_distribution<std::size_t>(0, tied - 1)(rng) == 0)
              best_piece = p;
          }
        }
        if (tied == 0) break;

        // Source: the least-loaded holder, server included; the server
        // is the only option in http-only mode.
        int best_src = -1;
        std::size_t best_load = outgoing_count(-1);
        std::size_t src_tied = 1;
        if (sc.mode == Mode::Hybrid) {
          for (std::size_t j = 0; j < n; ++j) {
            if (j == d || !arrived(j) || ps[j].left) continue;
            if (!ps[j].have[best_piece] || sc.peers[j].up_cap <= 0) continue;
            std::size_t load = outgoing_count(static_cast<int>(j));
            if (load < best_load) {
              best_load = load;
              best_src = static_cast<int>(j);
              src_tied = 1;
            } else if (load == best_load) {
              ++src_tied;
              if (std::uniform_int_distribution<std::size_t>(
                      0, src_tied - 1)(rng) == 0)
                best_src = static_cast<int>(j);
            }
          }
        }

        Transfer tx;
        tx.id = next_id++;
        tx.src = best_src;
        tx.dst = static_cast<int>(d);
        tx.piece = best_piece;
        tx.remaining = piece_size(best_piece);
        transfers.push_back(tx);
        ps[d].inflight.insert(best_piece);
        ++pending[best_piece];
      }
    }
  };

  auto recompute_rates = [&]() {
    // Progressive max-min filling over per-node capacities. Node keys:
    // src are 0..n (n is the server), dst are n+1 .. 2n.
    std::vector<double> residual(2 * n + 1, 0);
    std::vector<std::size_t> live(2 * n + 1, 0);
    auto src_key = [&](int src) {
      return src < 0 ? n : static_cast<std::size_t>(src);
    };
    auto dst_key = [&](int dst) {
      return n + 1 + static_cast<std::size_t>(dst);
    };
    for (std::size_t j = 0; j < n; ++j) {
      residual[j] = sc.peers[j].up_cap;
      residual[n + 1 + j] =
          sc.peers[j].down_cap > 0 ? sc.peers[j].down_cap : kInf;
    }
    residual[n] = sc.server_up;

    std::vector<bool> frozen(transfers.size(), false);
    for (Transfer& tx : transfers) {
      tx.rate = 0;
      ++live[src_key(tx.src)];
      ++live[dst_key(tx.dst)];
    }
    std::size_t left = transfers.size();
    while (left > 0) {
      double best_fair = kInf;
      std::size_t best_node = 0;
      for (std::size_t k = 0; k < residual.size(); ++k) {
        if (live[k] == 0 || residual[k] == kInf) continue;
        double fair = residual[k] / static_cast<double>(live[k]);
        if (fair < best_fair) {
          best_fair = fair;
          best_node = k;
        }
      }
      if (best_fair == kInf) break;  // every live node is uncapped
      for (std::size_t i = 0; i < transfers.size(); ++i) {
        if (frozen[i]) continue;
        Transfer& tx = transfers[i];
        std::size_t sk = src_key(tx.src);
        std::size_t dk = dst_key(tx.dst);
        if (sk != best_node && dk != best_node) continue;
        tx.rate = best_fair;
        frozen[i] = true;
        --left;
        for (std::size_t node : {sk, dk}) {
          --live[node];
          if (residual[node] != kInf)
            residual[node] = std::max(0.0, residual[node] - tx.rate);
        }
      }
      residual[best_node] = 0;
    }
  };

  std::size_t done_count = 0;
  while (done_count < n) {
    start_transfers();
    recompute_rates();

    double t_next = kInf;
    for (const Transfer& tx : transfers)
      if (tx.rate > 0) t_next = std::min(t_next, t + tx.remaining / tx.rate);
    for (std::size_t j = 0; j < n; ++j)
      if (sc.peers[j].arrival_time > t)
        t_next = std::min(t_next, sc.peers[j].arrival_time);
    if (t_next == kInf)
      throw StalledScenario("no transfer can make progress at t=" +
                            fmt("%.3f", t));
    if (t_next > sc.time_cap)
      throw StalledScenario("piece-level run passed the time cap");

    double span = t_next - t;
    double server_rate = 0;
    double peer_rate = 0;
    for (Transfer& tx : transfers) {
      tx.remaining = std::max(0.0, tx.remaining - tx.rate * span);
      (tx.src < 0 ? server_rate : peer_rate) += tx.rate;
    }
    std::uint32_t actives = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (arrived(j) && !complete(j)) ++actives;
    series.push({t, actives, server_rate, peer_rate});
    t = t_next;

    std::vector<std::size_t> finished;
    for (std::size_t i = 0; i < transfers.size(); ++i)
      if (transfers[i].remaining <= 1e-6 && transfers[i].rate > 0)
        finished.push_back(i);

    std::set<std::size_t> drop(finished.begin(), finished.end());
    for (std::size_t i : finished) {
      const Transfer& tx = transfers[i];
      std::uint32_t size = piece_size(tx.piece);
      Peer& dst = ps[static_cast<std::size_t>(tx.dst)];
      dst.have[tx.piece] = true;
      ++dst.have_count;
      ++holders[tx.piece];
      dst.inflight.erase(tx.piece);
      dst.downloaded += size;
      total_downloaded += size;
      if (tx.src < 0) {
        server_uploaded += size;
        dst.from_server += size;
      } else {
        ps[static_cast<std::size_t>(tx.src)].uploaded += size;
      }
      trace += "xfer t=" + fmt("%.9f", t) + " piece=" +
               std::to_string(tx.piece) + " src=" + std::to_string(tx.src) +
               " dst=" + std::to_string(tx.dst) + "\n";
      if (dst.have_count == piece_count) {
        dst.completion = t;
        ++done_count;
        trace += "done peer=" + std::to_string(tx.dst) +
                 " t=" + fmt("%.9f", t) + "\n";
        if (!sc.seed_after) {
          dst.left = true;
          // Its outgoing transfers die with it; the pieces get
          // re-requested elsewhere.
          for (std::size_t k = 0; k < transfers.size(); ++k) {
            if (drop.count(k) || transfers[k].src != tx.dst) continue;
            ps[static_cast<std::size_t>(transfers[k].dst)].inflight.erase(
                transfers[k].piece);
            drop.insert(k);
          }
        }
      }
    }
    if (!drop.empty()) {
      std::vector<Transfer> kept;
      kept.reserve(transfers.size() - drop.size());
      for (std::size_t i = 0; i < transfers.size(); ++i)
        if (!drop.count(i)) kept.push_back(transfers[i]);
      transfers = std::move(kept);
    }
  }

  SimReport rep;
  rep.peers.resize(n);
  double makespan = 0;
  for (std::size_t i = 0; i < n; ++i) {
    rep.peers[i].arrival_time = sc.peers[i].arrival_time;
    rep.peers[i].completion_time = ps[i].completion;
    rep.peers[i].downloaded = ps[i].downloaded;
    rep.peers[i].uploaded = ps[i].uploaded;
    rep.peers[i].from_server = ps[i].from_server;
    makespan = std::max(makespan, ps[i].completion);
  }
  rep.server_uploaded = server_uploaded;
  rep.total_downloaded = total_downloaded;
  rep.makespan = makespan;
  rep.amplification =
      server_uploaded > 0
          ? static_cast<double>(total_downloaded) / static_cast<double>(server_uploaded)
          : 0;
  trace += "end makespan=" + fmt("%.9f", makespan) +
           " server=" + std::to_string(server_uploaded) +
           " total=" + std::to_string(total_downloaded) + "\n";
  rep.trace_digest = util::sha1_hex(trace);
  rep.series = series.take();
  return rep;
}

}  // namespace

std::vector<double> allocate_rates(const RateState& state) {
  const std::size_t n = state.caps.size();
  std::vector<double> rates(n, 0);
  if (n == 0 || state.pool <= 0) return rates;

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  auto cap_of = [&](std::size_t i) {
    return state.caps[i] > 0 ? state.caps[i] : kInf;
  };
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return cap_of(a) < cap_of(b); });

  double pool = state.pool;
  std::size_t remaining = n;
  for (std::size_t i : order) {
    double fair = pool / static_cast<double>(remaining);
    double give = std::min(cap_of(i), fair);
    rates[i] = give;
    pool -= give;
    --remaining;
  }
  return rates;
}

SimReport simulate(const SwarmScenario& scenario) {
  validate(scenario);
  return scenario.fidelity == Fidelity::Fluid ? simulate_fluid(scenario)
                                              : simulate_pieces(scenario);
}

double report_amplification(const SimReport& report) {
  if (report.server_uploaded == 0)
    throw ZeroServerUpload("the server uploaded nothing; the ratio is undefined");
  return static_cast<double>(report.total_downloaded) /
         static_cast<double>(report.server_uploaded);
}

namespace {

double rate_field(const nlohmann::json& v, const char* key) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string())
    return static_cast<double>(util::parse_size(v.get<std::string>()));
  throw SchemaError(std::string(key) + " must be a number or a size string");
}

std::uint64_t size_field(const nlohmann::json& v, const char* key) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0)
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  if (v.is_string()) return util::parse_size(v.get<std::string>());
  throw SchemaError(std::string(key) + " must be a non-negative integer or a size string");
}

}  // namespace

SwarmScenario scenario_from_json(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("scenario is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw SchemaError("scenario must be a JSON object");

  static const std::set<std::string> known{
      "file_size", "mode",         "server_up",  "peers",
      "dt",        "rng_seed",     "fidelity",   "piece_length",
      "seed_after", "time_cap"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key()))
      throw SchemaError("unknown scenario key: " + it.key());

  SwarmScenario sc;
  try {
    if (!j.contains("file_size")) throw SchemaError("file_size is required");
    sc.file_size = size_field(j.at("file_size"), "file_size");
    if (!j.contains("server_up")) throw SchemaError("server_up is required");
    sc.server_up = rate_field(j.at("server_up"), "server_up");

    if (j.contains("mode")) {
      std::string m = j.at("mode").get<std::string>();
      if (m == "http_only")
        sc.mode = Mode::HttpOnly;
      else if (m == "hybrid")
        sc.mode = Mode::Hybrid;
      else
        throw SchemaError("mode must be http_only or hybrid");
    }
    if (j.contains("fidelity")) {
      std::string f = j.at("fidelity").get<std::string>();
      if (f == "fluid")
        sc.fidelity = Fidelity::Fluid;
      else if (f == "piece_level")
        sc.fidelity = Fidelity::PieceLevel;
      else
        throw SchemaError("fidelity must be fluid or piece_level");
    }
    if (j.contains("dt")) sc.dt = j.at("dt").get<double>();
    if (j.contains("rng_seed")) sc.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    if (j.contains("piece_length"))
      sc.piece_length =
          static_cast<std::uint32_t>(size_field(j.at("piece_length"), "piece_length"));
    if (j.contains("seed_after")) sc.seed_after = j.at("seed_after").get<bool>();
    if (j.contains("time_cap")) sc.time_cap = j.at("time_cap").get<double>();

    if (j.contains("peers")) {
      if (!j.at("peers").is_array())
        throw SchemaError("peers must be an array");
      for (const auto& entry : j.at("peers")) {
        if (!entry.is_object()) throw SchemaError("each peer must be an object");
        static const std::set<std::string> peer_keys{"arrival_time", "down_cap",
                                                     "up_cap", "count"};
        for (auto it = entry.begin(); it != entry.end(); ++it)
          if (!peer_keys.count(it.key()))
            throw SchemaError("unknown peer key: " + it.key());
        PeerSpec spec;
        if (entry.contains("arrival_time"))
          spec.arrival_time = entry.at("arrival_time").get<double>();
        if (entry.contains("down_cap"))
          spec.down_cap = rate_field(entry.at("down_cap"), "down_cap");
        if (entry.contains("up_cap"))
          spec.up_cap = rate_field(entry.at("up_cap"), "up_cap");
        std::uint64_t count = 1;
        if (entry.contains("count")) count = entry.at("count").get<std::uint64_t>();
        if (count == 0 || count > 100000)
          throw SchemaError("peer count must be between 1 and 100000");
        for (std::uint64_t c = 0; c < count; ++c) sc.peers.push_back(spec);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("bad scenario field: ") + e.what());
  }

  validate(sc);
  return sc;
}

std::string report_to_json(const SimReport& report) {
  nlohmann::json j;
  j["server_uploaded"] = report.server_uploaded;
  j["total_downloaded"] = report.total_downloaded;
  j["amplification"] = report.amplification;
  j["makespan"] = report.makespan;
  j["trace_digest"] = report.trace_digest;
  j["peers"] = nlohmann::json::array();
  for (const PeerOutcome& p : report.peers) {
    j["peers"].push_back({{"arrival_time", p.arrival_time},
                          {"completion_time", p.completion_time},
                          {"downloaded", p.downloaded},
                          {"uploaded", p.uploaded},
                          {"from_server", p.from_server}});
  }
  j["series"] = nlohmann::json::array();
  for (const SeriesSample& s : report.series) {
    j["series"].push_back({{"t", s.t},
                           {"active", s.active},
                           {"server_rate", s.server_rate},
                           {"peer_rate", s.peer_rate}});
  }
  return j.dump(2);
}

std::string report_to_csv(const SimReport& report) {
  std::string out = "t,active,server_rate,peer_rate\n";
  char line[128];
  for (const SeriesSample& s : report.series) {
    std::snprintf(line, sizeof line, "%.6f,%u,%.3f,%.3f\n", s.t, s.active,
                  s.server_rate, s.peer_rate);
    out += line;
  }
  return out;
}

}  // namespace swarmshare::sim
