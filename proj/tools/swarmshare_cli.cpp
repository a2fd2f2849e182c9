#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "swarmshare/econ.hpp"
#include "swarmshare/metainfo.hpp"
#include "swarmshare/peer_node.hpp"
#include "swarmshare/swarmsim.hpp"
#include "swarmshare/tracker.hpp"
#include "swarmshare/util.hpp"

namespace {

using namespace swarmshare;

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted = true; }

void install_signal_handlers() {
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
}

void wait_for_signal() {
  while (!g_interrupted.load())
    std::this_thread::sleep_for(std::chrono::milliseconds(200));
}

// Input files that cannot be read are usage errors, not runtime ones.
class UsageFailure : public std::runtime_error {
 public:
  explicit UsageFailure(const std::string& what) : std::runtime_error(what) {}
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageFailure("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return std::move(buf).str();
}

void write_file(const std::string& path, std::string_view data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw std::runtime_error("short write to " + path);
}

metainfo::Metainfo load_torrent(const std::string& path) {
  return metainfo::parse_metainfo(read_file(path));
}

int run_create(const std::string& content_path, const std::string& announce,
               std::string output, std::string name,
               const std::string& piece_length_text,
               const std::vector<std::string>& webseeds) {
  std::uint64_t piece_length = util::parse_size(piece_length_text);
  if (!metainfo::valid_piece_length(piece_length))
    throw UsageFailure("piece length must be a power of two between 16KiB and 16MiB");
  if (name.empty())
    name = std::filesystem::path(content_path).filename().string();
  if (output.empty()) output = content_path + ".torrent";

  metainfo::Metainfo meta = metainfo::build_metainfo_from_file(
      content_path, name, static_cast<std::uint32_t>(piece_length), announce,
      webseeds);
  write_file(output, metainfo::encode_metainfo(meta));

  std::printf("torrent %s\n", output.c_str());
  std::printf("info_hash %s\n", util::to_hex(metainfo::info_hash(meta)).c_str());
  std::printf("pieces %zu\n", meta.piece_count());
  std::printf("piece_length %u\n", meta.piece_length);
  std::printf("total_bytes %llu\n",
              static_cast<unsigned long long>(meta.total_length));
  return 0;
}

int run_verify(const std::string& torrent_path, const std::string& content_path) {
  metainfo::Metainfo meta = load_torrent(torrent_path);
  metainfo::PieceReport report = metainfo::verify_content_file(meta, content_path);
  std::size_t passed = 0;
  for (bool ok : report.passed)
    if (ok) ++passed;
  std::printf("pieces_passed %zu/%zu\n", passed, report.passed.size());
  std::printf("verified_bytes %llu\n",
              static_cast<unsigned long long>(report.verified_bytes));
  std::printf("length_match %s\n", report.length_matches ? "true" : "false");
  bool ok = report.all_passed() && report.length_matches;
  std::printf("result %s\n", ok ? "PASS" : "FAIL");
  return ok ? 0 : 1;
}

int run_tracker(const std::string& bind, int port, unsigned interval,
                const std::string& journal, const std::string& origin_prefix,
                bool closed, const std::vector<std::string>& register_hashes) {
  tracker::TrackerService::Options opts;
  opts.bind = bind;
  opts.port = port;
  opts.registry.interval_s = interval;
  opts.registry.origin_prefix = origin_prefix;
  opts.registry.closed = closed;
  opts.journal_path = journal;

  tracker::TrackerService service(std::move(opts));
  for (const std::string& hex : register_hashes) {
    auto hash = util::digest_from_hex(hex);
    if (!hash) throw UsageFailure("not a 40-char hex digest: " + hex);
    service.registry().register_swarm(*hash);
  }

  install_signal_handlers();
  service.start();
  std::printf("%s\n", service.announce_url().c_str());
  std::fflush(stdout);
  std::fprintf(stderr, "tracker listening; Ctrl-C to stop\n");
  wait_for_signal();
  service.stop();
  return 0;
}

peer::Limits make_limits(const std::string& up_rate, const std::string& down_rate,
                         int port, const std::string& prefix) {
  peer::Limits limits;
  if (!up_rate.empty()) limits.up_rate = util::parse_size(up_rate);
  if (!down_rate.empty()) limits.down_rate = util::parse_size(down_rate);
  limits.listen_port = static_cast<std::uint16_t>(port);
  limits.peer_id_prefix = prefix;
  return limits;
}

int run_seed(const std::string& torrent_path, const std::string& content_path,
             const std::string& up_rate, int port, const std::string& prefix) {
  metainfo::Metainfo meta = load_torrent(torrent_path);
  std::string content = read_file(content_path);

  peer::PeerNode node(peer::Role::Seed, meta,
                      make_limits(up_rate, "", port, prefix));
  node.load_content(std::move(content));

  install_signal_handlers();
  node.start();
  std::printf("seeding %s on port %u\n", meta.name.c_str(), node.listen_port());
  std::fflush(stdout);
  std::fprintf(stderr, "announcing to %s; Ctrl-C to stop\n",
               meta.announce.c_str());
  wait_for_signal();
  node.stop();

  peer::SessionReport rep = node.report();
  std::printf("uploaded_bytes %llu\n",
              static_cast<unsigned long long>(rep.bytes_up));
  return 0;
}

int run_get(const std::string& torrent_path, const std::string& output,
            const std::string& up_rate, const std::string& down_rate, int port,
            const std::string& prefix, double webseed_wait, double timeout) {
  metainfo::Metainfo meta = load_torrent(torrent_path);

  peer::Limits limits = make_limits(up_rate, down_rate, port, prefix);
  if (webseed_wait >= 0) limits.webseed_fallback_s = webseed_wait;
  if (timeout > 0) limits.run_deadline_s = timeout;

  peer::PeerNode node(peer::Role::Fetch, meta, limits);
  std::fprintf(stderr, "fetching %s (%llu bytes)\n", meta.name.c_str(),
               static_cast<unsigned long long>(meta.total_length));
  peer::SessionReport rep = node.run();

  std::string out_path = output.empty() ? meta.name : output;
  write_file(out_path, node.store().content());

  std::printf("output %s\n", out_path.c_str());
  std::printf("duration_s %.3f\n", rep.duration_s);
  std::printf("peer_bytes %llu\n",
              static_cast<unsigned long long>(rep.bytes_down));
  std::printf("mirror_bytes %llu\n",
              static_cast<unsigned long long>(rep.bytes_webseed));
  std::printf("uploaded_bytes %llu\n",
              static_cast<unsigned long long>(rep.bytes_up));
  std::printf("result %s\n", rep.completed ? "PASS" : "FAIL");
  return rep.completed ? 0 : 1;
}

int run_sim(const std::string& scenario_path, bool as_json, bool as_csv) {
  sim::SwarmScenario scenario = sim::scenario_from_json(read_file(scenario_path));
  sim::SimReport report = sim::simulate(scenario);
  if (as_json) {
    std::printf("%s\n", sim::report_to_json(report).c_str());
  } else if (as_csv) {
    std::fputs(sim::report_to_csv(report).c_str(), stdout);
  } else {
    std::printf("peers %zu\n", report.peers.size());
    std::printf("makespan_s %.3f\n", report.makespan);
    std::printf("server_uploaded %llu\n",
                static_cast<unsigned long long>(report.server_uploaded));
    std::printf("total_downloaded %llu\n",
                static_cast<unsigned long long>(report.total_downloaded));
    std::printf("amplification %.4f\n", report.amplification);
    std::printf("trace_digest %s\n", report.trace_digest.c_str());
  }
  return 0;
}

econ::CostModel make_model(double price, const std::string& http_speed,
                           const std::string& swarm_speed, double amplification) {
  econ::CostModel model;
  if (price > 0) model.price_per_gb = price;
  if (!http_speed.empty())
    model.http_speed = static_cast<double>(util::parse_size(http_speed));
  if (!swarm_speed.empty())
    model.swarm_speed = static_cast<double>(util::parse_size(swarm_speed));
  if (amplification > 0) model.amplification = amplification;
  return model;
}

int run_project(const std::string& datasets_path, const std::string& ledger_path,
                const econ::CostModel& model, bool as_json) {
  if (!ledger_path.empty()) {
    econ::CaseStudyInput input = econ::case_study_from_json(read_file(ledger_path));
    econ::CaseStudyReport rep = econ::case_study_report(input, model);
    if (as_json) {
      std::printf(
          "{\n  \"name\": \"%s\",\n  \"downloads\": %llu,\n"
          "  \"amplification\": %.6f,\n  \"per_download_usd\": %.6f,\n"
          "  \"http_equivalent_usd\": %.2f,\n  \"actual_usd\": %.6f,\n"
          "  \"savings_usd\": %.6f\n}\n",
          rep.name.c_str(), static_cast<unsigned long long>(rep.downloads),
          rep.amplification, rep.per_download_cost, rep.http_equivalent_cost,
          rep.actual_cost, rep.dollar_savings);
    } else {
      std::printf("name %s\n", rep.name.c_str());
      std::printf("downloads %llu\n",
                  static_cast<unsigned long long>(rep.downloads));
      std::printf("amplification %.4f\n", rep.amplification);
      std::printf("per_download_usd %.2f\n",
                  econ::round_cents(rep.per_download_cost));
      std::printf("http_equivalent_usd %.2f\n", rep.http_equivalent_cost);
      std::printf("actual_usd %.4f\n", rep.actual_cost);
      std::printf("savings_usd %.2f\n", rep.dollar_savings);
    }
    return 0;
  }

  if (datasets_path.empty())
    throw UsageFailure("provide a datasets file or --ledger");
  std::vector<econ::DatasetSpec> datasets =
      econ::datasets_from_json(read_file(datasets_path));
  bool first = true;
  if (as_json) std::printf("[\n");
  else
    std::printf("%-24s %10s %10s %12s %10s %10s %10s\n", "name", "size_gb",
                "downloads", "savings_usd", "http_h", "swarm_h", "saved_h");
  for (const econ::DatasetSpec& d : datasets) {
    econ::ProjectionRow row = econ::project_row(d, model);
    if (as_json) {
      std::printf(
          "%s  {\"name\": \"%s\", \"savings_usd\": %.6f, \"http_h\": %.6f,"
          " \"swarm_h\": %.6f, \"saved_h\": %.6f}",
          first ? "" : ",\n", row.name.c_str(), row.dollar_savings,
          row.http_time_s / 3600.0, row.swarm_time_s / 3600.0,
          row.time_savings_s / 3600.0);
      first = false;
    } else {
      std::printf("%-24s %10.2f %10llu %12.2f %10.2f %10.2f %10.2f\n",
                  row.name.c_str(),
                  static_cast<double>(row.size_bytes) / econ::kBytesPerGb,
                  static_cast<unsigned long long>(row.downloads),
                  row.dollar_savings, row.http_time_s / 3600.0,
                  row.swarm_time_s / 3600.0, row.time_savings_s / 3600.0);
    }
  }
  if (as_json) std::printf("\n]\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hybrid HTTP + swarm dataset distribution toolkit"};
  app.require_subcommand(1);
  int rc = 0;

  // create
  auto* create = app.add_subcommand("create", "build a torrent for a file");
  std::string c_content, c_announce, c_output, c_name, c_piece = "256KiB";
  std::vector<std::string> c_webseeds;
  create->add_option("content", c_content, "payload file")->required();
  create->add_option("--announce", c_announce, "tracker announce URL")->required();
  create->add_option("--output,-o", c_output, "torrent output path");
  create->add_option("--name", c_name, "payload name (default: file name)");
  create->add_option("--piece-length", c_piece, "piece size, e.g. 256KiB");
  create->add_option("--webseed", c_webseeds, "HTTP mirror URL (repeatable)");
  create->callback([&] {
    rc = run_create(c_content, c_announce, c_output, c_name, c_piece, c_webseeds);
  });

  // verify
  auto* verify = app.add_subcommand("verify", "check a file against a torrent");
  std::string v_torrent, v_content;
  verify->add_option("torrent", v_torrent, "torrent file")->required();
  verify->add_option("content", v_content, "payload file")->required();
  verify->callback([&] { rc = run_verify(v_torrent, v_content); });

  // tracker
  auto* trk = app.add_subcommand("tracker", "run an announce tracker");
  std::string t_bind = "127.0.0.1", t_journal, t_prefix = "ORIG";
  int t_port = 0;
  unsigned t_interval = 1800;
  bool t_closed = false;
  std::vector<std::string> t_register;
  trk->add_option("--bind", t_bind, "bind address");
  trk->add_option("--port", t_port, "port (0 = ephemeral)");
  trk->add_option("--interval", t_interval, "announce interval seconds");
  trk->add_option("--journal", t_journal, "append-only transfer journal path");
  trk->add_option("--origin-prefix", t_prefix, "peer id prefix of origin seeders");
  trk->add_flag("--closed", t_closed, "only serve registered swarms");
  trk->add_option("--register", t_register, "info hash (hex) to pre-register");
  trk->callback([&] {
    rc = run_tracker(t_bind, t_port, t_interval, t_journal, t_prefix, t_closed,
                     t_register);
  });

  // seed
  auto* seed = app.add_subcommand("seed", "serve a verified payload to a swarm");
  std::string s_torrent, s_content, s_up, s_prefix = "ORIG";
  int s_port = 0;
  seed->add_option("torrent", s_torrent, "torrent file")->required();
  seed->add_option("content", s_content, "payload file")->required();
  seed->add_option("--up-rate", s_up, "upload cap, e.g. 1MiB (bytes/s)");
  seed->add_option("--port", s_port, "listen port (0 = ephemeral)");
  seed->add_option("--peer-prefix", s_prefix, "peer id prefix");
  seed->callback([&] { rc = run_seed(s_torrent, s_content, s_up, s_port, s_prefix); });

  // get
  auto* get = app.add_subcommand("get", "fetch a payload from the swarm");
  std::string g_torrent, g_output, g_up, g_down, g_prefix = "SWRM";
  int g_port = 0;
  double g_wait = -1, g_timeout = 0;
  get->add_option("torrent", g_torrent, "torrent file")->required();
  get->add_option("--output,-o", g_output, "output path (default: payload name)");
  get->add_option("--up-rate", g_up, "upload cap (bytes/s)");
  get->add_option("--down-rate", g_down, "download cap (bytes/s)");
  get->add_option("--port", g_port, "listen port (0 = ephemeral)");
  get->add_option("--peer-prefix", g_prefix, "peer id prefix");
  get->add_option("--webseed-wait", g_wait,
                  "seconds without peer sources before HTTP mirrors kick in");
  get->add_option("--timeout", g_timeout, "overall deadline in seconds");
  get->callback([&] {
    rc = run_get(g_torrent, g_output, g_up, g_down, g_port, g_prefix, g_wait,
                 g_timeout);
  });

  // sim
  auto* simc = app.add_subcommand("sim", "run a swarm scenario");
  std::string m_scenario;
  bool m_json = false, m_csv = false;
  simc->add_option("scenario", m_scenario, "scenario JSON file")->required();
  simc->add_flag("--json", m_json, "full report as JSON");
  simc->add_flag("--csv", m_csv, "rate series as CSV");
  simc->callback([&] { rc = run_sim(m_scenario, m_json, m_csv); });

  // project
  auto* proj = app.add_subcommand("project", "hosting cost and time projections");
  std::string p_datasets, p_ledger, p_http, p_swarm;
  double p_price = 0, p_amp = 0;
  bool p_json = false;
  proj->add_option("datasets", p_datasets, "datasets JSON file");
  proj->add_option("--ledger", p_ledger,
                   "measured transfer ledger JSON; prints the case study");
  proj->add_option("--price", p_price, "dollars per GB of egress");
  proj->add_option("--http-speed", p_http, "direct download rate (bytes/s)");
  proj->add_option("--swarm-speed", p_swarm, "swarm download rate (bytes/s)");
  proj->add_option("--amplification", p_amp, "bytes delivered per origin byte");
  proj->add_flag("--json", p_json, "rows as JSON");
  proj->callback([&] {
    rc = run_project(p_datasets, p_ledger,
                     make_model(p_price, p_http, p_swarm, p_amp), p_json);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const UsageFailure& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const bencode::DecodeError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const metainfo::SchemaViolation& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const metainfo::UnsupportedShape& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const metainfo::ContentReadFailure& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const sim::SchemaError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return rc;
}
