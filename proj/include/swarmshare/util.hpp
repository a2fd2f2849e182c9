#pragma once

#include <array>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

namespace swarmshare::util {

using Digest20 = std::array<std::uint8_t, 20>;

Digest20 sha1(std::string_view data);
std::string sha1_hex(std::string_view data);

std::string to_hex(const std::uint8_t* data, std::size_t len);
std::string to_hex(const Digest20& d);
std::optional<Digest20> digest_from_hex(std::string_view hex);

// Percent-encodes every byte outside the unreserved set [A-Za-z0-9._~-].
std::string percent_encode(std::string_view raw);
// Strict %XX decoding; '+' is kept literal. Returns nullopt on bad escapes.
std::optional<std::string> percent_decode(std::string_view enc);

// "16384", "256KiB", "157.3GB" -> bytes. Decimal suffixes use powers of
// 1000, binary (KiB/MiB/...) powers of 1024. Throws std::invalid_argument.
std::uint64_t parse_size(const std::string& text);

// Dotted-quad IPv4 <-> host-order u32.
std::optional<std::uint32_t> parse_ipv4(std::string_view text);
std::string format_ipv4(std::uint32_t ip);

struct HttpUrl {
  std::string host;
  std::uint16_t port = 80;
  std::string path = "/";
};
// Accepts http://host[:port][/path]; anything else returns nullopt.
std::optional<HttpUrl> parse_http_url(std::string_view url);

double monotonic_seconds();
double wall_seconds();

// Blocking token bucket for byte-rate limiting. rate 0 means unlimited.
class TokenBucket {
 public:
  explicit TokenBucket(std::uint64_t rate_bytes_per_s, double burst_s = 0.25);

  // Blocks until n tokens are available or the bucket is shut down.
  // Returns false when shut down.
  bool acquire(std::uint64_t n);
  void shutdown();
  std::uint64_t rate() const { return rate_; }

 private:
  void refill_locked(double now);

  std::uint64_t rate_;
  double capacity_;
  double tokens_;
  double last_refill_;
  bool down_ = false;
  std::mutex mu_;
  std::condition_variable cv_;
};

}  // namespace swarmshare::util
