#include "swarmshare/util.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace swarmshare::util {

Digest20 sha1(std::string_view data) {
  Digest20 out{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha1(),
                 nullptr) != 1 ||
      len != out.size()) {
    throw std::runtime_error("sha1: digest computation failed");
  }
  return out;
}

std::string sha1_hex(std::string_view data) { return to_hex(sha1(data)); }

std::string to_hex(const std::uint8_t* data, std::size_t len) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (std::size_t i = 0; i < len; ++i) {
    out.push_back(digits[data[i] >> 4]);
    out.push_back(digits[data[i] & 0xF]);
  }
  return out;
}

std::string to_hex(const Digest20& d) { return to_hex(d.data(), d.size()); }

static int hex_nibble(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

std::optional<Digest20> digest_from_hex(std::string_view hex) {
  if (hex.size() != 40) return std::nullopt;
  Digest20 d{};
  for (std::size_t i = 0; i < 20; ++i) {
    int hi = hex_nibble(hex[2 * i]);
    int lo = hex_nibble(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) return std::nullopt;
    d[i] = static_cast<std::uint8_t>(hi << 4 | lo);
  }
  return d;
}

static bool unreserved(unsigned char c) {
  return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
         (c >= '0' && c <= '9') || c == '.' || c == '_' || c == '~' ||
         c == '-';
}

std::string percent_encode(std::string_view raw) {
  static const char* digits = "0123456789ABCDEF";
  std::string out;
  out.reserve(raw.size() * 3);
  for (unsigned char c : raw) {
    if (unreserved(c)) {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(digits[c >> 4]);
      out.push_back(digits[c & 0xF]);
    }
  }
  return out;
}

std::optional<std::string> percent_decode(std::string_view enc) {
  std::string out;
  out.reserve(enc.size());
  for (std::size_t i = 0; i < enc.size(); ++i) {
    if (enc[i] == '%') {
      if (i + 2 >= enc.size()) return std::nullopt;
      int hi = hex_nibble(enc[i + 1]);
      int lo = hex_nibble(enc[i + 2]);
      if (hi < 0 || lo < 0) return std::nullopt;
      out.push_back(static_cast<char>(hi << 4 | lo));
      i += 2;
    } else {
      out.push_back(enc[i]);
    }
  }
  return out;
}

std::uint64_t parse_size(const std::string& text) {
  if (text.empty()) throw std::invalid_argument("empty size");
  std::size_t pos = 0;
  double value = 0;
  try {
    value = std::stod(text, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("bad size: " + text);
  }
  if (value < 0) throw std::invalid_argument("negative size: " + text);
  std::string suffix = text.substr(pos);
  while (!suffix.empty() && suffix.front() == ' ') suffix.erase(0, 1);
  double mult = 1;
  if (!suffix.empty()) {
    std::string s = suffix;
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (s == "b") mult = 1;
    else if (s == "kb") mult = 1e3;
    else if (s == "mb") mult = 1e6;
    else if (s == "gb") mult = 1e9;
    else if (s == "tb") mult = 1e12;
    else if (s == "kib") mult = 1024.0;
    else if (s == "mib") mult = 1024.0 * 1024;
    else if (s == "gib") mult = 1024.0 * 1024 * 1024;
    else if (s == "tib") mult = 1024.0 * 1024 * 1024 * 1024;
    else throw std::invalid_argument("bad size suffix: " + suffix);
  }
  double bytes = value * mult;
  if (bytes > 9.0e18) throw std::invalid_argument("size too large: " + text);
  return static_cast<std::uint64_t>(std::llround(bytes));
}

std::optional<std::uint32_t> parse_ipv4(std::string_view text) {
  std::uint32_t parts[4];
  int part = 0;
  std::uint32_t cur = 0;
  bool have_digit = false;
  for (char c : text) {
    if (c >= '0' && c <= '9') {
      cur = cur * 10 + static_cast<std::uint32_t>(c - '0');
      if (cur > 255) return std::nullopt;
      have_digit = true;
    } else if (c == '.') {
      if (!have_digit || part >= 3) return std::nullopt;
      parts[part++] = cur;
      cur = 0;
      have_digit = false;
    } else {
      return std::nullopt;
    }
  }
  if (!have_digit || part != 3) return std::nullopt;
  parts[3] = cur;
  return parts[0] << 24 | parts[1] << 16 | parts[2] << 8 | parts[3];
}

std::string format_ipv4(std::uint32_t ip) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%u.%u.%u.%u", ip >> 24 & 0xFF,
                ip >> 16 & 0xFF, ip >> 8 & 0xFF, ip & 0xFF);
  return buf;
}

std::optional<HttpUrl> parse_http_url(std::string_view url) {
  constexpr std::string_view scheme = "http://";
  if (url.substr(0, scheme.size()) != scheme) return std::nullopt;
  url.remove_prefix(scheme.size());
  HttpUrl out;
  auto slash = url.find('/');
  std::string_view authority = url.substr(0, slash);
  if (slash != std::string_view::npos) {
    out.path = std::string(url.substr(slash));
  }
  auto colon = authority.find(':');
  if (colon == std::string_view::npos) {
    out.host = std::string(authority);
  } else {
    out.host = std::string(authority.substr(0, colon));
    std::uint32_t port = 0;
    for (char c : authority.substr(colon + 1)) {
      if (c < '0' || c > '9') return std::nullopt;
      port = port * 10 + static_cast<std::uint32_t>(c - '0');
      if (port > 65535) return std::nullopt;
    }
    if (port == 0) return std::nullopt;
    out.port = static_cast<std::uint16_t>(port);
  }
  if (out.host.empty()) return std::nullopt;
  return out;
}

double monotonic_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

double wall_seconds() {
  return std::chrono::duration<double>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

TokenBucket::TokenBucket(std::uint64_t rate_bytes_per_s, double burst_s)
    : rate_(rate_bytes_per_s),
      capacity_(static_cast<double>(rate_bytes_per_s) * burst_s),
      tokens_(capacity_),
      last_refill_(monotonic_seconds()) {}

void TokenBucket::refill_locked(double now) {
  double elapsed = now - last_refill_;
  if (elapsed <= 0) return;
  tokens_ = std::min(capacity_, tokens_ + elapsed * static_cast<double>(rate_));
  last_refill_ = now;
}

bool TokenBucket::acquire(std::uint64_t n) {
  if (rate_ == 0) return true;
  std::unique_lock<std::mutex> lock(mu_);
  // Allow requests larger than the burst to drain through.
  double need = static_cast<double>(n);
  while (!down_) {
    refill_locked(monotonic_seconds());
    double take = std::min(tokens_, need);
    tokens_ -= take;
    need -= take;
    if (need <= 0) return true;
    double wait_s = need / static_cast<double>(rate_);
    cv_.wait_for(lock, std::chrono::duration<double>(std::min(wait_s, 0.1)));
  }
  return false;
}

void TokenBucket::shutdown() {
  std::lock_guard<std::mutex> lock(mu_);
  down_ = true;
  cv_.notify_all();
}

}  // namespace swarmshare::util
