#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace swarmshare::bencode {

class BValue;
using BList = std::vector<BValue>;
// std::map over std::string compares raw bytes, which is exactly the
// canonical dictionary key order.
using BDict = std::map<std::string, BValue>;

// One bencoded value: integer, byte string, list, or dictionary.
class BValue {
 public:
  BValue() : v_(std::int64_t{0}) {}
  BValue(std::int64_t i) : v_(i) {}
  BValue(int i) : v_(static_cast<std::int64_t>(i)) {}
  BValue(std::uint64_t i);
  BValue(std::string bytes) : v_(std::move(bytes)) {}
  BValue(std::string_view bytes) : v_(std::string(bytes)) {}
  BValue(const char* bytes) : v_(std::string(bytes)) {}
  BValue(BList list) : v_(std::move(list)) {}
  BValue(BDict dict) : v_(std::move(dict)) {}

  bool is_int() const { return std::holds_alternative<std::int64_t>(v_); }
  bool is_bytes() const { return std::holds_alternative<std::string>(v_); }
  bool is_list() const { return std::holds_alternative<BList>(v_); }
  bool is_dict() const { return std::holds_alternative<BDict>(v_); }

  std::int64_t as_int() const;
  const std::string& as_bytes() const;
  const BList& as_list() const;
  const BDict& as_dict() const;
  BList& as_list();
  BDict& as_dict();

  bool operator==(const BValue&) const = default;

 private:
  std::variant<std::int64_t, std::string, BList, BDict> v_;
};

// Raised by as_*() accessors on a type mismatch.
class TypeError : public std::runtime_error {
 public:
  explicit TypeError(const std::string& what) : std::runtime_error(what) {}
};

enum class ErrorKind { MalformedInput, TrailingBytes, DepthExceeded };

class DecodeError : public std::runtime_error {
 public:
  DecodeError(ErrorKind kind, const std::string& msg, std::size_t pos);
  ErrorKind kind() const noexcept { return kind_; }
  std::size_t position() const noexcept { return pos_; }

 private:
  ErrorKind kind_;
  std::size_t pos_;
};

struct DecodeOptions {
  // Strict decoding rejects out-of-order dictionary keys; canonical
  // re-encoding of strict input reproduces it byte for byte. Lenient
  // decoding accepts unsorted keys (they re-sort on encode). Duplicate
  // keys are rejected in both modes.
  bool strict = true;
  int max_depth = 64;
};

// Decodes one value; the whole input must be consumed.
BValue decode(std::string_view input, const DecodeOptions& opts = {});

// Canonical serialization: dict keys ascending, no leading zeros.
std::string encode(const BValue& value);

}  // namespace swarmshare::bencode
