#include "swarmshare/bencode.hpp"

#include <limits>

namespace swarmshare::bencode {

BValue::BValue(std::uint64_t i) {
  if (i > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max()))
    throw TypeError("integer out of 64-bit signed range");
  v_ = static_cast<std::int64_t>(i);
}

std::int64_t BValue::as_int() const {
  if (!is_int()) throw TypeError("BValue: not an integer");
  return std::get<std::int64_t>(v_);
}

const std::string& BValue::as_bytes() const {
  if (!is_bytes()) throw TypeError("BValue: not a byte string");
  return std::get<std::string>(v_);
}

const BList& BValue::as_list() const {
  if (!is_list()) throw TypeError("BValue: not a list");
  return std::get<BList>(v_);
}

const BDict& BValue::as_dict() const {
  if (!is_dict()) throw TypeError("BValue: not a dictionary");
  return std::get<BDict>(v_);
}

BList& BValue::as_list() {
  if (!is_list()) throw TypeError("BValue: not a list");
  return std::get<BList>(v_);
}

BDict& BValue::as_dict() {
  if (!is_dict()) throw TypeError("BValue: not a dictionary");
  return std::get<BDict>(v_);
}

DecodeError::DecodeError(ErrorKind kind, const std::string& msg,
                         std::size_t pos)
    : std::runtime_error(msg + " at offset " + std::to_string(pos)),
      kind_(kind),
      pos_(pos) {}

namespace {

class Decoder {
 public:
  Decoder(std::string_view input, const DecodeOptions& opts)
      : in_(input), opts_(opts) {}

  BValue run() {
    if (in_.empty())
      throw DecodeError(ErrorKind::MalformedInput, "empty input", 0);
    BValue v = parse_value(0);
    if (pos_ != in_.size())
      throw DecodeError(ErrorKind::TrailingBytes,
                        "trailing bytes after value", pos_);
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw DecodeError(ErrorKind::MalformedInput, msg, pos_);
  }

  char peek() const {
    if (pos_ >= in_.size()) fail("unexpected end of input");
    return in_[pos_];
  }

  char take() {
    char c = peek();
    ++pos_;
    return c;
  }

  void expect(char c, const char* what) {
    if (take() != c) {
      --pos_;
      fail(what);
    }
  }

  BValue parse_value(int depth) {
    char c = peek();
    if (c == 'i') return parse_int();
    if (c == 'l') return parse_list(depth);
    if (c == 'd') return parse_dict(depth);
    if (c >= '0' && c <= '9') return BValue(parse_bytes());
    fail("invalid value prefix");
  }

  BValue parse_int() {
    expect('i', "expected 'i'");
    bool negative = false;
    if (peek() == '-') {
      ++pos_;
      negative = true;
    }
    char first = peek();
    if (first < '0' || first > '9') fail("integer needs digits");
    if (first == '0') {
      ++pos_;
      if (peek() != 'e') fail("leading zero in integer");
      ++pos_;
      if (negative) {
        --pos_;
        fail("negative zero");
      }
      return BValue(std::int64_t{0});
    }
    std::uint64_t mag = 0;
    while (pos_ < in_.size() && in_[pos_] >= '0' && in_[pos_] <= '9') {
      std::uint64_t digit = static_cast<std::uint64_t>(in_[pos_] - '0');
      if (mag > (std::numeric_limits<std::uint64_t>::max() - digit) / 10)
        fail("integer overflows 64 bits");
      mag = mag * 10 + digit;
      ++pos_;
    }
    expect('e', "unterminated integer");
    constexpr std::uint64_t max_pos =
        static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max());
    if (negative) {
      if (mag > max_pos + 1) fail("integer overflows 64 bits");
      if (mag == max_pos + 1)
        return BValue(std::numeric_limits<std::int64_t>::min());
      return BValue(-static_cast<std::int64_t>(mag));
    }
    if (mag > max_pos) fail("integer overflows 64 bits");
    return BValue(static_cast<std::int64_t>(mag));
  }

  std::string parse_bytes() {
    char first = peek();
    if (first < '0' || first > '9') fail("expected string length");
    std::uint64_t len = 0;
    if (first == '0') {
      ++pos_;
      if (peek() != ':') fail("leading zero in string length");
    } else {
      while (pos_ < in_.size() && in_[pos_] >= '0' && in_[pos_] <= '9') {
        std::uint64_t digit = static_cast<std::uint64_t>(in_[pos_] - '0');
        if (len > (std::numeric_limits<std::uint64_t>::max() - digit) / 10)
          fail("string length overflow");
        len = len * 10 + digit;
        ++pos_;
      }
    }
    expect(':', "expected ':' after string length");
    if (len > in_.size() - pos_) fail("string length exceeds input");
    std::string out(in_.substr(pos_, static_cast<std::size_t>(len)));
    pos_ += static_cast<std::size_t>(len);
    return out;
  }

  void check_depth(int depth) {
    if (depth >= opts_.max_depth)
      throw DecodeError(ErrorKind::DepthExceeded, "nesting too deep", pos_);
  }

  BValue parse_list(int depth) {
    check_depth(depth);
    expect('l', "expected 'l'");
    BList items;
    while (peek() != 'e') items.push_back(parse_value(depth + 1));
    ++pos_;
    return BValue(std::move(items));
  }

  BValue parse_dict(int depth) {
    check_depth(depth);
    expect('d', "expected 'd'");
    BDict dict;
    std::string prev_key;
    bool have_prev = false;
    while (peek() != 'e') {
      char c = peek();
      if (c < '0' || c > '9') fail("dictionary key must be a byte string");
      std::string key = parse_bytes();
      if (opts_.strict && have_prev && key < prev_key)
        fail("dictionary keys out of order");
      if (dict.count(key)) fail("duplicate dictionary key");
      BValue val = parse_value(depth + 1);
      prev_key = key;
      have_prev = true;
      dict.emplace(std::move(key), std::move(val));
    }
    ++pos_;
    return BValue(std::move(dict));
  }

  std::string_view in_;
  DecodeOptions opts_;
  std::size_t pos_ = 0;
};

void encode_to(const BValue& v, std::string& out) {
  if (v.is_int()) {
    out.push_back('i');
    out += std::to_string(v.as_int());
    out.push_back('e');
  } else if (v.is_bytes()) {
    const std::string& s = v.as_bytes();
    out += std::to_string(s.size());
    out.push_back(':');
    out += s;
  } else if (v.is_list()) {
    out.push_back('l');
    for (const BValue& item : v.as_list()) encode_to(item, out);
    out.push_back('e');
  } else {
    out.push_back('d');
    for (const auto& [key, val] : v.as_dict()) {
      out += std::to_string(key.size());
      out.push_back(':');
      out += key;
      encode_to(val, out);
    }
    out.push_back('e');
  }
}

}  // namespace

BValue decode(std::string_view input, const DecodeOptions& opts) {
  return Decoder(input, opts).run();
}

std::string encode(const BValue& value) {
  std::string out;
  out.reserve(128);
  encode_to(value, out);
  return out;
}

}  // namespace swarmshare::bencode
