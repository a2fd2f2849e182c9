#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <limits>
#include <random>
#include <string>

#include "swarmshare/bencode.hpp"

using namespace swarmshare::bencode;

namespace {

// Random value generator for the property suites. Sizes are kept small;
// the point is structural coverage, not volume per value.
BValue random_value(std::mt19937_64& rng, int depth) {
  std::uniform_int_distribution<int> kind_dist(0, depth >= 4 ? 1 : 3);
  switch (kind_dist(rng)) {
    case 0: {
      std::uniform_int_distribution<std::int64_t> d(
          std::numeric_limits<std::int64_t>::min(),
          std::numeric_limits<std::int64_t>::max());
      return BValue(d(rng));
    }
    case 1: {
      std::uniform_int_distribution<int> len(0, 12);
      std::uniform_int_distribution<int> byte(0, 255);
      std::string s(static_cast<std::size_t>(len(rng)), '\0');
      for (char& c : s) c = static_cast<char>(byte(rng));
      return BValue(std::move(s));
    }
    case 2: {
      std::uniform_int_distribution<int> len(0, 4);
      BList list;
      int n = len(rng);
      for (int i = 0; i < n; ++i) list.push_back(random_value(rng, depth + 1));
      return BValue(std::move(list));
    }
    default: {
      std::uniform_int_distribution<int> len(0, 4);
      std::uniform_int_distribution<int> klen(0, 8);
      std::uniform_int_distribution<int> byte(0, 255);
      BDict dict;
      int n = len(rng);
      for (int i = 0; i < n; ++i) {
        std::string key(static_cast<std::size_t>(klen(rng)), '\0');
        for (char& c : key) c = static_cast<char>(byte(rng));
        dict.emplace(std::move(key), random_value(rng, depth + 1));
      }
      return BValue(std::move(dict));
    }
  }
}

}  // namespace

TEST_CASE("golden encodings") {
  CHECK(encode(BValue(0)) == "i0e");
  CHECK(encode(BValue(-3)) == "i-3e");
  CHECK(encode(BValue(std::int64_t{1234567890123})) == "i1234567890123e");
  CHECK(encode(BValue("")) == "0:");
  CHECK(encode(BValue("spam")) == "4:spam");
  CHECK(encode(BValue(std::string("a\0b", 3))) == std::string("3:a\0b", 5));
  CHECK(encode(BValue(BList{BValue("spam"), BValue(42)})) == "l4:spami42ee");
  BDict d;
  d.emplace("cow", BValue("moo"));
  d.emplace("spam", BValue("eggs"));
  CHECK(encode(BValue(d)) == "d3:cow3:moo4:spam4:eggse");
  CHECK(encode(BValue(BDict{})) == "de");
  CHECK(encode(BValue(BList{})) == "le");
}

TEST_CASE("golden decodings") {
  CHECK(decode("i0e").as_int() == 0);
  CHECK(decode("i-42e").as_int() == -42);
  CHECK(decode("4:spam").as_bytes() == "spam");
  CHECK(decode("0:").as_bytes() == "");
  const BValue v = decode("d3:bari1e3:fooli2ei3eee");
  CHECK(v.as_dict().at("bar").as_int() == 1);
  CHECK(v.as_dict().at("foo").as_list().size() == 2);
}

TEST_CASE("int64 bounds round-trip") {
  const std::int64_t lo = std::numeric_limits<std::int64_t>::min();
  const std::int64_t hi = std::numeric_limits<std::int64_t>::max();
  CHECK(decode(encode(BValue(lo))).as_int() == lo);
  CHECK(decode(encode(BValue(hi))).as_int() == hi);
  CHECK_THROWS_AS(decode("i9223372036854775808e"), DecodeError);
  CHECK_THROWS_AS(decode("i-9223372036854775809e"), DecodeError);
  CHECK(decode("i-9223372036854775808e").as_int() == lo);
}

TEST_CASE("malformed inputs raise typed errors") {
  auto kind_of = [](std::string_view in, const DecodeOptions& opts = {}) {
    try {
      decode(in, opts);
    } catch (const DecodeError& e) {
      return e.kind();
    }
    FAIL("expected DecodeError");
    return ErrorKind::MalformedInput;
  };
  CHECK(kind_of("") == ErrorKind::MalformedInput);
  CHECK(kind_of("i01e") == ErrorKind::MalformedInput);
  CHECK(kind_of("i-0e") == ErrorKind::MalformedInput);
  CHECK(kind_of("ie") == ErrorKind::MalformedInput);
  CHECK(kind_of("i12") == ErrorKind::MalformedInput);
  CHECK(kind_of("01:a") == ErrorKind::MalformedInput);
  CHECK(kind_of("5:abc") == ErrorKind::MalformedInput);
  CHECK(kind_of("4spam") == ErrorKind::MalformedInput);
  CHECK(kind_of("x") == ErrorKind::MalformedInput);
  CHECK(kind_of("l") == ErrorKind::MalformedInput);
  CHECK(kind_of("di1ei2ee") == ErrorKind::MalformedInput);
  CHECK(kind_of("i0ei0e") == ErrorKind::TrailingBytes);
  CHECK(kind_of("4:spamx") == ErrorKind::TrailingBytes);
  CHECK(kind_of("18446744073709551616:a") == ErrorKind::MalformedInput);
}

TEST_CASE("dictionary key ordering") {
  // Strict decoding rejects unsorted keys; lenient re-sorts them.
  CHECK_THROWS_AS(decode("d4:spam4:eggs3:cow3:mooe"), DecodeError);
  DecodeOptions lenient;
  lenient.strict = false;
  const BValue v = decode("d4:spam4:eggs3:cow3:mooe", lenient);
  CHECK(encode(v) == "d3:cow3:moo4:spam4:eggse");
  // Duplicate keys are rejected in both modes.
  CHECK_THROWS_AS(decode("d1:ai1e1:ai2ee"), DecodeError);
  CHECK_THROWS_AS(decode("d1:ai1e1:ai2ee", lenient), DecodeError);
  // Raw byte order, not numeric or locale order.
  CHECK(encode(decode("d2:101:a1:91:be")) == "d2:101:a1:91:be");
}

TEST_CASE("nesting depth cap") {
  std::string deep;
  for (int i = 0; i < 64; ++i) deep += 'l';
  std::string closed = deep;
  for (int i = 0; i < 64; ++i) closed += 'e';
  CHECK(decode(closed).is_list());
  std::string over = "l" + closed + "e";
  try {
    decode(over);
    FAIL("expected DepthExceeded");
  } catch (const DecodeError& e) {
    CHECK(e.kind() == ErrorKind::DepthExceeded);
  }
}

TEST_CASE("round-trip property: decode(encode(v)) == v") {
  std::mt19937_64 rng(0x5eed0001);
  for (int i = 0; i < 10000; ++i) {
    BValue v = random_value(rng, 0);
    std::string bytes = encode(v);
    CHECK(decode(bytes) == v);
  }
}

TEST_CASE("canonicity property: encode(decode(bytes)) == bytes") {
  std::mt19937_64 rng(0x5eed0002);
  for (int i = 0; i < 10000; ++i) {
    std::string bytes = encode(random_value(rng, 0));
    CHECK(encode(decode(bytes)) == bytes);
  }
}

TEST_CASE("fuzz: mutated inputs never crash, only DecodeError") {
  std::mt19937_64 rng(0x5eed0003);
  std::uniform_int_distribution<int> byte(0, 255);
  std::size_t decoded = 0, rejected = 0;
  for (int i = 0; i < 100000; ++i) {
    std::string bytes = encode(random_value(rng, 0));
    std::uniform_int_distribution<std::size_t> pos(0, bytes.size() - 1);
    std::uniform_int_distribution<int> edits(1, 4);
    int n = edits(rng);
    for (int k = 0; k < n && !bytes.empty(); ++k) {
      switch (byte(rng) % 3) {
        case 0: bytes[pos(rng) % bytes.size()] = static_cast<char>(byte(rng)); break;
        case 1: bytes.erase(pos(rng) % bytes.size(), 1); break;
        default: bytes.insert(pos(rng) % (bytes.size() + 1), 1,
                              static_cast<char>(byte(rng)));
      }
    }
    try {
      decode(bytes);
      ++decoded;
    } catch (const DecodeError&) {
      ++rejected;
    }
    // Anything else escapes and fails the test by crashing it.
  }
  CHECK(decoded + rejected == 100000);
  CHECK(rejected > 0);
}

TEST_CASE("accessor type errors") {
  CHECK_THROWS_AS(decode("i1e").as_bytes(), TypeError);
  CHECK_THROWS_AS(decode("1:a").as_int(), TypeError);
  CHECK_THROWS_AS(decode("le").as_dict(), TypeError);
  CHECK_THROWS_AS(decode("de").as_list(), TypeError);
}
