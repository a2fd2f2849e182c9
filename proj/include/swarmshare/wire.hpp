#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "swarmshare/util.hpp"

namespace swarmshare::peer {

using util::Digest20;
using PeerId = std::array<std::uint8_t, 20>;

inline constexpr std::size_t kHandshakeLength = 68;
inline constexpr std::uint32_t kBlockLength = 16384;
// Largest legal frame body: piece id + index + begin + one block.
inline constexpr std::uint32_t kMaxFrameLength = kBlockLength + 13;
inline constexpr std::size_t kPipelineDepth = 8;

class WireError : public std::runtime_error {
 public:
  enum class Kind { BadMagic, UnknownId, LengthMismatch, OversizeFrame };

  WireError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct Handshake {
  Digest20 info_hash{};
  PeerId peer_id{};
};

// 68 bytes: 0x13, "BitTorrent protocol", 8 reserved zeros, info_hash,
// peer_id.
std::string encode_handshake(const Handshake& hs);
Handshake decode_handshake(std::string_view bytes);

// MSB-first piece bitmap; bit 0 of byte 0 is piece 0.
class Bitfield {
 public:
  Bitfield() = default;
  explicit Bitfield(std::size_t bits);
  // Rejects wrong byte counts and nonzero spare bits in the last byte.
  static Bitfield from_bytes(std::string_view bytes, std::size_t bits);

  bool test(std::size_t i) const;
  void set(std::size_t i);
  void reset(std::size_t i);
  std::size_t size() const { return bits_; }
  std::size_t count() const;
  bool all() const { return bits_ > 0 && count() == bits_; }
  bool none() const { return count() == 0; }
  std::string to_bytes() const;

  bool operator==(const Bitfield&) const = default;

 private:
  std::size_t bits_ = 0;
  std::vector<std::uint8_t> bytes_;
};

struct PeerMessage {
  enum class Kind : std::uint8_t {
    Choke = 0,
    Unchoke = 1,
    Interested = 2,
    NotInterested = 3,
    Have = 4,
    Bitfield = 5,
    Request = 6,
    Piece = 7,
    Cancel = 8,
    KeepAlive = 255,
  };

  Kind kind = Kind::KeepAlive;
  std::uint32_t index = 0;
  std::uint32_t begin = 0;
  std::uint32_t length = 0;
  std::string payload;  // bitfield bytes, or the block of a piece

  PeerMessage() = default;
  explicit PeerMessage(Kind k) : kind(k) {}

  static PeerMessage keep_alive() { return {}; }
  static PeerMessage choke() { return PeerMessage(Kind::Choke); }
  static PeerMessage unchoke() { return PeerMessage(Kind::Unchoke); }
  static PeerMessage interested() { return PeerMessage(Kind::Interested); }
  static PeerMessage not_interested() {
    return PeerMessage(Kind::NotInterested);
  }
  static PeerMessage have(std::uint32_t index);
  static PeerMessage bitfield(const class Bitfield& bf);
  static PeerMessage request(std::uint32_t index, std::uint32_t begin,
                             std::uint32_t length);
  static PeerMessage piece(std::uint32_t index, std::uint32_t begin,
                           std::string block);
  static PeerMessage cancel(std::uint32_t index, std::uint32_t begin,
                            std::uint32_t length);
};

// Complete wire bytes: 4-byte big-endian body length, then the body.
// A keep-alive frames to the bare prefix 00 00 00 00.
std::string frame_message(const PeerMessage& msg);

// Parses a frame body (the bytes after the length prefix). An empty
// body is a keep-alive.
PeerMessage parse_message(std::string_view body);

// Reads the 4-byte prefix and vets the declared body length.
std::uint32_t parse_frame_length(const std::uint8_t prefix[4]);

}  // namespace swarmshare::peer
