#include "swarmshare/wire.hpp"

#include <algorithm>

namespace swarmshare::peer {

namespace {

constexpr std::string_view kProtocol = "BitTorrent protocol";

void append_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v >> 24 & 0xFF));
  out.push_back(static_cast<char>(v >> 16 & 0xFF));
  out.push_back(static_cast<char>(v >> 8 & 0xFF));
  out.push_back(static_cast<char>(v & 0xFF));
}

std::uint32_t read_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) << 24 |
         static_cast<std::uint32_t>(p[1]) << 16 |
         static_cast<std::uint32_t>(p[2]) << 8 | static_cast<std::uint32_t>(p[3]);
}

std::uint32_t read_u32(std::string_view s, std::size_t off) {
  return read_u32(reinterpret_cast<const std::uint8_t*>(s.data()) + off);
}

}  // namespace

std::string encode_handshake(const Handshake& hs) {
  std::string out;
  out.reserve(kHandshakeLength);
  out.push_back(static_cast<char>(kProtocol.size()));
  out.append(kProtocol);
  out.append(8, '\0');
  out.append(reinterpret_cast<const char*>(hs.info_hash.data()),
             hs.info_hash.size());
  out.append(reinterpret_cast<const char*>(hs.peer_id.data()),
             hs.peer_id.size());
  return out;
}

Handshake decode_handshake(std::string_view bytes) {
  if (bytes.size() != kHandshakeLength)
    throw WireError(WireError::Kind::LengthMismatch,
                    "handshake must be 68 bytes, got " +
                        std::to_string(bytes.size()));
  if (static_cast<std::uint8_t>(bytes[0]) != kProtocol.size() ||
      bytes.substr(1, kProtocol.size()) != kProtocol)
    throw WireError(WireError::Kind::BadMagic,
                    "handshake does not open with the protocol string");
  Handshake hs;
  const auto* p = reinterpret_cast<const std::uint8_t*>(bytes.data());
  std::copy_n(p + 28, 20, hs.info_hash.begin());
  std::copy_n(p + 48, 20, hs.peer_id.begin());
  return hs;
}

Bitfield::Bitfield(std::size_t bits) : bits_(bits), bytes_((bits + 7) / 8, 0) {}

Bitfield Bitfield::from_bytes(std::string_view bytes, std::size_t bits) {
  if (bytes.size() != (bits + 7) / 8)
    throw WireError(WireError::Kind::LengthMismatch,
                    "bitfield for " + std::to_string(bits) + " pieces needs " +
                        std::to_string((bits + 7) / 8) + " bytes, got " +
                        std::to_string(bytes.size()));
  Bitfield bf(bits);
  std::copy(bytes.begin(), bytes.end(),
            reinterpret_cast<char*>(bf.bytes_.data()));
  if (bits % 8 != 0 && !bf.bytes_.empty()) {
    std::uint8_t spare = bf.bytes_.back() &
                         static_cast<std::uint8_t>(0xFF >> (bits % 8));
    if (spare)
      throw WireError(WireError::Kind::LengthMismatch,
                      "bitfield has spare bits set");
  }
  return bf;
}

bool Bitfield::test(std::size_t i) const {
  return i < bits_ && (bytes_[i / 8] >> (7 - i % 8) & 1);
}

void Bitfield::set(std::size_t i) {
  if (i < bits_) bytes_[i / 8] |= static_cast<std::uint8_t>(1 << (7 - i % 8));
}

void Bitfield::reset(std::size_t i) {
  if (i < bits_) bytes_[i / 8] &= static_cast<std::uint8_t>(~(1 << (7 - i % 8)));
}

std::size_t Bitfield::count() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < bits_; ++i)
    if (test(i)) ++n;
  return n;
}

std::string Bitfield::to_bytes() const {
  return std::string(reinterpret_cast<const char*>(bytes_.data()),
                     bytes_.size());
}

PeerMessage PeerMessage::have(std::uint32_t index) {
  PeerMessage m(Kind::Have);
  m.index = index;
  return m;
}

PeerMessage PeerMessage::bitfield(const class Bitfield& bf) {
  PeerMessage m(Kind::Bitfield);
  m.payload = bf.to_bytes();
  return m;
}

PeerMessage PeerMessage::request(std::uint32_t index, std::uint32_t begin,
                                 std::uint32_t length) {
  PeerMessage m(Kind::Request);
  m.index = index;
  m.begin = begin;
  m.length = length;
  return m;
}

PeerMessage PeerMessage::piece(std::uint32_t index, std::uint32_t begin,
                               std::string block) {
  PeerMessage m(Kind::Piece);
  m.index = index;
  m.begin = begin;
  m.payload = std::move(block);
  return m;
}

PeerMessage PeerMessage::cancel(std::uint32_t index, std::uint32_t begin,
                                std::uint32_t length) {
  PeerMessage m(Kind::Cancel);
  m.index = index;
  m.begin = begin;
  m.length = length;
  return m;
}

std::string frame_message(const PeerMessage& msg) {
  std::string body;
  if (msg.kind != PeerMessage::Kind::KeepAlive)
    body.push_back(static_cast<char>(msg.kind));
  switch (msg.kind) {
    case PeerMessage::Kind::KeepAlive:
    case PeerMessage::Kind::Choke:
    case PeerMessage::Kind::Unchoke:
    case PeerMessage::Kind::Interested:
    case PeerMessage::Kind::NotInterested:
      break;
    case PeerMessage::Kind::Have:
      append_u32(body, msg.index);
      break;
    case PeerMessage::Kind::Bitfield:
      body.append(msg.payload);
      break;
    case PeerMessage::Kind::Request:
    case PeerMessage::Kind::Cancel:
      append_u32(body, msg.index);
      append_u32(body, msg.begin);
      append_u32(body, msg.length);
      break;
    case PeerMessage::Kind::Piece:
      append_u32(body, msg.index);
      append_u32(body, msg.begin);
      body.append(msg.payload);
      break;
  }
  std::string out;
  out.reserve(4 + body.size());
  append_u32(out, static_cast<std::uint32_t>(body.size()));
  out.append(body);
  return out;
}

PeerMessage parse_message(std::string_view body) {
  if (body.empty()) return PeerMessage::keep_alive();
  auto id = static_cast<std::uint8_t>(body[0]);
  if (id > 8)
    throw WireError(WireError::Kind::UnknownId,
                    "unknown message id " + std::to_string(id));
  auto kind = static_cast<PeerMessage::Kind>(id);
  auto expect = [&](std::size_t n) {
    if (body.size() != n)
      throw WireError(WireError::Kind::LengthMismatch,
                      "message id " + std::to_string(id) + " must be " +
                          std::to_string(n) + " bytes, got " +
                          std::to_string(body.size()));
  };
  PeerMessage m(kind);
  switch (kind) {
    case PeerMessage::Kind::Choke:
    case PeerMessage::Kind::Unchoke:
    case PeerMessage::Kind::Interested:
    case PeerMessage::Kind::NotInterested:
      expect(1);
      break;
    case PeerMessage::Kind::Have:
      expect(5);
      m.index = read_u32(body, 1);
      break;
    case PeerMessage::Kind::Bitfield:
      m.payload = body.substr(1);
      break;
    case PeerMessage::Kind::Request:
    case PeerMessage::Kind::Cancel:
      expect(13);
      m.index = read_u32(body, 1);
      m.begin = read_u32(body, 5);
      m.length = read_u32(body, 9);
      break;
    case PeerMessage::Kind::Piece:
      if (body.size() < 9)
        throw WireError(WireError::Kind::LengthMismatch,
                        "piece message shorter than its header");
      m.index = read_u32(body, 1);
      m.begin = read_u32(body, 5);
      m.payload = body.substr(9);
      break;
    case PeerMessage::Kind::KeepAlive:
      break;
  }
  return m;
}

std::uint32_t parse_frame_length(const std::uint8_t prefix[4]) {
  std::uint32_t len = read_u32(prefix);
  if (len > kMaxFrameLength)
    throw WireError(WireError::Kind::OversizeFrame,
                    "frame of " + std::to_string(len) +
                        " bytes exceeds the " +
                        std::to_string(kMaxFrameLength) + " byte cap");
  return len;
}

}  // namespace swarmshare::peer
