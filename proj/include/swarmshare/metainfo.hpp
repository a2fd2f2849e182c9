#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "swarmshare/bencode.hpp"
#include "swarmshare/util.hpp"

namespace swarmshare::metainfo {

using util::Digest20;

inline constexpr std::uint32_t kMinPieceLength = 16 * 1024;
inline constexpr std::uint32_t kMaxPieceLength = 16 * 1024 * 1024;
inline constexpr std::uint32_t kDefaultPieceLength = 256 * 1024;

bool valid_piece_length(std::uint64_t piece_length);

// Single-file torrent description.
struct Metainfo {
  std::string announce;
  std::string name;
  std::uint32_t piece_length = kDefaultPieceLength;
  std::vector<Digest20> pieces;
  std::uint64_t total_length = 0;
  std::vector<std::string> webseeds;

  std::size_t piece_count() const { return pieces.size(); }
  // Size of piece `index`; the last piece may be short.
  std::uint32_t piece_size(std::size_t index) const;
  std::uint64_t piece_offset(std::size_t index) const {
    return static_cast<std::uint64_t>(index) * piece_length;
  }
};

struct PieceReport {
  std::vector<bool> passed;
  std::uint64_t verified_bytes = 0;
  // False when the content length differs from the metainfo length.
  bool length_matches = true;

  bool all_passed() const;
};

class MetainfoError : public std::runtime_error {
 public:
  explicit MetainfoError(const std::string& what) : std::runtime_error(what) {}
};

class SchemaViolation : public MetainfoError {
 public:
  using MetainfoError::MetainfoError;
};

// Multi-file torrents and other unhandled layouts.
class UnsupportedShape : public MetainfoError {
 public:
  using MetainfoError::MetainfoError;
};

class ContentReadFailure : public MetainfoError {
 public:
  using MetainfoError::MetainfoError;
};

Metainfo build_metainfo(std::string_view content, std::string name,
                        std::uint32_t piece_length, std::string announce,
                        std::vector<std::string> webseeds = {});
// Streams the file piece by piece; never loads it whole.
Metainfo build_metainfo_from_file(const std::filesystem::path& content_path,
                                  std::string name, std::uint32_t piece_length,
                                  std::string announce,
                                  std::vector<std::string> webseeds = {});

// SHA-1 of the canonical bencoding of the info dictionary. This is the
// swarm identity; announce and url-list do not contribute.
Digest20 info_hash(const Metainfo& m);

bencode::BValue to_bvalue(const Metainfo& m);
std::string encode_metainfo(const Metainfo& m);
Metainfo parse_metainfo(std::string_view bytes);

PieceReport verify_content(const Metainfo& m, std::string_view content);
PieceReport verify_content_file(const Metainfo& m,
                                const std::filesystem::path& content_path);

}  // namespace swarmshare::metainfo
