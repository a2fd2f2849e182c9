#pragma once

#include <cstdint>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "swarmshare/metainfo.hpp"
#include "swarmshare/wire.hpp"

namespace swarmshare::peer {

enum class BlockResult { Incomplete, PieceVerified, PieceCorrupt };

class StoreError : public std::runtime_error {
 public:
  explicit StoreError(const std::string& what) : std::runtime_error(what) {}
};

class OutOfBounds : public StoreError {
 public:
  using StoreError::StoreError;
};

// In-memory payload buffer with per-piece verification state.
// Thread-safe, but each unverified piece must have a single writer;
// callers enforce that by claiming pieces before feeding blocks.
class PieceStore {
 public:
  // Empty store for a fetch in progress.
  explicit PieceStore(metainfo::Metainfo meta);
  // Pre-verified store for seeding. Throws StoreError when the content
  // does not match the piece digests.
  PieceStore(metainfo::Metainfo meta, std::string content);

  const metainfo::Metainfo& meta() const { return meta_; }

  Bitfield have() const;
  bool has_piece(std::uint32_t index) const;
  bool complete() const;
  std::size_t verified_count() const;
  std::uint64_t verified_bytes() const;
  std::uint64_t corrupt_count() const;

  // Feeds one received block; begin must sit on a block boundary and
  // the data must fill it exactly. A completed piece is hash-checked:
  // on mismatch the piece resets to empty and PieceCorrupt is returned.
  BlockResult on_block(std::uint32_t index, std::uint32_t begin,
                       std::string_view data);

  // Installs a whole piece at once (the HTTP mirror path).
  BlockResult store_piece(std::uint32_t index, std::string_view data);

  // Reads from a verified piece for upload.
  std::string read_block(std::uint32_t index, std::uint32_t begin,
                         std::uint32_t length) const;

  // Assembled payload; only meaningful once complete().
  const std::string& content() const;

 private:
  struct Progress {
    std::vector<bool> blocks;
    std::uint32_t received = 0;
  };

  BlockResult finish_piece_locked(std::uint32_t index);

  metainfo::Metainfo meta_;
  std::string content_;
  Bitfield have_;
  std::vector<Progress> progress_;
  std::uint64_t corrupt_ = 0;
  mutable std::mutex mu_;
};

}  // namespace swarmshare::peer
