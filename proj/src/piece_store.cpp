#include "swarmshare/piece_store.hpp"

#include <algorithm>

namespace swarmshare::peer {

namespace {

std::uint32_t blocks_in(std::uint32_t piece_size) {
  return (piece_size + kBlockLength - 1) / kBlockLength;
}

}  // namespace

PieceStore::PieceStore(metainfo::Metainfo meta)
    : meta_(std::move(meta)),
      content_(meta_.total_length, '\0'),
      have_(meta_.piece_count()),
      progress_(meta_.piece_count()) {
  for (std::size_t i = 0; i < meta_.piece_count(); ++i)
    progress_[i].blocks.assign(blocks_in(meta_.piece_size(i)), false);
}

PieceStore::PieceStore(metainfo::Metainfo meta, std::string content)
    : meta_(std::move(meta)),
      content_(std::move(content)),
      have_(meta_.piece_count()),
      progress_(meta_.piece_count()) {
  metainfo::PieceReport rep = metainfo::verify_content(meta_, content_);
  if (!rep.all_passed() || !rep.length_matches)
    throw StoreError("seed content does not match the piece digests");
  for (std::size_t i = 0; i < meta_.piece_count(); ++i) have_.set(i);
}

Bitfield PieceStore::have() const {
  std::lock_guard<std::mutex> lock(mu_);
  return have_;
}

bool PieceStore::has_piece(std::uint32_t index) const {
  std::lock_guard<std::mutex> lock(mu_);
  return have_.test(index);
}

bool PieceStore::complete() const {
  std::lock_guard<std::mutex> lock(mu_);
  return have_.count() == meta_.piece_count();
}

std::size_t PieceStore::verified_count() const {
  std::lock_guard<std::mutex> lock(mu_);
  return have_.count();
}

std::uint64_t PieceStore::verified_bytes() const {
  std::lock_guard<std::mutex> lock(mu_);
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < meta_.piece_count(); ++i)
    if (have_.test(i)) total += meta_.piece_size(i);
  return total;
}

std::uint64_t PieceStore::corrupt_count() const {
  std::lock_guard<std::mutex> lock(mu_);
  return corrupt_;
}

BlockResult PieceStore::finish_piece_locked(std::uint32_t index) {
  std::uint64_t off = meta_.piece_offset(index);
  std::string_view piece(content_.data() + off, meta_.piece_size(index));
  if (util::sha1(piece) == meta_.pieces[index]) {
    have_.set(index);
    return BlockResult::PieceVerified;
  }
  progress_[index].blocks.assign(progress_[index].blocks.size(), false);
  progress_[index].received = 0;
  ++corrupt_;
  return BlockResult::PieceCorrupt;
}

BlockResult PieceStore::on_block(std::uint32_t index, std::uint32_t begin,
                                 std::string_view data) {
  std::lock_guard<std::mutex> lock(mu_);
  if (index >= meta_.piece_count())
    throw OutOfBounds("piece index " + std::to_string(index) +
                      " out of range");
  if (have_.test(index))
    throw StoreError("piece " + std::to_string(index) + " already verified");
  std::uint32_t size = meta_.piece_size(index);
  if (begin % kBlockLength != 0 || begin >= size)
    throw OutOfBounds("block offset " + std::to_string(begin) +
                      " not on a block boundary of piece " +
                      std::to_string(index));
  std::uint32_t want = std::min(kBlockLength, size - begin);
  if (data.size() != want)
    throw OutOfBounds("block at " + std::to_string(begin) + " must be " +
                      std::to_string(want) + " bytes, got " +
                      std::to_string(data.size()));
  Progress& prog = progress_[index];
  std::uint32_t slot = begin / kBlockLength;
  if (!prog.blocks[slot]) {
    std::copy(data.begin(), data.end(),
              content_.begin() +
                  static_cast<std::ptrdiff_t>(meta_.piece_offset(index) + begin));
    prog.blocks[slot] = true;
    ++prog.received;
  }
  if (prog.received < prog.blocks.size()) return BlockResult::Incomplete;
  return finish_piece_locked(index);
}

BlockResult PieceStore::store_piece(std::uint32_t index,
                                    std::string_view data) {
  std::lock_guard<std::mutex> lock(mu_);
  if (index >= meta_.piece_count())
    throw OutOfBounds("piece index " + std::to_string(index) +
                      " out of range");
  if (have_.test(index))
    throw StoreError("piece " + std::to_string(index) + " already verified");
  if (data.size() != meta_.piece_size(index))
    throw OutOfBounds("piece " + std::to_string(index) + " must be " +
                      std::to_string(meta_.piece_size(index)) +
                      " bytes, got " + std::to_string(data.size()));
  std::copy(data.begin(), data.end(),
            content_.begin() +
                static_cast<std::ptrdiff_t>(meta_.piece_offset(index)));
  Progress& prog = progress_[index];
  prog.blocks.assign(prog.blocks.size(), true);
  prog.received = static_cast<std::uint32_t>(prog.blocks.size());
  return finish_piece_locked(index);
}

std::string PieceStore::read_block(std::uint32_t index, std::uint32_t begin,
                                   std::uint32_t length) const {
  std::lock_guard<std::mutex> lock(mu_);
  if (index >= meta_.piece_count())
    throw OutOfBounds("piece index " + std::to_string(index) +
                      " out of range");
  std::uint32_t size = meta_.piece_size(index);
  if (length == 0 || begin >= size || length > size - begin)
    throw OutOfBounds("block [" + std::to_string(begin) + ", +" +
                      std::to_string(length) + ") outside piece " +
                      std::to_string(index));
  if (!have_.test(index))
    throw StoreError("piece " + std::to_string(index) + " not verified yet");
  return content_.substr(meta_.piece_offset(index) + begin, length);
}

const std::string& PieceStore::content() const { return content_; }

}  // namespace swarmshare::peer
