#include "swarmshare/selector.hpp"

namespace swarmshare::peer {

namespace {

template <typename AvailOf>
std::optional<std::uint32_t> pick(std::size_t n, AvailOf avail_of,
                                  std::mt19937_64* rng) {
  std::uint32_t best_avail = 0;
  std::uint32_t best_index = 0;
  std::size_t tied = 0;
  for (std::uint32_t i = 0; i < n; ++i) {
    std::uint32_t avail = avail_of(i);
    if (avail == 0) continue;
    if (tied == 0 || avail < best_avail) {
      best_avail = avail;
      best_index = i;
      tied = 1;
    } else if (avail == best_avail) {
      ++tied;
      // Reservoir draw: each tied index ends up equally likely without
      // a second pass.
      if (rng &&
          std::uniform_int_distribution<std::size_t>(0, tied - 1)(*rng) == 0)
        best_index = i;
    }
  }
  if (tied == 0) return std::nullopt;
  return best_index;
}

}  // namespace

std::optional<std::uint32_t> select_next_piece(
    const Bitfield& have, const std::vector<std::uint32_t>& availability,
    std::mt19937_64* rng) {
  return pick(
      availability.size(),
      [&](std::uint32_t i) -> std::uint32_t {
        return have.test(i) ? 0 : availability[i];
      },
      rng);
}

std::optional<std::uint32_t> select_next_piece_from(
    const Bitfield& have, const Bitfield& remote,
    const std::vector<std::uint32_t>& availability, std::mt19937_64* rng) {
  return pick(
      availability.size(),
      [&](std::uint32_t i) -> std::uint32_t {
        if (have.test(i) || !remote.test(i)) return 0;
        // The remote holds the piece, so the count is at least one even
        // if the caller's tally lags.
        return std::max<std::uint32_t>(availability[i], 1);
      },
      rng);
}

}  // namespace swarmshare::peer
