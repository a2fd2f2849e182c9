#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "swarmshare/wire.hpp"

namespace swarmshare::peer {

// Rarest-first piece choice. Candidates are pieces not in `have` with
// availability > 0; the lowest availability wins. Ties break to the
// lowest index, or uniformly at random when an rng is supplied so that
// symmetric fetchers spread over distinct pieces instead of marching
// in lockstep.
std::optional<std::uint32_t> select_next_piece(
    const Bitfield& have, const std::vector<std::uint32_t>& availability,
    std::mt19937_64* rng = nullptr);

// Same, restricted to pieces the remote side can actually supply.
std::optional<std::uint32_t> select_next_piece_from(
    const Bitfield& have, const Bitfield& remote,
    const std::vector<std::uint32_t>& availability,
    std::mt19937_64* rng = nullptr);

}  // namespace swarmshare::peer
