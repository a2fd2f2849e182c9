#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "swarmshare/metainfo.hpp"

namespace swarmshare::webseed {

class WebSeedError : public std::runtime_error {
 public:
  explicit WebSeedError(const std::string& what) : std::runtime_error(what) {}
};

class HttpFailure : public WebSeedError {
 public:
  using WebSeedError::WebSeedError;
};

class CorruptPiece : public WebSeedError {
 public:
  using WebSeedError::WebSeedError;
};

// Object URL for a named payload on a mirror: a base ending in '/'
// gets the name appended; anything else already points at the object.
std::string webseed_url(const std::string& base, const std::string& name);

// Fetches one piece with an HTTP range request and checks its digest.
// Servers that ignore the Range header and return the whole object are
// tolerated; the piece is sliced out of the full body.
std::string fetch_piece(const metainfo::Metainfo& meta, const std::string& url,
                        std::uint32_t index, double timeout_s = 30.0);

}  // namespace swarmshare::webseed
