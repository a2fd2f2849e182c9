#include "swarmshare/webseed.hpp"

#include <httplib.h>

#include "swarmshare/util.hpp"

namespace swarmshare::webseed {

std::string webseed_url(const std::string& base, const std::string& name) {
  if (!base.empty() && base.back() == '/') return base + util::percent_encode(name);
  return base;
}

std::string fetch_piece(const metainfo::Metainfo& meta, const std::string& url,
                        std::uint32_t index, double timeout_s) {
  if (index >= meta.piece_count())
    throw WebSeedError("piece index " + std::to_string(index) +
                       " out of range");
  std::uint64_t offset = meta.piece_offset(index);
  std::uint64_t size = meta.piece_size(index);

  auto parsed = util::parse_http_url(webseed_url(url, meta.name));
  if (!parsed) throw HttpFailure("bad mirror URL: " + url);

  httplib::Client client(parsed->host, parsed->port);
  client.set_connection_timeout(std::chrono::duration<double>(timeout_s));
  client.set_read_timeout(std::chrono::duration<double>(timeout_s));

  httplib::Headers headers{
      {"Range", "bytes=" + std::to_string(offset) + "-" +
                    std::to_string(offset + size - 1)}};
  auto res = client.Get(parsed->path, headers);
  if (!res) throw HttpFailure("mirror gave no response: " + url);

  std::string piece;
  if (res->status == 206) {
    if (res->body.size() != size)
      throw HttpFailure("mirror range reply is " +
                        std::to_string(res->body.size()) + " bytes, wanted " +
                        std::to_string(size));
    piece = std::move(res->body);
  } else if (res->status == 200) {
    if (res->body.size() < offset + size)
      throw HttpFailure("mirror object too short for piece " +
                        std::to_string(index));
    piece = res->body.substr(offset, size);
  } else {
    throw HttpFailure("mirror returned HTTP " + std::to_string(res->status));
  }

  if (util::sha1(piece) != meta.pieces[index])
    throw CorruptPiece("piece " + std::to_string(index) +
                       " from mirror fails its digest");
  return piece;
}

}  // namespace swarmshare::webseed
