#include "swarmshare/metainfo.hpp"

#include <fstream>

namespace swarmshare::metainfo {

namespace {

std::uint64_t piece_count_for(std::uint64_t total, std::uint64_t piece_length) {
  return (total + piece_length - 1) / piece_length;
}

}  // namespace

bool valid_piece_length(std::uint64_t piece_length) {
  if (piece_length < kMinPieceLength || piece_length > kMaxPieceLength)
    return false;
  return (piece_length & (piece_length - 1)) == 0;
}

std::uint32_t Metainfo::piece_size(std::size_t index) const {
  std::uint64_t start = piece_offset(index);
  std::uint64_t end = std::min<std::uint64_t>(start + piece_length,
                                              total_length);
  return static_cast<std::uint32_t>(end - start);
}

bool PieceReport::all_passed() const {
  if (!length_matches) return false;
  for (bool ok : passed)
    if (!ok) return false;
  return true;
}

Metainfo build_metainfo(std::string_view content, std::string name,
                        std::uint32_t piece_length, std::string announce,
                        std::vector<std::string> webseeds) {
  if (!valid_piece_length(piece_length))
    throw MetainfoError("piece length must be a power of two in [16 KiB, 16 MiB]");
  Metainfo m;
  m.announce = std::move(announce);
  m.name = std::move(name);
  m.piece_length = piece_length;
  m.total_length = content.size();
  m.webseeds = std::move(webseeds);
  for (std::size_t off = 0; off < content.size(); off += piece_length)
    m.pieces.push_back(util::sha1(content.substr(off, piece_length)));
  return m;
}

Metainfo build_metainfo_from_file(const std::filesystem::path& content_path,
                                  std::string name, std::uint32_t piece_length,
                                  std::string announce,
                                  std::vector<std::string> webseeds) {
  if (!valid_piece_length(piece_length))
    throw MetainfoError("piece length must be a power of two in [16 KiB, 16 MiB]");
  std::ifstream in(content_path, std::ios::binary);
  if (!in)
    throw ContentReadFailure("cannot open " + content_path.string());
  Metainfo m;
  m.announce = std::move(announce);
  m.name = std::move(name);
  m.piece_length = piece_length;
  m.webseeds = std::move(webseeds);
  std::string buf(piece_length, '\0');
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    std::streamsize got = in.gcount();
    if (got <= 0) break;
    m.total_length += static_cast<std::uint64_t>(got);
    m.pieces.push_back(
        util::sha1(std::string_view(buf.data(), static_cast<std::size_t>(got))));
  }
  if (in.bad())
    throw ContentReadFailure("read error on " + content_path.string());
  return m;
}

static bencode::BValue info_bvalue(const Metainfo& m) {
  std::string pieces_blob;
  pieces_blob.reserve(m.pieces.size() * 20);
  for (const Digest20& d : m.pieces)
    pieces_blob.append(reinterpret_cast<const char*>(d.data()), d.size());
  bencode::BDict info;
  info.emplace("length", bencode::BValue(static_cast<std::int64_t>(m.total_length)));
  info.emplace("name", bencode::BValue(m.name));
  info.emplace("piece length",
               bencode::BValue(static_cast<std::int64_t>(m.piece_length)));
  info.emplace("pieces", bencode::BValue(std::move(pieces_blob)));
  return bencode::BValue(std::move(info));
}

Digest20 info_hash(const Metainfo& m) {
  return util::sha1(bencode::encode(info_bvalue(m)));
}

bencode::BValue to_bvalue(const Metainfo& m) {
  bencode::BDict top;
  top.emplace("announce", bencode::BValue(m.announce));
  top.emplace("info", info_bvalue(m));
  if (!m.webseeds.empty()) {
    bencode::BList urls;
    for (const std::string& u : m.webseeds) urls.emplace_back(u);
    top.emplace("url-list", bencode::BValue(std::move(urls)));
  }
  return bencode::BValue(std::move(top));
}

std::string encode_metainfo(const Metainfo& m) {
  return bencode::encode(to_bvalue(m));
}

namespace {

const bencode::BValue& require_key(const bencode::BDict& d,
                                   const std::string& key) {
  auto it = d.find(key);
  if (it == d.end()) throw SchemaViolation("missing key: " + key);
  return it->second;
}

std::uint64_t require_nonneg_int(const bencode::BValue& v,
                                 const std::string& key) {
  if (!v.is_int()) throw SchemaViolation(key + " must be an integer");
  std::int64_t i = v.as_int();
  if (i < 0) throw SchemaViolation(key + " must be non-negative");
  return static_cast<std::uint64_t>(i);
}

}  // namespace

Metainfo parse_metainfo(std::string_view bytes) {
  bencode::BValue root = bencode::decode(bytes);
  if (!root.is_dict()) throw SchemaViolation("metainfo root must be a dict");
  const bencode::BDict& top = root.as_dict();

  Metainfo m;
  const bencode::BValue& announce = require_key(top, "announce");
  if (!announce.is_bytes()) throw SchemaViolation("announce must be a string");
  m.announce = announce.as_bytes();

  if (auto it = top.find("url-list"); it != top.end()) {
    // Seen in the wild both as a single string and as a list.
    if (it->second.is_bytes()) {
      m.webseeds.push_back(it->second.as_bytes());
    } else if (it->second.is_list()) {
      for (const bencode::BValue& u : it->second.as_list()) {
        if (!u.is_bytes())
          throw SchemaViolation("url-list entries must be strings");
        m.webseeds.push_back(u.as_bytes());
      }
    } else {
      throw SchemaViolation("url-list must be a string or list");
    }
  }

  const bencode::BValue& info_v = require_key(top, "info");
  if (!info_v.is_dict()) throw SchemaViolation("info must be a dict");
  const bencode::BDict& info = info_v.as_dict();

  if (info.count("files"))
    throw UnsupportedShape("multi-file torrents are not supported");

  m.total_length = require_nonneg_int(require_key(info, "length"), "length");

  const bencode::BValue& name = require_key(info, "name");
  if (!name.is_bytes()) throw SchemaViolation("name must be a string");
  m.name = name.as_bytes();

  std::uint64_t pl =
      require_nonneg_int(require_key(info, "piece length"), "piece length");
  if (!valid_piece_length(pl))
    throw SchemaViolation("piece length must be a power of two in [16 KiB, 16 MiB]");
  m.piece_length = static_cast<std::uint32_t>(pl);

  const bencode::BValue& pieces = require_key(info, "pieces");
  if (!pieces.is_bytes()) throw SchemaViolation("pieces must be a byte string");
  const std::string& blob = pieces.as_bytes();
  if (blob.size() % 20 != 0)
    throw SchemaViolation("pieces length must be a multiple of 20");
  std::uint64_t want = piece_count_for(m.total_length, m.piece_length);
  if (blob.size() / 20 != want)
    throw SchemaViolation("piece digest count does not match length");
  for (std::size_t off = 0; off < blob.size(); off += 20) {
    Digest20 d;
    std::copy_n(reinterpret_cast<const std::uint8_t*>(blob.data()) + off, 20,
                d.begin());
    m.pieces.push_back(d);
  }
  return m;
}

PieceReport verify_content(const Metainfo& m, std::string_view content) {
  PieceReport report;
  report.length_matches = content.size() == m.total_length;
  report.passed.resize(m.piece_count(), false);
  for (std::size_t i = 0; i < m.piece_count(); ++i) {
    std::uint64_t start = m.piece_offset(i);
    std::uint32_t size = m.piece_size(i);
    if (start + size > content.size()) continue;  // truncated: stays failed
    bool ok = util::sha1(content.substr(start, size)) == m.pieces[i];
    report.passed[i] = ok;
    if (ok) report.verified_bytes += size;
  }
  // Extra bytes past the declared length fail the piece they extend.
  if (content.size() > m.total_length && !report.passed.empty()) {
    std::size_t last = report.passed.size() - 1;
    if (report.passed[last]) {
      report.passed[last] = false;
      report.verified_bytes -= m.piece_size(last);
    }
  }
  return report;
}

PieceReport verify_content_file(const Metainfo& m,
                                const std::filesystem::path& content_path) {
  std::ifstream in(content_path, std::ios::binary);
  if (!in)
    throw ContentReadFailure("cannot open " + content_path.string());
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  if (in.bad())
    throw ContentReadFailure("read error on " + content_path.string());
  return verify_content(m, content);
}

}  // namespace swarmshare::metainfo
