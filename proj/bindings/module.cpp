#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <string>
#include <vector>

#include "swarmshare/bencode.hpp"
#include "swarmshare/econ.hpp"
#include "swarmshare/metainfo.hpp"
#include "swarmshare/swarmsim.hpp"
#include "swarmshare/util.hpp"

namespace py = pybind11;
using namespace swarmshare;

namespace {

py::object bvalue_to_py(const bencode::BValue& v) {
  if (v.is_int()) return py::int_(v.as_int());
  if (v.is_bytes()) return py::bytes(v.as_bytes());
  if (v.is_list()) {
    py::list out;
    for (const bencode::BValue& item : v.as_list()) out.append(bvalue_to_py(item));
    return out;
  }
  py::dict out;
  for (const auto& [key, item] : v.as_dict())
    out[py::bytes(key)] = bvalue_to_py(item);
  return out;
}

bencode::BValue py_to_bvalue(const py::handle& obj) {
  if (py::isinstance<py::bool_>(obj))
    throw py::type_error("bencode has no boolean type");
  if (py::isinstance<py::int_>(obj))
    return bencode::BValue(obj.cast<std::int64_t>());
  if (py::isinstance<py::bytes>(obj) || py::isinstance<py::bytearray>(obj))
    return bencode::BValue(obj.cast<std::string>());
  if (py::isinstance<py::str>(obj))
    return bencode::BValue(obj.cast<std::string>());
  if (py::isinstance<py::list>(obj) || py::isinstance<py::tuple>(obj)) {
    bencode::BList list;
    for (const py::handle& item : obj) list.push_back(py_to_bvalue(item));
    return bencode::BValue(std::move(list));
  }
  if (py::isinstance<py::dict>(obj)) {
    bencode::BDict dict;
    for (const auto& [key, item] : obj.cast<py::dict>()) {
      std::string k;
      if (py::isinstance<py::bytes>(key) || py::isinstance<py::str>(key))
        k = key.cast<std::string>();
      else
        throw py::type_error("dictionary keys must be bytes or str");
      if (!dict.emplace(std::move(k), py_to_bvalue(item)).second)
        throw py::value_error("duplicate dictionary key");
    }
    return bencode::BValue(std::move(dict));
  }
  throw py::type_error("unsupported type for bencoding");
}

py::dict torrent_info(const metainfo::Metainfo& m) {
  py::dict out;
  out["name"] = m.name;
  out["announce"] = m.announce;
  out["piece_length"] = m.piece_length;
  out["piece_count"] = m.piece_count();
  out["total_length"] = m.total_length;
  out["webseeds"] = m.webseeds;
  out["info_hash"] = util::to_hex(metainfo::info_hash(m));
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
  mod.doc() = "hybrid HTTP + swarm dataset distribution core";

  py::register_exception<bencode::DecodeError>(mod, "BencodeDecodeError",
                                               PyExc_ValueError);
  py::register_exception<metainfo::MetainfoError>(mod, "MetainfoError",
                                                  PyExc_ValueError);
  py::register_exception<sim::SimError>(mod, "SimError", PyExc_RuntimeError);
  py::register_exception<econ::EconError>(mod, "EconError", PyExc_ValueError);

  mod.def(
      "bdecode",
      [](const py::bytes& data, bool strict) {
        bencode::DecodeOptions opts;
        opts.strict = strict;
        return bvalue_to_py(bencode::decode(data.cast<std::string>(), opts));
      },
      py::arg("data"), py::arg("strict") = true,
      "Decode one bencoded value to int/bytes/list/dict.");

  mod.def(
      "bencode",
      [](const py::handle& obj) {
        return py::bytes(bencode::encode(py_to_bvalue(obj)));
      },
      py::arg("value"), "Canonically bencode an int/bytes/str/list/dict.");

  mod.def(
      "create_torrent",
      [](const py::bytes& content, const std::string& name,
         std::uint32_t piece_length, const std::string& announce,
         const std::vector<std::string>& webseeds) {
        metainfo::Metainfo m = metainfo::build_metainfo(
            content.cast<std::string>(), name, piece_length, announce, webseeds);
        return py::bytes(metainfo::encode_metainfo(m));
      },
      py::arg("content"), py::arg("name"),
      py::arg("piece_length") = metainfo::kDefaultPieceLength,
      py::arg("announce") = "", py::arg("webseeds") = std::vector<std::string>{},
      "Build a single-file torrent and return its encoded bytes.");

  mod.def(
      "torrent_info",
      [](const py::bytes& torrent) {
        return torrent_info(metainfo::parse_metainfo(torrent.cast<std::string>()));
      },
      py::arg("torrent"), "Parse torrent bytes into a summary dict.");

  mod.def(
      "verify",
      [](const py::bytes& torrent, const py::bytes& content) {
        metainfo::Metainfo m = metainfo::parse_metainfo(torrent.cast<std::string>());
        metainfo::PieceReport rep =
            metainfo::verify_content(m, content.cast<std::string>());
        std::size_t passed = 0;
        for (bool ok : rep.passed)
          if (ok) ++passed;
        py::dict out;
        out["pieces_passed"] = passed;
        out["piece_count"] = rep.passed.size();
        out["verified_bytes"] = rep.verified_bytes;
        out["length_match"] = rep.length_matches;
        out["ok"] = rep.all_passed() && rep.length_matches;
        return out;
      },
      py::arg("torrent"), py::arg("content"),
      "Check content bytes against a torrent; ok means every piece passed.");

  mod.def(
      "sha1_hex",
      [](const py::bytes& data) { return util::sha1_hex(data.cast<std::string>()); },
      py::arg("data"));

  mod.def(
      "simulate",
      [](const std::string& scenario_json) {
        py::gil_scoped_release release;
        sim::SimReport report = sim::simulate(sim::scenario_from_json(scenario_json));
        return sim::report_to_json(report);
      },
      py::arg("scenario_json"),
      "Run a swarm scenario (JSON in, report JSON out).");

  mod.def("amplification", &econ::amplification_ratio, py::arg("seeder_uploaded"),
          py::arg("total_downloaded"),
          "Bytes delivered to the swarm per byte the origin uploaded.");

  mod.def(
      "transfer_cost",
      [](std::uint64_t bytes, double price_per_gb) {
        econ::CostModel model;
        model.price_per_gb = price_per_gb;
        return econ::transfer_cost(bytes, model);
      },
      py::arg("bytes"), py::arg("price_per_gb") = econ::CostModel{}.price_per_gb,
      "Egress dollars for a byte count at a per-GB price.");

  mod.def(
      "project",
      [](const std::string& datasets_json) {
        py::list rows;
        for (const econ::DatasetSpec& d : econ::datasets_from_json(datasets_json)) {
          econ::ProjectionRow r = econ::project_row(d);
          py::dict row;
          row["name"] = r.name;
          row["size_bytes"] = r.size_bytes;
          row["downloads"] = r.downloads;
          row["http_upload_bytes"] = r.http_upload_bytes;
          row["swarm_upload_bytes"] = r.swarm_upload_bytes;
          row["dollar_savings"] = r.dollar_savings;
          row["http_time_s"] = r.http_time_s;
          row["swarm_time_s"] = r.swarm_time_s;
          row["time_savings_s"] = r.time_savings_s;
          rows.append(row);
        }
        return rows;
      },
      py::arg("datasets_json"),
      "Cost and time projections for a JSON array of datasets.");

  mod.def(
      "case_study",
      [](const std::string& ledger_json) {
        econ::CaseStudyReport r =
            econ::case_study_report(econ::case_study_from_json(ledger_json));
        py::dict out;
        out["name"] = r.name;
        out["size_bytes"] = r.size_bytes;
        out["downloads"] = r.downloads;
        out["seeder_uploaded"] = r.seeder_uploaded;
        out["total_downloaded"] = r.total_downloaded;
        out["amplification"] = r.amplification;
        out["per_download_cost"] = r.per_download_cost;
        out["http_equivalent_cost"] = r.http_equivalent_cost;
        out["actual_cost"] = r.actual_cost;
        out["dollar_savings"] = r.dollar_savings;
        return out;
      },
      py::arg("ledger_json"),
      "Amplification and dollar figures for a measured transfer ledger.");
}
