#include "swarmshare/econ.hpp"

#include <cmath>
#include <set>

#include <json.hpp>

#include "swarmshare/util.hpp"

namespace swarmshare::econ {

double round_cents(double dollars) { return std::round(dollars * 100.0) / 100.0; }

double amplification_ratio(std::uint64_t seeder_uploaded,
                           std::uint64_t total_downloaded) {
  if (seeder_uploaded == 0)
    throw ZeroUpload("seeder uploaded nothing; the ratio is undefined");
  return static_cast<double>(total_downloaded) /
         static_cast<double>(seeder_uploaded);
}

double transfer_cost(std::uint64_t bytes, const CostModel& model) {
  return static_cast<double>(bytes) / kBytesPerGb * model.price_per_gb;
}

double download_time(std::uint64_t bytes, double rate_bytes_per_s) {
  if (!(rate_bytes_per_s > 0))
    throw EconError("download rate must be positive");
  return static_cast<double>(bytes) / rate_bytes_per_s;
}

ProjectionRow project_row(const DatasetSpec& dataset, const CostModel& model) {
  if (!(model.amplification > 0))
    throw EconError("amplification must be positive");
  ProjectionRow row;
  row.name = dataset.name;
  row.size_bytes = dataset.size_bytes;
  row.downloads = dataset.downloads;
  row.http_upload_bytes =
      static_cast<double>(dataset.size_bytes) * static_cast<double>(dataset.downloads);
  row.swarm_upload_bytes = row.http_upload_bytes / model.amplification;
  row.dollar_savings = (row.http_upload_bytes - row.swarm_upload_bytes) /
                       kBytesPerGb * model.price_per_gb;
  row.http_time_s = download_time(dataset.size_bytes, model.http_speed);
  row.swarm_time_s = download_time(dataset.size_bytes, model.swarm_speed);
  row.time_savings_s = row.http_time_s - row.swarm_time_s;
  return row;
}

CaseStudyReport case_study_report(const CaseStudyInput& input,
                                  const CostModel& model) {
  CaseStudyReport rep;
  rep.name = input.dataset.name;
  rep.size_bytes = input.dataset.size_bytes;
  rep.downloads = input.dataset.downloads;
  rep.seeder_uploaded = input.seeder_uploaded;
  rep.total_downloaded = input.total_downloaded;
  rep.amplification =
      amplification_ratio(input.seeder_uploaded, input.total_downloaded);
  rep.per_download_cost = transfer_cost(input.dataset.size_bytes, model);
  rep.http_equivalent_cost =
      round_cents(rep.per_download_cost) * static_cast<double>(input.dataset.downloads);
  rep.actual_cost = transfer_cost(input.seeder_uploaded, model);
  rep.dollar_savings = rep.http_equivalent_cost - rep.actual_cost;
  return rep;
}

namespace {

std::uint64_t bytes_field(const nlohmann::json& v, const char* key) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0)
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  if (v.is_string()) {
    try {
      return util::parse_size(v.get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw EconError(std::string(key) + ": " + e.what());
    }
  }
  throw EconError(std::string(key) +
                  " must be a byte count or a size string");
}

DatasetSpec dataset_from(const nlohmann::json& j) {
  if (!j.is_object()) throw EconError("dataset entry must be an object");
  DatasetSpec spec;
  try {
    spec.name = j.at("name").get<std::string>();
    spec.size_bytes = bytes_field(j.at("size_bytes"), "size_bytes");
    spec.downloads = j.at("downloads").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw EconError(std::string("bad dataset entry: ") + e.what());
  }
  return spec;
}

}  // namespace

std::vector<DatasetSpec> datasets_from_json(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw EconError(std::string("datasets file is not valid JSON: ") + e.what());
  }
  if (!j.is_array()) throw EconError("datasets file must be a JSON array");
  std::vector<DatasetSpec> out;
  out.reserve(j.size());
  for (const auto& entry : j) out.push_back(dataset_from(entry));
  return out;
}

CaseStudyInput case_study_from_json(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw EconError(std::string("case study file is not valid JSON: ") + e.what());
  }
  CaseStudyInput input;
  input.dataset = dataset_from(j);
  try {
    input.seeder_uploaded =
        bytes_field(j.at("seeder_uploaded_bytes"), "seeder_uploaded_bytes");
    input.total_downloaded =
        bytes_field(j.at("total_downloaded_bytes"), "total_downloaded_bytes");
  } catch (const nlohmann::json::exception& e) {
    throw EconError(std::string("bad case study field: ") + e.what());
  }
  return input;
}

}  // namespace swarmshare::econ
