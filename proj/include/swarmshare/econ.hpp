#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace swarmshare::econ {

// Decimal units throughout: 1 GB = 1e9 bytes.
inline constexpr double kBytesPerGb = 1e9;

struct CostModel {
  double price_per_gb = 0.0275;  // dollars per GB of egress
  double http_speed = 500000;    // bytes/s, single direct download
  double swarm_speed = 34e6;     // bytes/s, observed swarm aggregate
  double amplification = 42.067; // bytes delivered per origin byte
};

class EconError : public std::runtime_error {
 public:
  explicit EconError(const std::string& what) : std::runtime_error(what) {}
};

class ZeroUpload : public EconError {
 public:
  using EconError::EconError;
};

double round_cents(double dollars);

// total_downloaded / seeder_uploaded. Throws ZeroUpload when the
// seeder moved nothing.
double amplification_ratio(std::uint64_t seeder_uploaded,
                           std::uint64_t total_downloaded);

// Egress dollars for moving `bytes` once.
double transfer_cost(std::uint64_t bytes, const CostModel& model = {});

// Seconds to move `bytes` at a sustained rate.
double download_time(std::uint64_t bytes, double rate_bytes_per_s);

struct DatasetSpec {
  std::string name;
  std::uint64_t size_bytes = 0;
  std::uint64_t downloads = 0;
};

// Hosting projection for one dataset: what serving every download over
// HTTP costs versus fronting a swarm with the model's amplification.
struct ProjectionRow {
  std::string name;
  std::uint64_t size_bytes = 0;
  std::uint64_t downloads = 0;
  double http_upload_bytes = 0;   // size * downloads
  double swarm_upload_bytes = 0;  // http_upload / amplification
  double dollar_savings = 0;
  double http_time_s = 0;   // one download, direct
  double swarm_time_s = 0;  // one download, swarm rate
  double time_savings_s = 0;
};

ProjectionRow project_row(const DatasetSpec& dataset,
                          const CostModel& model = {});

// Observed-transfer retrospective: measured ledger totals against the
// cost of having served the same downloads over HTTP.
struct CaseStudyInput {
  DatasetSpec dataset;
  std::uint64_t seeder_uploaded = 0;
  std::uint64_t total_downloaded = 0;
};

struct CaseStudyReport {
  std::string name;
  std::uint64_t size_bytes = 0;
  std::uint64_t downloads = 0;
  std::uint64_t seeder_uploaded = 0;
  std::uint64_t total_downloaded = 0;
  double amplification = 0;
  double per_download_cost = 0;     // full precision
  // Per-download cost rounded to cents, then scaled by the download
  // count; the invoice a file host would actually print.
  double http_equivalent_cost = 0;
  double actual_cost = 0;           // full precision, seeder egress only
  double dollar_savings = 0;
};

CaseStudyReport case_study_report(const CaseStudyInput& input,
                                  const CostModel& model = {});

// Fixture formats: datasets is a JSON array of {name, size_bytes,
// downloads}; a case study adds seeder_uploaded_bytes and
// total_downloaded_bytes. Byte fields accept numbers or size strings
// such as "8.73GB".
std::vector<DatasetSpec> datasets_from_json(const std::string& json_text);
CaseStudyInput case_study_from_json(const std::string& json_text);

}  // namespace swarmshare::econ
