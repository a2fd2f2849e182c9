#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>

#include "swarmshare/econ.hpp"

using namespace swarmshare::econ;

TEST_CASE("rounding to cents") {
  CHECK(round_cents(4.4187) == 4.42);
  CHECK(round_cents(4.414999) == 4.41);
  CHECK(round_cents(0.005) == 0.01);
  CHECK(round_cents(10.0) == 10.0);
}

TEST_CASE("amplification ratio") {
  CHECK(amplification_ratio(1, 2) == 2.0);
  // The measured swarm: 15.43 TB delivered for 366.68 GB pushed.
  double ratio = amplification_ratio(366680000000ull, 15430000000000ull);
  CHECK(ratio == doctest::Approx(42.067).epsilon(0.005));
  CHECK_THROWS_AS(amplification_ratio(0, 100), ZeroUpload);
}

TEST_CASE("transfer cost uses decimal gigabytes") {
  // 157.3 GB at 0.0275 USD/GB.
  CHECK(transfer_cost(157300000000ull) == doctest::Approx(4.32575));
  CHECK(std::abs(transfer_cost(157300000000ull) - 4.33) <= 0.01);
  CHECK(transfer_cost(0) == 0.0);
  CHECK(transfer_cost(1000000000ull) == doctest::Approx(0.0275));
  CostModel pricey;
  pricey.price_per_gb = 0.09;
  CHECK(transfer_cost(2000000000ull, pricey) == doctest::Approx(0.18));
}

TEST_CASE("download time") {
  // 1.2 TB at the measured swarm rate is just under ten hours.
  double t = download_time(1200000000000ull, 34e6);
  CHECK(t / 3600.0 == doctest::Approx(9.8).epsilon(0.01));
  CHECK(download_time(500000ull, 500000.0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(download_time(1, 0.0), EconError);
  CHECK_THROWS_AS(download_time(1, -5.0), EconError);
}

TEST_CASE("projection rows reproduce the published table") {
  struct Expect {
    const char* name;
    std::uint64_t size;
    double savings;
    double saved_hours;
  };
  // Dollar and hour columns as published for 100 downloads each.
  const Expect table[] = {
      {"whale", 8730000000ull, 23.36, 4.78},
      {"diabetes", 82200000000ull, 220.68, 44.99},
      {"imagenet", 157300000000ull, 422.29, 86.11},
  };
  for (const Expect& e : table) {
    DatasetSpec d{e.name, e.size, 100};
    ProjectionRow row = project_row(d);
    CHECK(row.http_upload_bytes == doctest::Approx(e.size * 100.0));
    CHECK(row.swarm_upload_bytes ==
          doctest::Approx(e.size * 100.0 / 42.067));
    CHECK(std::abs(row.dollar_savings - e.savings) / e.savings < 0.02);
    double saved_h = row.time_savings_s / 3600.0;
    CHECK(std::abs(saved_h - e.saved_hours) / e.saved_hours < 0.02);
    CHECK(row.http_time_s == doctest::Approx(e.size / 500000.0));
    CHECK(row.swarm_time_s == doctest::Approx(e.size / 34e6));
  }
}

TEST_CASE("case study dollars") {
  CaseStudyInput input;
  input.dataset = {"corpus", 160680000000ull, 96};
  input.seeder_uploaded = 366680000000ull;
  input.total_downloaded = 15430000000000ull;
  CaseStudyReport rep = case_study_report(input);

  CHECK(rep.amplification == doctest::Approx(42.067).epsilon(0.005));
  CHECK(std::abs(rep.per_download_cost - 4.42) <= 0.01);
  // The invoice line: per-download rounded to cents, times downloads.
  CHECK(rep.http_equivalent_cost == doctest::Approx(424.32));
  CHECK(std::abs(rep.actual_cost - 10.09) <= 0.01);
  CHECK(rep.dollar_savings ==
        doctest::Approx(rep.http_equivalent_cost - rep.actual_cost));
}

TEST_CASE("dataset json parsing") {
  auto rows = datasets_from_json(R"([
    {"name": "a", "size_bytes": "1.5GB", "downloads": 10},
    {"name": "b", "size_bytes": 2000000, "downloads": 1}
  ])");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].size_bytes == 1500000000ull);
  CHECK(rows[1].size_bytes == 2000000ull);

  CHECK_THROWS_AS(datasets_from_json("{}"), EconError);
  CHECK_THROWS_AS(datasets_from_json("nope"), EconError);
  CHECK_THROWS_AS(datasets_from_json(R"([{"name": "x"}])"), EconError);

  CaseStudyInput cs = case_study_from_json(R"({
    "name": "c", "size_bytes": "1GB", "downloads": 2,
    "seeder_uploaded_bytes": "10GB", "total_downloaded_bytes": "20GB"
  })");
  CHECK(cs.seeder_uploaded == 10000000000ull);
  CHECK(cs.total_downloaded == 20000000000ull);
  CHECK_THROWS_AS(case_study_from_json(R"({"name": "c"})"), EconError);
}
