#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "speedclust/errors.hpp"
#include "speedclust/pipeline.hpp"

using namespace speedclust;

namespace {

const BucketGrid kGrid8 = BucketGrid::with_buckets(8);

std::optional<double> value_at(const Dataset& ds, std::string_view street, std::size_t bucket) {
    return ds.profiles.at(*ds.find(street)).series.values.at(bucket);
}

StreetProfile profile(std::string id, std::vector<std::optional<double>> values) {
    return StreetProfile::from_series(std::move(id), SpeedSeries{std::move(values)});
}

} // namespace

TEST_CASE("ingest takes the per-bucket median") {
    std::vector<RawRecord> records{{"a", 0, 50}, {"a", 0, 60}, {"a", 0, 100}, {"a", 1, 50}, {"a", 1, 60}};
    auto ds = ingest(records, kGrid8);
    REQUIRE(ds.profiles.size() == 1);
    CHECK(value_at(ds, "a", 0) == 60.0);
    CHECK(value_at(ds, "a", 1) == 55.0);
    CHECK_FALSE(value_at(ds, "a", 2).has_value());
    CHECK(ds.profiles[0].filling_rate == 0.25);
}

TEST_CASE("ingest removes exact duplicates before aggregating") {
    std::vector<RawRecord> records{{"a", 0, 50}, {"a", 0, 50}, {"a", 0, 50}, {"a", 0, 80}};
    CleaningReport report;
    auto ds = ingest(records, kGrid8, &report);
    CHECK(value_at(ds, "a", 0) == 65.0);
    CHECK(report.duplicate_records == 2);
}

TEST_CASE("ingest orders streets and rejects bad records") {
    std::vector<RawRecord> records{{"z", 0, 10}, {"b", 1, 20}, {"m", 2, 30}};
    auto ds = ingest(records, kGrid8);
    REQUIRE(ds.profiles.size() == 3);
    CHECK(ds.profiles[0].street_id == "b");
    CHECK(ds.profiles[2].street_id == "z");

    std::vector<RawRecord> out_of_grid{{"a", 8, 10}};
    CHECK_THROWS_AS(ingest(out_of_grid, kGrid8), InvalidBucket);
    std::vector<RawRecord> nan_speed{{"a", 1, std::nan("")}};
    CHECK_THROWS_AS(ingest(nan_speed, kGrid8), DataError);
}

TEST_CASE("ingest with a filter drops outlier records before the median") {
    std::vector<RawRecord> records{{"a", 0, 50}, {"a", 0, 250}, {"a", 1, 250}};
    CleaningConfig cfg;
    CleaningReport report;
    auto ds = ingest(records, kGrid8, cfg, &report);
    CHECK(value_at(ds, "a", 0) == 50.0);
    CHECK_FALSE(value_at(ds, "a", 1).has_value());
    CHECK(report.outlier_records == 2);
}

TEST_CASE("cleaning rules") {
    using V = std::vector<std::optional<double>>;
    const std::nullopt_t _ = std::nullopt;
    Dataset ds{BucketGrid::with_buckets(9), {}};
    ds.profiles.push_back(profile("two", V{10.0, 20.0, _, _, _, _, _, _, _}));
    ds.profiles.push_back(profile("half", V{10.0, 20.0, 30.0, 40.0, _, _, _, _, _}));
    ds.profiles.push_back(profile("fast", V{250.0, 20.0, 30.0, 40.0, 50.0, _, _, _, _}));
    ds.profiles.push_back(profile("third", V{10.0, 10.0, 10.0, _, _, _, _, _, _}));

    CleaningConfig cfg;
    CleaningReport report;
    auto cleaned = clean(ds, cfg, &report);
    CHECK_FALSE(cleaned.find("two").has_value());
    CHECK(cleaned.find("half").has_value());
    CHECK_FALSE(cleaned.find("third").has_value());
    REQUIRE(cleaned.find("fast").has_value());
    CHECK_FALSE(value_at(cleaned, "fast", 0).has_value());
    CHECK(value_at(cleaned, "fast", 1) == 20.0);
    CHECK(report.dropped_low_observation == 1);
    CHECK(report.dropped_low_filling_rate == 1);
    CHECK(report.outlier_records == 1);

    for (const auto& p : cleaned.profiles) {
        CHECK(p.filling_rate > 1.0 / 3.0);
        CHECK(p.series.present_count() >= 3);
        CHECK(p.filling_rate == filling_rate(p.series));
    }
    CHECK(clean(cleaned, cfg) == cleaned);
}

TEST_CASE("cleaning config validation") {
    CleaningConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.min_speed_kmh = 200;
    CHECK_THROWS_AS(cfg.validate(), InvalidSpec);
    cfg = {};
    cfg.min_filling_rate = 1.5;
    CHECK_THROWS_AS(cfg.validate(), InvalidSpec);
}

TEST_CASE("attribute join") {
    Dataset ds{kGrid8, {profile("a", std::vector<std::optional<double>>(8, 30.0)),
                        profile("b", std::vector<std::optional<double>>(8, 40.0))}};
    std::vector<AttributeRow> attrs(2);
    attrs[0].street_id = "a";
    attrs[0].road_class = RoadClass::Primary;
    attrs[0].max_speed_kmh = 60;
    attrs[0].length_m = 120;
    attrs[1].street_id = "ghost";
    CleaningReport report;
    auto joined = join_attributes(ds, attrs, &report);
    CHECK(joined.profiles[0].road_class == RoadClass::Primary);
    CHECK(joined.profiles[0].max_speed_kmh == 60.0);
    CHECK(joined.profiles[0].length_m == 120.0);
    CHECK_FALSE(joined.profiles[1].road_class.has_value());
    CHECK(report.unmatched_attributes == 1);
    CHECK(report.unknown_attribute_rows == 1);

    attrs[1].street_id = "a";
    CHECK_THROWS_AS(join_attributes(ds, attrs), DuplicateAttributeKey);
}

TEST_CASE("standard scaler") {
    std::vector<std::vector<std::optional<double>>> rows{{0.0, 7.0, 1.0}, {10.0, 7.0, std::nullopt}};
    auto params = fit_scaler(rows);
    CHECK(params.means[0] == 5.0);
    CHECK(params.stds[0] == 5.0);
    auto s0 = apply_scaler(rows[0], params);
    auto s1 = apply_scaler(rows[1], params);
    CHECK(*s0[0] == -1.0);
    CHECK(*s1[0] == 1.0);
    CHECK(*s0[1] == 0.0);
    CHECK(*s1[1] == 0.0);
    CHECK(*s0[2] == 0.0);
    CHECK_FALSE(s1[2].has_value());
    CHECK(params.inverse(0, 1.0) == 10.0);

    std::vector<std::vector<std::optional<double>>> one{{1.0}};
    CHECK_THROWS_AS(fit_scaler(one), TooFewProfiles);
}

TEST_CASE("scaled columns have zero mean and unit spread") {
    std::vector<std::vector<std::optional<double>>> rows;
    for (int i = 0; i < 25; ++i) rows.push_back({std::sin(i) * 30 + 40, static_cast<double>(i * i)});
    auto params = fit_scaler(rows);
    for (std::size_t c = 0; c < 2; ++c) {
        double sum = 0, sq = 0;
        for (const auto& r : rows) {
            const double z = *apply_scaler(r, params)[c];
            sum += z;
            sq += z * z;
        }
        const double mean = sum / 25;
        CHECK(mean == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
        CHECK(std::sqrt(sq / 25 - mean * mean) == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("profile feature rows") {
    auto p = profile("a", {1.0, std::nullopt});
    p.max_speed_kmh = 50;
    auto row = feature_row(p, FeatureSpec{});
    REQUIRE(row.size() == 4);
    CHECK(row[0] == 1.0);
    CHECK_FALSE(row[1].has_value());
    CHECK(row[2] == 0.5);
    CHECK(row[3] == 50.0);
    auto no_max = profile("b", {1.0, 2.0});
    CHECK_FALSE(feature_row(no_max, FeatureSpec{})[3].has_value());
}

TEST_CASE("timestamps map onto the weekly grid") {
    BucketGrid grid;
    // 2023-05-01 was a Monday.
    CHECK(timestamp_to_bucket("2023-05-01T00:00:00Z", grid) == 0u);
    CHECK(timestamp_to_bucket("2023-05-01T08:14:59Z", grid) == 32u);
    CHECK(timestamp_to_bucket("2023-05-07T23:59:00Z", grid) == 671u);
    CHECK(timestamp_to_bucket("2023-05-02T00:30:00", grid) == 98u);
    CHECK(timestamp_to_bucket("2023-05-01T03:30:00+03:30", grid) == 0u);
    CHECK(timestamp_to_bucket("2023-05-01T00:00:00Z", grid, 210) == 14u);
    CHECK(timestamp_to_bucket("2023-05-01T00:00:00Z", grid, -60) == 668u);
    CHECK_FALSE(timestamp_to_bucket("2023-02-30T00:00:00Z", grid).has_value());
    CHECK_FALSE(timestamp_to_bucket("yesterday", grid).has_value());
}

TEST_CASE("records CSV") {
    std::istringstream in("street_id,bucket_index,speed_kmh\na,0,50\n\nb,7,12.5\n");
    auto records = read_records_csv(in, kGrid8);
    REQUIRE(records.size() == 2);
    CHECK(records[1] == RawRecord{"b", 7, 12.5});

    std::ostringstream out;
    write_records_csv(out, records);
    std::istringstream again(out.str());
    CHECK(read_records_csv(again, kGrid8) == records);

    std::istringstream ts("street_id,timestamp_iso8601,speed_kmh\na,2023-05-01T00:20:00Z,40\n");
    CHECK(read_records_csv(ts, BucketGrid())[0].bucket_index == 1u);

    std::istringstream bad("street_id,bucket_index,speed_kmh\na,0,50\na,zero,50\n");
    try {
        read_records_csv(bad, kGrid8);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
    std::istringstream outside("street_id,bucket_index,speed_kmh\na,9,50\n");
    CHECK_THROWS_AS(read_records_csv(outside, kGrid8), InvalidBucket);
    std::istringstream header("id,bucket,speed\n");
    CHECK_THROWS_AS(read_records_csv(header, kGrid8), ParseError);
}

TEST_CASE("attributes CSV") {
    std::istringstream in("street_id,road_class,max_speed_kmh,name\n"
                          "a,primary,60,\"Main St, North\"\n"
                          "b,,,\n");
    auto rows = read_attributes_csv(in);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].road_class == RoadClass::Primary);
    CHECK(rows[0].max_speed_kmh == 60.0);
    CHECK(rows[0].name == "Main St, North");
    CHECK_FALSE(rows[1].road_class.has_value());
    CHECK_FALSE(rows[1].length_m.has_value());

    std::ostringstream out;
    write_attributes_csv(out, rows);
    std::istringstream again(out.str());
    auto back = read_attributes_csv(again);
    CHECK(back[0].name == rows[0].name);
    CHECK(back[0].max_speed_kmh == rows[0].max_speed_kmh);

    std::istringstream unknown("street_id,road_class\na,motorway_link\n");
    CHECK_THROWS_AS(read_attributes_csv(unknown), ParseError);
}

TEST_CASE("dataset snapshots round-trip in both formats") {
    Dataset ds{kGrid8, {profile("a", {1.5, {}, 3.0, 4.0, {}, 6.0, 7.0, 8.0}), profile("b,c", std::vector<std::optional<double>>(8, 0.1))}};
    ds.profiles[0].road_class = RoadClass::Secondary;
    ds.profiles[0].max_speed_kmh = 50;
    ds.profiles[1].name = "Quote \"street\"";
    ds.profiles[1].county = "North";

    std::stringstream csv;
    write_dataset_csv(csv, ds);
    CHECK(read_dataset_csv(csv) == ds);
    CHECK(dataset_from_json(dataset_to_json(ds)) == ds);
    CHECK_THROWS_AS(dataset_from_json("{}"), DataError);
}

TEST_CASE("ingest does not depend on record order") {
    std::mt19937_64 rng(13);
    std::uniform_int_distribution<std::size_t> bucket(0, 7);
    std::uniform_int_distribution<int> speed(10, 60);
    std::vector<RawRecord> records;
    for (int i = 0; i < 200; ++i) {
        records.push_back({"s" + std::to_string(i % 5), bucket(rng), static_cast<double>(speed(rng))});
    }
    const auto reference = ingest(records, kGrid8);
    for (int trial = 0; trial < 10; ++trial) {
        std::shuffle(records.begin(), records.end(), rng);
        CHECK(ingest(records, kGrid8) == reference);
    }
}

TEST_CASE("scaler inverse recovers inputs") {
    std::vector<std::vector<std::optional<double>>> rows;
    for (int i = 0; i < 10; ++i) rows.push_back({i * 3.5 + 1, 100.0 - i * i});
    auto params = fit_scaler(rows);
    for (const auto& r : rows) {
        auto z = apply_scaler(r, params);
        for (std::size_t c = 0; c < 2; ++c) CHECK(params.inverse(c, *z[c]) == doctest::Approx(*r[c]).epsilon(1e-9));
    }
}

TEST_CASE("two weeks of timestamps pool onto one weekly grid") {
    std::istringstream in("street_id,timestamp_iso8601,speed_kmh\n"
                          "a,2023-05-01T08:00:00Z,40\n"
                          "a,2023-05-08T08:05:00Z,50\n"
                          "a,2023-05-08T08:10:00Z,90\n");
    BucketGrid grid;
    auto ds = ingest(read_records_csv(in, grid), grid);
    CHECK(value_at(ds, "a", 32) == 50.0);
    CHECK(ds.profiles[0].series.present_count() == 1);
}
