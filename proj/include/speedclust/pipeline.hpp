#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "speedclust/core.hpp"

namespace speedclust {

struct RawRecord {
    std::string street_id;
    std::size_t bucket_index = 0;
    double speed_kmh = 0.0;

    friend bool operator==(const RawRecord&, const RawRecord&) = default;
};

struct CleaningConfig {
    double min_speed_kmh = 1.0;
    double max_speed_kmh = 140.0;
    std::size_t min_observed_buckets = 3;
    /// Streets must have a filling rate strictly above this.
    double min_filling_rate = 1.0 / 3.0;

    /// Throws InvalidSpec when the bounds are inconsistent.
    void validate() const;
};

struct CleaningReport {
    std::size_t outlier_records = 0;
    std::size_t duplicate_records = 0;
    std::size_t dropped_low_observation = 0;
    std::size_t dropped_low_filling_rate = 0;
    std::size_t unmatched_attributes = 0;
    std::size_t unknown_attribute_rows = 0;

    std::string to_json() const;
};

/// Groups records by street and bucket, removes exact duplicate (street, bucket, speed) records and
/// takes the median per bucket (mean of the middle two for even counts). Profiles come out sorted by
/// street id. Throws InvalidBucket for an index outside the grid and DataError for a non-finite speed.
Dataset ingest(std::span<const RawRecord> records, const BucketGrid& grid, CleaningReport* report = nullptr);

/// As above, but records outside [min_speed_kmh, max_speed_kmh] are discarded before aggregation.
Dataset ingest(std::span<const RawRecord> records, const BucketGrid& grid, const CleaningConfig& filter,
               CleaningReport* report = nullptr);

/// Masks values outside the speed bounds, then drops streets with too few observed buckets or a
/// filling rate at or below the threshold. Idempotent.
Dataset clean(const Dataset& dataset, const CleaningConfig& config, CleaningReport* report = nullptr);

struct AttributeRow {
    std::string street_id;
    std::optional<RoadClass> road_class;
    std::optional<double> max_speed_kmh;
    std::optional<double> length_m;
    std::optional<double> avg_speed_kmh;
    std::optional<std::string> name;
    std::optional<std::string> county;
};

/// Attaches attributes by street id. Streets without a row keep absent attributes and are counted
/// as unmatched; rows naming unknown streets are counted and ignored. Throws DuplicateAttributeKey.
Dataset join_attributes(const Dataset& dataset, std::span<const AttributeRow> attrs,
                        CleaningReport* report = nullptr);

/// Which columns make up a profile's feature vector: the bucket series, then the scalars.
struct FeatureSpec {
    bool series = true;
    bool filling_rate = true;
    bool max_speed = true;

    std::size_t scalar_count() const noexcept { return (filling_rate ? 1 : 0) + (max_speed ? 1 : 0); }
};

struct ScalerParams {
    FeatureSpec spec;
    std::size_t series_columns = 0;
    std::vector<double> means;
    std::vector<double> stds;

    double transform(std::size_t column, double x) const;
    double inverse(std::size_t column, double z) const;
};

/// Feature row of a profile; missing buckets and absent attributes are nullopt.
std::vector<std::optional<double>> feature_row(const StreetProfile& profile, const FeatureSpec& spec);

/// Per-column mean and population standard deviation over present entries.
/// Throws TooFewProfiles for fewer than two rows.
ScalerParams fit_scaler(std::span<const std::vector<std::optional<double>>> rows);
ScalerParams fit_scaler(std::span<const StreetProfile> profiles, const FeatureSpec& spec = {});

/// (x - mean) / std per column; zero-variance columns map to 0 and missing entries stay missing.
std::vector<std::optional<double>> apply_scaler(std::span<const std::optional<double>> row,
                                                const ScalerParams& params);
std::vector<std::optional<double>> apply_scaler(const StreetProfile& profile, const ScalerParams& params);

// ---- File formats -------------------------------------------------------------------------------

struct RecordReadOptions {
    /// Offset of local time from UTC, applied to ISO-8601 timestamps before bucketing.
    int utc_offset_minutes = 0;
};

/// Header `street_id,bucket_index,speed_kmh` or `street_id,timestamp_iso8601,speed_kmh`.
/// Throws ParseError with the line number.
std::vector<RawRecord> read_records_csv(std::istream& in, const BucketGrid& grid, const RecordReadOptions& opts = {},
                                        std::string_view source = "records");
void write_records_csv(std::ostream& out, std::span<const RawRecord> records);

/// Bucket of week for an ISO-8601 timestamp such as 2023-05-01T08:15:00Z or ...+03:30.
/// Timestamps without a zone are taken as UTC. Returns nullopt on malformed input.
std::optional<std::size_t> timestamp_to_bucket(std::string_view timestamp, const BucketGrid& grid,
                                               int utc_offset_minutes = 0);

/// Header must contain street_id; road_class, max_speed_kmh, length_m, avg_speed_kmh, name and
/// county are optional columns.
std::vector<AttributeRow> read_attributes_csv(std::istream& in, std::string_view source = "attributes");
void write_attributes_csv(std::ostream& out, std::span<const AttributeRow> rows);

/// One row per street: street_id, filling_rate, attributes, then b0..b{n-1} (empty cell = missing).
void write_dataset_csv(std::ostream& out, const Dataset& dataset);
Dataset read_dataset_csv(std::istream& in, std::string_view source = "dataset");

inline constexpr int kDatasetSchemaVersion = 1;
std::string dataset_to_json(const Dataset& dataset);
Dataset dataset_from_json(std::string_view text);

/// Reads a snapshot, choosing the format from the extension (.json or .csv).
Dataset load_dataset(const std::string& path);
void save_dataset(const std::string& path, const Dataset& dataset);

} // namespace speedclust
