#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace speedclust {

inline constexpr int kMinutesPerWeek = 7 * 24 * 60;

/// Fixed partition of one week into equal time buckets. Bucket 0 starts Monday 00:00.
class BucketGrid {
  public:
    /// Throws InvalidSpec unless bucket_minutes is positive and divides a week.
    explicit BucketGrid(int bucket_minutes = 15);

    int bucket_minutes() const noexcept { return bucket_minutes_; }
    std::size_t buckets_per_week() const noexcept { return buckets_per_week_; }
    std::size_t buckets_per_day() const noexcept { return buckets_per_week_ / 7; }

    /// Day of week (0 = Monday) of a bucket.
    int day_of(std::size_t bucket) const;
    /// Minutes since midnight at which a bucket starts.
    int minute_of_day(std::size_t bucket) const;
    /// Bucket containing the given day (0 = Monday) and minute of day.
    std::size_t bucket_at(int day, int minute_of_day) const;

    /// Grid with `count` buckets, e.g. for small fixtures. Throws InvalidSpec.
    static BucketGrid with_buckets(std::size_t count);

    friend bool operator==(const BucketGrid&, const BucketGrid&) = default;

  private:
    int bucket_minutes_;
    std::size_t buckets_per_week_;
};

/// One street's weekly profile. Missing buckets are empty optionals, never sentinels.
struct SpeedSeries {
    std::vector<std::optional<double>> values;

    std::size_t size() const noexcept { return values.size(); }
    std::size_t present_count() const noexcept;

    friend bool operator==(const SpeedSeries&, const SpeedSeries&) = default;
};

/// Null-dropped series: only observed values, tagged with the bucket they came from.
struct ObservedSeries {
    std::vector<double> values;
    std::vector<std::size_t> source_buckets;

    std::size_t size() const noexcept { return values.size(); }
    bool empty() const noexcept { return values.empty(); }

    /// Series with consecutive source buckets 0..n-1, for data that never had gaps.
    static ObservedSeries from_values(std::vector<double> values);

    friend bool operator==(const ObservedSeries&, const ObservedSeries&) = default;
};

enum class RoadClass { Primary, Secondary, Tertiary, Trunk, Residential, Other };

std::string_view to_string(RoadClass rc) noexcept;
/// Case-insensitive. Returns nullopt for unknown names.
std::optional<RoadClass> parse_road_class(std::string_view name);

struct StreetProfile {
    std::string street_id;
    SpeedSeries series;
    double filling_rate = 0.0;
    std::optional<RoadClass> road_class;
    std::optional<double> max_speed_kmh;
    std::optional<double> length_m;
    /// Carried through from the attribute table for reporting; no computation reads them.
    std::optional<double> avg_speed_kmh;
    std::optional<std::string> name;
    std::optional<std::string> county;

    /// Builds a profile with filling_rate computed from the series.
    static StreetProfile from_series(std::string street_id, SpeedSeries series);

    friend bool operator==(const StreetProfile&, const StreetProfile&) = default;
};

struct Dataset {
    BucketGrid grid;
    std::vector<StreetProfile> profiles;

    /// Throws DataError on duplicate street ids or series not matching the grid.
    void validate() const;
    /// Index of a street, or nullopt.
    std::optional<std::size_t> find(std::string_view street_id) const;

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Drops missing buckets. Throws EmptySeries if nothing is observed.
ObservedSeries drop_nulls(const SpeedSeries& series);

/// Inverse of drop_nulls onto a series of `length` buckets.
SpeedSeries embed(const ObservedSeries& observed, std::size_t length);

/// Present buckets divided by the series length.
double filling_rate(const SpeedSeries& series) noexcept;

} // namespace speedclust
