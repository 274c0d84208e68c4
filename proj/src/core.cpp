#include "speedclust/core.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <unordered_set>

#include "speedclust/errors.hpp"

namespace speedclust {

BucketGrid::BucketGrid(int bucket_minutes) : bucket_minutes_(bucket_minutes), buckets_per_week_(0) {
    if (bucket_minutes <= 0 || kMinutesPerWeek % bucket_minutes != 0) {
        throw InvalidSpec("bucket_minutes must be positive and divide " + std::to_string(kMinutesPerWeek) +
                          ", got " + std::to_string(bucket_minutes));
    }
    buckets_per_week_ = static_cast<std::size_t>(kMinutesPerWeek / bucket_minutes);
}

BucketGrid BucketGrid::with_buckets(std::size_t count) {
    if (count == 0 || kMinutesPerWeek % count != 0) {
        throw InvalidSpec("bucket count must divide " + std::to_string(kMinutesPerWeek));
    }
    return BucketGrid(static_cast<int>(kMinutesPerWeek / count));
}

int BucketGrid::day_of(std::size_t bucket) const {
    return static_cast<int>(bucket) * bucket_minutes_ / (24 * 60);
}

int BucketGrid::minute_of_day(std::size_t bucket) const {
    return static_cast<int>(bucket) * bucket_minutes_ % (24 * 60);
}

std::size_t BucketGrid::bucket_at(int day, int minute_of_day) const {
    return static_cast<std::size_t>((day * 24 * 60 + minute_of_day) / bucket_minutes_);
}

std::size_t SpeedSeries::present_count() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(values.begin(), values.end(), [](const auto& v) { return v.has_value(); }));
}

ObservedSeries ObservedSeries::from_values(std::vector<double> values) {
    ObservedSeries out;
    out.source_buckets.resize(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) out.source_buckets[i] = i;
    out.values = std::move(values);
    return out;
}

namespace {
constexpr std::array<std::string_view, 6> kRoadClassNames = {"primary", "secondary", "tertiary",
                                                             "trunk",   "residential", "other"};
}

std::string_view to_string(RoadClass rc) noexcept {
    return kRoadClassNames[static_cast<std::size_t>(rc)];
}

std::optional<RoadClass> parse_road_class(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    for (std::size_t i = 0; i < kRoadClassNames.size(); ++i) {
        if (lower == kRoadClassNames[i]) return static_cast<RoadClass>(i);
    }
    return std::nullopt;
}

StreetProfile StreetProfile::from_series(std::string street_id, SpeedSeries series) {
    StreetProfile p;
    p.street_id = std::move(street_id);
    p.filling_rate = speedclust::filling_rate(series);
    p.series = std::move(series);
    return p;
}

void Dataset::validate() const {
    std::unordered_set<std::string_view> seen;
    for (const auto& p : profiles) {
        if (!seen.insert(p.street_id).second) {
            throw DataError("duplicate street_id '" + p.street_id + "'");
        }
        if (p.series.size() != grid.buckets_per_week()) {
            throw DataError("street '" + p.street_id + "' has " + std::to_string(p.series.size()) +
                            " buckets, grid has " + std::to_string(grid.buckets_per_week()));
        }
    }
}

std::optional<std::size_t> Dataset::find(std::string_view street_id) const {
    for (std::size_t i = 0; i < profiles.size(); ++i) {
        if (profiles[i].street_id == street_id) return i;
    }
    return std::nullopt;
}

ObservedSeries drop_nulls(const SpeedSeries& series) {
    ObservedSeries out;
    for (std::size_t b = 0; b < series.values.size(); ++b) {
        if (series.values[b]) {
            out.values.push_back(*series.values[b]);
            out.source_buckets.push_back(b);
        }
    }
    if (out.empty()) throw EmptySeries();
    return out;
}

SpeedSeries embed(const ObservedSeries& observed, std::size_t length) {
    SpeedSeries out;
    out.values.assign(length, std::nullopt);
    for (std::size_t i = 0; i < observed.size(); ++i) {
        out.values.at(observed.source_buckets[i]) = observed.values[i];
    }
    return out;
}

double filling_rate(const SpeedSeries& series) noexcept {
    if (series.values.empty()) return 0.0;
    return static_cast<double>(series.present_count()) / static_cast<double>(series.values.size());
}

} // namespace speedclust
