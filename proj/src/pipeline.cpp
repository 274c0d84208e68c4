#include "speedclust/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <unordered_map>
#include <unordered_set>
#include <utility>

#include <nlohmann/json.hpp>

#include "speedclust/errors.hpp"

namespace speedclust {

void CleaningConfig::validate() const {
    if (!(min_speed_kmh >= 0.0 && min_speed_kmh < max_speed_kmh)) {
        throw InvalidSpec("speed bounds must satisfy 0 <= min < max");
    }
    if (!(min_filling_rate >= 0.0 && min_filling_rate <= 1.0)) {
        throw InvalidSpec("min_filling_rate must lie in [0, 1]");
    }
}

std::string CleaningReport::to_json() const {
    nlohmann::ordered_json j;
    j["outlier_records"] = outlier_records;
    j["duplicate_records"] = duplicate_records;
    j["dropped_low_observation"] = dropped_low_observation;
    j["dropped_low_filling_rate"] = dropped_low_filling_rate;
    j["unmatched_attributes"] = unmatched_attributes;
    j["unknown_attribute_rows"] = unknown_attribute_rows;
    return j.dump(2);
}

namespace {

double median_of_sorted(const std::vector<double>& v) {
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

Dataset aggregate(std::span<const RawRecord> records, const BucketGrid& grid, const CleaningConfig* filter,
                  CleaningReport* report) {
    const std::size_t width = grid.buckets_per_week();
    std::map<std::string, std::vector<std::pair<std::size_t, double>>> by_street;
    std::size_t outliers = 0;
    for (const auto& r : records) {
        if (r.bucket_index >= width) {
            throw InvalidBucket("street '" + r.street_id + "': bucket " + std::to_string(r.bucket_index) +
                                " outside grid of " + std::to_string(width));
        }
        if (!std::isfinite(r.speed_kmh)) throw DataError("street '" + r.street_id + "': non-finite speed");
        if (filter && (r.speed_kmh < filter->min_speed_kmh || r.speed_kmh > filter->max_speed_kmh)) {
            ++outliers;
            continue;
        }
        by_street[r.street_id].emplace_back(r.bucket_index, r.speed_kmh);
    }

    std::vector<std::pair<std::string, std::vector<std::pair<std::size_t, double>>>> groups(
        std::make_move_iterator(by_street.begin()), std::make_move_iterator(by_street.end()));
    Dataset ds{grid, std::vector<StreetProfile>(groups.size())};
    std::vector<std::size_t> duplicates(groups.size(), 0);

    const auto count = static_cast<std::int64_t>(groups.size());
#pragma omp parallel for schedule(dynamic, 8)
    for (std::int64_t g = 0; g < count; ++g) {
        auto& obs = groups[g].second;
        std::sort(obs.begin(), obs.end());
        const auto last = std::unique(obs.begin(), obs.end());
        duplicates[g] = static_cast<std::size_t>(obs.end() - last);
        obs.erase(last, obs.end());

        SpeedSeries series;
        series.values.assign(width, std::nullopt);
        std::vector<double> bucket;
        for (std::size_t i = 0; i < obs.size();) {
            const std::size_t b = obs[i].first;
            bucket.clear();
            for (; i < obs.size() && obs[i].first == b; ++i) bucket.push_back(obs[i].second);
            series.values[b] = median_of_sorted(bucket);
        }
        ds.profiles[g] = StreetProfile::from_series(groups[g].first, std::move(series));
    }

    if (report) {
        report->outlier_records += outliers;
        for (std::size_t d : duplicates) report->duplicate_records += d;
    }
    return ds;
}

} // namespace

Dataset ingest(std::span<const RawRecord> records, const BucketGrid& grid, CleaningReport* report) {
    return aggregate(records, grid, nullptr, report);
}

Dataset ingest(std::span<const RawRecord> records, const BucketGrid& grid, const CleaningConfig& filter,
               CleaningReport* report) {
    filter.validate();
    return aggregate(records, grid, &filter, report);
}

Dataset clean(const Dataset& dataset, const CleaningConfig& config, CleaningReport* report) {
    config.validate();
    Dataset out{dataset.grid, {}};
    for (const auto& profile : dataset.profiles) {
        StreetProfile p = profile;
        for (auto& v : p.series.values) {
            if (v && (*v < config.min_speed_kmh || *v > config.max_speed_kmh)) {
                v.reset();
                if (report) ++report->outlier_records;
            }
        }
        p.filling_rate = filling_rate(p.series);
        if (p.series.present_count() < config.min_observed_buckets) {
            if (report) ++report->dropped_low_observation;
            continue;
        }
        if (!(p.filling_rate > config.min_filling_rate)) {
            if (report) ++report->dropped_low_filling_rate;
            continue;
        }
        out.profiles.push_back(std::move(p));
    }
    return out;
}

Dataset join_attributes(const Dataset& dataset, std::span<const AttributeRow> attrs, CleaningReport* report) {
    std::unordered_map<std::string_view, const AttributeRow*> index;
    for (const auto& row : attrs) {
        if (!index.emplace(row.street_id, &row).second) {
            throw DuplicateAttributeKey("attribute table lists street '" + row.street_id + "' more than once");
        }
    }
    Dataset out = dataset;
    std::unordered_set<std::string_view> matched;
    std::size_t unmatched = 0;
    for (auto& p : out.profiles) {
        const auto it = index.find(p.street_id);
        if (it == index.end()) {
            ++unmatched;
            continue;
        }
        const AttributeRow& row = *it->second;
        matched.insert(row.street_id);
        p.road_class = row.road_class;
        p.max_speed_kmh = row.max_speed_kmh;
        p.length_m = row.length_m;
        p.avg_speed_kmh = row.avg_speed_kmh;
        p.name = row.name;
        p.county = row.county;
    }
    if (report) {
        report->unmatched_attributes += unmatched;
        report->unknown_attribute_rows += attrs.size() - matched.size();
    }
    return out;
}

// ---- Scaling ------------------------------------------------------------------------------------

double ScalerParams::transform(std::size_t column, double x) const {
    return stds[column] > 0.0 ? (x - means[column]) / stds[column] : 0.0;
}

double ScalerParams::inverse(std::size_t column, double z) const {
    return z * stds[column] + means[column];
}

std::vector<std::optional<double>> feature_row(const StreetProfile& profile, const FeatureSpec& spec) {
    std::vector<std::optional<double>> row;
    if (spec.series) row = profile.series.values;
    if (spec.filling_rate) row.emplace_back(profile.filling_rate);
    if (spec.max_speed) row.push_back(profile.max_speed_kmh);
    return row;
}

ScalerParams fit_scaler(std::span<const std::vector<std::optional<double>>> rows) {
    if (rows.size() < 2) throw TooFewProfiles("scaler needs at least two rows, got " + std::to_string(rows.size()));
    const std::size_t width = rows.front().size();
    ScalerParams params;
    params.spec = FeatureSpec{false, false, false};
    params.means.assign(width, 0.0);
    params.stds.assign(width, 0.0);
    std::vector<std::size_t> counts(width, 0);
    for (const auto& row : rows) {
        if (row.size() != width) throw DataError("feature rows differ in width");
        for (std::size_t c = 0; c < width; ++c) {
            if (row[c]) {
                params.means[c] += *row[c];
                ++counts[c];
            }
        }
    }
    for (std::size_t c = 0; c < width; ++c) {
        if (counts[c] > 0) params.means[c] /= static_cast<double>(counts[c]);
    }
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < width; ++c) {
            if (row[c]) params.stds[c] += (*row[c] - params.means[c]) * (*row[c] - params.means[c]);
        }
    }
    for (std::size_t c = 0; c < width; ++c) {
        if (counts[c] > 0) params.stds[c] = std::sqrt(params.stds[c] / static_cast<double>(counts[c]));
    }
    return params;
}

ScalerParams fit_scaler(std::span<const StreetProfile> profiles, const FeatureSpec& spec) {
    std::vector<std::vector<std::optional<double>>> rows;
    rows.reserve(profiles.size());
    for (const auto& p : profiles) rows.push_back(feature_row(p, spec));
    ScalerParams params = fit_scaler(rows);
    params.spec = spec;
    params.series_columns = spec.series && !profiles.empty() ? profiles.front().series.size() : 0;
    return params;
}

std::vector<std::optional<double>> apply_scaler(std::span<const std::optional<double>> row,
                                                const ScalerParams& params) {
    if (row.size() != params.means.size()) throw DataError("feature row width does not match the scaler");
    std::vector<std::optional<double>> out(row.size());
    for (std::size_t c = 0; c < row.size(); ++c) {
        if (row[c]) out[c] = params.transform(c, *row[c]);
    }
    return out;
}

std::vector<std::optional<double>> apply_scaler(const StreetProfile& profile, const ScalerParams& params) {
    const auto row = feature_row(profile, params.spec);
    return apply_scaler(std::span<const std::optional<double>>(row), params);
}

} // namespace speedclust
