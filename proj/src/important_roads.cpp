#include "speedclust/important_roads.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "speedclust/errors.hpp"
#include "speedclust/text.hpp"

namespace speedclust {

namespace {

double euclid(const std::vector<double>& x, const std::vector<double>& y) {
    double sum = 0.0;
    for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) sum += (x[i] - y[i]) * (x[i] - y[i]);
    return std::sqrt(sum);
}

std::vector<std::size_t> with_class(const Dataset& ds, RoadClass rc) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < ds.profiles.size(); ++i) {
        if (ds.profiles[i].road_class == rc) out.push_back(i);
    }
    return out;
}

} // namespace

ScaledFeatures scale_profiles(const Dataset& dataset, const ScalerParams& scaler,
                              const std::vector<std::size_t>& which) {
    ScaledFeatures out;
    const std::size_t series_cols = scaler.series_columns;
    const bool scalars = scaler.means.size() > series_cols;
    for (std::size_t idx : which) {
        const auto row = apply_scaler(dataset.profiles[idx], scaler);
        ObservedSeries series;
        for (std::size_t b = 0; b < series_cols; ++b) {
            if (row[b]) {
                series.values.push_back(*row[b]);
                series.source_buckets.push_back(b);
            }
        }
        if (series.empty()) throw EmptySeries(idx);
        out.rows.series.push_back(std::move(series));
        if (scalars) {
            std::vector<double> s;
            for (std::size_t c = series_cols; c < row.size(); ++c) s.push_back(row[c].value_or(0.0));
            out.rows.scalars.push_back(std::move(s));
        }
        out.profile_index.push_back(idx);
    }
    return out;
}

PrimaryRepresentative primary_representative(const Dataset& dataset, const ScalerParams& scaler) {
    const auto primaries = with_class(dataset, RoadClass::Primary);
    if (primaries.empty()) throw NoPrimaryRoads();
    const std::size_t series_cols = scaler.series_columns;
    std::vector<double> sum(series_cols, 0.0);
    std::vector<std::size_t> count(series_cols, 0);
    std::vector<double> scalar_sum(scaler.means.size() - series_cols, 0.0);
    for (std::size_t idx : primaries) {
        const auto row = apply_scaler(dataset.profiles[idx], scaler);
        for (std::size_t b = 0; b < series_cols; ++b) {
            if (row[b]) {
                sum[b] += *row[b];
                ++count[b];
            }
        }
        for (std::size_t c = 0; c < scalar_sum.size(); ++c) scalar_sum[c] += row[series_cols + c].value_or(0.0);
    }
    PrimaryRepresentative rep;
    for (std::size_t b = 0; b < series_cols; ++b) {
        if (count[b] > 0) {
            rep.series.values.push_back(sum[b] / static_cast<double>(count[b]));
            rep.series.source_buckets.push_back(b);
        }
    }
    if (rep.series.empty()) throw NoData("primary roads observe no buckets");
    for (double s : scalar_sum) rep.scalar_features.push_back(s / static_cast<double>(primaries.size()));
    return rep;
}

double representative_distance(const Centroid& centroid, const PrimaryRepresentative& rep, double scalar_weight,
                               const DtwOptions& dtw) {
    return dtw_distance(centroid.series, rep.series, dtw) +
           scalar_weight * euclid(centroid.scalar_features, rep.scalar_features);
}

ImportanceResult find_important_secondary(const Dataset& dataset, const ImportanceConfig& config) {
    ClusterConfig cluster = config.cluster;
    cluster.scalar_weight = config.scalar_weight;

    const ScalerParams scaler = fit_scaler(dataset.profiles, config.features);
    const PrimaryRepresentative rep = primary_representative(dataset, scaler);
    const auto secondaries = with_class(dataset, RoadClass::Secondary);
    if (secondaries.size() < cluster.k) {
        throw TooFewSeries("need at least " + std::to_string(cluster.k) + " secondary roads, found " +
                           std::to_string(secondaries.size()));
    }
    const ScaledFeatures features = scale_profiles(dataset, scaler, secondaries);

    ImportanceResult result;
    result.model = kmeans_dtw(features.rows, cluster);
    for (std::size_t idx : secondaries) result.model.street_ids.push_back(dataset.profiles[idx].street_id);

    for (const auto& c : result.model.centroids) {
        result.cluster_distances.push_back(representative_distance(c, rep, config.scalar_weight, cluster.dtw));
    }
    result.selected_cluster = static_cast<std::size_t>(
        std::min_element(result.cluster_distances.begin(), result.cluster_distances.end()) -
        result.cluster_distances.begin());

    for (std::size_t m = 0; m < secondaries.size(); ++m) {
        if (result.model.labels[m] != result.selected_cluster) continue;
        const StreetProfile& p = dataset.profiles[secondaries[m]];
        result.important_street_ids.push_back(p.street_id);
        result.per_street.push_back({p.street_id, p.filling_rate, RoadClass::Secondary, p.name, p.county});
    }

    // Distinctiveness of the centroids relative to the cluster spread.
    double member_sum = 0.0;
    for (std::size_t m = 0; m < features.rows.size(); ++m) {
        const auto& c = result.model.centroids[result.model.labels[m]];
        member_sum += point_distance(features.rows.series[m],
                                     features.rows.has_scalars() ? std::span<const double>(features.rows.scalars[m])
                                                                 : std::span<const double>(),
                                     c, result.model.config);
    }
    result.mean_member_distance = member_sum / static_cast<double>(features.rows.size());
    std::vector<ObservedSeries> centroid_series;
    for (const auto& c : result.model.centroids) centroid_series.push_back(c.series);
    if (centroid_series.size() >= 2) {
        const DistanceMatrix sep = pairwise_distances(centroid_series, cluster.dtw);
        double min_sep = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < sep.rows(); ++i) {
            for (std::size_t j = i + 1; j < sep.cols(); ++j) min_sep = std::min(min_sep, sep(i, j));
        }
        result.min_centroid_separation = min_sep;
        result.distinctive = min_sep > config.distinct_fraction * result.mean_member_distance;
        if (!result.distinctive) {
            result.warnings.push_back("cluster centroids are not distinctive: minimum separation " +
                                      text::format_double(min_sep) + " <= " +
                                      text::format_double(config.distinct_fraction) + " x mean member distance " +
                                      text::format_double(result.mean_member_distance));
        }
    }
    return result;
}

std::string important_roads_csv(const ImportanceResult& result) {
    std::ostringstream out;
    out << "road_class,filling_rate_pct,street_id,name,county\n";
    for (const auto& s : result.per_street) {
        out << to_string(s.road_class) << ',' << text::format_double(s.filling_rate * 100.0) << ','
            << text::csv_field(s.street_id) << ',' << text::csv_field(s.name.value_or("")) << ','
            << text::csv_field(s.county.value_or("")) << '\n';
    }
    return out.str();
}

std::string importance_json(const ImportanceResult& result) {
    nlohmann::ordered_json j;
    j["k"] = result.model.centroids.size();
    j["selected_cluster"] = result.selected_cluster;
    j["cluster_distances"] = result.cluster_distances;
    j["cluster_sizes"] = result.model.cluster_sizes();
    j["important_street_ids"] = result.important_street_ids;
    j["distinctive"] = result.distinctive;
    j["min_centroid_separation"] = result.min_centroid_separation;
    j["mean_member_distance"] = result.mean_member_distance;
    j["inertia"] = result.model.inertia();
    j["warnings"] = result.warnings;
    return j.dump(2);
}

} // namespace speedclust
