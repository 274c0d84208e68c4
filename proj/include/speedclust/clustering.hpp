#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "speedclust/core.hpp"
#include "speedclust/dtw.hpp"

namespace speedclust {

struct ClusterConfig {
    std::size_t k = 3;
    std::size_t max_iterations = 30;
    std::uint64_t seed = 0;
    /// Stop once the relative inertia change between iterations drops below this.
    double epsilon = 1e-4;
    std::size_t barycenter_iterations = 10;
    /// Independent k-means++ seedings; the lowest-inertia run is kept.
    std::size_t restarts = 1;
    /// Weight of the Euclidean scalar-feature term in the point-to-centroid distance.
    double scalar_weight = 1.0;
    DtwOptions dtw;

    friend bool operator==(const ClusterConfig&, const ClusterConfig&) = default;
};

struct Centroid {
    ObservedSeries series;
    std::vector<double> scalar_features;

    friend bool operator==(const Centroid&, const Centroid&) = default;
};

/// Clustering input: one series per item plus an optional, equally sized scalar vector per item.
struct FeatureRows {
    std::vector<ObservedSeries> series;
    std::vector<std::vector<double>> scalars;

    std::size_t size() const noexcept { return series.size(); }
    bool has_scalars() const noexcept { return !scalars.empty(); }
};

struct ClusterModel {
    ClusterConfig config;
    std::vector<Centroid> centroids;
    /// Cluster index per input item, in input order.
    std::vector<std::size_t> labels;
    /// Street id per input item; may be empty when clustering anonymous series.
    std::vector<std::string> street_ids;
    std::vector<double> inertia_trace;
    std::size_t iterations_run = 0;
    bool converged = false;

    double inertia() const { return inertia_trace.empty() ? 0.0 : inertia_trace.back(); }
    std::vector<std::size_t> cluster_sizes() const;
    /// Cluster of a street, or throws DataError.
    std::size_t cluster_of(std::string_view street_id) const;

    friend bool operator==(const ClusterModel&, const ClusterModel&) = default;
};

/// dtw(series) + w * ||scalars||, the metric used for assignment.
double point_distance(const ObservedSeries& series, std::span<const double> scalars, const Centroid& centroid,
                      const ClusterConfig& config);

/// K-Means under DTW. Deterministic in (input order, config). Throws TooFewSeries if k exceeds the
/// number of items, EmptySeries for an empty input series.
ClusterModel kmeans_dtw(std::span<const ObservedSeries> series, const ClusterConfig& config);
ClusterModel kmeans_dtw(const FeatureRows& rows, const ClusterConfig& config);

/// Same, but the first `initial.size()` centroids are fixed seeds and the rest are chosen by
/// k-means++ around them. With k-1 seeds taken from a previous run the final inertia never exceeds
/// that run's.
ClusterModel kmeans_dtw(const FeatureRows& rows, const ClusterConfig& config, std::span<const Centroid> initial);

/// DTW barycenter averaging with a descent guard: returns the lowest-cost series among `init` and
/// its successive averaging iterates, so the summed squared DTW to the members never increases.
/// The result has the length of `init`.
Centroid update_barycenter(std::span<const ObservedSeries> members, const Centroid& init, std::size_t iterations,
                           const DtwOptions& opts = {});

/// Sum of squared point-to-centroid distances under the model's assignment.
double inertia(std::span<const ObservedSeries> series, const ClusterModel& model);
double inertia(const FeatureRows& rows, const ClusterModel& model);

/// Linear resampling of a series onto `length` evenly spaced positions.
std::vector<double> resample(std::span<const double> values, std::size_t length);

struct ElbowPoint {
    std::size_t k = 0;
    double inertia = 0.0;
};

/// Knee of a decreasing curve: the point farthest below the chord joining the endpoints. Ties go to
/// the smaller k. Throws PreconditionError for fewer than three points.
std::size_t chord_elbow(std::span<const ElbowPoint> curve);

struct ElbowResult {
    std::size_t chosen_k = 0;
    std::vector<ElbowPoint> curve;
    std::vector<ClusterModel> models;
};

/// Clusters once per k in [k_min, k_max] and picks the knee. Each k after the first is also
/// warm-started from the previous k's centroids and the better run kept, so the curve is
/// non-increasing.
ElbowResult elbow_select(const FeatureRows& rows, std::size_t k_min, std::size_t k_max,
                         const ClusterConfig& config_template);
ElbowResult elbow_select(std::span<const ObservedSeries> series, std::size_t k_min, std::size_t k_max,
                         const ClusterConfig& config_template);

/// Null-drops every profile and clusters them, filling in street ids. Profiles without any
/// observation raise EmptySeries with their index.
ClusterModel cluster_dataset(const Dataset& dataset, const ClusterConfig& config);
FeatureRows observed_rows(const Dataset& dataset);

inline constexpr int kModelSchemaVersion = 1;

/// JSON document {schema_version, config, centroids, assignments, inertia_trace, ...}.
std::string model_to_json(const ClusterModel& model);
/// Throws DataError on a malformed document or unknown schema version.
ClusterModel model_from_json(std::string_view text);

} // namespace speedclust
