#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "speedclust/clustering.hpp"
#include "speedclust/core.hpp"
#include "speedclust/pipeline.hpp"

namespace speedclust {

/// Average scaled feature vector of the primary roads. The series keeps only buckets that at least
/// one primary road observed.
struct PrimaryRepresentative {
    ObservedSeries series;
    std::vector<double> scalar_features;
};

/// Scaled clustering features of a set of profiles. Missing scalar attributes become 0, the column
/// mean in scaled units.
struct ScaledFeatures {
    FeatureRows rows;
    std::vector<std::size_t> profile_index;
};

ScaledFeatures scale_profiles(const Dataset& dataset, const ScalerParams& scaler,
                              const std::vector<std::size_t>& which);

/// Throws NoPrimaryRoads when the dataset has no primary-class profile.
PrimaryRepresentative primary_representative(const Dataset& dataset, const ScalerParams& scaler);

struct ImportanceConfig {
    ClusterConfig cluster;
    /// Weight of the scalar Euclidean term, both in clustering and in centroid ranking.
    double scalar_weight = 1.0;
    /// Centroids count as distinctive when their minimum pairwise DTW exceeds this fraction of the
    /// mean member-to-centroid distance.
    double distinct_fraction = 0.10;
    FeatureSpec features;
};

struct ImportantStreet {
    std::string street_id;
    double filling_rate = 0.0;
    RoadClass road_class = RoadClass::Secondary;
    std::optional<std::string> name;
    std::optional<std::string> county;
};

struct ImportanceResult {
    std::size_t selected_cluster = 0;
    std::vector<double> cluster_distances;
    std::vector<std::string> important_street_ids;
    std::vector<ImportantStreet> per_street;
    ClusterModel model;
    bool distinctive = true;
    double min_centroid_separation = 0.0;
    double mean_member_distance = 0.0;
    std::vector<std::string> warnings;
};

/// Centroid-to-representative distance: DTW on the series plus the weighted Euclidean distance of
/// the scalar features.
double representative_distance(const Centroid& centroid, const PrimaryRepresentative& rep, double scalar_weight,
                               const DtwOptions& dtw = {});

/// Scales all profiles, averages the primaries, clusters the secondaries into `cluster.k` groups
/// and returns the cluster whose centroid is nearest the primary representative.
/// Throws NoPrimaryRoads or TooFewSeries.
ImportanceResult find_important_secondary(const Dataset& dataset, const ImportanceConfig& config);

/// `road_class,filling_rate_pct,street_id,name,county`
std::string important_roads_csv(const ImportanceResult& result);
/// Selection metadata and the distance table.
std::string importance_json(const ImportanceResult& result);

} // namespace speedclust
