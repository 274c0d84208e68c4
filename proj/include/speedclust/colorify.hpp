#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "speedclust/clustering.hpp"
#include "speedclust/core.hpp"

namespace speedclust {

/// Ordered from least to most congested.
enum class CongestionLevel { FreeFlow, Heavy, Queuing, Blocked };

std::string_view to_string(CongestionLevel level) noexcept;
/// Canonical tile color: green, yellow, red, black.
std::string_view color_of(CongestionLevel level) noexcept;

struct CongestionThresholds {
    double free_flow_ratio = 0.75;
    double heavy_ratio = 0.40;
    double blocked_speed_kmh = 5.0;

    /// Throws InvalidSpec unless 0 < heavy < free <= 1 and blocked >= 0.
    void validate() const;
    /// Parses "free:heavy:blocked", e.g. "0.75:0.4:5".
    static CongestionThresholds parse(std::string_view text);
};

/// Level of one speed given the street's free-flow reference.
CongestionLevel classify(double speed_kmh, double reference_kmh, const CongestionThresholds& thresholds);

/// Per-street mask marking cells filled by imputation.
using ImputedMask = std::vector<std::vector<bool>>;

struct ImputationReport {
    std::size_t cells_observed = 0;
    std::size_t cells_imputed = 0;
    std::size_t cells_unfilled = 0;
    std::size_t streets_without_cluster = 0;
};

struct ImputationResult {
    Dataset dataset;
    ImputedMask imputed;
    ImputationReport report;
};

/// Fills each missing (street, bucket) with the mean of the observed values at that bucket over the
/// other streets of the same cluster. Observed cells are never touched; cells no peer observes stay
/// missing. Filling rates are left as measured.
ImputationResult impute(const Dataset& dataset, const ClusterModel& model);

/// Linear-interpolation percentile, q in [0, 1]. Throws NoData on an empty input.
double percentile(std::vector<double> values, double q);

/// max_speed_kmh when known, else the 85th percentile of the street's observed speeds. Cells flagged in
/// `imputed` are only used when nothing was observed. Throws NoData for an all-missing street.
double free_flow_reference(const StreetProfile& profile, const std::vector<bool>* imputed = nullptr);

struct CongestionAssignment {
    std::string street_id;
    std::size_t bucket_index = 0;
    double speed_kmh = 0.0;
    bool imputed = false;
    CongestionLevel level = CongestionLevel::FreeFlow;
};

struct ColorifySummary {
    std::size_t cells_observed = 0;
    std::size_t cells_imputed = 0;
    std::size_t cells_unfilled = 0;
    std::array<std::size_t, 4> level_histogram{};
    std::vector<std::string> skipped_streets;
};

struct ColorifyResult {
    std::vector<CongestionAssignment> cells;
    ColorifySummary summary;
};

/// One assignment per (street, bucket) holding a value. Streets without a computable reference are
/// skipped and listed in the summary.
ColorifyResult colorify(const Dataset& dataset, const CongestionThresholds& thresholds,
                        const ImputedMask* imputed = nullptr);

/// Number of cells colorify would emit.
std::size_t colorable_cells(const Dataset& dataset, const ImputedMask* imputed = nullptr);

/// `street_id,bucket_index,speed_kmh,imputed,level,color`
std::string assignments_csv(const ColorifyResult& result);
std::string summary_json(const ColorifyResult& result, const CongestionThresholds& thresholds);
/// street_id -> color for one bucket.
std::string tile_snapshot_json(const ColorifyResult& result, std::size_t bucket);
std::string imputation_report_json(const ImputationReport& report);

} // namespace speedclust
