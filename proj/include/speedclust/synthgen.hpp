#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "speedclust/core.hpp"
#include "speedclust/pipeline.hpp"

namespace speedclust::synth {

enum class Archetype { Residential, Arterial, Highway, PrimaryLikeSecondary };

std::string_view to_string(Archetype a) noexcept;
std::optional<Archetype> parse_archetype(std::string_view name);

struct ArchetypeSpec {
    Archetype name = Archetype::Arterial;
    double base_speed_kmh = 50.0;
    /// Fraction by which weekday 07:00-09:00 and 17:00-19:00 speeds drop.
    double rush_hour_dip_fraction = 0.3;
    double noise_std_kmh = 3.0;
    double missing_prob = 0.3;
    std::size_t count = 100;
    RoadClass road_class = RoadClass::Secondary;
    std::optional<double> max_speed_kmh;
    std::optional<double> length_m;
};

struct GeneratorOptions {
    std::uint64_t seed = 42;
    /// Generated speeds are clipped into these bounds.
    double min_speed_kmh = 1.0;
    double max_speed_kmh = 140.0;
    /// Specs must leave at least this observation rate (1 - missing_prob) on average.
    double min_observation_rate = 1.0 / 3.0;
};

struct PlantedLabel {
    std::string street_id;
    Archetype archetype;
};

struct SyntheticData {
    Dataset dataset;
    std::vector<PlantedLabel> labels;

    /// Label of each profile as an archetype index, aligned with dataset.profiles.
    std::vector<std::size_t> label_indices() const;
};

/// Noise-free weekly waveform of an archetype.
std::vector<double> waveform(const ArchetypeSpec& spec, const BucketGrid& grid);

/// True for weekday buckets that start within 07:00-09:00 or 17:00-19:00.
bool is_rush_hour(const BucketGrid& grid, std::size_t bucket);

/// Deterministic in (specs, grid, options). Street ids are `<archetype>_<index>`; each street draws
/// from its own sub-seed. Throws InvalidSpec.
SyntheticData generate(std::span<const ArchetypeSpec> specs, const BucketGrid& grid,
                       const GeneratorOptions& options = {});

/// Residential, arterial and highway streets, 100 each, missing_prob 0.3.
std::vector<ArchetypeSpec> default_specs();

/// Primary highways, ordinary secondaries and 20 primary-like secondaries among 180 others.
std::vector<ArchetypeSpec> important_roads_specs();

/// One record per observed cell.
std::vector<RawRecord> to_records(const Dataset& dataset);
std::vector<AttributeRow> to_attributes(const Dataset& dataset);
/// `street_id,archetype`
std::string labels_csv(std::span<const PlantedLabel> labels);

} // namespace speedclust::synth
