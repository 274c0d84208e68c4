#include "speedclust/synthgen.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <random>
#include <sstream>

#include "speedclust/errors.hpp"
#include "speedclust/text.hpp"

namespace speedclust::synth {

namespace {

constexpr std::array<std::string_view, 4> kNames = {"residential", "arterial", "highway", "primary_like_secondary"};

std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::string street_id(Archetype a, std::size_t index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04zu", index);
    return std::string(to_string(a)) + "_" + buf;
}

void check(const ArchetypeSpec& s, const GeneratorOptions& opts) {
    const std::string who(to_string(s.name));
    if (s.count == 0) throw InvalidSpec(who + ": count must be at least 1");
    if (!(s.missing_prob >= 0.0 && s.missing_prob < 1.0 - opts.min_observation_rate)) {
        throw InvalidSpec(who + ": missing_prob must lie in [0, " +
                          text::format_double(1.0 - opts.min_observation_rate) + ")");
    }
    if (!(s.base_speed_kmh >= opts.min_speed_kmh && s.base_speed_kmh <= opts.max_speed_kmh)) {
        throw InvalidSpec(who + ": base speed outside the cleaning bounds");
    }
    if (!(s.rush_hour_dip_fraction >= 0.0 && s.rush_hour_dip_fraction < 1.0)) {
        throw InvalidSpec(who + ": rush_hour_dip_fraction must lie in [0, 1)");
    }
    if (!(s.noise_std_kmh >= 0.0)) throw InvalidSpec(who + ": noise_std_kmh must be non-negative");
}

} // namespace

std::string_view to_string(Archetype a) noexcept { return kNames[static_cast<std::size_t>(a)]; }

std::optional<Archetype> parse_archetype(std::string_view name) {
    for (std::size_t i = 0; i < kNames.size(); ++i) {
        if (kNames[i] == name) return static_cast<Archetype>(i);
    }
    return std::nullopt;
}

std::vector<std::size_t> SyntheticData::label_indices() const {
    std::vector<std::size_t> out;
    out.reserve(dataset.profiles.size());
    for (const auto& p : dataset.profiles) {
        const auto it = std::find_if(labels.begin(), labels.end(),
                                     [&](const PlantedLabel& l) { return l.street_id == p.street_id; });
        out.push_back(static_cast<std::size_t>(it->archetype));
    }
    return out;
}

bool is_rush_hour(const BucketGrid& grid, std::size_t bucket) {
    if (grid.day_of(bucket) >= 5) return false;
    const int minute = grid.minute_of_day(bucket);
    return (minute >= 7 * 60 && minute < 9 * 60) || (minute >= 17 * 60 && minute < 19 * 60);
}

std::vector<double> waveform(const ArchetypeSpec& spec, const BucketGrid& grid) {
    std::vector<double> out(grid.buckets_per_week());
    for (std::size_t b = 0; b < out.size(); ++b) {
        out[b] = spec.base_speed_kmh * (is_rush_hour(grid, b) ? 1.0 - spec.rush_hour_dip_fraction : 1.0);
    }
    return out;
}

SyntheticData generate(std::span<const ArchetypeSpec> specs, const BucketGrid& grid, const GeneratorOptions& options) {
    if (specs.empty()) throw InvalidSpec("no archetype specs");
    for (const auto& s : specs) check(s, options);

    struct Job {
        const ArchetypeSpec* spec;
        std::size_t index;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    std::array<std::size_t, 4> next_index{};
    for (std::size_t si = 0; si < specs.size(); ++si) {
        for (std::size_t i = 0; i < specs[si].count; ++i) {
            const std::size_t index = next_index[static_cast<std::size_t>(specs[si].name)]++;
            const std::uint64_t seed =
                mix(options.seed ^ mix((static_cast<std::uint64_t>(specs[si].name) << 32) + index));
            jobs.push_back({&specs[si], index, seed});
        }
    }

    SyntheticData out{Dataset{grid, std::vector<StreetProfile>(jobs.size())}, {}};
    const auto n = static_cast<std::int64_t>(jobs.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t j = 0; j < n; ++j) {
        const Job& job = jobs[j];
        const ArchetypeSpec& spec = *job.spec;
        std::mt19937_64 rng(job.seed);
        std::normal_distribution<double> noise(0.0, 1.0);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const auto base = waveform(spec, grid);
        SpeedSeries series;
        series.values.resize(base.size());
        for (std::size_t b = 0; b < base.size(); ++b) {
            const double v = std::clamp(base[b] + spec.noise_std_kmh * noise(rng), options.min_speed_kmh,
                                        options.max_speed_kmh);
            if (unit(rng) >= spec.missing_prob) series.values[b] = v;
        }
        StreetProfile p = StreetProfile::from_series(street_id(spec.name, job.index), std::move(series));
        p.road_class = spec.road_class;
        p.max_speed_kmh = spec.max_speed_kmh;
        p.length_m = spec.length_m;
        out.dataset.profiles[j] = std::move(p);
    }
    std::sort(out.dataset.profiles.begin(), out.dataset.profiles.end(),
              [](const StreetProfile& a, const StreetProfile& b) { return a.street_id < b.street_id; });
    out.labels.reserve(jobs.size());
    for (const auto& p : out.dataset.profiles) {
        const auto under = p.street_id.rfind('_');
        out.labels.push_back({p.street_id, *parse_archetype(std::string_view(p.street_id).substr(0, under))});
    }
    return out;
}

std::vector<ArchetypeSpec> default_specs() {
    return {
        {Archetype::Residential, 30.0, 0.10, 1.0, 0.3, 100, RoadClass::Residential, 30.0, 250.0},
        {Archetype::Arterial, 55.0, 0.30, 1.0, 0.3, 100, RoadClass::Secondary, 50.0, 900.0},
        {Archetype::Highway, 80.0, 0.50, 1.0, 0.3, 100, RoadClass::Trunk, 100.0, 3000.0},
    };
}

std::vector<ArchetypeSpec> important_roads_specs() {
    return {
        {Archetype::Highway, 80.0, 0.50, 3.0, 0.3, 30, RoadClass::Primary, 100.0, 3000.0},
        {Archetype::Arterial, 55.0, 0.30, 3.0, 0.4, 90, RoadClass::Secondary, 50.0, 900.0},
        {Archetype::Residential, 30.0, 0.10, 3.0, 0.4, 90, RoadClass::Secondary, 50.0, 600.0},
        {Archetype::PrimaryLikeSecondary, 80.0, 0.50, 3.0, 0.05, 20, RoadClass::Secondary, 50.0, 1500.0},
    };
}

std::vector<RawRecord> to_records(const Dataset& dataset) {
    std::vector<RawRecord> out;
    for (const auto& p : dataset.profiles) {
        for (std::size_t b = 0; b < p.series.values.size(); ++b) {
            if (p.series.values[b]) out.push_back({p.street_id, b, *p.series.values[b]});
        }
    }
    return out;
}

std::vector<AttributeRow> to_attributes(const Dataset& dataset) {
    std::vector<AttributeRow> out;
    for (const auto& p : dataset.profiles) {
        AttributeRow row;
        row.street_id = p.street_id;
        row.road_class = p.road_class;
        row.max_speed_kmh = p.max_speed_kmh;
        row.length_m = p.length_m;
        out.push_back(std::move(row));
    }
    return out;
}

std::string labels_csv(std::span<const PlantedLabel> labels) {
    std::ostringstream out;
    out << "street_id,archetype\n";
    for (const auto& l : labels) out << text::csv_field(l.street_id) << ',' << to_string(l.archetype) << '\n';
    return out.str();
}

} // namespace speedclust::synth
