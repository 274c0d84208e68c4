#include "speedclust/colorify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "speedclust/errors.hpp"
#include "speedclust/text.hpp"

namespace speedclust {

namespace {
constexpr std::array<std::string_view, 4> kLevelNames = {"FreeFlow", "Heavy", "Queuing", "Blocked"};
constexpr std::array<std::string_view, 4> kColors = {"green", "yellow", "red", "black"};
} // namespace

std::string_view to_string(CongestionLevel level) noexcept { return kLevelNames[static_cast<std::size_t>(level)]; }
std::string_view color_of(CongestionLevel level) noexcept { return kColors[static_cast<std::size_t>(level)]; }

void CongestionThresholds::validate() const {
    if (!(heavy_ratio > 0.0 && heavy_ratio < free_flow_ratio && free_flow_ratio <= 1.0)) {
        throw InvalidSpec("thresholds must satisfy 0 < heavy_ratio < free_flow_ratio <= 1");
    }
    if (!(blocked_speed_kmh >= 0.0)) throw InvalidSpec("blocked_speed_kmh must be non-negative");
}

CongestionThresholds CongestionThresholds::parse(std::string_view text) {
    std::vector<double> parts;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t end = std::min(text.find(':', start), text.size());
        const auto v = text::parse_double(text.substr(start, end - start));
        if (!v) throw InvalidSpec("thresholds must look like free:heavy:blocked, got '" + std::string(text) + "'");
        parts.push_back(*v);
        start = end + 1;
    }
    if (parts.size() != 3) throw InvalidSpec("thresholds must have three parts free:heavy:blocked");
    CongestionThresholds t{parts[0], parts[1], parts[2]};
    t.validate();
    return t;
}

CongestionLevel classify(double speed_kmh, double reference_kmh, const CongestionThresholds& t) {
    if (speed_kmh <= t.blocked_speed_kmh) return CongestionLevel::Blocked;
    const double ratio = speed_kmh / reference_kmh;
    if (ratio >= t.free_flow_ratio) return CongestionLevel::FreeFlow;
    if (ratio >= t.heavy_ratio) return CongestionLevel::Heavy;
    return CongestionLevel::Queuing;
}

ImputationResult impute(const Dataset& dataset, const ClusterModel& model) {
    std::unordered_map<std::string_view, std::size_t> cluster;
    for (std::size_t i = 0; i < model.street_ids.size(); ++i) cluster.emplace(model.street_ids[i], model.labels[i]);

    const std::size_t width = dataset.grid.buckets_per_week();
    const std::size_t k = model.centroids.size();
    std::vector<std::int64_t> label(dataset.profiles.size(), -1);
    ImputationResult result{dataset, ImputedMask(dataset.profiles.size(), std::vector<bool>(width, false)), {}};
    for (std::size_t s = 0; s < dataset.profiles.size(); ++s) {
        const auto it = cluster.find(dataset.profiles[s].street_id);
        if (it == cluster.end()) {
            ++result.report.streets_without_cluster;
        } else {
            label[s] = static_cast<std::int64_t>(it->second);
        }
    }

    // Per (cluster, bucket) peer statistics: sum, count, min, max.
    struct Stat {
        double sum = 0.0;
        std::size_t count = 0;
        double lo = 0.0;
        double hi = 0.0;
    };
    std::vector<Stat> stats(k * width);
    const auto buckets = static_cast<std::int64_t>(width);
#pragma omp parallel for schedule(static)
    for (std::int64_t b = 0; b < buckets; ++b) {
        for (std::size_t s = 0; s < dataset.profiles.size(); ++s) {
            const auto& v = dataset.profiles[s].series.values[b];
            if (!v || label[s] < 0) continue;
            Stat& st = stats[static_cast<std::size_t>(label[s]) * width + b];
            if (st.count == 0) {
                st.lo = st.hi = *v;
            } else {
                st.lo = std::min(st.lo, *v);
                st.hi = std::max(st.hi, *v);
            }
            st.sum += *v;
            ++st.count;
        }
    }

    for (std::size_t s = 0; s < dataset.profiles.size(); ++s) {
        auto& values = result.dataset.profiles[s].series.values;
        for (std::size_t b = 0; b < width; ++b) {
            if (values[b]) {
                ++result.report.cells_observed;
                continue;
            }
            if (label[s] < 0) {
                ++result.report.cells_unfilled;
                continue;
            }
            const Stat& st = stats[static_cast<std::size_t>(label[s]) * width + b];
            if (st.count == 0) {
                ++result.report.cells_unfilled;
                continue;
            }
            values[b] = std::clamp(st.sum / static_cast<double>(st.count), st.lo, st.hi);
            result.imputed[s][b] = true;
            ++result.report.cells_imputed;
        }
    }
    return result;
}

double percentile(std::vector<double> values, double q) {
    if (values.empty()) throw NoData("percentile of an empty set");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double free_flow_reference(const StreetProfile& profile, const std::vector<bool>* imputed) {
    if (profile.max_speed_kmh) return *profile.max_speed_kmh;
    std::vector<double> observed;
    std::vector<double> filled;
    for (std::size_t b = 0; b < profile.series.values.size(); ++b) {
        const auto& v = profile.series.values[b];
        if (!v) continue;
        (imputed && (*imputed)[b] ? filled : observed).push_back(*v);
    }
    if (observed.empty() && filled.empty()) throw NoData("street '" + profile.street_id + "' has no speeds");
    return percentile(observed.empty() ? std::move(filled) : std::move(observed), 0.85);
}

ColorifyResult colorify(const Dataset& dataset, const CongestionThresholds& thresholds, const ImputedMask* imputed) {
    thresholds.validate();
    ColorifyResult result;
    for (std::size_t s = 0; s < dataset.profiles.size(); ++s) {
        const StreetProfile& p = dataset.profiles[s];
        const std::vector<bool>* mask = imputed ? &(*imputed)[s] : nullptr;
        double reference = 0.0;
        try {
            reference = free_flow_reference(p, mask);
        } catch (const NoData&) {
            result.summary.skipped_streets.push_back(p.street_id);
            result.summary.cells_unfilled += p.series.size();
            continue;
        }
        for (std::size_t b = 0; b < p.series.values.size(); ++b) {
            const auto& v = p.series.values[b];
            if (!v) {
                ++result.summary.cells_unfilled;
                continue;
            }
            const bool was_imputed = mask && (*mask)[b];
            const CongestionLevel level = classify(*v, reference, thresholds);
            result.cells.push_back({p.street_id, b, *v, was_imputed, level});
            ++(was_imputed ? result.summary.cells_imputed : result.summary.cells_observed);
            ++result.summary.level_histogram[static_cast<std::size_t>(level)];
        }
    }
    return result;
}

std::size_t colorable_cells(const Dataset& dataset, const ImputedMask* imputed) {
    return colorify(dataset, CongestionThresholds{}, imputed).cells.size();
}

std::string assignments_csv(const ColorifyResult& result) {
    std::ostringstream out;
    out << "street_id,bucket_index,speed_kmh,imputed,level,color\n";
    for (const auto& c : result.cells) {
        out << text::csv_field(c.street_id) << ',' << c.bucket_index << ',' << text::format_double(c.speed_kmh)
            << ',' << (c.imputed ? "true" : "false") << ',' << to_string(c.level) << ',' << color_of(c.level)
            << '\n';
    }
    return out.str();
}

std::string summary_json(const ColorifyResult& result, const CongestionThresholds& thresholds) {
    nlohmann::ordered_json j;
    j["cells_observed"] = result.summary.cells_observed;
    j["cells_imputed"] = result.summary.cells_imputed;
    j["cells_unfilled"] = result.summary.cells_unfilled;
    nlohmann::ordered_json hist;
    for (std::size_t l = 0; l < kLevelNames.size(); ++l) hist[std::string(kLevelNames[l])] = result.summary.level_histogram[l];
    j["level_histogram"] = std::move(hist);
    j["thresholds"] = {{"free_flow_ratio", thresholds.free_flow_ratio},
                       {"heavy_ratio", thresholds.heavy_ratio},
                       {"blocked_speed_kmh", thresholds.blocked_speed_kmh}};
    j["skipped_streets"] = result.summary.skipped_streets;
    return j.dump(2);
}

std::string tile_snapshot_json(const ColorifyResult& result, std::size_t bucket) {
    nlohmann::ordered_json colors = nlohmann::ordered_json::object();
    for (const auto& c : result.cells) {
        if (c.bucket_index == bucket) colors[c.street_id] = color_of(c.level);
    }
    nlohmann::ordered_json j;
    j["bucket_index"] = bucket;
    j["colors"] = std::move(colors);
    return j.dump(2);
}

std::string imputation_report_json(const ImputationReport& report) {
    nlohmann::ordered_json j;
    j["cells_observed"] = report.cells_observed;
    j["cells_imputed"] = report.cells_imputed;
    j["cells_unfilled"] = report.cells_unfilled;
    j["streets_without_cluster"] = report.streets_without_cluster;
    return j.dump(2);
}

} // namespace speedclust
