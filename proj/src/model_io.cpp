#include <nlohmann/json.hpp>

#include "speedclust/clustering.hpp"
#include "speedclust/errors.hpp"

namespace speedclust {

std::string model_to_json(const ClusterModel& model) {
    using nlohmann::ordered_json;
    const ClusterConfig& c = model.config;
    ordered_json j;
    j["schema_version"] = kModelSchemaVersion;
    j["config"] = {
        {"k", c.k},
        {"max_iterations", c.max_iterations},
        {"seed", c.seed},
        {"epsilon", c.epsilon},
        {"barycenter_iterations", c.barycenter_iterations},
        {"restarts", c.restarts},
        {"scalar_weight", c.scalar_weight},
        {"local_distance", c.dtw.local == LocalDistance::Absolute ? "absolute" : "squared"},
        {"window", c.dtw.window ? ordered_json(*c.dtw.window) : ordered_json(nullptr)},
    };
    ordered_json centroids = ordered_json::array();
    for (const auto& cen : model.centroids) {
        centroids.push_back({{"length", cen.series.size()},
                             {"values", cen.series.values},
                             {"scalar_features", cen.scalar_features}});
    }
    j["centroids"] = std::move(centroids);
    ordered_json assignments = ordered_json::object();
    for (std::size_t i = 0; i < model.labels.size(); ++i) {
        const std::string key = i < model.street_ids.size() ? model.street_ids[i] : std::to_string(i);
        assignments[key] = model.labels[i];
    }
    j["assignments"] = std::move(assignments);
    j["inertia_trace"] = model.inertia_trace;
    j["iterations_run"] = model.iterations_run;
    j["converged"] = model.converged;
    return j.dump(2);
}

ClusterModel model_from_json(std::string_view text) {
    try {
        const auto j = nlohmann::ordered_json::parse(text);
        if (j.at("schema_version").get<int>() != kModelSchemaVersion) {
            throw DataError("unsupported model schema_version");
        }
        ClusterModel model;
        const auto& c = j.at("config");
        model.config.k = c.at("k").get<std::size_t>();
        model.config.max_iterations = c.at("max_iterations").get<std::size_t>();
        model.config.seed = c.at("seed").get<std::uint64_t>();
        model.config.epsilon = c.at("epsilon").get<double>();
        model.config.barycenter_iterations = c.at("barycenter_iterations").get<std::size_t>();
        model.config.restarts = c.value("restarts", std::size_t{1});
        model.config.scalar_weight = c.value("scalar_weight", 1.0);
        model.config.dtw.local =
            c.value("local_distance", std::string("absolute")) == "squared" ? LocalDistance::Squared
                                                                             : LocalDistance::Absolute;
        if (c.contains("window") && !c["window"].is_null()) model.config.dtw.window = c["window"].get<std::size_t>();

        for (const auto& cen : j.at("centroids")) {
            Centroid centroid;
            centroid.series = ObservedSeries::from_values(cen.at("values").get<std::vector<double>>());
            centroid.scalar_features = cen.value("scalar_features", std::vector<double>{});
            if (centroid.series.empty()) throw DataError("centroid with no values");
            model.centroids.push_back(std::move(centroid));
        }
        for (const auto& [key, value] : j.at("assignments").items()) {
            const auto label = value.get<std::size_t>();
            if (label >= model.centroids.size()) throw DataError("assignment to unknown cluster in model JSON");
            model.street_ids.push_back(key);
            model.labels.push_back(label);
        }
        model.inertia_trace = j.at("inertia_trace").get<std::vector<double>>();
        model.iterations_run = j.value("iterations_run", std::size_t{0});
        model.converged = j.value("converged", false);
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed model JSON: ") + e.what());
    }
}

} // namespace speedclust
