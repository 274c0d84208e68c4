#include "speedclust/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>

#include "speedclust/errors.hpp"

namespace speedclust {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double euclid(std::span<const double> x, std::span<const double> y) {
    double sum = 0.0;
    const std::size_t n = std::min(x.size(), y.size());
    for (std::size_t i = 0; i < n; ++i) sum += (x[i] - y[i]) * (x[i] - y[i]);
    return std::sqrt(sum);
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::span<const double> scalars_of(const FeatureRows& rows, std::size_t i) {
    if (!rows.has_scalars()) return {};
    return rows.scalars[i];
}

void validate_rows(const FeatureRows& rows, std::size_t k) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows.series[i].empty()) throw EmptySeries(i);
    }
    if (rows.has_scalars() && rows.scalars.size() != rows.size()) {
        throw DataError("scalar feature rows do not match series count");
    }
    if (k == 0) throw PreconditionError("k must be at least 1");
    if (k > rows.size()) {
        throw TooFewSeries("k = " + std::to_string(k) + " exceeds the " + std::to_string(rows.size()) +
                           " input series");
    }
}

/// Shared state of one clustering run.
class KMeansRun {
  public:
    KMeansRun(const FeatureRows& rows, const ClusterConfig& config) : rows_(rows), config_(config) {}

    ClusterModel run(std::vector<Centroid> centroids) {
        ClusterModel model;
        model.config = config_;
        target_len_.assign(config_.k, 0);

        DistanceMatrix dist = distances(centroids);
        std::vector<std::size_t> labels = assign(dist);
        repair_empty(dist, labels, centroids);

        double previous = total_inertia(dist, labels);
        for (std::size_t it = 0; it < config_.max_iterations; ++it) {
            update_centroids(dist, labels, centroids);
            dist = distances(centroids);
            std::vector<std::size_t> next = assign(dist);
            repair_empty(dist, next, centroids);
            const bool changed = next != labels;
            labels = std::move(next);

            const double current = total_inertia(dist, labels);
            model.inertia_trace.push_back(current);
            model.iterations_run = it + 1;
            const double rel = previous > 0.0 ? (previous - current) / previous : 0.0;
            previous = current;
            if (!changed || rel < config_.epsilon) {
                model.converged = true;
                break;
            }
        }
        if (model.inertia_trace.empty()) model.inertia_trace.push_back(previous);
        model.centroids = std::move(centroids);
        model.labels = std::move(labels);
        return model;
    }

    /// k-means++ seeding around an optional set of fixed centroids.
    std::vector<Centroid> seed(std::uint64_t seed, std::span<const Centroid> initial) const {
        std::mt19937_64 rng(seed);
        std::vector<Centroid> centroids(initial.begin(), initial.end());
        const std::size_t n = rows_.size();
        std::vector<double> nearest(n, kInf);
        std::vector<bool> chosen(n, false);

        auto absorb = [&](const Centroid& c) {
            const DistanceMatrix d = distances(std::span<const Centroid>(&c, 1));
            for (std::size_t i = 0; i < n; ++i) nearest[i] = std::min(nearest[i], d(i, 0));
        };
        auto take = [&](std::size_t i) {
            chosen[i] = true;
            centroids.push_back(point_centroid(i));
            absorb(centroids.back());
        };

        for (const auto& c : centroids) absorb(c);
        if (centroids.empty()) {
            std::uniform_int_distribution<std::size_t> pick(0, n - 1);
            take(pick(rng));
        }
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        while (centroids.size() < config_.k) {
            double total = 0.0;
            for (double d : nearest) total += d * d;
            std::size_t pick = n;
            if (total > 0.0) {
                const double target = unit(rng) * total;
                double acc = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    acc += nearest[i] * nearest[i];
                    if (nearest[i] > 0.0 && acc >= target) {
                        pick = i;
                        break;
                    }
                }
                if (pick == n) {
                    for (std::size_t i = n; i-- > 0;) {
                        if (nearest[i] > 0.0) {
                            pick = i;
                            break;
                        }
                    }
                }
            } else {
                for (std::size_t i = 0; i < n && pick == n; ++i) {
                    if (!chosen[i]) pick = i;
                }
            }
            take(pick);
        }
        return centroids;
    }

    DistanceMatrix distances(std::span<const Centroid> centroids) const {
        std::vector<ObservedSeries> cols;
        cols.reserve(centroids.size());
        for (const auto& c : centroids) cols.push_back(c.series);
        DistanceMatrix d = cross_distances(rows_.series, cols, config_.dtw);
        if (rows_.has_scalars()) {
            for (std::size_t i = 0; i < d.rows(); ++i) {
                for (std::size_t j = 0; j < d.cols(); ++j) {
                    d(i, j) += config_.scalar_weight * euclid(rows_.scalars[i], centroids[j].scalar_features);
                }
            }
        }
        return d;
    }

    Centroid point_centroid(std::size_t i) const {
        return Centroid{rows_.series[i], rows_.has_scalars() ? rows_.scalars[i] : std::vector<double>{}};
    }

    /// Descent-guarded barycenter update of one cluster. Returns the new centroid and its cost.
    std::pair<Centroid, double> guarded_update(std::span<const std::size_t> members, const Centroid& old,
                                               double old_cost, std::size_t length,
                                               std::size_t iterations) const {
        Centroid candidate;
        candidate.series = ObservedSeries::from_values(resample(old.series.values, length));
        candidate.scalar_features = old.scalar_features;
        if (rows_.has_scalars()) {
            std::vector<double> mean(rows_.scalars[members.front()].size(), 0.0);
            for (std::size_t i : members) {
                for (std::size_t f = 0; f < mean.size(); ++f) mean[f] += rows_.scalars[i][f];
            }
            for (double& v : mean) v /= static_cast<double>(members.size());
            candidate.scalar_features = std::move(mean);
        }

        std::vector<double> scalar_term(members.size(), 0.0);
        if (rows_.has_scalars()) {
            for (std::size_t m = 0; m < members.size(); ++m) {
                scalar_term[m] =
                    config_.scalar_weight * euclid(rows_.scalars[members[m]], candidate.scalar_features);
            }
        }

        Centroid best = old;
        double best_cost = old_cost;
        double last_cost = kInf;
        std::vector<Alignment> aligned(members.size());
        const auto count = static_cast<std::int64_t>(members.size());
        for (std::size_t t = 0;; ++t) {
            const std::span<const double> current(candidate.series.values);
#pragma omp parallel for schedule(dynamic, 1)
            for (std::int64_t m = 0; m < count; ++m) {
                aligned[m] = dtw_alignment(std::span<const double>(rows_.series[members[m]].values), current,
                                           config_.dtw);
            }
            double cost = 0.0;
            for (std::size_t m = 0; m < members.size(); ++m) {
                const double d = aligned[m].distance + scalar_term[m];
                cost += d * d;
            }
            if (cost < best_cost) {
                best = candidate;
                best_cost = cost;
            }
            if (cost >= last_cost || t == iterations) break;
            last_cost = cost;

            std::vector<double> sum(length, 0.0);
            std::vector<std::size_t> hits(length, 0);
            for (std::size_t m = 0; m < members.size(); ++m) {
                const auto& values = rows_.series[members[m]].values;
                for (const auto& [i, j] : aligned[m].path.pairs) {
                    sum[j - 1] += values[i - 1];
                    ++hits[j - 1];
                }
            }
            for (std::size_t j = 0; j < length; ++j) {
                candidate.series.values[j] = sum[j] / static_cast<double>(hits[j]);
            }
        }
        return {std::move(best), best_cost};
    }

  private:
    std::vector<std::size_t> assign(const DistanceMatrix& dist) const {
        std::vector<std::size_t> labels(dist.rows(), 0);
        for (std::size_t i = 0; i < dist.rows(); ++i) {
            const auto row = dist.row(i);
            labels[i] = static_cast<std::size_t>(std::min_element(row.begin(), row.end()) - row.begin());
        }
        return labels;
    }

    /// Reseeds each empty cluster with the point farthest from its own centroid.
    void repair_empty(DistanceMatrix& dist, std::vector<std::size_t>& labels, std::vector<Centroid>& centroids) {
        for (std::size_t attempt = 0; attempt < config_.k; ++attempt) {
            std::vector<std::size_t> sizes(config_.k, 0);
            for (std::size_t l : labels) ++sizes[l];
            const auto empty = std::find(sizes.begin(), sizes.end(), 0);
            if (empty == sizes.end()) return;
            const auto c = static_cast<std::size_t>(empty - sizes.begin());

            std::size_t far = labels.size();
            double far_dist = -1.0;
            for (std::size_t i = 0; i < labels.size(); ++i) {
                if (sizes[labels[i]] >= 2 && dist(i, labels[i]) > far_dist) {
                    far = i;
                    far_dist = dist(i, labels[i]);
                }
            }
            centroids[c] = point_centroid(far);
            target_len_[c] = 0;
            const DistanceMatrix column = distances(std::span<const Centroid>(&centroids[c], 1));
            for (std::size_t i = 0; i < labels.size(); ++i) dist(i, c) = column(i, 0);
            labels = assign(dist);
            if (std::find(labels.begin(), labels.end(), c) == labels.end()) labels[far] = c;
        }
    }

    void update_centroids(const DistanceMatrix& dist, const std::vector<std::size_t>& labels,
                          std::vector<Centroid>& centroids) {
        for (std::size_t c = 0; c < config_.k; ++c) {
            std::vector<std::size_t> members;
            double old_cost = 0.0;
            for (std::size_t i = 0; i < labels.size(); ++i) {
                if (labels[i] == c) {
                    members.push_back(i);
                    old_cost += dist(i, c) * dist(i, c);
                }
            }
            if (members.empty()) continue;
            if (target_len_[c] == 0) target_len_[c] = median_length(members);
            auto updated =
                guarded_update(members, centroids[c], old_cost, target_len_[c], config_.barycenter_iterations);
            centroids[c] = std::move(updated.first);
        }
    }

    std::size_t median_length(std::vector<std::size_t> members) const {
        std::vector<std::size_t> lengths;
        lengths.reserve(members.size());
        for (std::size_t i : members) lengths.push_back(rows_.series[i].size());
        const auto mid = lengths.begin() + static_cast<std::ptrdiff_t>((lengths.size() - 1) / 2);
        std::nth_element(lengths.begin(), mid, lengths.end());
        return std::max<std::size_t>(*mid, 2);
    }

    static double total_inertia(const DistanceMatrix& dist, const std::vector<std::size_t>& labels) {
        double sum = 0.0;
        for (std::size_t i = 0; i < labels.size(); ++i) sum += dist(i, labels[i]) * dist(i, labels[i]);
        return sum;
    }

    const FeatureRows& rows_;
    const ClusterConfig& config_;
    std::vector<std::size_t> target_len_;
};

FeatureRows rows_from(std::span<const ObservedSeries> series) {
    FeatureRows rows;
    rows.series.assign(series.begin(), series.end());
    return rows;
}

} // namespace

std::vector<std::size_t> ClusterModel::cluster_sizes() const {
    std::vector<std::size_t> sizes(centroids.size(), 0);
    for (std::size_t l : labels) ++sizes[l];
    return sizes;
}

std::size_t ClusterModel::cluster_of(std::string_view street_id) const {
    for (std::size_t i = 0; i < street_ids.size(); ++i) {
        if (street_ids[i] == street_id) return labels[i];
    }
    throw DataError("street '" + std::string(street_id) + "' is not in the cluster model");
}

double point_distance(const ObservedSeries& series, std::span<const double> scalars, const Centroid& centroid,
                      const ClusterConfig& config) {
    double d = dtw_distance(series, centroid.series, config.dtw);
    if (!scalars.empty()) d += config.scalar_weight * euclid(scalars, centroid.scalar_features);
    return d;
}

std::vector<double> resample(std::span<const double> values, std::size_t length) {
    if (values.empty() || length == 0) return {};
    if (values.size() == length) return {values.begin(), values.end()};
    std::vector<double> out(length);
    if (values.size() == 1 || length == 1) {
        std::fill(out.begin(), out.end(), values.front());
        return out;
    }
    const double step = static_cast<double>(values.size() - 1) / static_cast<double>(length - 1);
    for (std::size_t j = 0; j < length; ++j) {
        const double pos = static_cast<double>(j) * step;
        const auto lo = std::min(static_cast<std::size_t>(pos), values.size() - 2);
        const double frac = pos - static_cast<double>(lo);
        out[j] = values[lo] + frac * (values[lo + 1] - values[lo]);
    }
    return out;
}

ClusterModel kmeans_dtw(std::span<const ObservedSeries> series, const ClusterConfig& config) {
    return kmeans_dtw(rows_from(series), config);
}

ClusterModel kmeans_dtw(const FeatureRows& rows, const ClusterConfig& config) {
    return kmeans_dtw(rows, config, {});
}

ClusterModel kmeans_dtw(const FeatureRows& rows, const ClusterConfig& config, std::span<const Centroid> initial) {
    validate_rows(rows, config.k);
    if (config.max_iterations == 0) throw PreconditionError("max_iterations must be at least 1");
    if (initial.size() > config.k) throw PreconditionError("more initial centroids than clusters");

    KMeansRun run(rows, config);
    const std::size_t restarts = std::max<std::size_t>(config.restarts, 1);
    ClusterModel best;
    for (std::size_t r = 0; r < restarts; ++r) {
        ClusterModel model = run.run(run.seed(splitmix64(config.seed + r), initial));
        if (r == 0 || model.inertia() < best.inertia()) best = std::move(model);
    }
    return best;
}

Centroid update_barycenter(std::span<const ObservedSeries> members, const Centroid& init, std::size_t iterations,
                           const DtwOptions& opts) {
    if (members.empty()) throw PreconditionError("barycenter of an empty cluster");
    if (init.series.empty()) throw EmptySeries();
    FeatureRows rows = rows_from(members);
    ClusterConfig config;
    config.k = 1;
    config.dtw = opts;
    KMeansRun run(rows, config);
    std::vector<std::size_t> all(members.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    double cost = 0.0;
    for (const auto& m : members) {
        const double d = dtw_distance(m, init.series, opts);
        cost += d * d;
    }
    return run.guarded_update(all, init, cost, init.series.size(), iterations).first;
}

double inertia(std::span<const ObservedSeries> series, const ClusterModel& model) {
    return inertia(rows_from(series), model);
}

double inertia(const FeatureRows& rows, const ClusterModel& model) {
    if (model.labels.size() != rows.size()) throw DataError("model assignments do not cover the input");
    double sum = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double d =
            point_distance(rows.series[i], scalars_of(rows, i), model.centroids.at(model.labels[i]), model.config);
        sum += d * d;
    }
    return sum;
}

std::size_t chord_elbow(std::span<const ElbowPoint> curve) {
    if (curve.size() < 3) throw PreconditionError("elbow selection needs at least three values of k");
    const ElbowPoint& first = curve.front();
    const ElbowPoint& last = curve.back();
    const double slope = (last.inertia - first.inertia) / static_cast<double>(last.k - first.k);
    double scale = 0.0;
    for (const auto& p : curve) scale = std::max(scale, std::abs(p.inertia));
    const double tie = 1e-12 * scale;

    std::size_t chosen = first.k;
    double best = -kInf;
    for (const auto& p : curve) {
        const double chord = first.inertia + slope * static_cast<double>(p.k - first.k);
        const double gap = chord - p.inertia;
        if (gap > best + tie) {
            best = gap;
            chosen = p.k;
        }
    }
    return chosen;
}

ElbowResult elbow_select(const FeatureRows& rows, std::size_t k_min, std::size_t k_max,
                         const ClusterConfig& config_template) {
    if (k_min == 0 || k_max < k_min + 2) throw PreconditionError("elbow range must span at least three values of k");
    if (k_max > rows.size()) {
        throw TooFewSeries("k = " + std::to_string(k_max) + " exceeds the " + std::to_string(rows.size()) +
                           " input series");
    }
    ElbowResult result;
    for (std::size_t k = k_min; k <= k_max; ++k) {
        ClusterConfig config = config_template;
        config.k = k;
        ClusterModel model = kmeans_dtw(rows, config);
        if (!result.models.empty()) {
            ClusterModel warm = kmeans_dtw(rows, config, result.models.back().centroids);
            if (warm.inertia() < model.inertia()) model = std::move(warm);
        }
        result.curve.push_back({k, model.inertia()});
        result.models.push_back(std::move(model));
    }
    result.chosen_k = chord_elbow(result.curve);
    return result;
}

ElbowResult elbow_select(std::span<const ObservedSeries> series, std::size_t k_min, std::size_t k_max,
                         const ClusterConfig& config_template) {
    return elbow_select(rows_from(series), k_min, k_max, config_template);
}

FeatureRows observed_rows(const Dataset& dataset) {
    FeatureRows rows;
    rows.series.reserve(dataset.profiles.size());
    for (std::size_t i = 0; i < dataset.profiles.size(); ++i) {
        try {
            rows.series.push_back(drop_nulls(dataset.profiles[i].series));
        } catch (const EmptySeries&) {
            throw EmptySeries(i);
        }
    }
    return rows;
}

ClusterModel cluster_dataset(const Dataset& dataset, const ClusterConfig& config) {
    ClusterModel model = kmeans_dtw(observed_rows(dataset), config);
    model.street_ids.reserve(dataset.profiles.size());
    for (const auto& p : dataset.profiles) model.street_ids.push_back(p.street_id);
    return model;
}

} // namespace speedclust
