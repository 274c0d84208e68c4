// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and exits non-zero if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "speedclust/clustering.hpp"
#include "speedclust/colorify.hpp"
#include "speedclust/dtw.hpp"
#include "speedclust/errors.hpp"
#include "speedclust/important_roads.hpp"
#include "speedclust/pipeline.hpp"
#include "speedclust/synthgen.hpp"
#include "support/oracles.hpp"
#include "support/scratch.hpp"

using namespace speedclust;
using speedclust::testing::ScratchDir;
using speedclust::testing::slurp;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, const std::function<Outcome()>& check) {
    const auto start = Clock::now();
    Outcome o;
    try {
        o = check();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    if (!o.pass) ++failures;
    std::printf("%s criterion %d: %s (%s; %.1f s)\n", o.pass ? "PASS" : "FAIL", id, title.c_str(), o.detail.c_str(),
                secs);
    std::fflush(stdout);
}

std::string fmt(const char* pattern, double a, double b = 0, double c = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, pattern, a, b, c);
    return buf;
}

int cli_run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli::run_cli(args, out, err);
    if (code != 0) std::fprintf(stderr, "command failed (%d): %s\n", code, err.str().c_str());
    return code;
}

std::size_t planted_index(const std::string& street_id) {
    const auto name = street_id.substr(0, street_id.rfind('_'));
    return static_cast<std::size_t>(*synth::parse_archetype(name));
}

// The default synthetic dataset as the CLI produces it: synth, then ingest with default cleaning.
struct Workspace {
    ScratchDir dir{"acceptance"};
    std::string dataset_csv;
    Dataset dataset;

    Workspace() {
        if (cli_run({"synth", "--out-dir", dir / "raw"}) != 0 ||
            cli_run({"ingest", "--input", dir / "raw/records.csv", "--attrs", dir / "raw/attributes.csv", "--out-dir",
                     dir / "data"}) != 0) {
            throw std::runtime_error("could not build the synthetic dataset");
        }
        dataset_csv = dir / "data/dataset.csv";
        dataset = load_dataset(dataset_csv);
    }
};

std::vector<double> random_values(std::mt19937_64& rng, std::size_t len, double lo, double hi, bool integral) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(len);
    for (auto& x : v) x = integral ? std::floor(u(rng)) : u(rng);
    return v;
}

Outcome worked_example() {
    const std::vector<double> a{65, 83, 65, 70, 66, 81, 71, 65};
    const std::vector<double> b{49, 69, 63, 90};
    double d = 0.0;
    double best = 1e9;
    for (int rep = 0; rep < 100; ++rep) {
        const auto t0 = Clock::now();
        d = dtw_distance(a, b);
        best = std::min(best, std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
    }
    std::ostringstream out, err;
    cli::run_cli({"dtw", "--a", "65,83,65,70,66,81,71,65", "--b", "49,69,63,90"}, out, err);
    return {d == 79.0 && best < 1.0 && out.str() == "79.0\n",
            fmt("distance %.6g, fastest call %.4f ms", d, best) + ", cli prints " + out.str().substr(0, 4)};
}

Outcome brute_force_agreement() {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<std::size_t> len(1, 6);
    auto abs_cost = [](double x, double y) { return std::abs(x - y); };
    int mismatches = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto a = random_values(rng, len(rng), 0, 6, true);
        const auto b = random_values(rng, len(rng), 0, 6, true);
        if (dtw_distance(a, b) != oracle::brute_force_dtw(a, b, abs_cost)) ++mismatches;
    }
    return {mismatches == 0, fmt("%.0f mismatches in 1000 pairs", mismatches)};
}

Outcome metric_properties() {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<std::size_t> len(1, 40);
    int violations = 0;
    for (int i = 0; i < 10000; ++i) {
        const std::size_t n = len(rng);
        const auto a = random_values(rng, n, 0, 120, false);
        const auto b = random_values(rng, i % 2 ? n : len(rng), 0, 120, false);
        const double d = dtw_distance(a, b);
        if (d < 0) ++violations;
        if (dtw_distance(a, a) != 0.0) ++violations;
        if (d != dtw_distance(b, a)) ++violations;
        if (a.size() == b.size()) {
            double l1 = 0;
            for (std::size_t t = 0; t < n; ++t) l1 += std::abs(a[t] - b[t]);
            if (d > l1) ++violations;
        }
    }
    return {violations == 0, fmt("%.0f violations in 10000 pairs", violations)};
}

Outcome cluster_recovery(const Workspace& ws) {
    ClusterConfig cfg;
    cfg.k = 3;
    cfg.seed = 7;
    const auto t0 = Clock::now();
    const auto model = cluster_dataset(ws.dataset, cfg);
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    std::vector<std::size_t> truth;
    for (const auto& p : ws.dataset.profiles) truth.push_back(planted_index(p.street_id));
    const double ari = oracle::adjusted_rand_index(model.labels, truth);
    const bool shape = ws.dataset.profiles.size() == 300 && ws.dataset.grid.buckets_per_week() == 672;
    return {shape && ari >= 0.9 && secs < 300.0, fmt("ARI %.4f, clustering took %.1f s, %.0f streets", ari, secs,
                                                     static_cast<double>(ws.dataset.profiles.size()))};
}

Outcome elbow_reproduction(const Workspace& ws) {
    if (cli_run({"elbow", "--input", ws.dataset_csv, "--k", "1..6", "--out-dir", ws.dir / "elbow"}) != 0) {
        return {false, "elbow command failed"};
    }
    const auto manifest = nlohmann::json::parse(slurp(ws.dir / "elbow/manifest.json"));
    const int chosen = manifest["results"]["chosen_k"].get<int>();
    std::istringstream csv(slurp(ws.dir / "elbow/elbow.csv"));
    std::string line;
    std::getline(csv, line);
    std::vector<double> curve;
    while (std::getline(csv, line)) curve.push_back(std::stod(line.substr(line.find(',') + 1)));
    bool monotone = true;
    for (std::size_t i = 1; i < curve.size(); ++i) monotone = monotone && curve[i] <= curve[i - 1] * (1 + 1e-6);
    std::string detail = "chosen_k " + std::to_string(chosen) + ", curve";
    for (double v : curve) detail += fmt(" %.4g", v);
    return {chosen == 3 && curve.size() == 6 && monotone, detail};
}

Outcome imputation_gain(const Workspace& ws) {
    // Hold out 10% of the observed cells.
    std::vector<std::pair<std::size_t, std::size_t>> cells;
    for (std::size_t s = 0; s < ws.dataset.profiles.size(); ++s) {
        const auto& v = ws.dataset.profiles[s].series.values;
        for (std::size_t b = 0; b < v.size(); ++b) {
            if (v[b]) cells.emplace_back(s, b);
        }
    }
    std::mt19937_64 rng(10);
    std::shuffle(cells.begin(), cells.end(), rng);
    cells.resize(cells.size() / 10);
    Dataset held = ws.dataset;
    for (auto [s, b] : cells) held.profiles[s].series.values[b].reset();
    for (auto& p : held.profiles) p.filling_rate = filling_rate(p.series);

    ClusterConfig cfg;
    cfg.k = 3;
    cfg.seed = 7;
    const auto model = cluster_dataset(held, cfg);
    const auto result = impute(held, model);

    bool untouched = true;
    for (std::size_t s = 0; s < held.profiles.size(); ++s) {
        const auto& before = held.profiles[s].series.values;
        const auto& after = result.dataset.profiles[s].series.values;
        for (std::size_t b = 0; b < before.size(); ++b) {
            if (before[b] && (!after[b] || std::memcmp(&*before[b], &*after[b], sizeof(double)) != 0)) untouched = false;
        }
    }

    const std::size_t width = held.grid.buckets_per_week();
    std::vector<double> sum(width, 0.0);
    std::vector<std::size_t> count(width, 0);
    for (const auto& p : held.profiles) {
        for (std::size_t b = 0; b < width; ++b) {
            if (p.series.values[b]) {
                sum[b] += *p.series.values[b];
                ++count[b];
            }
        }
    }
    double err_cluster = 0, err_global = 0;
    std::size_t scored = 0;
    for (auto [s, b] : cells) {
        const auto& filled = result.dataset.profiles[s].series.values[b];
        if (!filled || count[b] == 0) continue;
        const double truth = *ws.dataset.profiles[s].series.values[b];
        err_cluster += std::abs(*filled - truth);
        err_global += std::abs(sum[b] / static_cast<double>(count[b]) - truth);
        ++scored;
    }
    const double mae_cluster = err_cluster / static_cast<double>(scored);
    const double mae_global = err_global / static_cast<double>(scored);
    const double gain = 1.0 - mae_cluster / mae_global;
    return {untouched && scored == cells.size() && gain >= 0.10,
            fmt("cluster MAE %.3f, global MAE %.3f, gain %.1f%%", mae_cluster, mae_global, gain * 100) +
                (untouched ? ", observed cells unchanged" : ", OBSERVED CELLS CHANGED")};
}

Outcome coverage(const Workspace& ws) {
    ClusterConfig cfg;
    cfg.k = 3;
    cfg.seed = 7;
    const auto model = cluster_dataset(ws.dataset, cfg);
    const auto result = impute(ws.dataset, model);
    const std::size_t before = colorable_cells(ws.dataset);
    const std::size_t after = colorable_cells(result.dataset, &result.imputed);

    // Independent check for a missing cell that some cluster peer observes.
    bool fillable = false;
    const auto& ps = ws.dataset.profiles;
    for (std::size_t s = 0; s < ps.size() && !fillable; ++s) {
        for (std::size_t b = 0; b < ps[s].series.size() && !fillable; ++b) {
            if (ps[s].series.values[b]) continue;
            for (std::size_t o = 0; o < ps.size(); ++o) {
                if (o != s && model.labels[o] == model.labels[s] && ps[o].series.values[b]) {
                    fillable = true;
                    break;
                }
            }
        }
    }
    const bool pass = after >= before && (!fillable || after > before);
    return {pass, fmt("colorable cells %.0f before, %.0f after", before, after) +
                      (fillable ? ", fillable gaps present" : ", no fillable gaps")};
}

Outcome important_roads() {
    const auto specs = synth::important_roads_specs();
    const auto data = synth::generate(specs, BucketGrid());
    ImportanceConfig cfg;
    cfg.cluster.k = 3;
    cfg.cluster.seed = 7;
    const auto result = find_important_secondary(data.dataset, cfg);

    std::size_t planted_total = 0, secondary_total = 0;
    for (const auto& p : data.dataset.profiles) {
        if (p.road_class == RoadClass::Secondary) ++secondary_total;
        if (planted_index(p.street_id) == static_cast<std::size_t>(synth::Archetype::PrimaryLikeSecondary)) {
            ++planted_total;
        }
    }
    std::size_t planted_hit = 0;
    for (const auto& id : result.important_street_ids) {
        if (planted_index(id) == static_cast<std::size_t>(synth::Archetype::PrimaryLikeSecondary)) ++planted_hit;
    }
    const std::size_t selected = result.important_street_ids.size();
    const double contamination =
        selected == 0 ? 1.0 : static_cast<double>(selected - planted_hit) / static_cast<double>(selected);

    // Recompute the centroid ranking from scratch.
    const ScalerParams scaler = fit_scaler(data.dataset.profiles, cfg.features);
    const auto rep = primary_representative(data.dataset, scaler);
    std::vector<double> dist;
    for (const auto& c : result.model.centroids) {
        double sq = 0;
        for (std::size_t i = 0; i < c.scalar_features.size(); ++i) {
            sq += (c.scalar_features[i] - rep.scalar_features[i]) * (c.scalar_features[i] - rep.scalar_features[i]);
        }
        dist.push_back(dtw_distance(c.series, rep.series) + cfg.scalar_weight * std::sqrt(sq));
    }
    const auto argmin = static_cast<std::size_t>(std::min_element(dist.begin(), dist.end()) - dist.begin());
    const bool pass = planted_total == 20 && secondary_total == 200 && planted_hit >= 18 && contamination <= 0.10 &&
                      argmin == result.selected_cluster;
    return {pass, fmt("%.0f of 20 planted selected, contamination %.1f%%", planted_hit, contamination * 100) +
                      ", selected cluster " + std::to_string(result.selected_cluster) + ", argmin " +
                      std::to_string(argmin)};
}

Outcome thread_invariance() {
    ScratchDir dir("threads");
    std::map<std::string, std::vector<std::string>> digests;
    for (const std::string threads : {"1", "8"}) {
        const std::string root = dir / ("t" + threads);
        const std::vector<std::vector<std::string>> steps{
            {"synth", "--out-dir", root + "/raw"},
            {"ingest", "--input", root + "/raw/records.csv", "--attrs", root + "/raw/attributes.csv", "--out-dir",
             root + "/data"},
            {"cluster", "--input", root + "/data/dataset.csv", "--k", "3", "--seed", "7", "--out-dir",
             root + "/cluster"},
            {"impute", "--input", root + "/data/dataset.csv", "--model", root + "/cluster/model.json", "--out-dir",
             root + "/impute"},
            {"colorify", "--input", root + "/data/dataset.csv", "--model", root + "/cluster/model.json", "--bucket",
             "32", "--out-dir", root + "/colorify"},
            {"synth", "--scenario", "important-roads", "--out-dir", root + "/roads_raw"},
            {"ingest", "--input", root + "/roads_raw/records.csv", "--attrs", root + "/roads_raw/attributes.csv",
             "--out-dir", root + "/roads_data"},
            {"important-roads", "--input", root + "/roads_data/dataset.csv", "--elbow", "none", "--out-dir",
             root + "/roads"},
        };
        for (auto step : steps) {
            step.push_back("--threads");
            step.push_back(threads);
            if (cli_run(step) != 0) return {false, step.front() + " failed at --threads " + threads};
            const auto manifest = nlohmann::json::parse(slurp(step[std::find(step.begin(), step.end(), "--out-dir") -
                                                                   step.begin() + 1] +
                                                              "/manifest.json"));
            for (const auto& o : manifest["outputs"]) {
                const auto path = o["path"].get<std::string>();
                digests[threads].push_back(path.substr(root.size()) + " " + o["sha256"].get<std::string>());
            }
        }
    }
    std::size_t differing = 0;
    for (std::size_t i = 0; i < std::max(digests["1"].size(), digests["8"].size()); ++i) {
        if (i >= digests["1"].size() || i >= digests["8"].size() || digests["1"][i] != digests["8"][i]) ++differing;
    }
    return {differing == 0 && !digests["1"].empty(),
            fmt("%.0f output files compared, %.0f differ", static_cast<double>(digests["1"].size()),
                static_cast<double>(differing))};
}

Outcome filter_conformance() {
    // Mixed missingness so that some streets fall on each side of the thresholds, plus injected outliers.
    std::vector<synth::ArchetypeSpec> specs;
    for (double missing : {0.0, 0.3, 0.6, 0.65}) {
        synth::ArchetypeSpec s;
        s.missing_prob = missing;
        s.count = 15;
        specs.push_back(s);
    }
    synth::GeneratorOptions opts;
    opts.min_observation_rate = 0.30;
    const auto data = synth::generate(specs, BucketGrid(), opts);
    auto records = synth::to_records(data.dataset);
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<std::size_t> pick(0, records.size() - 1);
    for (int i = 0; i < 500; ++i) {
        RawRecord r = records[pick(rng)];
        r.speed_kmh = i % 2 ? 250.0 : 0.5;
        records.push_back(r);
    }
    for (int i = 0; i < 200; ++i) records.push_back(records[pick(rng)]);
    for (std::size_t b = 0; b < 2; ++b) records.push_back({"sparse_street", b * 50, 40.0});

    CleaningConfig cfg;
    CleaningReport report;
    const Dataset cleaned = clean(ingest(records, BucketGrid(), cfg, &report), cfg, &report);
    std::size_t bad = 0;
    for (const auto& p : cleaned.profiles) {
        if (!(p.filling_rate > 1.0 / 3.0) || p.series.present_count() < 3) ++bad;
        if (p.filling_rate != filling_rate(p.series)) ++bad;
        for (const auto& v : p.series.values) {
            if (v && (*v < cfg.min_speed_kmh || *v > cfg.max_speed_kmh)) ++bad;
        }
    }
    const bool idempotent = clean(cleaned, cfg) == cleaned;
    const bool dropped_some = report.dropped_low_filling_rate > 0 && report.dropped_low_observation > 0;
    return {bad == 0 && idempotent && dropped_some && !cleaned.profiles.empty(),
            fmt("%.0f streets kept of %.0f, %.0f violations", static_cast<double>(cleaned.profiles.size()),
                static_cast<double>(data.dataset.profiles.size() + 1), static_cast<double>(bad)) +
                (idempotent ? ", idempotent" : ", NOT idempotent")};
}

} // namespace

int main() {
    report(1, "worked DTW example equals 79.0 in under 1 ms", worked_example);
    report(2, "DTW matches exhaustive path search on 1000 random pairs", brute_force_agreement);
    report(3, "DTW metric properties on 10000 random pairs", metric_properties);

    std::unique_ptr<Workspace> ws;
    try {
        ws = std::make_unique<Workspace>();
    } catch (const std::exception& e) {
        std::fprintf(stderr, "%s\n", e.what());
    }
    auto with_ws = [&](auto fn) {
        return [&ws, fn]() -> Outcome {
            if (!ws) return {false, "synthetic dataset unavailable"};
            return fn(*ws);
        };
    };
    report(4, "k=3 clustering recovers planted archetypes with ARI >= 0.9", with_ws(cluster_recovery));
    report(5, "elbow over k=1..6 selects 3 with a non-increasing curve", with_ws(elbow_reproduction));
    report(6, "cluster imputation beats the global bucket mean by >= 10%", with_ws(imputation_gain));
    report(7, "imputation never reduces colorable coverage", with_ws(coverage));
    report(8, "important-road cluster holds >= 18 of 20 planted streets, <= 10% contamination", important_roads);
    report(9, "outputs identical at 1 and 8 threads", thread_invariance);
    report(10, "cleaning keeps only conforming streets and is idempotent", filter_conformance);

    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
