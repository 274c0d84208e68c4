#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "manifest.hpp"
#include "speedclust/clustering.hpp"
#include "speedclust/colorify.hpp"
#include "speedclust/dtw.hpp"
#include "speedclust/errors.hpp"
#include "speedclust/important_roads.hpp"
#include "speedclust/parallel.hpp"
#include "speedclust/pipeline.hpp"
#include "speedclust/synthgen.hpp"
#include "speedclust/text.hpp"

namespace speedclust::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

/// Expands `--config file.json`, a flat JSON object of flag values such as {"k": 3, "input": "data.csv"},
/// into ordinary arguments. Flags already given on the command line win.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
    std::string path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
        if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
    }
    if (path.empty()) return args;

    std::ifstream in(path);
    if (!in) throw CLI::FileError::Missing(path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw CLI::ConversionError(std::string("config file is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config file must hold a JSON object");

    std::set<std::string> given;
    for (const auto& a : args) {
        if (a.rfind("--", 0) == 0) given.insert(a.substr(2, a.find('=') - 2));
    }
    auto scalar = [](const nlohmann::json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
    std::vector<std::string> out = args;
    for (const auto& [key, value] : j.items()) {
        if (given.count(key) || key == "config") continue;
        if (value.is_boolean()) {
            if (value.get<bool>()) out.push_back("--" + key);
            continue;
        }
        out.push_back("--" + key);
        if (value.is_array()) {
            for (const auto& v : value) out.push_back(scalar(v));
        } else {
            out.push_back(scalar(value));
        }
    }
    return out;
}

struct Common {
    std::string out_dir = ".";
    int threads = 0;
    std::string config;
};

struct ClusterFlags {
    std::size_t k = 3;
    std::size_t max_iter = 30;
    std::uint64_t seed = 7;
    std::size_t restarts = 1;
    std::size_t barycenter_iter = 10;
    bool squared = false;

    ClusterConfig config() const {
        ClusterConfig c;
        c.k = k;
        c.max_iterations = max_iter;
        c.seed = seed;
        c.restarts = restarts;
        c.barycenter_iterations = barycenter_iter;
        c.dtw.local = squared ? LocalDistance::Squared : LocalDistance::Absolute;
        return c;
    }
};

struct Flags {
    Common common;
    ClusterFlags cluster;
    // synth
    std::string scenario = "clusters";
    std::optional<double> missing_prob;
    std::optional<std::size_t> count;
    // ingest
    std::string input;
    std::string attrs;
    int bucket_minutes = 15;
    double min_filling_rate = 1.0 / 3.0;
    double min_speed = 1.0;
    double max_speed = 140.0;
    std::size_t min_observed = 3;
    int utc_offset = 0;
    // cluster / elbow / impute / colorify
    std::string model;
    std::string k_range = "1..6";
    std::string thresholds = "0.75:0.4:5";
    std::optional<std::size_t> bucket;
    // important-roads
    std::optional<std::size_t> compare_k;
    double scalar_weight = 1.0;
    std::string elbow_range = "1..6";
    // dtw
    std::string a;
    std::string b;
    std::string file;
    std::optional<std::size_t> window;
};

std::pair<std::size_t, std::size_t> parse_range(const std::string& s) {
    const auto dots = s.find("..");
    if (dots == std::string::npos) throw InvalidSpec("k range must look like 1..6, got '" + s + "'");
    const auto lo = text::parse_int(s.substr(0, dots));
    const auto hi = text::parse_int(s.substr(dots + 2));
    if (!lo || !hi || *lo < 1 || *hi < *lo) throw InvalidSpec("bad k range '" + s + "'");
    return {static_cast<std::size_t>(*lo), static_cast<std::size_t>(*hi)};
}

std::vector<double> parse_series(const std::string& s) {
    std::vector<double> out;
    for (const auto& field : text::split_csv(s)) {
        const auto t = text::trim(field);
        if (t.empty() || t == "NA" || t == "na" || t == "null") continue;
        const auto v = text::parse_double(t);
        if (!v) throw DataError("bad number '" + std::string(t) + "' in series");
        out.push_back(*v);
    }
    return out;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    out << content;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

/// Every long option of a subcommand with its effective value.
ordered_json config_snapshot(const CLI::App& app) {
    ordered_json j = ordered_json::object();
    for (const CLI::Option* opt : app.get_options()) {
        if (opt->get_lnames().empty()) continue;
        const std::string& name = opt->get_lnames().front();
        if (name == "help" || name == "config") continue;
        if (opt->count() > 0) {
            const auto& results = opt->results();
            j[name] = results.size() == 1 ? ordered_json(results.front()) : ordered_json(results);
        } else {
            j[name] = opt->get_default_str();
        }
    }
    return j;
}

class Runner {
  public:
    Runner(Flags& f, std::ostream& out, std::ostream& err) : f_(f), out_(out), err_(err) {}

    void begin(const CLI::App& sub) {
        set_thread_count(f_.common.threads);
        fs::create_directories(f_.common.out_dir);
        manifest_.emplace(sub.get_name());
        ordered_json config = config_snapshot(sub);
        config["effective_threads"] = thread_count();
        manifest_->set_config(std::move(config));
    }

    std::string out_path(const std::string& name) const { return (fs::path(f_.common.out_dir) / name).string(); }

    void emit(const std::string& name, const std::string& content) {
        const std::string path = out_path(name);
        write_file(path, content);
        manifest_->add_output(path);
    }

    void finish() { manifest_->write(f_.common.out_dir); }

    Dataset load_input() {
        manifest_->add_input(f_.input);
        auto stage = manifest_->stage("load");
        return load_dataset(f_.input);
    }

    ClusterModel load_or_cluster(const Dataset& ds) {
        if (!f_.model.empty()) {
            manifest_->add_input(f_.model);
            return model_from_json(read_file(f_.model));
        }
        auto stage = manifest_->stage("cluster");
        return cluster_dataset(ds, f_.cluster.config());
    }

    void synth() {
        auto specs = f_.scenario == "important-roads" ? synth::important_roads_specs()
                     : f_.scenario == "clusters"      ? synth::default_specs()
                                                      : throw InvalidSpec("unknown scenario '" + f_.scenario + "'");
        for (auto& s : specs) {
            if (f_.missing_prob) s.missing_prob = *f_.missing_prob;
            if (f_.count) s.count = *f_.count;
        }
        synth::GeneratorOptions opts;
        opts.seed = f_.cluster.seed;
        auto stage = manifest_->stage("generate");
        const auto data = synth::generate(specs, BucketGrid(f_.bucket_minutes), opts);
        stage.stop();

        std::ostringstream records, attrs;
        write_records_csv(records, synth::to_records(data.dataset));
        write_attributes_csv(attrs, synth::to_attributes(data.dataset));
        emit("records.csv", records.str());
        emit("attributes.csv", attrs.str());
        emit("labels.csv", synth::labels_csv(data.labels));
        manifest_->set_result("streets", data.dataset.profiles.size());
    }

    void ingest() {
        const BucketGrid grid(f_.bucket_minutes);
        CleaningConfig cfg;
        cfg.min_speed_kmh = f_.min_speed;
        cfg.max_speed_kmh = f_.max_speed;
        cfg.min_observed_buckets = f_.min_observed;
        cfg.min_filling_rate = f_.min_filling_rate;
        cfg.validate();

        manifest_->add_input(f_.input);
        std::ifstream in(f_.input);
        if (!in) throw DataError("cannot open " + f_.input);
        auto read = manifest_->stage("read");
        const auto records = read_records_csv(in, grid, RecordReadOptions{f_.utc_offset}, f_.input);
        read.stop();

        CleaningReport report;
        auto agg = manifest_->stage("aggregate");
        Dataset ds = speedclust::ingest(records, grid, cfg, &report);
        ds = speedclust::clean(ds, cfg, &report);
        agg.stop();
        if (!f_.attrs.empty()) {
            manifest_->add_input(f_.attrs);
            std::ifstream ain(f_.attrs);
            if (!ain) throw DataError("cannot open " + f_.attrs);
            const auto rows = read_attributes_csv(ain, f_.attrs);
            ds = join_attributes(ds, rows, &report);
        }
        std::ostringstream csv;
        write_dataset_csv(csv, ds);
        emit("dataset.csv", csv.str());
        emit("dataset.json", dataset_to_json(ds) + "\n");
        emit("cleaning_report.json", report.to_json() + "\n");
        manifest_->set_result("streets", ds.profiles.size());
    }

    void cluster() {
        const Dataset ds = load_input();
        auto stage = manifest_->stage("cluster");
        const ClusterModel model = cluster_dataset(ds, f_.cluster.config());
        stage.stop();
        write_model_outputs(model);
        manifest_->set_result("inertia", model.inertia());
        manifest_->set_result("iterations_run", model.iterations_run);
    }

    void elbow() {
        const Dataset ds = load_input();
        const auto [lo, hi] = parse_range(f_.k_range);
        auto stage = manifest_->stage("elbow");
        const ElbowResult result = elbow_select(observed_rows(ds), lo, hi, f_.cluster.config());
        stage.stop();
        std::ostringstream csv;
        csv << "k,inertia\n";
        for (const auto& p : result.curve) csv << p.k << ',' << text::format_double(p.inertia) << '\n';
        emit("elbow.csv", csv.str());
        manifest_->set_result("chosen_k", result.chosen_k);
    }

    void impute() {
        const Dataset ds = load_input();
        const ClusterModel model = load_or_cluster(ds);
        auto stage = manifest_->stage("impute");
        const ImputationResult result = speedclust::impute(ds, model);
        stage.stop();
        std::ostringstream snapshot;
        write_dataset_csv(snapshot, result.dataset);
        emit("imputed.csv", snapshot.str());
        std::ostringstream cells;
        cells << "street_id,bucket_index,speed_kmh\n";
        for (std::size_t s = 0; s < result.dataset.profiles.size(); ++s) {
            const auto& p = result.dataset.profiles[s];
            for (std::size_t b = 0; b < p.series.size(); ++b) {
                if (result.imputed[s][b]) {
                    cells << text::csv_field(p.street_id) << ',' << b << ','
                          << text::format_double(*p.series.values[b]) << '\n';
                }
            }
        }
        emit("imputed_cells.csv", cells.str());
        emit("imputation_report.json", imputation_report_json(result.report) + "\n");
    }

    void colorify() {
        const CongestionThresholds thresholds = CongestionThresholds::parse(f_.thresholds);
        const Dataset ds = load_input();
        std::optional<ImputationResult> filled;
        if (!f_.model.empty()) {
            const ClusterModel model = load_or_cluster(ds);
            auto stage = manifest_->stage("impute");
            filled = speedclust::impute(ds, model);
        }
        auto stage = manifest_->stage("colorify");
        const ColorifyResult result = filled ? speedclust::colorify(filled->dataset, thresholds, &filled->imputed)
                                             : speedclust::colorify(ds, thresholds);
        stage.stop();
        emit("colors.csv", assignments_csv(result));
        emit("colorify_summary.json", summary_json(result, thresholds) + "\n");
        if (f_.bucket) emit("tile_snapshot.json", tile_snapshot_json(result, *f_.bucket) + "\n");
        manifest_->set_result("cells", result.cells.size());
    }

    void important_roads() {
        const Dataset ds = load_input();
        ImportanceConfig config;
        config.cluster = f_.cluster.config();
        config.scalar_weight = f_.scalar_weight;

        auto stage = manifest_->stage("important_roads");
        const ImportanceResult result = find_important_secondary(ds, config);
        stage.stop();
        for (const auto& w : result.warnings) err_ << "warning: " << w << '\n';
        emit("important_roads.csv", important_roads_csv(result));

        ordered_json doc;
        doc["primary"] = ordered_json::parse(importance_json(result));
        if (f_.compare_k) {
            ImportanceConfig other = config;
            other.cluster.k = *f_.compare_k;
            auto cmp = manifest_->stage("compare_k");
            const ImportanceResult alt = find_important_secondary(ds, other);
            cmp.stop();
            doc["compare"] = ordered_json::parse(importance_json(alt));
            emit("important_roads_k" + std::to_string(*f_.compare_k) + ".csv", important_roads_csv(alt));
        }
        if (f_.elbow_range != "none") {
            const auto [lo, hi] = parse_range(f_.elbow_range);
            const ScalerParams scaler = fit_scaler(ds.profiles, config.features);
            std::vector<std::size_t> secondaries;
            for (std::size_t i = 0; i < ds.profiles.size(); ++i) {
                if (ds.profiles[i].road_class == RoadClass::Secondary) secondaries.push_back(i);
            }
            ClusterConfig ec = config.cluster;
            ec.scalar_weight = config.scalar_weight;
            auto el = manifest_->stage("elbow");
            const ElbowResult elbow = elbow_select(scale_profiles(ds, scaler, secondaries).rows, lo, hi, ec);
            el.stop();
            std::ostringstream csv;
            csv << "k,inertia\n";
            for (const auto& p : elbow.curve) csv << p.k << ',' << text::format_double(p.inertia) << '\n';
            emit("elbow.csv", csv.str());
            doc["elbow_chosen_k"] = elbow.chosen_k;
            manifest_->set_result("elbow_chosen_k", elbow.chosen_k);
        }
        emit("important_roads.json", doc.dump(2) + "\n");
        manifest_->set_result("selected_cluster", result.selected_cluster);
        manifest_->set_result("important_streets", result.important_street_ids.size());
    }

    void dtw() {
        std::vector<double> a, b;
        if (!f_.file.empty()) {
            std::ifstream in(f_.file);
            if (!in) throw DataError("cannot open " + f_.file);
            std::string la, lb;
            if (!std::getline(in, la) || !std::getline(in, lb)) throw DataError(f_.file + ": expected two lines");
            a = parse_series(la);
            b = parse_series(lb);
        } else {
            if (f_.a.empty() || f_.b.empty()) throw CLI::ValidationError("dtw needs --a and --b, or --file");
            a = parse_series(f_.a);
            b = parse_series(f_.b);
        }
        DtwOptions opts;
        opts.local = f_.cluster.squared ? LocalDistance::Squared : LocalDistance::Absolute;
        opts.window = f_.window;
        out_ << text::format_double(dtw_distance(a, b, opts)) << '\n';
    }

  private:
    void write_model_outputs(const ClusterModel& model) {
        emit("model.json", model_to_json(model) + "\n");
        std::ostringstream assign;
        assign << "street_id,cluster\n";
        for (std::size_t i = 0; i < model.labels.size(); ++i) {
            assign << text::csv_field(model.street_ids[i]) << ',' << model.labels[i] << '\n';
        }
        emit("assignments.csv", assign.str());
        std::ostringstream cen;
        cen << "cluster,position,speed_kmh\n";
        for (std::size_t c = 0; c < model.centroids.size(); ++c) {
            const auto& v = model.centroids[c].series.values;
            for (std::size_t p = 0; p < v.size(); ++p) cen << c << ',' << p << ',' << text::format_double(v[p]) << '\n';
        }
        emit("centroids.csv", cen.str());
    }

    Flags& f_;
    std::ostream& out_;
    std::ostream& err_;
    std::optional<RunManifest> manifest_;
};

void add_common(CLI::App* sub, Flags& f) {
    sub->add_option("--out-dir", f.common.out_dir, "Directory for outputs and manifest.json")->capture_default_str();
    sub->add_option("--threads", f.common.threads, "Worker thread cap (0 = all cores)")->capture_default_str();
    sub->add_option("--config", f.common.config, "JSON object of flag values; command-line flags win");
}

void add_cluster(CLI::App* sub, Flags& f) {
    sub->add_option("--k", f.cluster.k, "Number of clusters")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--max-iter", f.cluster.max_iter, "K-Means iteration cap")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    sub->add_option("--seed", f.cluster.seed, "Seed for all randomness")->capture_default_str();
    sub->add_option("--restarts", f.cluster.restarts, "Independent seedings, best kept")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    sub->add_option("--barycenter-iter", f.cluster.barycenter_iter, "Barycenter averaging iterations")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    sub->add_flag("--squared", f.cluster.squared, "Squared instead of absolute point distance in DTW");
}

void add_input(CLI::App* sub, Flags& f) {
    sub->add_option("--input", f.input, "Dataset snapshot (.csv or .json)")->required();
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Flags f;
    CLI::App app{"Traffic speed profile clustering with DTW K-Means", "speedclust"};
    app.require_subcommand(1);

    auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset with planted clusters");
    add_common(synth, f);
    synth->add_option("--seed", f.cluster.seed, "Generator seed")->capture_default_str();
    synth->add_option("--bucket-minutes", f.bucket_minutes, "Minutes per weekly bucket")->capture_default_str();
    synth->add_option("--scenario", f.scenario, "clusters | important-roads")->capture_default_str();
    synth->add_option("--missing-prob", f.missing_prob, "Override every archetype's missing probability");
    synth->add_option("--count", f.count, "Override every archetype's street count");

    auto* ingest = app.add_subcommand("ingest", "Aggregate raw speed records into weekly profiles");
    add_common(ingest, f);
    ingest->add_option("--input", f.input, "Records CSV")->required();
    ingest->add_option("--attrs", f.attrs, "Attributes CSV keyed by street_id");
    ingest->add_option("--bucket-minutes", f.bucket_minutes, "Minutes per weekly bucket")->capture_default_str();
    ingest->add_option("--min-filling-rate", f.min_filling_rate, "Keep streets with a filling rate above this")
        ->capture_default_str();
    ingest->add_option("--min-speed", f.min_speed, "Lowest plausible speed (km/h)")->capture_default_str();
    ingest->add_option("--max-speed", f.max_speed, "Highest plausible speed (km/h)")->capture_default_str();
    ingest->add_option("--min-observed", f.min_observed, "Minimum observed buckets per street")
        ->capture_default_str();
    ingest->add_option("--utc-offset", f.utc_offset, "Local time offset from UTC in minutes, for timestamps")
        ->capture_default_str();

    auto* cluster = app.add_subcommand("cluster", "Cluster street profiles with DTW K-Means");
    add_common(cluster, f);
    add_input(cluster, f);
    add_cluster(cluster, f);

    auto* elbow = app.add_subcommand("elbow", "Inertia curve over a range of k and its knee");
    add_common(elbow, f);
    add_input(elbow, f);
    add_cluster(elbow, f);
    elbow->remove_option(elbow->get_option("--k"));
    elbow->add_option("--k", f.k_range, "Range of k, e.g. 1..6")->capture_default_str();

    auto* impute = app.add_subcommand("impute", "Fill missing buckets from cluster peers");
    add_common(impute, f);
    add_input(impute, f);
    add_cluster(impute, f);
    impute->add_option("--model", f.model, "Model JSON from `cluster`; clusters afresh when omitted");

    auto* colorify = app.add_subcommand("colorify", "Assign congestion levels per street and bucket");
    add_common(colorify, f);
    add_input(colorify, f);
    add_cluster(colorify, f);
    colorify->add_option("--model", f.model, "Model JSON; when given, missing buckets are imputed first");
    colorify->add_option("--thresholds", f.thresholds, "free:heavy:blocked")->capture_default_str();
    colorify->add_option("--bucket", f.bucket, "Also write a tile snapshot for this bucket");

    auto* roads = app.add_subcommand("important-roads", "Find secondary roads that behave like primaries");
    add_common(roads, f);
    add_input(roads, f);
    add_cluster(roads, f);
    roads->add_option("--compare-k", f.compare_k, "Also report the partition for this k");
    roads->add_option("--scalar-weight", f.scalar_weight, "Weight of filling rate and max speed")
        ->capture_default_str();
    roads->add_option("--elbow", f.elbow_range, "k range for the elbow check, or none")->capture_default_str();

    auto* dtw = app.add_subcommand("dtw", "DTW distance between two series");
    dtw->add_option("--a", f.a, "Comma-separated series; NA entries are dropped");
    dtw->add_option("--b", f.b, "Comma-separated series; NA entries are dropped");
    dtw->add_option("--file", f.file, "File with one series per line");
    dtw->add_option("--window", f.window, "Sakoe-Chiba half-width");
    dtw->add_flag("--squared", f.cluster.squared, "Squared instead of absolute point distance");

    try {
        const auto expanded = expand_config(args);
        std::vector<std::string> reversed(expanded.rbegin(), expanded.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        if (const auto* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front()) {
            err << sub->help();
        }
        return kExitUsage;
    }

    Runner runner(f, out, err);
    try {
        CLI::App* sub = app.get_subcommands().front();
        const std::string name = sub->get_name();
        if (name == "dtw") {
            runner.dtw();
            return kExitOk;
        }
        runner.begin(*sub);
        if (name == "synth") runner.synth();
        else if (name == "ingest") runner.ingest();
        else if (name == "cluster") runner.cluster();
        else if (name == "elbow") runner.elbow();
        else if (name == "impute") runner.impute();
        else if (name == "colorify") runner.colorify();
        else if (name == "important-roads") runner.important_roads();
        runner.finish();
        return kExitOk;
    } catch (const CLI::ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const PreconditionError& e) {
        err << "error: " << e.what() << '\n';
        return kExitPrecondition;
    } catch (const DataError& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    }
}

} // namespace speedclust::cli
