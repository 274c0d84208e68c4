#include "doctest.h"

#include <sstream>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "manifest.hpp"
#include "support/scratch.hpp"

using namespace speedclust;
using speedclust::testing::ScratchDir;
using speedclust::testing::slurp;
using speedclust::testing::spit;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

// Small synthetic dataset on an hourly grid, ingested into dir/data.
std::string small_dataset(const ScratchDir& dir) {
    REQUIRE(run({"synth", "--count", "6", "--bucket-minutes", "60", "--out-dir", dir / "raw"}).code == 0);
    REQUIRE(run({"ingest", "--input", dir / "raw/records.csv", "--attrs", dir / "raw/attributes.csv",
                 "--bucket-minutes", "60", "--out-dir", dir / "data"})
                .code == 0);
    return dir / "data/dataset.csv";
}

} // namespace

TEST_CASE("dtw subcommand prints the worked example") {
    auto r = run({"dtw", "--a", "65,83,65,70,66,81,71,65", "--b", "49,69,63,90"});
    CHECK(r.code == 0);
    CHECK(r.out == "79.0\n");
    CHECK(run({"dtw", "--a", "49,69,NA,NA,63,NA,90,NA", "--b", "65,83,65,70,66,81,71,65"}).out == "79.0\n");
    CHECK(run({"dtw", "--a", "0,0,0", "--b", "5", "--squared"}).out == "75.0\n");
}

TEST_CASE("dtw subcommand reads a file") {
    ScratchDir dir("cli-dtw");
    spit(dir / "pair.txt", "65,83,65,70,66,81,71,65\n49,69,63,90\n");
    CHECK(run({"dtw", "--file", dir / "pair.txt"}).out == "79.0\n");
}

TEST_CASE("exit codes") {
    CHECK(run({}).code == cli::kExitUsage);
    CHECK(run({"frobnicate"}).code == cli::kExitUsage);
    CHECK(run({"cluster", "--input", "x.csv", "--no-such-flag"}).code == cli::kExitUsage);
    CHECK(run({"cluster"}).code == cli::kExitUsage);
    CHECK(run({"dtw", "--a", "1,2"}).code == cli::kExitUsage);
    CHECK(run({"dtw", "--a", "1,x", "--b", "1"}).code == cli::kExitData);
    CHECK(run({"dtw", "--a", "NA", "--b", "1"}).code == cli::kExitPrecondition);
    CHECK(run({"--help"}).code == cli::kExitOk);

    ScratchDir dir("cli-codes");
    CHECK(run({"cluster", "--input", dir / "missing.csv", "--out-dir", dir / "o"}).code == cli::kExitData);
    spit(dir / "bad.csv", "street_id,bucket_index,speed_kmh\na,99999,50\n");
    CHECK(run({"ingest", "--input", dir / "bad.csv", "--out-dir", dir / "o"}).code == cli::kExitData);

    const auto data = small_dataset(dir);
    CHECK(run({"cluster", "--input", data, "--k", "500", "--out-dir", dir / "o"}).code == cli::kExitPrecondition);
    CHECK(run({"important-roads", "--input", data, "--out-dir", dir / "o"}).code == cli::kExitPrecondition);
    CHECK(run({"colorify", "--input", data, "--thresholds", "0.2:0.9:5", "--out-dir", dir / "o"}).code ==
          cli::kExitData);
}

TEST_CASE("cluster runs are reproducible and fully recorded in the manifest") {
    ScratchDir dir("cli-cluster");
    const auto data = small_dataset(dir);
    REQUIRE(run({"cluster", "--input", data, "--k", "3", "--seed", "7", "--out-dir", dir / "c1"}).code == 0);
    REQUIRE(run({"cluster", "--input", data, "--k", "3", "--seed", "7", "--out-dir", dir / "c2"}).code == 0);
    CHECK(slurp(dir / "c1/model.json") == slurp(dir / "c2/model.json"));
    CHECK(slurp(dir / "c1/assignments.csv") == slurp(dir / "c2/assignments.csv"));

    auto manifest = nlohmann::json::parse(slurp(dir / "c1/manifest.json"));
    CHECK(manifest["subcommand"] == "cluster");
    CHECK(manifest["config"]["k"] == "3");
    CHECK(manifest["config"]["seed"] == "7");
    CHECK(manifest["inputs"].size() == 1);
    REQUIRE(manifest["outputs"].size() == 3);
    for (const auto& o : manifest["outputs"]) {
        CHECK(o["sha256"] == cli::file_sha256(o["path"].get<std::string>()));
    }
    CHECK(manifest["timings_ms"].contains("cluster"));
}

TEST_CASE("config file supplies flag values") {
    ScratchDir dir("cli-config");
    const auto data = small_dataset(dir);
    spit(dir / "cfg.json", nlohmann::json{{"input", data}, {"k", 2}, {"seed", 5}, {"out-dir", dir / "out"}}.dump());
    REQUIRE(run({"cluster", "--config", dir / "cfg.json"}).code == 0);
    auto model = nlohmann::json::parse(slurp(dir / "out/model.json"));
    CHECK(model["centroids"].size() == 2);
    CHECK(model["config"]["seed"] == 5);
    spit(dir / "broken.json", "{k: ");
    CHECK(run({"cluster", "--config", dir / "broken.json"}).code == cli::kExitUsage);
}

TEST_CASE("elbow, impute and colorify outputs") {
    ScratchDir dir("cli-apps");
    const auto data = small_dataset(dir);
    REQUIRE(run({"elbow", "--input", data, "--k", "1..4", "--out-dir", dir / "e"}).code == 0);
    const auto curve = slurp(dir / "e/elbow.csv");
    CHECK(curve.rfind("k,inertia\n1,", 0) == 0);
    CHECK(std::count(curve.begin(), curve.end(), '\n') == 5);
    auto manifest = nlohmann::json::parse(slurp(dir / "e/manifest.json"));
    const int chosen = manifest["results"]["chosen_k"].get<int>();
    CHECK(chosen >= 1);
    CHECK(chosen <= 4);
    CHECK(run({"elbow", "--input", data, "--k", "4..2", "--out-dir", dir / "e"}).code == cli::kExitData);

    REQUIRE(run({"cluster", "--input", data, "--out-dir", dir / "c"}).code == 0);
    REQUIRE(run({"impute", "--input", data, "--model", dir / "c/model.json", "--out-dir", dir / "i"}).code == 0);
    auto report = nlohmann::json::parse(slurp(dir / "i/imputation_report.json"));
    CHECK(report["cells_imputed"].get<int>() > 0);

    REQUIRE(run({"colorify", "--input", data, "--model", dir / "c/model.json", "--bucket", "8", "--out-dir",
                 dir / "k"})
                .code == 0);
    CHECK(slurp(dir / "k/colors.csv").rfind("street_id,bucket_index,speed_kmh,imputed,level,color\n", 0) == 0);
    auto tile = nlohmann::json::parse(slurp(dir / "k/tile_snapshot.json"));
    CHECK(tile["bucket_index"] == 8);
    CHECK(tile["colors"].size() == 18);
}

TEST_CASE("important-roads subcommand") {
    ScratchDir dir("cli-roads");
    REQUIRE(run({"synth", "--scenario", "important-roads", "--count", "5", "--bucket-minutes", "60", "--out-dir",
                 dir / "raw"})
                .code == 0);
    REQUIRE(run({"ingest", "--input", dir / "raw/records.csv", "--attrs", dir / "raw/attributes.csv",
                 "--bucket-minutes", "60", "--out-dir", dir / "data"})
                .code == 0);
    auto r = run({"important-roads", "--input", dir / "data/dataset.csv", "--compare-k", "4", "--elbow", "1..5",
                  "--out-dir", dir / "out"});
    REQUIRE(r.code == 0);
    auto doc = nlohmann::json::parse(slurp(dir / "out/important_roads.json"));
    CHECK(doc["primary"]["k"] == 3);
    CHECK(doc["compare"]["k"] == 4);
    CHECK(doc.contains("elbow_chosen_k"));
    const auto csv = slurp(dir / "out/important_roads.csv");
    CHECK(csv.rfind("road_class,filling_rate_pct,street_id,name,county\n", 0) == 0);
    CHECK(csv.find("primary_like_secondary_") != std::string::npos);
    CHECK(slurp(dir / "out/important_roads_k4.csv").size() > 0);
}
