#include "manifest.hpp"

#include <array>
#include <cstdio>
#include <fstream>

#include <openssl/evp.h>

#include "speedclust/errors.hpp"

#ifndef SPEEDCLUST_VERSION
#define SPEEDCLUST_VERSION "dev"
#endif

namespace speedclust::cli {

std::string file_sha256(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path);
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, digest.data(), &len);
    EVP_MD_CTX_free(ctx);
    std::string hex;
    char byte[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(byte, sizeof byte, "%02x", digest[i]);
        hex += byte;
    }
    return hex;
}

RunManifest::RunManifest(std::string subcommand) : subcommand_(std::move(subcommand)) {}

void RunManifest::add_input(const std::string& path) { inputs_.emplace_back(path, file_sha256(path)); }
void RunManifest::add_output(const std::string& path) { outputs_.emplace_back(path, file_sha256(path)); }

RunManifest::Stage::Stage(RunManifest& owner, std::string name)
    : owner_(&owner), name_(std::move(name)), start_(std::chrono::steady_clock::now()) {}

RunManifest::Stage::~Stage() { stop(); }

void RunManifest::Stage::stop() {
    if (stopped_) return;
    stopped_ = true;
    const std::chrono::duration<double, std::milli> ms = std::chrono::steady_clock::now() - start_;
    owner_->timings_.emplace_back(name_, ms.count());
}

std::string RunManifest::to_json() const {
    nlohmann::ordered_json j;
    j["tool"] = "speedclust";
    j["version"] = SPEEDCLUST_VERSION;
    j["subcommand"] = subcommand_;
    j["config"] = config_;
    auto files = [](const auto& list) {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const auto& [path, digest] : list) arr.push_back({{"path", path}, {"sha256", digest}});
        return arr;
    };
    j["inputs"] = files(inputs_);
    j["outputs"] = files(outputs_);
    j["results"] = results_;
    nlohmann::ordered_json timings = nlohmann::ordered_json::object();
    for (const auto& [name, ms] : timings_) timings[name] = ms;
    j["timings_ms"] = std::move(timings);
    return j.dump(2);
}

void RunManifest::write(const std::string& dir) const {
    const std::string path = dir + "/manifest.json";
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << to_json() << '\n';
}

} // namespace speedclust::cli
