#pragma once

#include <chrono>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace speedclust::cli {

/// Hex SHA-256 of a file's bytes. Throws DataError if it cannot be read.
std::string file_sha256(const std::string& path);

/// Record of one CLI run, written as manifest.json next to the outputs.
class RunManifest {
  public:
    explicit RunManifest(std::string subcommand);

    void set_config(nlohmann::ordered_json config) { config_ = std::move(config); }
    void add_input(const std::string& path);
    void add_output(const std::string& path);
    void set_result(const std::string& key, nlohmann::ordered_json value) { results_[key] = std::move(value); }

    /// Times a stage; call stop() (or let it fall out of scope) to record it.
    class Stage {
      public:
        Stage(RunManifest& owner, std::string name);
        ~Stage();
        void stop();

      private:
        RunManifest* owner_;
        std::string name_;
        std::chrono::steady_clock::time_point start_;
        bool stopped_ = false;
    };
    Stage stage(std::string name) { return Stage(*this, std::move(name)); }

    std::string to_json() const;
    /// Writes <dir>/manifest.json.
    void write(const std::string& dir) const;

  private:
    std::string subcommand_;
    nlohmann::ordered_json config_;
    std::vector<std::pair<std::string, std::string>> inputs_;
    std::vector<std::pair<std::string, std::string>> outputs_;
    nlohmann::ordered_json results_ = nlohmann::ordered_json::object();
    std::vector<std::pair<std::string, double>> timings_;
};

} // namespace speedclust::cli
