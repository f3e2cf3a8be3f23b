#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace pmltm::cli {

inline constexpr const char* kManifestFormat = "pmltm-manifest";
inline constexpr int kManifestVersion = 1;

/// Collects what a run needs to be repeated: the argument vector, working
/// directory, resolved configuration, seeds and content hashes of every
/// input and output. Timestamps live here and nowhere else.
class RunManifest {
public:
    RunManifest(std::string command, std::vector<std::string> args);

    nlohmann::json& config() { return config_; }
    nlohmann::json& seeds() { return seeds_; }
    void addInput(const std::filesystem::path& path);
    void addOutput(const std::filesystem::path& path);
    const std::vector<std::filesystem::path>& outputs() const { return outputs_; }

    /// Hashes outputs and writes the manifest; never throws.
    void write(const std::filesystem::path& path, int exitCode, const std::string& error = {});

private:
    std::string command_;
    std::vector<std::string> args_;
    std::filesystem::path cwd_;
    nlohmann::json config_ = nlohmann::json::object();
    nlohmann::json seeds_ = nlohmann::json::object();
    nlohmann::json inputs_ = nlohmann::json::array();
    std::vector<std::filesystem::path> outputs_;
    std::chrono::system_clock::time_point startedWall_;
    std::chrono::steady_clock::time_point started_;
};

}  // namespace pmltm::cli
