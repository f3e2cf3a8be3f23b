#include "manifest.hpp"

#include <ctime>
#include <fstream>

#include <Eigen/Core>

#include "pmltm/hash.hpp"
#include "pmltm/serialization.hpp"
#include "pmltm/text.hpp"

namespace pmltm::cli {
namespace {

std::string isoUtc(std::chrono::system_clock::time_point t) {
    const std::time_t tt = std::chrono::system_clock::to_time_t(t);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

RunManifest::RunManifest(std::string command, std::vector<std::string> args)
    : command_(std::move(command)),
      args_(std::move(args)),
      cwd_(std::filesystem::current_path()),
      startedWall_(std::chrono::system_clock::now()),
      started_(std::chrono::steady_clock::now()) {}

void RunManifest::addInput(const std::filesystem::path& path) {
    inputs_.push_back({{"path", path.string()}, {"sha256", sha256File(path)}});
}

void RunManifest::addOutput(const std::filesystem::path& path) { outputs_.push_back(path); }

void RunManifest::write(const std::filesystem::path& path, int exitCode, const std::string& error) {
    try {
        nlohmann::json j;
        j["format"] = kManifestFormat;
        j["version"] = kManifestVersion;
        j["command"] = command_;
        j["args"] = args_;
        j["cwd"] = cwd_.string();
        j["config"] = config_;
        j["seeds"] = seeds_;
        j["inputs"] = inputs_;
        j["outputs"] = nlohmann::json::array();
        for (const auto& o : outputs_) {
            nlohmann::json entry{{"path", o.string()}};
            std::error_code ec;
            entry["sha256"] = std::filesystem::exists(o, ec) ? nlohmann::json(sha256File(o)) : nlohmann::json(nullptr);
            j["outputs"].push_back(std::move(entry));
        }
        const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
        j["timing"] = {{"started_utc", isoUtc(startedWall_)},
                       {"finished_utc", isoUtc(std::chrono::system_clock::now())},
                       {"seconds", elapsed}};
        j["versions"] = {{"pmltm", PMLTM_VERSION},
                         {"model_format", kModelFormatVersion},
                         {"manifest_format", kManifestVersion},
                         {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                       "." + std::to_string(EIGEN_MINOR_VERSION)},
                         {"stop_word_sha256", text::stopWordListHash()}};
        j["exit_code"] = exitCode;
        if (!error.empty()) j["error"] = error;
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out << j.dump(2) << '\n';
    } catch (...) {
        // A manifest failure must not mask the command's own result.
    }
}

}  // namespace pmltm::cli
