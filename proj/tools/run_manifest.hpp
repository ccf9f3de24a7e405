#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "windcast/common/io.hpp"

namespace windcast::cli {

/// SHA-256 of a file, or of the sorted (relative path, file digest) list of a directory.
std::string digest_path(const std::filesystem::path& path);

/// Regular files under `root` (or root itself), sorted, skipping run manifests.
std::vector<std::filesystem::path> list_outputs(const std::filesystem::path& root);

/// Where the run manifest of an output goes: inside a directory, next to a file.
std::filesystem::path manifest_path_for(const std::filesystem::path& out);

inline constexpr const char* kManifestName = "run_manifest.json";

/// Collects what a command read and wrote; `write` stores the manifest.
class RunRecorder {
public:
    RunRecorder(std::string command, std::vector<std::string> args);

    void config(const std::string& role, const std::filesystem::path& path, const Json& content);
    void input(const std::string& role, const std::filesystem::path& path);
    void seed(const std::string& role, std::uint64_t value);
    void set(const std::string& key, Json value);

    /// Digests every file under `out` and writes the manifest.
    void write(const std::filesystem::path& out);

private:
    std::string command_;
    std::vector<std::string> args_;
    Json configs_ = Json::object();
    Json inputs_ = Json::object();
    Json seeds_ = Json::object();
    Json extra_ = Json::object();
    std::chrono::system_clock::time_point started_;
    std::chrono::steady_clock::time_point clock_;
};

} // namespace windcast::cli
