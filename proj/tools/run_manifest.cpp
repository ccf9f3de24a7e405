#include "run_manifest.hpp"

#include <algorithm>

#include "windcast/common/error.hpp"
#include "windcast/common/time.hpp"

#ifndef WINDCAST_VERSION
#define WINDCAST_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;

namespace windcast::cli {

std::vector<fs::path> list_outputs(const fs::path& root) {
    std::vector<fs::path> files;
    if (fs::is_regular_file(root)) return {root};
    if (!fs::is_directory(root)) return files;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (entry.is_regular_file() && entry.path().filename() != kManifestName) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

std::string digest_path(const fs::path& path) {
    if (fs::is_regular_file(path)) return sha256_file(path);
    if (!fs::is_directory(path)) throw Error(ErrorKind::FileNotFound, "no such file or directory '" + path.string() + "'");
    std::string listing;
    for (const auto& file : list_outputs(path)) {
        listing += fs::relative(file, path).generic_string() + "\n" + sha256_file(file) + "\n";
    }
    return sha256_hex(listing);
}

fs::path manifest_path_for(const fs::path& out) {
    if (fs::is_directory(out)) return out / kManifestName;
    return fs::path(out.string() + ".manifest.json");
}

RunRecorder::RunRecorder(std::string command, std::vector<std::string> args)
    : command_(std::move(command)), args_(std::move(args)), started_(std::chrono::system_clock::now()),
      clock_(std::chrono::steady_clock::now()) {}

void RunRecorder::config(const std::string& role, const fs::path& path, const Json& content) {
    configs_[role] = Json{{"path", path.string()}, {"content", content}};
}

void RunRecorder::input(const std::string& role, const fs::path& path) {
    inputs_[role] = Json{{"path", path.string()}, {"sha256", digest_path(path)}};
}

void RunRecorder::seed(const std::string& role, std::uint64_t value) { seeds_[role] = value; }

void RunRecorder::set(const std::string& key, Json value) { extra_[key] = std::move(value); }

void RunRecorder::write(const fs::path& out) {
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_).count();
    const auto started = std::chrono::duration_cast<std::chrono::seconds>(started_.time_since_epoch()).count();
    Json outputs = Json::array();
    for (const auto& file : list_outputs(out)) {
        outputs.push_back(Json{{"path", file.string()}, {"sha256", sha256_file(file)}, {"bytes", fs::file_size(file)}});
    }
    Json m{{"command", command_},
           {"args", args_},
           {"working_directory", fs::current_path().string()},
           {"version", WINDCAST_VERSION},
           {"configs", configs_},
           {"inputs", inputs_},
           {"seeds", seeds_},
           {"started_at", format_iso8601(static_cast<Timestamp>(started))},
           {"wall_clock_seconds", seconds},
           {"outputs", outputs}};
    for (const auto& [k, v] : extra_.items()) m[k] = v;
    write_json_file(manifest_path_for(out), m);
}

} // namespace windcast::cli
