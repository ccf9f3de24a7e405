#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

namespace windcast {

using Json = nlohmann::json;

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

Json read_json_file(const std::filesystem::path& path);
/// Pretty-printed with two-space indent and a trailing newline.
void write_json_file(const std::filesystem::path& path, const Json& value);

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_hex(const std::string& bytes);

/// Doubles that may be infinite are stored as the strings "inf" / "-inf".
Json encode_real(double v);
double decode_real(const Json& j);

} // namespace windcast
