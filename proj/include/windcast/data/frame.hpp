#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "windcast/common/io.hpp"
#include "windcast/common/time.hpp"

namespace windcast::data {

enum class Role { Static, ObservedPast, KnownFuture, Target };
enum class Aggregation { Mean, Min, Max, StdPool };

const char* to_string(Role role);
const char* to_string(Aggregation agg);
Role role_from_string(const std::string& text);
Aggregation aggregation_from_string(const std::string& text);

struct FeatureSpec {
    std::string name;
    Role role = Role::ObservedPast;
    Aggregation aggregation = Aggregation::Mean;
    std::optional<std::pair<double, double>> physical_bounds;
    std::string unit;
    /// Integer-coded category (calendar columns); never min-max scaled and
    /// embedded by lookup table in the model.
    bool categorical = false;
    /// Number of categories when categorical.
    std::size_t cardinality = 0;
    /// Stored code minus this offset is the category index (month uses 1).
    int code_offset = 0;
};

struct Schema {
    std::string timestamp_column = "timestamp";
    std::vector<FeatureSpec> features;
};

/// Exactly one target, unique names, lo <= hi bounds; throws InvalidConfig.
void validate_schema(const std::vector<FeatureSpec>& features);

Json to_json(const FeatureSpec& spec);
FeatureSpec feature_from_json(const Json& j);
Json to_json(const Schema& schema);
Schema schema_from_json(const Json& j);
Schema load_schema(const std::filesystem::path& path);

/// Column-major table on a UTC time axis. Missing cells are NaN.
struct SeriesFrame {
    std::vector<Timestamp> timestamps;
    std::vector<FeatureSpec> schema;
    std::vector<std::vector<double>> columns;   // aligned with schema
    Timestamp resolution = 0;                   // seconds; 0 when unknown
    /// Per-row flag for rows inside gaps too long to impute. Empty means none.
    std::vector<std::uint8_t> unusable;

    std::size_t rows() const noexcept { return timestamps.size(); }
    bool has_column(const std::string& name) const;
    /// Throws UnknownColumn.
    std::size_t index_of(const std::string& name) const;
    const std::vector<double>& column(const std::string& name) const;
    std::vector<double>& column(const std::string& name);
    const FeatureSpec& spec(const std::string& name) const;
    const FeatureSpec& target_spec() const;
    const std::vector<double>& target() const;
    std::vector<std::string> names_with_role(Role role) const;
    bool row_unusable(std::size_t row) const { return !unusable.empty() && unusable[row] != 0; }

    /// Appends or replaces a column.
    void set_column(const FeatureSpec& spec, std::vector<double> values);
    /// Rows [begin, end).
    SeriesFrame slice_rows(std::size_t begin, std::size_t end) const;
    /// Rows whose index satisfies keep[i].
    SeriesFrame filter_rows(const std::vector<bool>& keep) const;
};

/// Writes `frame.csv` (timestamp + columns, NaN as empty) and `frame.json`
/// (schema, resolution, unusable row indices) into dir.
void save_frame(const std::filesystem::path& dir, const SeriesFrame& frame);
SeriesFrame load_frame(const std::filesystem::path& dir);

/// CSV with a timestamp column followed by every frame column.
void write_frame_csv(const std::filesystem::path& path, const SeriesFrame& frame,
                     const std::string& timestamp_column = "timestamp");

} // namespace windcast::data
