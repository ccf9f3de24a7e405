#include "windcast/data/frame.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "windcast/common/csv.hpp"
#include "windcast/common/error.hpp"

namespace windcast::data {

const char* to_string(Role role) {
    switch (role) {
    case Role::Static: return "static";
    case Role::ObservedPast: return "observed_past";
    case Role::KnownFuture: return "known_future";
    case Role::Target: return "target";
    }
    return "?";
}

const char* to_string(Aggregation agg) {
    switch (agg) {
    case Aggregation::Mean: return "mean";
    case Aggregation::Min: return "min";
    case Aggregation::Max: return "max";
    case Aggregation::StdPool: return "std_pool";
    }
    return "?";
}

Role role_from_string(const std::string& text) {
    if (text == "static") return Role::Static;
    if (text == "observed_past" || text == "observed") return Role::ObservedPast;
    if (text == "known_future" || text == "known") return Role::KnownFuture;
    if (text == "target") return Role::Target;
    throw Error(ErrorKind::InvalidConfig, "unknown feature role '" + text +
                                              "' (expected static, observed_past, known_future or target)");
}

Aggregation aggregation_from_string(const std::string& text) {
    if (text == "mean") return Aggregation::Mean;
    if (text == "min") return Aggregation::Min;
    if (text == "max") return Aggregation::Max;
    if (text == "std_pool" || text == "std") return Aggregation::StdPool;
    throw Error(ErrorKind::InvalidConfig, "unknown aggregation '" + text + "' (expected mean, min, max or std_pool)");
}

void validate_schema(const std::vector<FeatureSpec>& features) {
    std::set<std::string> names;
    std::size_t targets = 0;
    for (const auto& f : features) {
        if (f.name.empty()) throw Error(ErrorKind::InvalidConfig, "feature with empty name");
        if (!names.insert(f.name).second) throw Error(ErrorKind::InvalidConfig, "duplicate feature name '" + f.name + "'");
        if (f.role == Role::Target) ++targets;
        if (f.physical_bounds && f.physical_bounds->first > f.physical_bounds->second) {
            throw Error(ErrorKind::InvalidConfig, "feature '" + f.name + "' has physical_bounds lo > hi");
        }
        if (f.categorical && f.cardinality == 0) {
            throw Error(ErrorKind::InvalidConfig, "categorical feature '" + f.name + "' needs a cardinality");
        }
    }
    if (targets != 1) {
        throw Error(ErrorKind::InvalidConfig,
                    "schema must have exactly one target column, found " + std::to_string(targets));
    }
}

Json to_json(const FeatureSpec& spec) {
    Json j;
    j["name"] = spec.name;
    j["role"] = to_string(spec.role);
    j["aggregation"] = to_string(spec.aggregation);
    if (spec.physical_bounds) j["physical_bounds"] = {spec.physical_bounds->first, spec.physical_bounds->second};
    if (!spec.unit.empty()) j["unit"] = spec.unit;
    if (spec.categorical) {
        j["categorical"] = true;
        j["cardinality"] = spec.cardinality;
        if (spec.code_offset != 0) j["code_offset"] = spec.code_offset;
    }
    return j;
}

FeatureSpec feature_from_json(const Json& j) {
    FeatureSpec f;
    try {
        f.name = j.at("name").get<std::string>();
        f.role = role_from_string(j.at("role").get<std::string>());
        f.aggregation = aggregation_from_string(j.value("aggregation", std::string("mean")));
        if (j.contains("physical_bounds") && !j["physical_bounds"].is_null()) {
            const auto& b = j["physical_bounds"];
            if (!b.is_array() || b.size() != 2) {
                throw Error(ErrorKind::InvalidConfig, "feature '" + f.name + "': physical_bounds must be [lo, hi]");
            }
            f.physical_bounds = std::make_pair(b[0].get<double>(), b[1].get<double>());
        }
        f.unit = j.value("unit", std::string());
        f.categorical = j.value("categorical", false);
        f.cardinality = j.value("cardinality", std::size_t{0});
        f.code_offset = j.value("code_offset", 0);
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::InvalidConfig, std::string("feature spec: ") + e.what());
    }
    return f;
}

Json to_json(const Schema& schema) {
    Json j;
    j["timestamp_column"] = schema.timestamp_column;
    Json features = Json::array();
    for (const auto& f : schema.features) features.push_back(to_json(f));
    j["features"] = std::move(features);
    return j;
}

Schema schema_from_json(const Json& j) {
    Schema s;
    s.timestamp_column = j.value("timestamp_column", std::string("timestamp"));
    if (!j.contains("features") || !j["features"].is_array()) {
        throw Error(ErrorKind::InvalidConfig, "schema: 'features' must be an array");
    }
    for (const auto& f : j["features"]) s.features.push_back(feature_from_json(f));
    validate_schema(s.features);
    return s;
}

Schema load_schema(const std::filesystem::path& path) {
    try {
        return schema_from_json(read_json_file(path));
    } catch (const Error& e) {
        throw Error(e.kind(), path.string() + ": " + e.what());
    }
}

// ------------------------------------------------------------------ frame

bool SeriesFrame::has_column(const std::string& name) const {
    for (const auto& f : schema) {
        if (f.name == name) return true;
    }
    return false;
}

std::size_t SeriesFrame::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < schema.size(); ++i) {
        if (schema[i].name == name) return i;
    }
    throw Error(ErrorKind::UnknownColumn, "no column named '" + name + "'");
}

const std::vector<double>& SeriesFrame::column(const std::string& name) const { return columns[index_of(name)]; }
std::vector<double>& SeriesFrame::column(const std::string& name) { return columns[index_of(name)]; }
const FeatureSpec& SeriesFrame::spec(const std::string& name) const { return schema[index_of(name)]; }

const FeatureSpec& SeriesFrame::target_spec() const {
    for (const auto& f : schema) {
        if (f.role == Role::Target) return f;
    }
    throw Error(ErrorKind::InvalidConfig, "frame has no target column");
}

const std::vector<double>& SeriesFrame::target() const { return column(target_spec().name); }

std::vector<std::string> SeriesFrame::names_with_role(Role role) const {
    std::vector<std::string> out;
    for (const auto& f : schema) {
        if (f.role == role) out.push_back(f.name);
    }
    return out;
}

void SeriesFrame::set_column(const FeatureSpec& spec, std::vector<double> values) {
    if (values.size() != rows()) {
        throw Error(ErrorKind::LengthMismatch, "column '" + spec.name + "' has " + std::to_string(values.size()) +
                                                   " values for " + std::to_string(rows()) + " rows");
    }
    for (std::size_t i = 0; i < schema.size(); ++i) {
        if (schema[i].name == spec.name) {
            schema[i] = spec;
            columns[i] = std::move(values);
            return;
        }
    }
    schema.push_back(spec);
    columns.push_back(std::move(values));
}

SeriesFrame SeriesFrame::slice_rows(std::size_t begin, std::size_t end) const {
    SeriesFrame out;
    out.schema = schema;
    out.resolution = resolution;
    out.timestamps.assign(timestamps.begin() + static_cast<std::ptrdiff_t>(begin),
                          timestamps.begin() + static_cast<std::ptrdiff_t>(end));
    for (const auto& c : columns) {
        out.columns.emplace_back(c.begin() + static_cast<std::ptrdiff_t>(begin),
                                 c.begin() + static_cast<std::ptrdiff_t>(end));
    }
    if (!unusable.empty()) {
        out.unusable.assign(unusable.begin() + static_cast<std::ptrdiff_t>(begin),
                            unusable.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return out;
}

SeriesFrame SeriesFrame::filter_rows(const std::vector<bool>& keep) const {
    SeriesFrame out;
    out.schema = schema;
    out.resolution = resolution;
    out.columns.resize(columns.size());
    for (std::size_t r = 0; r < rows(); ++r) {
        if (!keep[r]) continue;
        out.timestamps.push_back(timestamps[r]);
        for (std::size_t c = 0; c < columns.size(); ++c) out.columns[c].push_back(columns[c][r]);
        if (!unusable.empty()) out.unusable.push_back(unusable[r]);
    }
    return out;
}

// --------------------------------------------------------------- storage

void write_frame_csv(const std::filesystem::path& path, const SeriesFrame& frame,
                     const std::string& timestamp_column) {
    std::string out = csv_field(timestamp_column);
    for (const auto& f : frame.schema) out += "," + csv_field(f.name);
    out += "\n";
    for (std::size_t r = 0; r < frame.rows(); ++r) {
        out += format_iso8601(frame.timestamps[r]);
        for (const auto& c : frame.columns) {
            out.push_back(',');
            out += format_real(c[r]);
        }
        out.push_back('\n');
    }
    write_text_file(path, out);
}

void save_frame(const std::filesystem::path& dir, const SeriesFrame& frame) {
    write_frame_csv(dir / "frame.csv", frame);
    Json meta;
    meta["format"] = "windcast-frame-v1";
    Schema schema{"timestamp", frame.schema};
    meta["schema"] = to_json(schema);
    meta["resolution_seconds"] = frame.resolution;
    meta["rows"] = frame.rows();
    Json bad = Json::array();
    for (std::size_t r = 0; r < frame.rows(); ++r) {
        if (frame.row_unusable(r)) bad.push_back(r);
    }
    meta["unusable_rows"] = std::move(bad);
    write_json_file(dir / "frame.json", meta);
}

SeriesFrame load_frame(const std::filesystem::path& dir) {
    const auto meta_path = dir / "frame.json";
    const Json meta = read_json_file(meta_path);
    const Schema schema = schema_from_json(meta.at("schema"));
    const CsvTable table = read_csv(dir / "frame.csv");
    SeriesFrame frame;
    frame.schema = schema.features;
    frame.resolution = meta.value("resolution_seconds", Timestamp{0});
    const std::size_t ts_col = table.column("timestamp");
    if (ts_col == std::string::npos) throw Error(ErrorKind::MissingColumn, "frame.csv: no 'timestamp' column");
    std::vector<std::size_t> idx;
    for (const auto& f : frame.schema) {
        const std::size_t c = table.column(f.name);
        if (c == std::string::npos) throw Error(ErrorKind::MissingColumn, "frame.csv: missing column '" + f.name + "'");
        idx.push_back(c);
    }
    frame.columns.assign(idx.size(), {});
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        auto ts = ts_col < row.size() ? parse_iso8601(row[ts_col]) : std::nullopt;
        if (!ts) {
            throw Error(ErrorKind::UnparsableTimestamp,
                        "frame.csv line " + std::to_string(table.line_numbers[r]) + ": bad timestamp");
        }
        frame.timestamps.push_back(*ts);
        for (std::size_t c = 0; c < idx.size(); ++c) {
            auto v = idx[c] < row.size() ? parse_real(row[idx[c]]) : std::nullopt;
            frame.columns[c].push_back(v ? *v : std::nan(""));
        }
    }
    if (meta.contains("unusable_rows") && !meta["unusable_rows"].empty()) {
        frame.unusable.assign(frame.rows(), 0);
        for (const auto& r : meta["unusable_rows"]) frame.unusable.at(r.get<std::size_t>()) = 1;
    }
    return frame;
}

} // namespace windcast::data
