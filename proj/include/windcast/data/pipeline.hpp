#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "windcast/data/frame.hpp"

namespace windcast::data {

/// Parses the CSV, keeps the schema columns, sorts rows by time and keeps the
/// last of duplicate timestamps. Unparsable numeric cells become NaN.
SeriesFrame ingest_csv(const std::filesystem::path& path, const std::vector<FeatureSpec>& schema,
                       const std::string& timestamp_column);

/// Values outside a column's physical bounds are replaced by the violated bound.
SeriesFrame clip_outliers(const SeriesFrame& frame);

struct ImputeOptions {
    Timestamp max_gap = kSecondsPerDay;
    int search_days = 3;
    /// Half-width, in hours, of the weather window compared around the gap.
    int context_hours = 12;
    /// Columns used for the weather distance; empty selects every observed_past column.
    std::vector<std::string> weather_columns;
};

/// Fills gaps shorter than max_gap from the same clock time of a nearby day
/// (within +-search_days) with the closest weather. Rows of longer gaps, and
/// of cells with no candidate, are flagged unusable.
SeriesFrame impute_missing(const SeriesFrame& frame, const ImputeOptions& options = {});

/// Aggregates onto a regular grid aligned to multiples of `target` since the
/// epoch. A bin is missing when any member is missing or a record is absent.
SeriesFrame resample(const SeriesFrame& frame, Timestamp target);

/// Adds hour, day_of_week (Monday = 0), month (1..12) and season
/// (0 spring .. 3 winter) as known_future categorical columns.
SeriesFrame add_calendar_features(const SeriesFrame& frame);

struct NormalizationParams {
    std::map<std::string, std::pair<double, double>> ranges;   // column -> (min, max)
};

Json to_json(const NormalizationParams& params);
NormalizationParams normalization_from_json(const Json& j);

/// x' = (x - min) / (max - min), constant columns to 0. Fits on the frame
/// when params is null. Categorical columns pass through unscaled.
std::pair<SeriesFrame, NormalizationParams> normalize_minmax(const SeriesFrame& frame,
                                                             const NormalizationParams* params = nullptr);

std::vector<double> denormalize(const std::vector<double>& values, const NormalizationParams& params,
                                const std::string& column);
double denormalize(double value, const std::pair<double, double>& range);
double normalize(double value, const std::pair<double, double>& range);

struct DatasetSplit {
    SeriesFrame train;
    SeriesFrame val;
    SeriesFrame test;
    std::vector<int> train_years;
    std::vector<int> val_years;
    std::vector<int> test_years;
};

DatasetSplit split_by_year(const SeriesFrame& frame, const std::vector<int>& train_years,
                           const std::vector<int>& val_years, const std::vector<int>& test_years);

/// Writes train/, val/ and test/ frame directories plus split.json.
void save_split(const std::filesystem::path& dir, const DatasetSplit& split);
DatasetSplit load_split(const std::filesystem::path& dir);

/// Linear interpolation over NaN cells; leading/trailing gaps take the nearest value.
std::vector<double> interpolate_missing(const std::vector<double>& values);

} // namespace windcast::data
