#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "windcast/eval/metrics.hpp"

namespace windcast::eval {

struct ModelMetrics {
    std::string model;
    MetricReport overall;
    std::vector<GroupedReport> grouped;   // month, season, year
};

/// Point forecasts of one model plus their metrics.
struct ModelEvaluation {
    ModelMetrics metrics;
    std::vector<Timestamp> timestamps;
    std::vector<double> actual;
    std::vector<double> predicted;
};

/// Overall and month/season/year metrics of aligned forecasts.
ModelEvaluation evaluate_forecasts(const std::string& model, std::vector<Timestamp> timestamps,
                                   std::vector<double> actual, std::vector<double> predicted,
                                   std::optional<double> y_max = std::nullopt);

Json to_json(const ModelMetrics& m);
ModelMetrics model_metrics_from_json(const Json& j);

/// Writes metrics.json, scatter.csv (timestamp, actual, predicted, model),
/// box.csv (model, abs_error) and grouped.csv (model, granularity, label,
/// nmae, nrmse). `extra` is merged into metrics.json. Throws IoError.
void export_report(const std::filesystem::path& dir, const std::vector<ModelEvaluation>& models,
                   const Json& extra = Json::object());

/// The per-model entries of a metrics.json.
std::vector<ModelMetrics> load_metrics(const std::filesystem::path& path);

} // namespace windcast::eval
