#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "windcast/data/pipeline.hpp"
#include "windcast/decomp/decomposition.hpp"
#include "windcast/tft/forecast.hpp"

namespace windcast::tuner {

/// The three splits on one regular time grid, covariates scaled with the
/// training-split ranges.
struct PreparedSeries {
    data::SeriesFrame frame;
    data::NormalizationParams normalization;
    tft::FeatureLayout layout;
    std::vector<double> actual;   // target in original units, NaN where missing
    std::vector<double> filled;   // actual with gaps interpolated; the decomposition input
    Timestamp train_begin = 0;
    Timestamp val_begin = 0;
    Timestamp test_begin = 0;
    Timestamp end = 0;            // exclusive

    /// Row of the first timestamp >= ts.
    std::size_t row_of(Timestamp ts) const;
};

/// Gaps between or inside the splits become NaN rows flagged unusable.
/// Calendar features are added when the frame has no known-future column.
PreparedSeries prepare_series(const data::DatasetSplit& split);

enum class EvalSpan { Validation, Test };

const char* to_string(EvalSpan span);
EvalSpan eval_span_from_string(const std::string& text);

/// [from, to) of the validation or test split.
std::pair<Timestamp, Timestamp> span_bounds(const PreparedSeries& series, EvalSpan span);

enum class DecompositionScope { FullSeries, CausalWindow };

const char* to_string(DecompositionScope scope);
DecompositionScope scope_from_string(const std::string& text);

struct PipelineOptions {
    DecompositionScope scope = DecompositionScope::FullSeries;
    /// Samples re-decomposed at each origin in the causal scope.
    std::size_t causal_window = 720;
};

Json to_json(const PipelineOptions& options);
PipelineOptions pipeline_options_from_json(const Json& j);

struct TrainedPipeline {
    /// nullopt trains a single model on the target itself.
    std::optional<decomp::DecompositionConfig> decomposition;
    tft::TftConfig model_config;
    PipelineOptions options;
    decomp::ModeSet modes;
    std::vector<std::pair<double, double>> ranges;   // per mode, training span
    std::vector<std::unique_ptr<tft::TftModel>> models;
    std::vector<nn::FitHistory> histories;
};

/// Decomposes the target (the whole series, or everything before the test
/// split in the causal scope), scales each mode by its training-span range
/// and trains one TFT per mode with early stopping on the validation split.
/// `precomputed` replaces the decomposition step; it must come from the same
/// config and cover the same samples.
TrainedPipeline fit_pipeline(const PreparedSeries& series, const std::optional<decomp::DecompositionConfig>& decomposition,
                             const tft::TftConfig& model_config, const PipelineOptions& options = {},
                             const decomp::ModeSet* precomputed = nullptr);

/// Samples the fitted decomposition covers: the whole grid, or everything
/// before the test split in the causal scope.
std::size_t decomposition_length(const PreparedSeries& series, const PipelineOptions& options);

struct SpanForecast {
    std::vector<Timestamp> origins;
    std::vector<std::vector<double>> forecast;   // [origin][step], original units
    /// Forecast points whose actual value is known.
    std::vector<Timestamp> timestamps;
    std::vector<double> actual;
    std::vector<double> predicted;
};

/// Non-overlapping forecasts (stride = horizon) whose steps fall in [from, to):
/// the sum of the mode medians plus the residual's last value, clamped at 0.
SpanForecast forecast_span(const TrainedPipeline& pipeline, const PreparedSeries& series, Timestamp from, Timestamp to);

/// Forecast from the single origin at row `origin`.
std::vector<std::vector<double>> forecast_quantiles(const TrainedPipeline& pipeline, const PreparedSeries& series,
                                                    std::size_t origin);

/// Persistence at the same origins as a pipeline forecast of `horizon` steps.
SpanForecast persistence_span(const PreparedSeries& series, std::size_t encoder_length, std::size_t horizon,
                              Timestamp from, Timestamp to);

/// Writes pipeline.json, the mode ranges and one model directory per mode.
void save_pipeline(const std::filesystem::path& dir, const TrainedPipeline& pipeline);
TrainedPipeline load_pipeline(const std::filesystem::path& dir);

} // namespace windcast::tuner
