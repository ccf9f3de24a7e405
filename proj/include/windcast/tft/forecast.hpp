#pragma once

#include <span>
#include <utility>
#include <vector>

#include "windcast/data/frame.hpp"
#include "windcast/nn/optim.hpp"
#include "windcast/tft/model.hpp"

namespace windcast::tft {

/// Full-length input arrays for window extraction. The target is supplied
/// separately so each decomposition mode can reuse the same covariates.
struct WindowData {
    FeatureLayout layout;
    std::vector<Timestamp> timestamps;
    std::vector<double> static_values;
    std::vector<std::vector<double>> observed;   // per variable
    std::vector<std::vector<double>> known;      // per variable, categoricals as zero-based codes
    std::vector<double> target;
    std::vector<std::uint8_t> unusable;

    std::size_t rows() const noexcept { return timestamps.size(); }
};

/// Layout from frame roles; the frame's target column is the target.
FeatureLayout layout_from_frame(const data::SeriesFrame& frame);

/// Copies covariates from `frame`; `target` must have one value per row.
/// Static values are the first finite value of each static column (0 if none).
WindowData make_window_data(const data::SeriesFrame& frame, const FeatureLayout& layout, std::vector<double> target);

/// Row indices t of the first forecast step for windows [t - k, t + tau)
/// whose forecast steps fall in [from, to), with every input finite and no
/// unusable row. Consecutive origins are at least `stride` apart.
std::vector<std::size_t> window_origins(const WindowData& data, std::size_t k, std::size_t tau, Timestamp from,
                                        Timestamp to, std::size_t stride);

Batch make_batch(const WindowData& data, std::span<const std::size_t> origins, std::size_t k, std::size_t tau);

/// Mini-batch Adam on the quantile loss with early stopping (see nn::fit).
nn::FitHistory train(TftModel& model, const WindowData& data, const std::vector<std::size_t>& train_origins,
                     const std::vector<std::size_t>& val_origins);

/// Inference-mode forecast, [B, tau, |Q|] in normalized target units.
nn::Tensor predict(const TftModel& model, const WindowData& data, const std::vector<std::size_t>& origins);

/// The q = 0.5 series of a forecast as [B][tau].
std::vector<std::vector<double>> median_forecast(const nn::Tensor& forecast, const TftConfig& cfg);

/// One median forecast per mode, in mode order; throws ModelCountMismatch.
std::vector<std::vector<std::vector<double>>> predict_modes(const std::vector<const TftModel*>& models,
                                                            const std::vector<const WindowData*>& data,
                                                            const std::vector<std::size_t>& origins);

/// Sum of the denormalized mode forecasts plus a per-origin offset (the
/// residual's persistence value), clamped at 0.
std::vector<std::vector<double>> aggregate_mode_forecasts(
    const std::vector<std::vector<std::vector<double>>>& per_mode,
    const std::vector<std::pair<double, double>>& ranges, const std::vector<double>& offsets = {});

struct VariableWeight {
    std::string name;
    double mean = 0.0;
    double std = 0.0;
};

struct FeatureImportance {
    std::vector<VariableWeight> static_vars;
    std::vector<VariableWeight> past_vars;
    std::vector<VariableWeight> future_vars;
};

/// Mean and std of the selection weights over the batch (and time steps).
FeatureImportance feature_importance(const TftModel& model, const Batch& batch);

Json to_json(const FeatureImportance& importance);

} // namespace windcast::tft
