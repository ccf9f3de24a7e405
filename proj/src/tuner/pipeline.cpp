#include "windcast/tuner/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "windcast/common/error.hpp"
#include "windcast/common/rng.hpp"

namespace windcast::tuner {

std::size_t PreparedSeries::row_of(Timestamp ts) const {
    const auto& t = frame.timestamps;
    return static_cast<std::size_t>(std::lower_bound(t.begin(), t.end(), ts) - t.begin());
}

PreparedSeries prepare_series(const data::DatasetSplit& split) {
    const data::SeriesFrame* parts[] = {&split.train, &split.val, &split.test};
    for (const auto* p : parts) {
        if (p->rows() == 0) throw Error(ErrorKind::EmptySplit, "every split needs at least one row");
    }
    Timestamp res = split.train.resolution;
    if (res <= 0) {
        res = std::numeric_limits<Timestamp>::max();
        for (const auto* p : parts) {
            for (std::size_t r = 1; r < p->rows(); ++r) res = std::min(res, p->timestamps[r] - p->timestamps[r - 1]);
        }
        if (res == std::numeric_limits<Timestamp>::max() || res <= 0) res = kSecondsPerHour;
    }

    PreparedSeries out;
    out.train_begin = split.train.timestamps.front();
    out.val_begin = split.val.timestamps.front();
    out.test_begin = split.test.timestamps.front();
    out.end = split.test.timestamps.back() + res;
    if (!(out.train_begin < out.val_begin && out.val_begin < out.test_begin)) {
        throw Error(ErrorKind::InvalidConfig, "splits must be ordered train < val < test in time");
    }

    // regular grid from the first training row to the last test row
    data::SeriesFrame grid;
    grid.schema = split.train.schema;
    grid.resolution = res;
    const std::size_t n = static_cast<std::size_t>((out.end - out.train_begin) / res);
    for (std::size_t r = 0; r < n; ++r) grid.timestamps.push_back(out.train_begin + static_cast<Timestamp>(r) * res);
    grid.columns.assign(grid.schema.size(), std::vector<double>(n, NAN));
    grid.unusable.assign(n, 1);
    for (const auto* p : parts) {
        for (std::size_t r = 0; r < p->rows(); ++r) {
            const Timestamp offset = p->timestamps[r] - out.train_begin;
            if (offset % res != 0) continue;
            const std::size_t g = static_cast<std::size_t>(offset / res);
            if (g >= n) continue;
            for (std::size_t c = 0; c < grid.schema.size(); ++c) {
                grid.columns[c][g] = p->column(grid.schema[c].name)[r];
            }
            grid.unusable[g] = p->row_unusable(r) ? 1 : 0;
        }
    }
    if (grid.names_with_role(data::Role::KnownFuture).empty() || grid.has_column("hour")) {
        grid = data::add_calendar_features(grid);
    }

    out.actual = grid.target();
    out.filled = data::interpolate_missing(out.actual);
    const auto fitted = data::normalize_minmax(split.train).second;
    auto [normalized, params] = data::normalize_minmax(grid, &fitted);
    out.frame = std::move(normalized);
    out.normalization = std::move(params);
    out.layout = tft::layout_from_frame(out.frame);
    return out;
}

const char* to_string(EvalSpan span) {
    return span == EvalSpan::Validation ? "validation" : "test_paper_faithful";
}

EvalSpan eval_span_from_string(const std::string& text) {
    if (text == "validation") return EvalSpan::Validation;
    if (text == "test_paper_faithful" || text == "test") return EvalSpan::Test;
    throw Error(ErrorKind::InvalidConfig, "unknown evaluation split '" + text + "' (expected validation or test_paper_faithful)");
}

std::pair<Timestamp, Timestamp> span_bounds(const PreparedSeries& s, EvalSpan span) {
    return span == EvalSpan::Validation ? std::make_pair(s.val_begin, s.test_begin) : std::make_pair(s.test_begin, s.end);
}

const char* to_string(DecompositionScope scope) {
    return scope == DecompositionScope::FullSeries ? "full-series" : "causal-window";
}

DecompositionScope scope_from_string(const std::string& text) {
    if (text == "full-series") return DecompositionScope::FullSeries;
    if (text == "causal-window") return DecompositionScope::CausalWindow;
    throw Error(ErrorKind::InvalidConfig, "unknown decomposition scope '" + text + "' (expected full-series or causal-window)");
}

Json to_json(const PipelineOptions& o) {
    return Json{{"scope", to_string(o.scope)}, {"causal_window", o.causal_window}};
}

PipelineOptions pipeline_options_from_json(const Json& j) {
    PipelineOptions o;
    try {
        if (j.contains("scope")) o.scope = scope_from_string(j["scope"].get<std::string>());
        o.causal_window = j.value("causal_window", o.causal_window);
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::InvalidConfig, std::string("pipeline options: ") + e.what());
    }
    return o;
}

namespace {

std::vector<double> scaled(const std::vector<double>& values, const std::pair<double, double>& range) {
    std::vector<double> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = data::normalize(values[i], range);
    return out;
}

// Windows are taken where the covariates are usable; the interpolated target
// stands in for the (possibly missing) actual values.
tft::WindowData origin_data(const PreparedSeries& s) {
    const auto range = s.normalization.ranges.at(s.layout.target_name);
    return tft::make_window_data(s.frame, s.layout, scaled(s.filled, range));
}

decomp::ModeSet identity_modes(std::span<const double> signal) {
    decomp::ModeSet m;
    m.modes.emplace_back(signal.begin(), signal.end());
    m.residual.assign(signal.size(), 0.0);
    m.names = {"target"};
    m.input_length = signal.size();
    return m;
}

decomp::ModeSet decompose_span(std::span<const double> signal, const std::optional<decomp::DecompositionConfig>& cfg) {
    return cfg ? decomp::decompose(signal, *cfg) : identity_modes(signal);
}

// Mode values of the window ending before `origin`, fitted to `count` modes:
// missing modes are zero and surplus modes join the residual.
struct WindowModes {
    std::vector<std::vector<double>> modes;
    double residual_last = 0.0;
};

WindowModes causal_modes(const TrainedPipeline& p, const PreparedSeries& s, std::size_t origin) {
    const std::size_t W = p.options.causal_window;
    if (origin < W) {
        throw Error(ErrorKind::SignalTooShort, "causal window of " + std::to_string(W) + " samples needs an origin at row >= " +
                                                   std::to_string(W));
    }
    const decomp::ModeSet m = decompose_span(std::span<const double>(s.filled).subspan(origin - W, W), p.decomposition);
    WindowModes out;
    const std::size_t count = p.models.size();
    out.modes.assign(count, std::vector<double>(W, 0.0));
    std::vector<double> residual = m.residual.empty() ? std::vector<double>(W, 0.0) : m.residual;
    for (std::size_t k = 0; k < m.size(); ++k) {
        if (k < count) out.modes[k] = m.modes[k];
        else for (std::size_t i = 0; i < W; ++i) residual[i] += m.modes[k][i];
    }
    out.residual_last = residual.back();
    return out;
}

struct ModeInputs {
    std::vector<tft::WindowData> data;
};

ModeInputs mode_inputs(const TrainedPipeline& p, const PreparedSeries& s) {
    ModeInputs in;
    const std::size_t n = s.frame.rows();
    for (std::size_t m = 0; m < p.models.size(); ++m) {
        std::vector<double> target(n, 0.0);
        const auto& mode = p.modes.modes[m];
        for (std::size_t i = 0; i < std::min(n, mode.size()); ++i) target[i] = data::normalize(mode[i], p.ranges[m]);
        in.data.push_back(tft::make_window_data(s.frame, p.models[m]->layout(), std::move(target)));
    }
    return in;
}

// Per-origin residual offsets and, in the causal scope, the re-decomposed
// target history written into each mode batch.
struct ChunkForecast {
    std::vector<std::vector<std::vector<double>>> medians;   // [mode][origin][step], normalized
    std::vector<nn::Tensor> quantiles;                       // [mode] -> [B, tau, Q]
    std::vector<double> offsets;
};

ChunkForecast forecast_chunk(const TrainedPipeline& p, const PreparedSeries& s, const ModeInputs& inputs,
                             std::span<const std::size_t> origins, bool keep_quantiles) {
    const tft::TftConfig& cfg = p.model_config;
    const std::size_t k = cfg.encoder_length, tau = cfg.horizon, B = origins.size();
    ChunkForecast out;
    std::vector<WindowModes> windows;
    if (p.options.scope == DecompositionScope::CausalWindow) {
        for (std::size_t t : origins) {
            windows.push_back(causal_modes(p, s, t));
            out.offsets.push_back(windows.back().residual_last);
        }
    } else {
        for (std::size_t t : origins) out.offsets.push_back(p.modes.residual.empty() ? 0.0 : p.modes.residual[t - 1]);
    }
    for (std::size_t m = 0; m < p.models.size(); ++m) {
        tft::Batch b = tft::make_batch(inputs.data[m], origins, k, tau);
        if (!windows.empty()) {
            const std::size_t W = p.options.causal_window;
            for (std::size_t i = 0; i < B; ++i) {
                for (std::size_t j = 0; j < k; ++j) {
                    b.target_past[i * k + j] = data::normalize(windows[i].modes[m][W - k + j], p.ranges[m]);
                }
            }
        }
        nn::Tape tape;
        const nn::Tensor q = p.models[m]->forward(tape, b, nn::ForwardMode{}).quantiles.value();
        out.medians.push_back(tft::median_forecast(q, cfg));
        if (keep_quantiles) out.quantiles.push_back(q);
    }
    return out;
}

} // namespace

std::size_t decomposition_length(const PreparedSeries& series, const PipelineOptions& options) {
    return options.scope == DecompositionScope::CausalWindow ? series.row_of(series.test_begin) : series.frame.rows();
}

TrainedPipeline fit_pipeline(const PreparedSeries& series, const std::optional<decomp::DecompositionConfig>& decomposition,
                             const tft::TftConfig& model_config, const PipelineOptions& options,
                             const decomp::ModeSet* precomputed) {
    model_config.validate();
    if (decomposition) decomposition->validate();
    if (options.scope == DecompositionScope::CausalWindow && options.causal_window < model_config.encoder_length) {
        throw Error(ErrorKind::InvalidConfig, "causal_window must be at least the encoder length");
    }
    TrainedPipeline p;
    p.decomposition = decomposition;
    p.model_config = model_config;
    p.options = options;

    const std::size_t fit_end = decomposition_length(series, options);
    if (precomputed) {
        if (!decomposition) throw Error(ErrorKind::InvalidConfig, "precomputed modes need a decomposition config");
        if (precomputed->input_length != fit_end) {
            throw Error(ErrorKind::LengthMismatch, "precomputed modes cover " + std::to_string(precomputed->input_length) +
                                                       " samples, the series needs " + std::to_string(fit_end));
        }
        if (to_json(precomputed->config) != to_json(*decomposition)) {
            throw Error(ErrorKind::InvalidConfig, "precomputed modes were made with a different decomposition config");
        }
        p.modes = *precomputed;
    } else {
        p.modes = decompose_span(std::span<const double>(series.filled).first(fit_end), decomposition);
    }

    const std::size_t train_end = series.row_of(series.val_begin);
    for (const auto& mode : p.modes.modes) {
        const auto [lo, hi] = std::minmax_element(mode.begin(), mode.begin() + static_cast<std::ptrdiff_t>(train_end));
        p.ranges.emplace_back(*lo, *hi);
    }

    const std::size_t k = model_config.encoder_length, tau = model_config.horizon;
    const tft::WindowData base = origin_data(series);
    const auto train_origins = tft::window_origins(base, k, tau, series.train_begin, series.val_begin, 1);
    const auto val_origins = tft::window_origins(base, k, tau, series.val_begin, series.test_begin, tau);

    for (std::size_t m = 0; m < p.modes.size(); ++m) {
        tft::TftConfig cfg = model_config;
        cfg.seed = Rng::derive(model_config.seed, m);
        p.models.push_back(std::make_unique<tft::TftModel>(cfg, series.layout));
    }
    const ModeInputs inputs = mode_inputs(p, series);
    for (std::size_t m = 0; m < p.models.size(); ++m) {
        p.histories.push_back(tft::train(*p.models[m], inputs.data[m], train_origins, val_origins));
    }
    return p;
}

SpanForecast forecast_span(const TrainedPipeline& p, const PreparedSeries& s, Timestamp from, Timestamp to) {
    const tft::TftConfig& cfg = p.model_config;
    const std::size_t k = cfg.encoder_length, tau = cfg.horizon;
    const tft::WindowData base = origin_data(s);
    std::vector<std::size_t> origins = tft::window_origins(base, k, tau, from, to, tau);
    if (p.options.scope == DecompositionScope::CausalWindow) {
        std::erase_if(origins, [&](std::size_t t) { return t < p.options.causal_window; });
    }
    const ModeInputs inputs = mode_inputs(p, s);

    SpanForecast out;
    for (std::size_t start = 0; start < origins.size(); start += cfg.batch_size) {
        const std::size_t count = std::min(cfg.batch_size, origins.size() - start);
        const std::span<const std::size_t> chunk(origins.data() + start, count);
        const ChunkForecast f = forecast_chunk(p, s, inputs, chunk, false);
        std::vector<std::vector<double>> total;
        if (f.medians.empty()) {
            for (double o : f.offsets) total.emplace_back(tau, std::max(o, 0.0));
        } else {
            total = tft::aggregate_mode_forecasts(f.medians, p.ranges, f.offsets);
        }
        for (std::size_t i = 0; i < count; ++i) {
            const std::size_t t = chunk[i];
            out.origins.push_back(s.frame.timestamps[t]);
            for (std::size_t j = 0; j < tau; ++j) {
                if (std::isfinite(s.actual[t + j])) {
                    out.timestamps.push_back(s.frame.timestamps[t + j]);
                    out.actual.push_back(s.actual[t + j]);
                    out.predicted.push_back(total[i][j]);
                }
            }
            out.forecast.push_back(std::move(total[i]));
        }
    }
    return out;
}

std::vector<std::vector<double>> forecast_quantiles(const TrainedPipeline& p, const PreparedSeries& s, std::size_t origin) {
    const tft::TftConfig& cfg = p.model_config;
    const std::size_t k = cfg.encoder_length, tau = cfg.horizon, Q = cfg.quantiles.size();
    if (origin < k || origin + tau > s.frame.rows()) {
        throw Error(ErrorKind::InvalidConfig, "origin row " + std::to_string(origin) + " needs " + std::to_string(k) +
                                                  " past and " + std::to_string(tau) + " future rows inside the data");
    }
    const ModeInputs inputs = mode_inputs(p, s);
    const std::size_t chunk[] = {origin};
    const ChunkForecast f = forecast_chunk(p, s, inputs, chunk, true);
    std::vector<std::vector<double>> out(tau, std::vector<double>(Q, f.offsets[0]));
    for (std::size_t m = 0; m < f.quantiles.size(); ++m) {
        for (std::size_t j = 0; j < tau; ++j) {
            for (std::size_t q = 0; q < Q; ++q) out[j][q] += data::denormalize(f.quantiles[m][j * Q + q], p.ranges[m]);
        }
    }
    for (auto& row : out) {
        for (double& v : row) v = std::max(v, 0.0);
    }
    return out;
}

SpanForecast persistence_span(const PreparedSeries& s, std::size_t encoder_length, std::size_t horizon, Timestamp from,
                              Timestamp to) {
    const tft::WindowData base = origin_data(s);
    SpanForecast out;
    for (std::size_t t : tft::window_origins(base, encoder_length, horizon, from, to, horizon)) {
        const double last = std::isfinite(s.actual[t - 1]) ? s.actual[t - 1] : s.filled[t - 1];
        out.origins.push_back(s.frame.timestamps[t]);
        out.forecast.emplace_back(horizon, last);
        for (std::size_t j = 0; j < horizon; ++j) {
            if (std::isfinite(s.actual[t + j])) {
                out.timestamps.push_back(s.frame.timestamps[t + j]);
                out.actual.push_back(s.actual[t + j]);
                out.predicted.push_back(last);
            }
        }
    }
    return out;
}

void save_pipeline(const std::filesystem::path& dir, const TrainedPipeline& p) {
    std::filesystem::create_directories(dir);
    Json ranges = Json::array();
    for (const auto& [lo, hi] : p.ranges) ranges.push_back({lo, hi});
    Json histories = Json::array();
    for (const auto& h : p.histories) {
        Json epochs = Json::array();
        for (const auto& e : h.epochs) epochs.push_back({encode_real(e.train_loss), encode_real(e.val_loss)});
        histories.push_back(Json{{"epochs", epochs}, {"best_epoch", h.best_epoch}, {"best_val_loss", encode_real(h.best_val_loss)}});
    }
    write_json_file(dir / "pipeline.json",
                    Json{{"decomposition", p.decomposition ? decomp::to_json(*p.decomposition) : Json(nullptr)},
                         {"model_config", tft::to_json(p.model_config)},
                         {"options", to_json(p.options)},
                         {"ranges", ranges},
                         {"mode_names", p.modes.names},
                         {"histories", histories}});
    decomp::save_modeset(dir / "modes", p.modes);
    for (std::size_t m = 0; m < p.models.size(); ++m) p.models[m]->save(dir / ("mode_" + std::to_string(m)));
}

TrainedPipeline load_pipeline(const std::filesystem::path& dir) {
    const Json j = read_json_file(dir / "pipeline.json");
    TrainedPipeline p;
    try {
        if (!j.at("decomposition").is_null()) p.decomposition = decomp::decomposition_from_json(j["decomposition"]);
        p.model_config = tft::tft_config_from_json(j.at("model_config"));
        p.options = pipeline_options_from_json(j.at("options"));
        for (const auto& r : j.at("ranges")) p.ranges.emplace_back(r.at(0).get<double>(), r.at(1).get<double>());
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::ParseError, (dir / "pipeline.json").string() + ": " + e.what());
    }
    p.modes = decomp::load_modeset(dir / "modes");
    if (p.modes.size() != p.ranges.size()) {
        throw Error(ErrorKind::ModelCountMismatch, std::to_string(p.modes.size()) + " modes but " +
                                                       std::to_string(p.ranges.size()) + " normalization ranges");
    }
    for (std::size_t m = 0; m < p.ranges.size(); ++m) p.models.push_back(tft::TftModel::load(dir / ("mode_" + std::to_string(m))));
    return p;
}

} // namespace windcast::tuner
