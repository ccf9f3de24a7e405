#include "windcast/tft/forecast.hpp"

#include <algorithm>
#include <cmath>

#include "windcast/common/error.hpp"
#include "windcast/common/rng.hpp"
#include "windcast/data/pipeline.hpp"

namespace windcast::tft {

FeatureLayout layout_from_frame(const data::SeriesFrame& frame) {
    FeatureLayout l;
    for (const auto& spec : frame.schema) {
        switch (spec.role) {
        case data::Role::Static: l.static_names.push_back(spec.name); break;
        case data::Role::ObservedPast: l.observed_names.push_back(spec.name); break;
        case data::Role::KnownFuture:
            l.known_names.push_back(spec.name);
            l.known_cardinality.push_back(spec.categorical ? spec.cardinality : 0);
            break;
        case data::Role::Target: l.target_name = spec.name; break;
        }
    }
    l.validate();
    return l;
}

WindowData make_window_data(const data::SeriesFrame& frame, const FeatureLayout& layout, std::vector<double> target) {
    if (target.size() != frame.rows()) {
        throw Error(ErrorKind::LengthMismatch, "target has " + std::to_string(target.size()) + " values for " +
                                                   std::to_string(frame.rows()) + " rows");
    }
    WindowData d;
    d.layout = layout;
    d.timestamps = frame.timestamps;
    d.target = std::move(target);
    d.unusable = frame.unusable;
    for (const auto& name : layout.static_names) {
        double v = 0.0;
        for (double x : frame.column(name)) {
            if (std::isfinite(x)) {
                v = x;
                break;
            }
        }
        d.static_values.push_back(v);
    }
    for (const auto& name : layout.observed_names) d.observed.push_back(frame.column(name));
    for (std::size_t i = 0; i < layout.known_names.size(); ++i) {
        std::vector<double> col = frame.column(layout.known_names[i]);
        if (layout.known_cardinality[i] > 0) {
            const int offset = frame.spec(layout.known_names[i]).code_offset;
            for (double& v : col) v -= offset;
        }
        d.known.push_back(std::move(col));
    }
    return d;
}

std::vector<std::size_t> window_origins(const WindowData& data, std::size_t k, std::size_t tau, Timestamp from,
                                        Timestamp to, std::size_t stride) {
    const std::size_t n = data.rows();
    std::vector<std::size_t> out;
    if (n < k + tau) return out;
    // prefix count of rows that cannot take part in any window
    std::vector<std::size_t> bad(n + 1, 0);
    for (std::size_t r = 0; r < n; ++r) {
        bool ok = std::isfinite(data.target[r]) && (data.unusable.empty() || data.unusable[r] == 0);
        for (const auto& col : data.observed) ok = ok && std::isfinite(col[r]);
        for (const auto& col : data.known) ok = ok && std::isfinite(col[r]);
        bad[r + 1] = bad[r] + (ok ? 0 : 1);
    }
    stride = std::max<std::size_t>(stride, 1);
    for (std::size_t t = k; t + tau <= n;) {
        const bool in_span = data.timestamps[t] >= from && data.timestamps[t + tau - 1] < to;
        if (in_span && bad[t + tau] - bad[t - k] == 0) {
            out.push_back(t);
            t += stride;
        } else {
            ++t;
        }
    }
    return out;
}

Batch make_batch(const WindowData& data, std::span<const std::size_t> origins, std::size_t k, std::size_t tau) {
    const std::size_t B = origins.size();
    const std::size_t ns = data.static_values.size(), no = data.observed.size(), nk = data.known.size();
    Batch b;
    b.static_inputs = nn::Tensor({B, ns});
    b.observed_past = nn::Tensor({B, k, no});
    b.known_inputs = nn::Tensor({B, k + tau, nk});
    b.target_past = nn::Tensor({B, k, 1});
    b.target_future = nn::Tensor({B, tau, 1});
    for (std::size_t i = 0; i < B; ++i) {
        const std::size_t t0 = origins[i];
        if (t0 < k || t0 + tau > data.rows()) {
            throw Error(ErrorKind::ShapeMismatch, "window at row " + std::to_string(t0) + " exceeds the series");
        }
        b.origins.push_back(data.timestamps[t0]);
        for (std::size_t j = 0; j < ns; ++j) b.static_inputs[i * ns + j] = data.static_values[j];
        for (std::size_t s = 0; s < k; ++s) {
            const std::size_t r = t0 - k + s;
            for (std::size_t j = 0; j < no; ++j) b.observed_past[(i * k + s) * no + j] = data.observed[j][r];
            b.target_past[i * k + s] = data.target[r];
        }
        for (std::size_t s = 0; s < k + tau; ++s) {
            for (std::size_t j = 0; j < nk; ++j) b.known_inputs[(i * (k + tau) + s) * nk + j] = data.known[j][t0 - k + s];
        }
        for (std::size_t s = 0; s < tau; ++s) b.target_future[i * tau + s] = data.target[t0 + s];
    }
    return b;
}

nn::FitHistory train(TftModel& model, const WindowData& data, const std::vector<std::size_t>& train_origins,
                     const std::vector<std::size_t>& val_origins) {
    const TftConfig& cfg = model.config();
    nn::FitOptions opts;
    opts.max_epochs = cfg.max_epochs;
    opts.patience = cfg.patience;
    opts.batch_size = cfg.batch_size;
    opts.learning_rate = cfg.learning_rate;
    opts.seed = cfg.seed;
    opts.max_train_windows = cfg.max_train_windows;

    const nn::BatchLoss loss = [&](Tape& tape, std::span<const std::size_t> idx, bool training, Rng& rng) {
        const auto& origins = training ? train_origins : val_origins;
        std::vector<std::size_t> picked(idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i) picked[i] = origins[idx[i]];
        const Batch b = make_batch(data, picked, cfg.encoder_length, cfg.horizon);
        const TftOutput out = model.forward(tape, b, ForwardMode{training, cfg.dropout, &rng});
        return quantile_loss(out.quantiles, tape.constant(b.target_future), cfg.quantiles);
    };
    return nn::fit(model.parameters(), train_origins.size(), val_origins.size(), loss, opts);
}

nn::Tensor predict(const TftModel& model, const WindowData& data, const std::vector<std::size_t>& origins) {
    const TftConfig& cfg = model.config();
    const std::size_t Q = cfg.quantiles.size(), tau = cfg.horizon;
    nn::Tensor out({origins.size(), tau, Q});
    for (std::size_t start = 0; start < origins.size(); start += cfg.batch_size) {
        const std::size_t n = std::min(cfg.batch_size, origins.size() - start);
        const Batch b = make_batch(data, std::span<const std::size_t>(origins.data() + start, n), cfg.encoder_length, tau);
        Tape tape;
        const TftOutput res = model.forward(tape, b, ForwardMode{});
        const nn::Tensor& v = res.quantiles.value();
        std::copy(v.data(), v.data() + v.size(), out.data() + start * tau * Q);
    }
    return out;
}

std::vector<std::vector<double>> median_forecast(const nn::Tensor& forecast, const TftConfig& cfg) {
    const std::size_t B = forecast.dim(0), tau = forecast.dim(1), Q = forecast.dim(2);
    const std::size_t qi = cfg.median_index();
    std::vector<std::vector<double>> out(B, std::vector<double>(tau));
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t s = 0; s < tau; ++s) out[b][s] = forecast[(b * tau + s) * Q + qi];
    }
    return out;
}

std::vector<std::vector<std::vector<double>>> predict_modes(const std::vector<const TftModel*>& models,
                                                            const std::vector<const WindowData*>& data,
                                                            const std::vector<std::size_t>& origins) {
    if (models.size() != data.size()) {
        throw Error(ErrorKind::ModelCountMismatch, std::to_string(models.size()) + " models for " +
                                                       std::to_string(data.size()) + " mode series");
    }
    std::vector<std::vector<std::vector<double>>> out;
    for (std::size_t m = 0; m < models.size(); ++m) {
        out.push_back(median_forecast(predict(*models[m], *data[m], origins), models[m]->config()));
    }
    return out;
}

std::vector<std::vector<double>> aggregate_mode_forecasts(const std::vector<std::vector<std::vector<double>>>& per_mode,
                                                          const std::vector<std::pair<double, double>>& ranges,
                                                          const std::vector<double>& offsets) {
    if (per_mode.size() != ranges.size()) {
        throw Error(ErrorKind::ShapeMismatch, std::to_string(per_mode.size()) + " mode forecasts for " +
                                                  std::to_string(ranges.size()) + " normalization ranges");
    }
    if (per_mode.empty()) return {};
    const std::size_t B = per_mode[0].size();
    const std::size_t tau = B > 0 ? per_mode[0][0].size() : 0;
    if (!offsets.empty() && offsets.size() != B) {
        throw Error(ErrorKind::ShapeMismatch, std::to_string(offsets.size()) + " offsets for " + std::to_string(B) + " origins");
    }
    std::vector<std::vector<double>> total(B, std::vector<double>(tau, 0.0));
    for (std::size_t m = 0; m < per_mode.size(); ++m) {
        if (per_mode[m].size() != B) throw Error(ErrorKind::ShapeMismatch, "mode forecasts disagree on the origin count");
        for (std::size_t b = 0; b < B; ++b) {
            if (per_mode[m][b].size() != tau) throw Error(ErrorKind::ShapeMismatch, "mode forecasts disagree on the horizon");
            for (std::size_t s = 0; s < tau; ++s) total[b][s] += data::denormalize(per_mode[m][b][s], ranges[m]);
        }
    }
    for (std::size_t b = 0; b < B; ++b) {
        for (double& v : total[b]) {
            if (!offsets.empty()) v += offsets[b];
            v = std::max(v, 0.0);
        }
    }
    return total;
}

namespace {

std::vector<VariableWeight> summarize(const Var& weights, const std::vector<std::string>& names) {
    std::vector<VariableWeight> out;
    if (!weights.valid()) return out;
    const nn::Tensor& w = weights.value();
    const std::size_t m = w.shape().back();
    const std::size_t rows = w.size() / m;
    for (std::size_t j = 0; j < m; ++j) {
        double sum = 0.0, sq = 0.0;
        for (std::size_t r = 0; r < rows; ++r) sum += w[r * m + j];
        const double mean = sum / static_cast<double>(rows);
        for (std::size_t r = 0; r < rows; ++r) sq += (w[r * m + j] - mean) * (w[r * m + j] - mean);
        out.push_back({names[j], mean, std::sqrt(sq / static_cast<double>(rows))});
    }
    return out;
}

} // namespace

FeatureImportance feature_importance(const TftModel& model, const Batch& batch) {
    Tape tape;
    const TftOutput out = model.forward(tape, batch, ForwardMode{});
    const FeatureLayout& l = model.layout();
    std::vector<std::string> past = l.observed_names;
    past.insert(past.end(), l.known_names.begin(), l.known_names.end());
    past.push_back(l.target_name);
    return {summarize(out.static_weights, l.static_names), summarize(out.past_weights, past),
            summarize(out.future_weights, l.known_names)};
}

Json to_json(const FeatureImportance& imp) {
    auto list = [](const std::vector<VariableWeight>& v) {
        Json arr = Json::array();
        for (const auto& w : v) arr.push_back(Json{{"name", w.name}, {"mean", w.mean}, {"std", w.std}});
        return arr;
    };
    return Json{{"static", list(imp.static_vars)}, {"past", list(imp.past_vars)}, {"future", list(imp.future_vars)}};
}

} // namespace windcast::tft
