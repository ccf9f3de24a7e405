#include "windcast/eval/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "windcast/common/error.hpp"
#include "windcast/common/rng.hpp"

namespace windcast::eval {

const char* to_string(BaselineKind kind) {
    return kind == BaselineKind::Mlp ? "mlp" : "lstm";
}

void BaselineConfig::validate() const {
    if (hidden_size < 1 || encoder_length < 1 || horizon < 1 || batch_size < 1) {
        throw Error(ErrorKind::InvalidConfig, "baseline sizes must be >= 1");
    }
    if (!(learning_rate > 0.0)) throw Error(ErrorKind::InvalidConfig, "baseline learning_rate must be > 0");
}

Json to_json(const BaselineConfig& c) {
    return Json{{"hidden_size", c.hidden_size}, {"encoder_length", c.encoder_length}, {"horizon", c.horizon},
                {"batch_size", c.batch_size},   {"max_epochs", c.max_epochs},         {"patience", c.patience},
                {"max_train_windows", c.max_train_windows}, {"learning_rate", c.learning_rate}, {"seed", c.seed}};
}

BaselineConfig baseline_config_from_json(const Json& j) {
    BaselineConfig c;
    try {
        c.hidden_size = j.value("hidden_size", c.hidden_size);
        c.encoder_length = j.value("encoder_length", c.encoder_length);
        c.horizon = j.value("horizon", c.horizon);
        c.batch_size = j.value("batch_size", c.batch_size);
        c.max_epochs = j.value("max_epochs", c.max_epochs);
        c.patience = j.value("patience", c.patience);
        c.max_train_windows = j.value("max_train_windows", c.max_train_windows);
        c.learning_rate = j.value("learning_rate", c.learning_rate);
        c.seed = j.value("seed", c.seed);
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::InvalidConfig, std::string("baseline config: ") + e.what());
    }
    c.validate();
    return c;
}

BaselineModel::BaselineModel(BaselineKind kind, BaselineConfig cfg, std::size_t observed_count)
    : kind_(kind), cfg_(cfg), observed_count_(observed_count), store_(std::make_unique<nn::ParameterStore>()) {
    cfg_.validate();
    Rng rng(cfg_.seed);
    const std::size_t per_step = observed_count_ + 1;
    if (kind_ == BaselineKind::Mlp) {
        hidden_ = nn::Linear::create(*store_, "mlp.hidden", cfg_.encoder_length * per_step, cfg_.hidden_size, rng);
    } else {
        lstm_ = nn::LstmWeights::create(*store_, "lstm", per_step, cfg_.hidden_size, rng);
    }
    head_ = nn::Linear::create(*store_, "head", cfg_.hidden_size, cfg_.horizon, rng);
}

nn::Var BaselineModel::forward(nn::Tape& tape, const tft::Batch& b) const {
    const std::size_t B = b.size(), k = cfg_.encoder_length, n = observed_count_ + 1;
    if (b.target_past.shape() != nn::Shape{B, k, 1} || b.observed_past.shape() != nn::Shape{B, k, observed_count_}) {
        throw Error(ErrorKind::ShapeMismatch, "baseline batch does not match encoder length " + std::to_string(k) +
                                                  " and " + std::to_string(observed_count_) + " observed inputs");
    }
    nn::Tensor x({B, k, n});
    for (std::size_t i = 0; i < B * k; ++i) {
        x[i * n] = b.target_past[i];
        for (std::size_t j = 0; j < observed_count_; ++j) x[i * n + 1 + j] = b.observed_past[i * observed_count_ + j];
    }
    if (kind_ == BaselineKind::Mlp) {
        const nn::Var flat = nn::reshape(tape.constant(std::move(x)), {B, k * n});
        return head_(tape, nn::elu(hidden_(tape, flat)));
    }
    const nn::Var zero = tape.constant(nn::Tensor({B, cfg_.hidden_size}));
    const auto [states, last] = nn::lstm_sequence(tape, tape.constant(std::move(x)), {zero, zero}, lstm_);
    return head_(tape, last.h);
}

nn::FitHistory train_baseline(BaselineModel& model, const tft::WindowData& data,
                              const std::vector<std::size_t>& train_origins,
                              const std::vector<std::size_t>& val_origins) {
    const BaselineConfig& cfg = model.config();
    nn::FitOptions opts;
    opts.max_epochs = cfg.max_epochs;
    opts.patience = cfg.patience;
    opts.batch_size = cfg.batch_size;
    opts.learning_rate = cfg.learning_rate;
    opts.seed = cfg.seed;
    opts.max_train_windows = cfg.max_train_windows;
    const nn::BatchLoss loss = [&](nn::Tape& tape, std::span<const std::size_t> idx, bool training, Rng&) {
        const auto& origins = training ? train_origins : val_origins;
        std::vector<std::size_t> picked(idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i) picked[i] = origins[idx[i]];
        const tft::Batch b = tft::make_batch(data, picked, cfg.encoder_length, cfg.horizon);
        const nn::Var pred = model.forward(tape, b);
        const nn::Var err = nn::sub(pred, nn::reshape(tape.constant(b.target_future), {b.size(), cfg.horizon}));
        return nn::mean_all(nn::mul(err, err));
    };
    return nn::fit(model.parameters(), train_origins.size(), val_origins.size(), loss, opts);
}

std::vector<std::vector<double>> predict_baseline(const BaselineModel& model, const tft::WindowData& data,
                                                  const std::vector<std::size_t>& origins) {
    const BaselineConfig& cfg = model.config();
    std::vector<std::vector<double>> out;
    out.reserve(origins.size());
    for (std::size_t start = 0; start < origins.size(); start += cfg.batch_size) {
        const std::size_t n = std::min(cfg.batch_size, origins.size() - start);
        const tft::Batch b =
            tft::make_batch(data, std::span<const std::size_t>(origins.data() + start, n), cfg.encoder_length, cfg.horizon);
        nn::Tape tape;
        const nn::Tensor& v = model.forward(tape, b).value();
        for (std::size_t i = 0; i < n; ++i) out.emplace_back(v.data() + i * cfg.horizon, v.data() + (i + 1) * cfg.horizon);
    }
    return out;
}

} // namespace windcast::eval
