#pragma once

#include <memory>
#include <string>
#include <vector>

#include "windcast/tft/forecast.hpp"

namespace windcast::eval {

enum class BaselineKind { Mlp, Lstm };

const char* to_string(BaselineKind kind);

struct BaselineConfig {
    std::size_t hidden_size = 16;
    std::size_t encoder_length = 48;
    std::size_t horizon = 24;
    std::size_t batch_size = 64;
    std::size_t max_epochs = 20;
    std::size_t patience = 3;
    std::size_t max_train_windows = 0;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;

    void validate() const;
};

Json to_json(const BaselineConfig& cfg);
BaselineConfig baseline_config_from_json(const Json& j);

/// Point forecasters over the past target and observed covariates, trained
/// on squared error. The MLP flattens the window into dense(ELU) -> dense;
/// the LSTM encodes it and maps the final hidden state to the horizon.
class BaselineModel {
public:
    BaselineModel(BaselineKind kind, BaselineConfig cfg, std::size_t observed_count);

    BaselineKind kind() const noexcept { return kind_; }
    const BaselineConfig& config() const noexcept { return cfg_; }
    nn::ParameterStore& parameters() noexcept { return *store_; }

    /// [B, tau]
    nn::Var forward(nn::Tape& tape, const tft::Batch& batch) const;

private:
    BaselineKind kind_;
    BaselineConfig cfg_;
    std::size_t observed_count_;
    std::unique_ptr<nn::ParameterStore> store_;
    nn::Linear hidden_;
    nn::LstmWeights lstm_;
    nn::Linear head_;
};

nn::FitHistory train_baseline(BaselineModel& model, const tft::WindowData& data,
                              const std::vector<std::size_t>& train_origins,
                              const std::vector<std::size_t>& val_origins);

/// [B][tau] in the units of data.target.
std::vector<std::vector<double>> predict_baseline(const BaselineModel& model, const tft::WindowData& data,
                                                  const std::vector<std::size_t>& origins);

} // namespace windcast::eval
