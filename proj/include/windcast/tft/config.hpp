#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "windcast/common/io.hpp"
#include "windcast/tpe/space.hpp"

namespace windcast::tft {

struct TftConfig {
    std::size_t hidden_size = 16;
    std::size_t num_heads = 2;
    std::size_t encoder_length = 48;
    std::size_t horizon = 24;
    std::vector<double> quantiles{0.1, 0.5, 0.9};
    double dropout = 0.1;
    double learning_rate = 1e-3;
    std::size_t batch_size = 64;
    std::size_t max_epochs = 20;
    std::size_t patience = 3;
    std::uint64_t seed = 0;
    /// Training windows sampled per epoch; 0 uses all.
    std::size_t max_train_windows = 0;

    void validate() const;
    /// Index of q = 0.5, the point forecast.
    std::size_t median_index() const;
};

Json to_json(const TftConfig& cfg);
TftConfig tft_config_from_json(const Json& j);

/// Overrides keys of `base` with a tuner config (unknown keys throw InvalidConfig).
TftConfig apply_overrides(TftConfig base, const Json& overrides);

/// Model hyperparameter space: hidden_size, num_heads, learning_rate, dropout, encoder_length.
tpe::SearchSpace model_param_space();

/// Which columns feed which TFT input. Known inputs with a nonzero
/// cardinality are categorical codes fed through embedding tables.
struct FeatureLayout {
    std::vector<std::string> static_names;
    std::vector<std::string> observed_names;
    std::vector<std::string> known_names;
    std::vector<std::size_t> known_cardinality;
    std::string target_name = "target";

    std::size_t past_count() const { return observed_names.size() + known_names.size() + 1; }
    void validate() const;
};

Json to_json(const FeatureLayout& layout);
FeatureLayout layout_from_json(const Json& j);

} // namespace windcast::tft
