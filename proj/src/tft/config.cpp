#include "windcast/tft/config.hpp"

#include <cmath>
#include <set>

#include "windcast/common/error.hpp"

namespace windcast::tft {

namespace {

std::size_t get_count(const Json& v, const std::string& key) {
    if (!v.is_number() || v.get<double>() < 0 || v.get<double>() != std::floor(v.get<double>())) {
        throw Error(ErrorKind::InvalidConfig, "'" + key + "' must be a non-negative integer, got " + v.dump());
    }
    return static_cast<std::size_t>(v.get<double>());
}

double get_real(const Json& v, const std::string& key) {
    if (!v.is_number()) throw Error(ErrorKind::InvalidConfig, "'" + key + "' must be a number, got " + v.dump());
    return v.get<double>();
}

void apply_key(TftConfig& c, const std::string& key, const Json& v) {
    if (key == "hidden_size") c.hidden_size = get_count(v, key);
    else if (key == "num_heads") c.num_heads = get_count(v, key);
    else if (key == "encoder_length") c.encoder_length = get_count(v, key);
    else if (key == "horizon") c.horizon = get_count(v, key);
    else if (key == "quantiles") {
        if (!v.is_array()) throw Error(ErrorKind::InvalidConfig, "'quantiles' must be an array");
        c.quantiles.clear();
        for (const auto& q : v) c.quantiles.push_back(get_real(q, key));
    } else if (key == "dropout") c.dropout = get_real(v, key);
    else if (key == "learning_rate") c.learning_rate = get_real(v, key);
    else if (key == "batch_size") c.batch_size = get_count(v, key);
    else if (key == "max_epochs") c.max_epochs = get_count(v, key);
    else if (key == "patience") c.patience = get_count(v, key);
    else if (key == "seed") c.seed = get_count(v, key);
    else if (key == "max_train_windows") c.max_train_windows = get_count(v, key);
    else throw Error(ErrorKind::InvalidConfig, "unknown TFT parameter '" + key + "'");
}

} // namespace

void TftConfig::validate() const {
    if (hidden_size < 1) throw Error(ErrorKind::InvalidConfig, "hidden_size must be >= 1");
    if (num_heads < 1 || hidden_size % num_heads != 0) {
        throw Error(ErrorKind::InvalidConfig, "hidden_size " + std::to_string(hidden_size) +
                                                  " is not divisible by num_heads " + std::to_string(num_heads));
    }
    if (encoder_length < 1 || horizon < 1) throw Error(ErrorKind::InvalidConfig, "encoder_length and horizon must be >= 1");
    if (quantiles.empty()) throw Error(ErrorKind::InvalidConfig, "quantiles must not be empty");
    for (std::size_t i = 0; i < quantiles.size(); ++i) {
        if (!(quantiles[i] > 0.0 && quantiles[i] < 1.0)) throw Error(ErrorKind::InvalidConfig, "quantiles must lie in (0, 1)");
        if (i > 0 && !(quantiles[i] > quantiles[i - 1])) {
            throw Error(ErrorKind::InvalidConfig, "quantiles must be strictly ascending");
        }
    }
    median_index();
    if (!(dropout >= 0.0 && dropout < 1.0)) throw Error(ErrorKind::InvalidConfig, "dropout must lie in [0, 1)");
    if (!(learning_rate > 0.0)) throw Error(ErrorKind::InvalidConfig, "learning_rate must be positive");
    if (batch_size < 1) throw Error(ErrorKind::InvalidConfig, "batch_size must be >= 1");
}

std::size_t TftConfig::median_index() const {
    for (std::size_t i = 0; i < quantiles.size(); ++i) {
        if (quantiles[i] == 0.5) return i;
    }
    throw Error(ErrorKind::InvalidConfig, "quantiles must include 0.5 for the point forecast");
}

Json to_json(const TftConfig& c) {
    return Json{{"hidden_size", c.hidden_size},     {"num_heads", c.num_heads},
                {"encoder_length", c.encoder_length}, {"horizon", c.horizon},
                {"quantiles", c.quantiles},         {"dropout", c.dropout},
                {"learning_rate", c.learning_rate}, {"batch_size", c.batch_size},
                {"max_epochs", c.max_epochs},       {"patience", c.patience},
                {"seed", c.seed},                   {"max_train_windows", c.max_train_windows}};
}

TftConfig tft_config_from_json(const Json& j) {
    if (!j.is_object()) throw Error(ErrorKind::InvalidConfig, "TFT config must be a JSON object");
    TftConfig c = apply_overrides(TftConfig{}, j);
    return c;
}

TftConfig apply_overrides(TftConfig base, const Json& overrides) {
    if (!overrides.is_object()) throw Error(ErrorKind::InvalidConfig, "TFT overrides must be a JSON object");
    for (const auto& [key, value] : overrides.items()) apply_key(base, key, value);
    base.validate();
    return base;
}

tpe::SearchSpace model_param_space() {
    using tpe::ParamSpec;
    return tpe::SearchSpace{{ParamSpec::categorical("hidden_size", {8, 16, 32}),
                             ParamSpec::categorical("num_heads", {1, 2, 4}),
                             ParamSpec::log_uniform("learning_rate", 1e-3, 1e-2),
                             ParamSpec::uniform("dropout", 0.0, 0.3),
                             ParamSpec::categorical("encoder_length", {24, 48, 72})}};
}

void FeatureLayout::validate() const {
    if (known_cardinality.size() != known_names.size()) {
        throw Error(ErrorKind::InvalidConfig, "known_cardinality must list one entry per known input");
    }
    std::set<std::string> names{target_name};
    for (const auto* group : {&static_names, &observed_names, &known_names}) {
        for (const auto& n : *group) {
            if (!names.insert(n).second) throw Error(ErrorKind::InvalidConfig, "feature '" + n + "' listed twice");
        }
    }
    if (known_names.empty()) {
        throw Error(ErrorKind::EmptyFeatureList, "the TFT needs at least one known-future input for the decoder");
    }
}

Json to_json(const FeatureLayout& l) {
    return Json{{"static", l.static_names},
                {"observed", l.observed_names},
                {"known", l.known_names},
                {"known_cardinality", l.known_cardinality},
                {"target", l.target_name}};
}

FeatureLayout layout_from_json(const Json& j) {
    FeatureLayout l;
    try {
        l.static_names = j.at("static").get<std::vector<std::string>>();
        l.observed_names = j.at("observed").get<std::vector<std::string>>();
        l.known_names = j.at("known").get<std::vector<std::string>>();
        l.known_cardinality = j.at("known_cardinality").get<std::vector<std::size_t>>();
        l.target_name = j.at("target").get<std::string>();
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::InvalidConfig, std::string("feature layout: ") + e.what());
    }
    l.validate();
    return l;
}

} // namespace windcast::tft
