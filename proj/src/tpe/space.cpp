#include "windcast/tpe/space.hpp"

#include <cmath>
#include <set>

#include "windcast/common/error.hpp"

namespace windcast::tpe {

const char* to_string(ParamKind kind) {
    switch (kind) {
    case ParamKind::Uniform: return "uniform";
    case ParamKind::LogUniform: return "log_uniform";
    case ParamKind::IntUniform: return "int_uniform";
    case ParamKind::Categorical: return "categorical";
    }
    return "?";
}

ParamSpec ParamSpec::uniform(std::string name, double lo, double hi) {
    return ParamSpec{std::move(name), ParamKind::Uniform, lo, hi, {}};
}

ParamSpec ParamSpec::log_uniform(std::string name, double lo, double hi) {
    return ParamSpec{std::move(name), ParamKind::LogUniform, lo, hi, {}};
}

ParamSpec ParamSpec::int_uniform(std::string name, long lo, long hi) {
    return ParamSpec{std::move(name), ParamKind::IntUniform, static_cast<double>(lo), static_cast<double>(hi), {}};
}

ParamSpec ParamSpec::categorical(std::string name, std::vector<Json> choices) {
    ParamSpec p{std::move(name), ParamKind::Categorical, 0.0, 0.0, std::move(choices)};
    p.hi = static_cast<double>(p.choices.size());
    return p;
}

void SearchSpace::validate() const {
    std::set<std::string> names;
    for (const auto& p : params) {
        if (!names.insert(p.name).second) throw Error(ErrorKind::InvalidConfig, "duplicate parameter '" + p.name + "'");
        switch (p.kind) {
        case ParamKind::Categorical:
            if (p.choices.empty()) throw Error(ErrorKind::InvalidConfig, "parameter '" + p.name + "' has no choices");
            break;
        case ParamKind::LogUniform:
            if (!(p.lo > 0.0)) throw Error(ErrorKind::InvalidConfig, "log-uniform parameter '" + p.name + "' needs lo > 0");
            [[fallthrough]];
        default:
            if (!(p.lo < p.hi)) throw Error(ErrorKind::InvalidConfig, "parameter '" + p.name + "' needs lo < hi");
            if (p.kind == ParamKind::IntUniform && (p.lo != std::floor(p.lo) || p.hi != std::floor(p.hi))) {
                throw Error(ErrorKind::InvalidConfig, "integer parameter '" + p.name + "' needs integral bounds");
            }
        }
    }
}

const ParamSpec* SearchSpace::find(const std::string& name) const {
    for (const auto& p : params) {
        if (p.name == name) return &p;
    }
    return nullptr;
}

std::size_t choice_index(const ParamSpec& spec, const Json& value) {
    for (std::size_t i = 0; i < spec.choices.size(); ++i) {
        if (spec.choices[i] == value) return i;
    }
    return std::string::npos;
}

bool contains(const SearchSpace& space, const Config& config) {
    if (!config.is_object()) return false;
    for (const auto& p : space.params) {
        if (!config.contains(p.name)) return false;
        const Json& v = config[p.name];
        switch (p.kind) {
        case ParamKind::Categorical:
            if (choice_index(p, v) == std::string::npos) return false;
            break;
        case ParamKind::IntUniform:
            if (!v.is_number_integer()) return false;
            if (v.get<double>() < p.lo || v.get<double>() > p.hi) return false;
            break;
        default:
            if (!v.is_number()) return false;
            if (v.get<double>() < p.lo || v.get<double>() > p.hi) return false;
        }
    }
    return true;
}

Json to_json(const ParamSpec& spec) {
    Json j;
    j["name"] = spec.name;
    j["kind"] = to_string(spec.kind);
    if (spec.kind == ParamKind::Categorical) {
        j["choices"] = spec.choices;
    } else if (spec.kind == ParamKind::IntUniform) {
        j["lo"] = static_cast<long>(spec.lo);
        j["hi"] = static_cast<long>(spec.hi);
    } else {
        j["lo"] = spec.lo;
        j["hi"] = spec.hi;
    }
    return j;
}

ParamSpec param_from_json(const Json& j) {
    try {
        const auto name = j.at("name").get<std::string>();
        const auto kind = j.at("kind").get<std::string>();
        if (kind == "uniform") return ParamSpec::uniform(name, j.at("lo").get<double>(), j.at("hi").get<double>());
        if (kind == "log_uniform") return ParamSpec::log_uniform(name, j.at("lo").get<double>(), j.at("hi").get<double>());
        if (kind == "int_uniform") return ParamSpec::int_uniform(name, j.at("lo").get<long>(), j.at("hi").get<long>());
        if (kind == "categorical") return ParamSpec::categorical(name, j.at("choices").get<std::vector<Json>>());
        throw Error(ErrorKind::InvalidConfig, "parameter '" + name + "': unknown kind '" + kind + "'");
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::InvalidConfig, std::string("parameter spec: ") + e.what());
    }
}

Json to_json(const SearchSpace& space) {
    Json arr = Json::array();
    for (const auto& p : space.params) arr.push_back(to_json(p));
    return arr;
}

SearchSpace space_from_json(const Json& j) {
    if (!j.is_array()) throw Error(ErrorKind::InvalidConfig, "search space must be a JSON array of parameters");
    SearchSpace s;
    for (const auto& p : j) s.params.push_back(param_from_json(p));
    s.validate();
    return s;
}

} // namespace windcast::tpe
