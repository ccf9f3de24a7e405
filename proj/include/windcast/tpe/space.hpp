#pragma once

#include <string>
#include <vector>

#include "windcast/common/io.hpp"

namespace windcast::tpe {

enum class ParamKind { Uniform, LogUniform, IntUniform, Categorical };

const char* to_string(ParamKind kind);

struct ParamSpec {
    std::string name;
    ParamKind kind = ParamKind::Uniform;
    double lo = 0.0;
    double hi = 1.0;
    std::vector<Json> choices;   // categorical only

    static ParamSpec uniform(std::string name, double lo, double hi);
    static ParamSpec log_uniform(std::string name, double lo, double hi);
    static ParamSpec int_uniform(std::string name, long lo, long hi);
    static ParamSpec categorical(std::string name, std::vector<Json> choices);
};

/// A configuration is a JSON object mapping parameter names to values
/// (numbers for numeric kinds, the chosen element for categoricals).
using Config = Json;

struct SearchSpace {
    std::vector<ParamSpec> params;

    /// lo < hi (lo > 0 for log-uniform), nonempty choices, unique names.
    void validate() const;
    const ParamSpec* find(const std::string& name) const;
    bool empty() const noexcept { return params.empty(); }
};

/// True when every parameter is present with a value of the right kind within bounds.
bool contains(const SearchSpace& space, const Config& config);

/// Index of a categorical value in its choice list, or npos.
std::size_t choice_index(const ParamSpec& spec, const Json& value);

Json to_json(const ParamSpec& spec);
ParamSpec param_from_json(const Json& j);
Json to_json(const SearchSpace& space);
SearchSpace space_from_json(const Json& j);

} // namespace windcast::tpe
