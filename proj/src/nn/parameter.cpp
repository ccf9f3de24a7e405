#include "windcast/nn/parameter.hpp"

#include "windcast/common/error.hpp"

namespace windcast::nn {

Parameter::Parameter(std::string name_, Tensor init)
    : name(std::move(name_)),
      value(std::move(init)),
      grad(value.shape()),
      adam_m(value.shape()),
      adam_v(value.shape()) {}

Parameter& ParameterStore::add(std::string name, Tensor init) {
    if (find(name) != nullptr) {
        throw Error(ErrorKind::InvalidConfig, "duplicate parameter name '" + name + "'");
    }
    return params_.emplace_back(std::move(name), std::move(init));
}

Parameter* ParameterStore::find(std::string_view name) {
    for (auto& p : params_)
        if (p.name == name) return &p;
    return nullptr;
}

const Parameter* ParameterStore::find(std::string_view name) const {
    for (const auto& p : params_)
        if (p.name == name) return &p;
    return nullptr;
}

std::size_t ParameterStore::scalar_count() const noexcept {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
}

void ParameterStore::zero_grad() noexcept {
    for (auto& p : params_) p.zero_grad();
}

std::vector<Tensor> ParameterStore::snapshot() const {
    std::vector<Tensor> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.push_back(p.value);
    return out;
}

void ParameterStore::restore(const std::vector<Tensor>& values) {
    if (values.size() != params_.size()) {
        throw Error(ErrorKind::ShapeMismatch, "snapshot has " + std::to_string(values.size()) +
                                                  " tensors, store has " +
                                                  std::to_string(params_.size()));
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i].shape() != params_[i].value.shape()) {
            throw Error(ErrorKind::ShapeMismatch, "snapshot shape mismatch for " + params_[i].name);
        }
        params_[i].value = values[i];
    }
}

void ParameterStore::copy_values_from(const ParameterStore& other) {
    restore(other.snapshot());
}

} // namespace windcast::nn
