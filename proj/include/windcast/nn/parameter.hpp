#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <string_view>
#include <vector>

#include "windcast/nn/tensor.hpp"

namespace windcast::nn {

/// A trainable tensor with its gradient and Adam moment buffers.
struct Parameter {
    Parameter(std::string name, Tensor init);

    std::string name;
    Tensor value;
    Tensor grad;
    Tensor adam_m;
    Tensor adam_v;
    std::int64_t step = 0;

    void zero_grad() noexcept { grad.fill(0.0); }
};

/// Owns parameters at stable addresses; layers keep raw pointers into it.
class ParameterStore {
public:
    ParameterStore() = default;
    ParameterStore(const ParameterStore&) = delete;
    ParameterStore& operator=(const ParameterStore&) = delete;

    Parameter& add(std::string name, Tensor init);

    Parameter* find(std::string_view name);
    const Parameter* find(std::string_view name) const;

    std::deque<Parameter>& all() noexcept { return params_; }
    const std::deque<Parameter>& all() const noexcept { return params_; }
    std::size_t size() const noexcept { return params_.size(); }
    std::size_t scalar_count() const noexcept;

    void zero_grad() noexcept;

    std::vector<Tensor> snapshot() const;
    void restore(const std::vector<Tensor>& values);

    /// Copies values (not optimizer state) from a store with identical layout.
    void copy_values_from(const ParameterStore& other);

private:
    std::deque<Parameter> params_;
};

} // namespace windcast::nn
