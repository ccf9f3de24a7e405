#pragma once

#include <cstddef>
#include <functional>
#include <deque>
#include <unordered_map>
#include <vector>

#include "windcast/nn/parameter.hpp"
#include "windcast/nn/tensor.hpp"

namespace windcast::nn {

class Tape;

/// Handle to a node recorded on a Tape.
class Var {
public:
    Var() = default;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    bool valid() const noexcept { return tape_ != nullptr; }
    Tape& tape() const noexcept { return *tape_; }
    std::size_t id() const noexcept { return id_; }

    const Tensor& value() const;
    const Shape& shape() const { return value().shape(); }
    std::size_t dim(std::size_t axis) const { return value().dim(axis); }

private:
    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

/// Records primitive operations in execution order. backward() walks the
/// record in reverse, so every node is visited once after all its consumers.
/// Node gradients are rebuilt on each backward() call; parameter gradients
/// accumulate until explicitly zeroed.
class Tape {
public:
    /// Receives the tape and the id of the node whose gradient is ready.
    using BackwardFn = std::function<void(Tape&, std::size_t)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Tensor value);
    /// A leaf that receives a gradient but is not bound to a Parameter.
    Var variable(Tensor value);
    /// Leaf bound to a parameter; repeated calls return the same node.
    Var parameter(Parameter& p);

    /// Registers an op result. The backward function is dropped when no input
    /// requires a gradient.
    Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward);
    Var record(Tensor value, const std::vector<Var>& inputs, BackwardFn backward);

    void backward(Var loss);

    const Tensor& value(std::size_t id) const { return nodes_[id].value; }
    bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
    /// Upstream gradient of a node during backward.
    const Tensor& grad(std::size_t id) const { return nodes_[id].grad; }
    /// Gradient buffer for an input, allocated on first use; null when the
    /// node needs no gradient.
    double* grad_sink(std::size_t id);

    /// Gradient of a leaf after backward(); zero tensor when never reached.
    Tensor grad_of(Var v) const;

    std::size_t size() const noexcept { return nodes_.size(); }
    void clear();

private:
    struct Node {
        Tensor value;
        Tensor grad;
        BackwardFn backward;
        Parameter* param = nullptr;
        bool requires_grad = false;
    };

    Var push(Node node);

    std::deque<Node> nodes_;
    std::unordered_map<const Parameter*, std::size_t> param_nodes_;
};

} // namespace windcast::nn
