#include "windcast/nn/tape.hpp"

#include "windcast/common/error.hpp"

namespace windcast::nn {

const Tensor& Var::value() const { return tape_->value(id_); }

Var Tape::push(Node node) {
    nodes_.push_back(std::move(node));
    return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
    Node n;
    n.value = std::move(value);
    return push(std::move(n));
}

Var Tape::variable(Tensor value) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = true;
    return push(std::move(n));
}

Var Tape::parameter(Parameter& p) {
    if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var(this, it->second);
    Node n;
    n.value = p.value;
    n.param = &p;
    n.requires_grad = true;
    Var v = push(std::move(n));
    param_nodes_.emplace(&p, v.id());
    return v;
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward) {
    Node n;
    n.value = std::move(value);
    for (const Var& in : inputs) {
        if (&in.tape() != this) {
            throw Error(ErrorKind::ShapeMismatch, "operands recorded on different tapes");
        }
        n.requires_grad = n.requires_grad || nodes_[in.id()].requires_grad;
    }
    if (n.requires_grad) n.backward = std::move(backward);
    return push(std::move(n));
}

Var Tape::record(Tensor value, const std::vector<Var>& inputs, BackwardFn backward) {
    Node n;
    n.value = std::move(value);
    for (const Var& in : inputs) {
        if (&in.tape() != this) {
            throw Error(ErrorKind::ShapeMismatch, "operands recorded on different tapes");
        }
        n.requires_grad = n.requires_grad || nodes_[in.id()].requires_grad;
    }
    if (n.requires_grad) n.backward = std::move(backward);
    return push(std::move(n));
}

double* Tape::grad_sink(std::size_t id) {
    Node& n = nodes_[id];
    if (!n.requires_grad) return nullptr;
    if (n.grad.size() != n.value.size()) n.grad = Tensor(n.value.shape());
    return n.grad.data();
}

void Tape::backward(Var loss) {
    if (&loss.tape() != this) throw Error(ErrorKind::NonScalarLoss, "loss is not on this tape");
    Node& root = nodes_[loss.id()];
    if (root.value.size() != 1) {
        throw Error(ErrorKind::NonScalarLoss, "backward() needs a scalar loss, got shape " +
                                                  to_string(root.value.shape()));
    }
    for (auto& n : nodes_) n.grad = Tensor();
    if (!root.requires_grad) return;
    root.grad = Tensor(root.value.shape(), 1.0);

    for (std::size_t i = loss.id() + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (!n.requires_grad || n.grad.empty() || !n.backward) continue;
        n.backward(*this, i);
    }
    for (auto& n : nodes_) {
        if (n.param == nullptr || n.grad.empty()) continue;
        double* dst = n.param->grad.data();
        const double* src = n.grad.data();
        for (std::size_t k = 0; k < n.grad.size(); ++k) dst[k] += src[k];
    }
}

Tensor Tape::grad_of(Var v) const {
    const Node& n = nodes_[v.id()];
    if (n.grad.size() == n.value.size()) return n.grad;
    return Tensor(n.value.shape());
}

void Tape::clear() {
    nodes_.clear();
    param_nodes_.clear();
}

} // namespace windcast::nn
