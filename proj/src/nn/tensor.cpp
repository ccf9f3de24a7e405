#include "windcast/nn/tensor.hpp"

#include <algorithm>

#include "windcast/common/error.hpp"

namespace windcast::nn {

std::size_t shape_size(const Shape& shape) noexcept {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

std::string to_string(const Shape& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> values) : shape_(std::move(shape)), data_(std::move(values)) {
    if (data_.size() != shape_size(shape_)) {
        throw Error(ErrorKind::ShapeMismatch, "tensor of shape " + to_string(shape_) + " given " +
                                                  std::to_string(data_.size()) + " values");
    }
}

std::size_t Tensor::dim(std::size_t axis) const {
    if (axis >= shape_.size()) {
        throw Error(ErrorKind::ShapeMismatch,
                    "axis " + std::to_string(axis) + " out of range for " + to_string(shape_));
    }
    return shape_[axis];
}

double Tensor::item() const {
    if (data_.size() != 1) {
        throw Error(ErrorKind::NonScalarLoss, "item() on tensor of shape " + to_string(shape_));
    }
    return data_[0];
}

Tensor Tensor::reshaped(Shape shape) const {
    if (shape_size(shape) != data_.size()) {
        throw Error(ErrorKind::ShapeMismatch,
                    "cannot reshape " + to_string(shape_) + " to " + to_string(shape));
    }
    return Tensor(std::move(shape), data_);
}

void Tensor::fill(double value) noexcept { std::fill(data_.begin(), data_.end(), value); }

} // namespace windcast::nn
