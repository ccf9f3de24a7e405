#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "windcast/nn/tape.hpp"

namespace windcast {
class Rng;
}

namespace windcast::nn {

// Elementwise binary ops broadcast numpy-style: shapes are right-aligned and
// each dimension must match or be 1.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);

Var scale(Var a, double factor);
Var add_scalar(Var a, double offset);

/// a: [..., K] times b: [K, M] -> [..., M]; or batched a: [L..., N, K] times
/// b: [L..., K, M] -> [L..., N, M] with identical leading dims.
Var matmul(Var a, Var b);

/// Swaps the last two axes.
Var transpose(Var a);
Var reshape(Var a, Shape shape);

Var concat(const std::vector<Var>& parts, std::size_t axis);
Var slice(Var a, std::size_t axis, std::size_t start, std::size_t length);

/// Reductions drop the reduced axis.
Var sum(Var a, std::size_t axis);
Var mean(Var a, std::size_t axis);
Var sum_all(Var a);
Var mean_all(Var a);

Var elu(Var a);
Var sigmoid(Var a);
Var tanh(Var a);
Var relu(Var a);

/// Over the last axis.
Var softmax(Var a);

/// Normalizes over the last axis (epsilon 1e-5), then applies gain and bias
/// of shape [last_dim].
Var layer_norm(Var x, Var gain, Var bias);

inline constexpr double kLayerNormEpsilon = 1e-5;

/// Inverted dropout: survivors are scaled by 1/(1 - rate). Identity when
/// not training or rate == 0.
Var dropout(Var x, double rate, bool training, Rng& rng);

/// Gathers rows of table [V, D]; output shape is leading + [D].
Var embedding(Var table, std::span<const std::size_t> indices, const Shape& leading);

} // namespace windcast::nn
