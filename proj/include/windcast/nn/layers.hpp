#pragma once

#include <cstddef>
#include <string>
#include <utility>

#include "windcast/nn/ops.hpp"
#include "windcast/nn/parameter.hpp"
#include "windcast/nn/tape.hpp"

namespace windcast {
class Rng;
}

namespace windcast::nn {

/// Training flag and dropout source threaded through a forward pass.
struct ForwardMode {
    bool training = false;
    double dropout = 0.0;
    Rng* rng = nullptr;
};

Var apply_dropout(Var x, const ForwardMode& mode);

/// Glorot-uniform tensor in +-sqrt(6 / (fan_in + fan_out)).
Tensor glorot_uniform(const Shape& shape, std::size_t fan_in, std::size_t fan_out, Rng& rng);

/// y = x W + b over the last axis. W: [in, out], b: [out].
struct Linear {
    Parameter* weight = nullptr;
    Parameter* bias = nullptr;
    std::size_t in = 0;
    std::size_t out = 0;

    static Linear create(ParameterStore& store, const std::string& name, std::size_t in,
                         std::size_t out, Rng& rng, bool with_bias = true);

    Var operator()(Tape& tape, Var x) const;
};

struct LayerNormLayer {
    Parameter* gain = nullptr;
    Parameter* bias = nullptr;

    static LayerNormLayer create(ParameterStore& store, const std::string& name, std::size_t dim);

    Var operator()(Tape& tape, Var x) const;
};

struct EmbeddingTable {
    Parameter* table = nullptr;

    static EmbeddingTable create(ParameterStore& store, const std::string& name,
                                 std::size_t rows, std::size_t dim, Rng& rng);
};

/// Weights of one LSTM layer, gate order (input, forget, candidate, output).
/// w_input: [in, 4H], w_hidden: [H, 4H], bias: [4H] with the forget slice at 1.0.
struct LstmWeights {
    Parameter* w_input = nullptr;
    Parameter* w_hidden = nullptr;
    Parameter* bias = nullptr;
    std::size_t input_size = 0;
    std::size_t hidden_size = 0;

    static LstmWeights create(ParameterStore& store, const std::string& name,
                              std::size_t input_size, std::size_t hidden_size, Rng& rng);
};

struct LstmState {
    Var h;
    Var c;
};

/// One step: x [B, in], h_prev/c_prev [B, H].
LstmState lstm_cell(Tape& tape, Var x, Var h_prev, Var c_prev, const LstmWeights& w);

/// Same as lstm_cell with the input projection x W_input + b precomputed, [B, 4H].
LstmState lstm_cell_projected(Tape& tape, Var x_projected, Var h_prev, Var c_prev,
                              const LstmWeights& w);

/// Runs the cell over x_seq [B, T, in]; returns hidden states [B, T, H] and the final state.
std::pair<Var, LstmState> lstm_sequence(Tape& tape, Var x_seq, LstmState init, const LstmWeights& w);

} // namespace windcast::nn
