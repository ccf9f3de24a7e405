#include "windcast/nn/layers.hpp"

#include <cmath>

#include "windcast/common/error.hpp"
#include "windcast/common/rng.hpp"

namespace windcast::nn {

Var apply_dropout(Var x, const ForwardMode& mode) {
    if (!mode.training || mode.dropout <= 0.0) return x;
    if (mode.rng == nullptr) throw Error(ErrorKind::InvalidConfig, "training forward pass without an rng");
    return dropout(x, mode.dropout, true, *mode.rng);
}

Tensor glorot_uniform(const Shape& shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(std::max<std::size_t>(fan_in + fan_out, 1)));
    Tensor t(shape);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-limit, limit);
    return t;
}

Linear Linear::create(ParameterStore& store, const std::string& name, std::size_t in,
                      std::size_t out, Rng& rng, bool with_bias) {
    Linear l;
    l.in = in;
    l.out = out;
    l.weight = &store.add(name + ".weight", glorot_uniform({in, out}, in, out, rng));
    if (with_bias) l.bias = &store.add(name + ".bias", Tensor({out}));
    return l;
}

Var Linear::operator()(Tape& tape, Var x) const {
    if (x.value().rank() == 0 || x.shape().back() != in) {
        throw Error(ErrorKind::ShapeMismatch, weight->name + " expects trailing dim " +
                                                  std::to_string(in) + ", got " + to_string(x.shape()));
    }
    Var y = matmul(x, tape.parameter(*weight));
    if (bias != nullptr) y = add(y, tape.parameter(*bias));
    return y;
}

LayerNormLayer LayerNormLayer::create(ParameterStore& store, const std::string& name, std::size_t dim) {
    LayerNormLayer l;
    l.gain = &store.add(name + ".gain", Tensor({dim}, 1.0));
    l.bias = &store.add(name + ".bias", Tensor({dim}));
    return l;
}

Var LayerNormLayer::operator()(Tape& tape, Var x) const {
    return layer_norm(x, tape.parameter(*gain), tape.parameter(*bias));
}

EmbeddingTable EmbeddingTable::create(ParameterStore& store, const std::string& name,
                                      std::size_t rows, std::size_t dim, Rng& rng) {
    EmbeddingTable e;
    e.table = &store.add(name + ".table", glorot_uniform({rows, dim}, rows, dim, rng));
    return e;
}

LstmWeights LstmWeights::create(ParameterStore& store, const std::string& name,
                                std::size_t input_size, std::size_t hidden_size, Rng& rng) {
    LstmWeights w;
    w.input_size = input_size;
    w.hidden_size = hidden_size;
    const std::size_t g = 4 * hidden_size;
    w.w_input = &store.add(name + ".w_input", glorot_uniform({input_size, g}, input_size, g, rng));
    w.w_hidden = &store.add(name + ".w_hidden", glorot_uniform({hidden_size, g}, hidden_size, g, rng));
    Tensor b({g});
    for (std::size_t j = hidden_size; j < 2 * hidden_size; ++j) b[j] = 1.0;
    w.bias = &store.add(name + ".bias", std::move(b));
    return w;
}

LstmState lstm_cell_projected(Tape& tape, Var x_projected, Var h_prev, Var c_prev, const LstmWeights& w) {
    const std::size_t H = w.hidden_size;
    const Shape& hs = h_prev.shape();
    if (hs.size() != 2 || hs[1] != H || c_prev.shape() != hs || x_projected.shape().size() != 2 ||
        x_projected.shape()[0] != hs[0] || x_projected.shape()[1] != 4 * H) {
        throw Error(ErrorKind::ShapeMismatch, "lstm_cell: projected input " + to_string(x_projected.shape()) +
                                                  ", h " + to_string(hs) + ", c " + to_string(c_prev.shape()) +
                                                  " for hidden size " + std::to_string(H));
    }
    Var gates = add(x_projected, matmul(h_prev, tape.parameter(*w.w_hidden)));
    Var i = sigmoid(slice(gates, 1, 0, H));
    Var f = sigmoid(slice(gates, 1, H, H));
    Var g = tanh(slice(gates, 1, 2 * H, H));
    Var o = sigmoid(slice(gates, 1, 3 * H, H));
    Var c = add(mul(f, c_prev), mul(i, g));
    Var h = mul(o, tanh(c));
    return {h, c};
}

LstmState lstm_cell(Tape& tape, Var x, Var h_prev, Var c_prev, const LstmWeights& w) {
    if (x.shape().size() != 2 || x.shape()[1] != w.input_size) {
        throw Error(ErrorKind::ShapeMismatch, "lstm_cell: input " + to_string(x.shape()) +
                                                  " for input size " + std::to_string(w.input_size));
    }
    Var proj = add(matmul(x, tape.parameter(*w.w_input)), tape.parameter(*w.bias));
    return lstm_cell_projected(tape, proj, h_prev, c_prev, w);
}

std::pair<Var, LstmState> lstm_sequence(Tape& tape, Var x_seq, LstmState init, const LstmWeights& w) {
    const Shape& s = x_seq.shape();
    if (s.size() != 3 || s[2] != w.input_size) {
        throw Error(ErrorKind::ShapeMismatch, "lstm_sequence: input " + to_string(s) +
                                                  " for input size " + std::to_string(w.input_size));
    }
    const std::size_t B = s[0], T = s[1], G = 4 * w.hidden_size;
    Var proj = add(matmul(x_seq, tape.parameter(*w.w_input)), tape.parameter(*w.bias));
    LstmState state = init;
    std::vector<Var> outputs;
    outputs.reserve(T);
    for (std::size_t t = 0; t < T; ++t) {
        Var xt = reshape(slice(proj, 1, t, 1), {B, G});
        state = lstm_cell_projected(tape, xt, state.h, state.c, w);
        outputs.push_back(reshape(state.h, {B, 1, w.hidden_size}));
    }
    return {concat(outputs, 1), state};
}

} // namespace windcast::nn
