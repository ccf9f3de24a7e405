#pragma once

#include <optional>
#include <string>
#include <vector>

#include "windcast/nn/layers.hpp"

namespace windcast::tft {

using nn::ForwardMode;
using nn::ParameterStore;
using nn::Tape;
using nn::Var;

/// sigmoid(W4 g + b4) * (W5 g + b5).
struct Glu {
    nn::Linear gate;    // W4, b4
    nn::Linear value;   // W5, b5

    static Glu create(ParameterStore& store, const std::string& name, std::size_t in, std::size_t out, Rng& rng);
    Var operator()(Tape& tape, Var x) const;
};

/// Gated residual network:
///   eta2 = ELU(W2 a + W3 c + b2), eta1 = W1 eta2 + b1,
///   out  = LayerNorm(a' + GLU(eta1)),
/// with a' a linear projection of a when in != out.
struct Grn {
    nn::Linear w2;
    std::optional<nn::Linear> w3;   // context, no bias
    nn::Linear w1;
    Glu glu;
    std::optional<nn::Linear> skip;
    nn::LayerNormLayer norm;
    std::size_t in = 0, out = 0;

    static Grn create(ParameterStore& store, const std::string& name, std::size_t in, std::size_t hidden,
                      std::size_t out, std::size_t context, Rng& rng);

    /// A context of rank one less than `a` is broadcast over the time axis.
    Var operator()(Tape& tape, Var a, std::optional<Var> context, const ForwardMode& mode) const;
};

struct SelectionResult {
    Var combined;   // [..., d]
    Var weights;    // [..., m_x]
};

/// Softmax-weighted combination of per-variable GRN outputs.
struct VariableSelection {
    Grn weight_grn;
    std::vector<Grn> var_grns;
    std::size_t d = 0;

    static VariableSelection create(ParameterStore& store, const std::string& name, std::size_t count,
                                    std::size_t d, std::size_t context, Rng& rng);

    SelectionResult operator()(Tape& tape, const std::vector<Var>& features, std::optional<Var> context,
                               const ForwardMode& mode) const;
};

struct StaticContexts {
    Var selection;    // c_s
    Var enrichment;   // c_e
    Var state_h;      // c_h
    Var state_c;      // c_c
};

struct StaticEncoders {
    Grn cs, ce, ch, cc;

    static StaticEncoders create(ParameterStore& store, const std::string& name, std::size_t d, Rng& rng);
    StaticContexts operator()(Tape& tape, Var static_combined, const ForwardMode& mode) const;
};

/// LayerNorm(skip + GLU(x)), the gated skip connection.
struct GateAddNorm {
    Glu glu;
    nn::LayerNormLayer norm;

    static GateAddNorm create(ParameterStore& store, const std::string& name, std::size_t d, Rng& rng);
    Var operator()(Tape& tape, Var x, Var skip, const ForwardMode& mode) const;
};

/// Encoder LSTM over the past, decoder LSTM over the future seeded with the
/// encoder's final state, then a gated skip against the inputs.
struct Seq2Seq {
    nn::LstmWeights encoder;
    nn::LstmWeights decoder;
    GateAddNorm gate;

    static Seq2Seq create(ParameterStore& store, const std::string& name, std::size_t d, Rng& rng);
    Var operator()(Tape& tape, Var past, Var future, Var c_h, Var c_c, const ForwardMode& mode) const;
};

struct AttentionResult {
    Var output;    // [B, T, d]
    Var weights;   // [B, T, T], head-averaged
};

/// Heads keep separate query/key projections and share one value
/// projection; score matrices are averaged over heads before being applied.
struct InterpretableAttention {
    std::vector<nn::Linear> queries;
    std::vector<nn::Linear> keys;
    nn::Linear value;
    nn::Linear output;
    std::size_t d = 0, heads = 0, d_attn = 0;

    static InterpretableAttention create(ParameterStore& store, const std::string& name, std::size_t d,
                                         std::size_t heads, Rng& rng);
    AttentionResult operator()(Tape& tape, Var q, Var k, Var v, bool causal) const;
};

/// Mean over batch, horizon and quantiles of the pinball loss.
/// pred: [B, tau, |Q|], target: [B, tau, 1].
Var quantile_loss(Var pred, Var target, const std::vector<double>& quantiles);

} // namespace windcast::tft
