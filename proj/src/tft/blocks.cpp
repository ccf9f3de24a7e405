#include "windcast/tft/blocks.hpp"

#include <cmath>

#include "windcast/common/error.hpp"

namespace windcast::tft {

namespace {

// [B, c] -> [B, 1, c] so it broadcasts against [B, T, c].
Var broadcast_time(Var context, std::size_t target_rank) {
    if (context.value().rank() + 1 != target_rank) return context;
    nn::Shape s = context.shape();
    s.insert(s.begin() + 1, 1);
    return nn::reshape(context, s);
}

} // namespace

Glu Glu::create(ParameterStore& store, const std::string& name, std::size_t in, std::size_t out, Rng& rng) {
    return Glu{nn::Linear::create(store, name + ".gate", in, out, rng),
               nn::Linear::create(store, name + ".value", in, out, rng)};
}

Var Glu::operator()(Tape& tape, Var x) const { return nn::mul(nn::sigmoid(gate(tape, x)), value(tape, x)); }

Grn Grn::create(ParameterStore& store, const std::string& name, std::size_t in, std::size_t hidden,
                std::size_t out, std::size_t context, Rng& rng) {
    Grn g;
    g.in = in;
    g.out = out;
    g.w2 = nn::Linear::create(store, name + ".w2", in, hidden, rng);
    if (context > 0) g.w3 = nn::Linear::create(store, name + ".w3", context, hidden, rng, false);
    g.w1 = nn::Linear::create(store, name + ".w1", hidden, hidden, rng);
    g.glu = Glu::create(store, name + ".glu", hidden, out, rng);
    if (in != out) g.skip = nn::Linear::create(store, name + ".skip", in, out, rng);
    g.norm = nn::LayerNormLayer::create(store, name + ".norm", out);
    return g;
}

Var Grn::operator()(Tape& tape, Var a, std::optional<Var> context, const ForwardMode& mode) const {
    Var pre = w2(tape, a);
    if (context && w3) pre = nn::add(pre, broadcast_time((*w3)(tape, *context), a.value().rank()));
    const Var eta2 = nn::elu(pre);
    const Var eta1 = nn::apply_dropout(w1(tape, eta2), mode);
    const Var residual = skip ? (*skip)(tape, a) : a;
    return norm(tape, nn::add(residual, glu(tape, eta1)));
}

VariableSelection VariableSelection::create(ParameterStore& store, const std::string& name, std::size_t count,
                                            std::size_t d, std::size_t context, Rng& rng) {
    if (count == 0) throw Error(ErrorKind::EmptyFeatureList, name + ": variable selection needs at least one input");
    VariableSelection v;
    v.d = d;
    v.weight_grn = Grn::create(store, name + ".weights", count * d, d, count, context, rng);
    for (std::size_t i = 0; i < count; ++i) {
        v.var_grns.push_back(Grn::create(store, name + ".var" + std::to_string(i), d, d, d, 0, rng));
    }
    return v;
}

SelectionResult VariableSelection::operator()(Tape& tape, const std::vector<Var>& features,
                                              std::optional<Var> context, const ForwardMode& mode) const {
    if (features.empty()) throw Error(ErrorKind::EmptyFeatureList, "variable selection called with no inputs");
    if (features.size() != var_grns.size()) {
        throw Error(ErrorKind::ShapeMismatch, "variable selection expects " + std::to_string(var_grns.size()) +
                                                  " inputs, got " + std::to_string(features.size()));
    }
    const nn::Shape& shape = features[0].shape();
    for (const auto& f : features) {
        if (f.shape() != shape) {
            throw Error(ErrorKind::ShapeMismatch, "variable selection inputs differ: " + nn::to_string(shape) +
                                                      " vs " + nn::to_string(f.shape()));
        }
    }
    const std::size_t last = shape.size() - 1;
    const Var flat = features.size() == 1 ? features[0] : nn::concat(features, last);
    const Var weights = nn::softmax(weight_grn(tape, flat, context, mode));
    Var combined;
    for (std::size_t i = 0; i < features.size(); ++i) {
        const Var term = nn::mul(nn::slice(weights, last, i, 1), var_grns[i](tape, features[i], std::nullopt, mode));
        combined = i == 0 ? term : nn::add(combined, term);
    }
    return {combined, weights};
}

StaticEncoders StaticEncoders::create(ParameterStore& store, const std::string& name, std::size_t d, Rng& rng) {
    return StaticEncoders{Grn::create(store, name + ".cs", d, d, d, 0, rng), Grn::create(store, name + ".ce", d, d, d, 0, rng),
                          Grn::create(store, name + ".ch", d, d, d, 0, rng), Grn::create(store, name + ".cc", d, d, d, 0, rng)};
}

StaticContexts StaticEncoders::operator()(Tape& tape, Var x, const ForwardMode& mode) const {
    return {cs(tape, x, std::nullopt, mode), ce(tape, x, std::nullopt, mode), ch(tape, x, std::nullopt, mode),
            cc(tape, x, std::nullopt, mode)};
}

GateAddNorm GateAddNorm::create(ParameterStore& store, const std::string& name, std::size_t d, Rng& rng) {
    return GateAddNorm{Glu::create(store, name + ".glu", d, d, rng), nn::LayerNormLayer::create(store, name + ".norm", d)};
}

Var GateAddNorm::operator()(Tape& tape, Var x, Var skip, const ForwardMode& mode) const {
    return norm(tape, nn::add(skip, glu(tape, nn::apply_dropout(x, mode))));
}

Seq2Seq Seq2Seq::create(ParameterStore& store, const std::string& name, std::size_t d, Rng& rng) {
    Seq2Seq s;
    s.encoder = nn::LstmWeights::create(store, name + ".encoder", d, d, rng);
    s.decoder = nn::LstmWeights::create(store, name + ".decoder", d, d, rng);
    s.gate = GateAddNorm::create(store, name + ".gate", d, rng);
    return s;
}

Var Seq2Seq::operator()(Tape& tape, Var past, Var future, Var c_h, Var c_c, const ForwardMode& mode) const {
    if (past.value().rank() != 3 || future.value().rank() != 3 || past.dim(0) != future.dim(0) ||
        past.dim(2) != future.dim(2)) {
        throw Error(ErrorKind::ShapeMismatch, "seq2seq inputs " + nn::to_string(past.shape()) + " and " +
                                                  nn::to_string(future.shape()) + " are incompatible");
    }
    auto [enc_out, enc_state] = nn::lstm_sequence(tape, past, nn::LstmState{c_h, c_c}, encoder);
    auto [dec_out, dec_state] = nn::lstm_sequence(tape, future, enc_state, decoder);
    (void)dec_state;
    const Var lstm_out = nn::concat({enc_out, dec_out}, 1);
    const Var inputs = nn::concat({past, future}, 1);
    return gate(tape, lstm_out, inputs, mode);
}

InterpretableAttention InterpretableAttention::create(ParameterStore& store, const std::string& name, std::size_t d,
                                                      std::size_t heads, Rng& rng) {
    if (heads == 0 || d % heads != 0) {
        throw Error(ErrorKind::ShapeMismatch, "attention width " + std::to_string(d) + " is not divisible by " +
                                                  std::to_string(heads) + " heads");
    }
    InterpretableAttention a;
    a.d = d;
    a.heads = heads;
    a.d_attn = d / heads;
    for (std::size_t h = 0; h < heads; ++h) {
        a.queries.push_back(nn::Linear::create(store, name + ".q" + std::to_string(h), d, a.d_attn, rng, false));
        a.keys.push_back(nn::Linear::create(store, name + ".k" + std::to_string(h), d, a.d_attn, rng, false));
    }
    a.value = nn::Linear::create(store, name + ".v", d, a.d_attn, rng, false);
    a.output = nn::Linear::create(store, name + ".out", a.d_attn, d, rng, false);
    return a;
}

AttentionResult InterpretableAttention::operator()(Tape& tape, Var q, Var k, Var v, bool causal) const {
    for (const Var* x : {&q, &k, &v}) {
        if (x->value().rank() != 3 || x->dim(2) != d) {
            throw Error(ErrorKind::ShapeMismatch, "attention expects [B, T, " + std::to_string(d) + "], got " +
                                                      nn::to_string(x->shape()));
        }
    }
    const std::size_t tq = q.dim(1), tk = k.dim(1);
    std::optional<Var> mask;
    if (causal) {
        nn::Tensor m({tq, tk});
        for (std::size_t i = 0; i < tq; ++i) {
            for (std::size_t j = i + 1; j < tk; ++j) m[i * tk + j] = -1e30;
        }
        mask = tape.constant(std::move(m));
    }
    const double scale = 1.0 / std::sqrt(static_cast<double>(d_attn));
    Var averaged;
    for (std::size_t h = 0; h < heads; ++h) {
        Var scores = nn::scale(nn::matmul(queries[h](tape, q), nn::transpose(keys[h](tape, k))), scale);
        if (mask) scores = nn::add(scores, *mask);
        const Var attn = nn::softmax(scores);
        averaged = h == 0 ? attn : nn::add(averaged, attn);
    }
    if (heads > 1) averaged = nn::scale(averaged, 1.0 / static_cast<double>(heads));
    const Var mixed = nn::matmul(averaged, value(tape, v));
    return {output(tape, mixed), averaged};
}

Var quantile_loss(Var pred, Var target, const std::vector<double>& quantiles) {
    const auto& ps = pred.shape();
    const auto& ts = target.shape();
    if (ps.size() != 3 || ts.size() != 3 || ps[0] != ts[0] || ps[1] != ts[1] || ts[2] != 1 || ps[2] != quantiles.size()) {
        throw Error(ErrorKind::ShapeMismatch, "quantile loss: prediction " + nn::to_string(ps) + " vs target " +
                                                  nn::to_string(ts) + " with " + std::to_string(quantiles.size()) +
                                                  " quantiles");
    }
    Tape& tape = pred.tape();
    const Var q = tape.constant(nn::Tensor({quantiles.size()}, quantiles));
    const Var err = nn::sub(target, pred);
    // max(q e, (q - 1) e) = q e + max(-e, 0)
    return nn::mean_all(nn::add(nn::mul(err, q), nn::relu(nn::scale(err, -1.0))));
}

} // namespace windcast::tft
