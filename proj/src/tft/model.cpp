#include "windcast/tft/model.hpp"

#include <cmath>

#include "windcast/common/error.hpp"
#include "windcast/common/rng.hpp"
#include "windcast/nn/optim.hpp"

namespace windcast::tft {

namespace {

// Column `var` of a [B, T, n] tensor restricted to steps [start, start + length), as [B, length, 1].
nn::Tensor column(const nn::Tensor& x, std::size_t var, std::size_t start, std::size_t length) {
    const std::size_t B = x.dim(0), T = x.dim(1), n = x.dim(2);
    nn::Tensor out({B, length, 1});
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t t = 0; t < length; ++t) out[b * length + t] = x[(b * T + start + t) * n + var];
    }
    return out;
}

} // namespace

TftModel::TftModel(TftConfig cfg, FeatureLayout layout)
    : cfg_(std::move(cfg)), layout_(std::move(layout)), store_(std::make_unique<nn::ParameterStore>()) {
    cfg_.validate();
    layout_.validate();
    const std::size_t d = cfg_.hidden_size;
    Rng rng(cfg_.seed);
    nn::ParameterStore& s = *store_;

    for (const auto& name : layout_.static_names) static_embed_.push_back(nn::Linear::create(s, "embed.static." + name, 1, d, rng));
    for (const auto& name : layout_.observed_names) {
        observed_embed_.push_back(nn::Linear::create(s, "embed.observed." + name, 1, d, rng));
    }
    for (std::size_t i = 0; i < layout_.known_names.size(); ++i) {
        KnownEmbedding e;
        e.cardinality = layout_.known_cardinality[i];
        const std::string name = "embed.known." + layout_.known_names[i];
        if (e.cardinality > 0) e.table = nn::EmbeddingTable::create(s, name, e.cardinality, d, rng);
        else e.linear = nn::Linear::create(s, name, 1, d, rng);
        known_embed_.push_back(std::move(e));
    }
    target_embed_ = nn::Linear::create(s, "embed.target", 1, d, rng);

    if (!layout_.static_names.empty()) {
        static_vsn_ = VariableSelection::create(s, "vsn.static", layout_.static_names.size(), d, 0, rng);
        encoders_ = StaticEncoders::create(s, "static", d, rng);
    }
    past_vsn_ = VariableSelection::create(s, "vsn.past", layout_.past_count(), d, d, rng);
    future_vsn_ = VariableSelection::create(s, "vsn.future", layout_.known_names.size(), d, d, rng);
    seq2seq_ = Seq2Seq::create(s, "seq2seq", d, rng);
    enrichment_ = Grn::create(s, "enrichment", d, d, d, d, rng);
    attention_ = InterpretableAttention::create(s, "attention", d, cfg_.num_heads, rng);
    post_attention_ = GateAddNorm::create(s, "post_attention", d, rng);
    positionwise_ = Grn::create(s, "positionwise", d, d, d, 0, rng);
    head_ = nn::Linear::create(s, "head", d, cfg_.quantiles.size(), rng);
}

void TftModel::check_batch(const Batch& b) const {
    const std::size_t k = cfg_.encoder_length, tau = cfg_.horizon;
    const std::size_t B = b.size();
    auto expect = [&](const nn::Tensor& t, const nn::Shape& shape, const char* what) {
        if (t.shape() != shape) {
            throw Error(ErrorKind::ShapeMismatch, std::string(what) + " has shape " + nn::to_string(t.shape()) +
                                                      ", expected " + nn::to_string(shape));
        }
    };
    if (B == 0) throw Error(ErrorKind::ShapeMismatch, "empty batch");
    expect(b.static_inputs, {B, layout_.static_names.size()}, "static_inputs");
    expect(b.observed_past, {B, k, layout_.observed_names.size()}, "observed_past");
    expect(b.known_inputs, {B, k + tau, layout_.known_names.size()}, "known_inputs");
    expect(b.target_past, {B, k, 1}, "target_past");
    if (!b.target_future.empty()) expect(b.target_future, {B, tau, 1}, "target_future");
}

Var TftModel::embed_known(Tape& tape, const Batch& b, std::size_t var, std::size_t start, std::size_t length) const {
    const KnownEmbedding& e = known_embed_[var];
    nn::Tensor col = column(b.known_inputs, var, start, length);
    if (e.linear) return (*e.linear)(tape, tape.constant(std::move(col)));
    std::vector<std::size_t> idx(col.size());
    for (std::size_t i = 0; i < col.size(); ++i) {
        const double v = col[i];
        if (!(v >= 0.0) || v != std::floor(v) || v >= static_cast<double>(e.cardinality)) {
            throw Error(ErrorKind::ShapeMismatch, "known input '" + layout_.known_names[var] + "' has code " +
                                                      std::to_string(v) + " outside [0, " +
                                                      std::to_string(e.cardinality) + ")");
        }
        idx[i] = static_cast<std::size_t>(v);
    }
    return nn::embedding(tape.parameter(*e.table->table), idx, {b.size(), length});
}

TftOutput TftModel::forward(Tape& tape, const Batch& b, const ForwardMode& mode) const {
    check_batch(b);
    const std::size_t B = b.size(), k = cfg_.encoder_length, tau = cfg_.horizon, d = cfg_.hidden_size;
    TftOutput out;

    // static covariates -> contexts
    StaticContexts ctx;
    if (static_vsn_) {
        std::vector<Var> feats;
        const std::size_t ns = layout_.static_names.size();
        for (std::size_t i = 0; i < ns; ++i) {
            nn::Tensor col({B, 1});
            for (std::size_t r = 0; r < B; ++r) col[r] = b.static_inputs[r * ns + i];
            feats.push_back(static_embed_[i](tape, tape.constant(std::move(col))));
        }
        const SelectionResult sel = (*static_vsn_)(tape, feats, std::nullopt, mode);
        out.static_weights = sel.weights;
        ctx = (*encoders_)(tape, sel.combined, mode);
    } else {
        const Var zero = tape.constant(nn::Tensor({B, d}));
        ctx = {zero, zero, zero, zero};
    }

    // temporal variable selection
    std::vector<Var> past;
    for (std::size_t i = 0; i < layout_.observed_names.size(); ++i) {
        past.push_back(observed_embed_[i](tape, tape.constant(column(b.observed_past, i, 0, k))));
    }
    for (std::size_t i = 0; i < layout_.known_names.size(); ++i) past.push_back(embed_known(tape, b, i, 0, k));
    past.push_back(target_embed_(tape, tape.constant(b.target_past)));
    std::vector<Var> future;
    for (std::size_t i = 0; i < layout_.known_names.size(); ++i) future.push_back(embed_known(tape, b, i, k, tau));

    const SelectionResult past_sel = (*past_vsn_)(tape, past, ctx.selection, mode);
    const SelectionResult future_sel = (*future_vsn_)(tape, future, ctx.selection, mode);
    out.past_weights = past_sel.weights;
    out.future_weights = future_sel.weights;

    const Var temporal = (*seq2seq_)(tape, past_sel.combined, future_sel.combined, ctx.state_h, ctx.state_c, mode);
    const Var enriched = (*enrichment_)(tape, temporal, ctx.enrichment, mode);
    const AttentionResult attn = (*attention_)(tape, enriched, enriched, enriched, true);
    out.attention = attn.weights;
    const Var gated = (*post_attention_)(tape, attn.output, enriched, mode);
    const Var decoded = (*positionwise_)(tape, nn::slice(gated, 1, k, tau), std::nullopt, mode);
    out.quantiles = head_(tape, decoded);
    return out;
}

void TftModel::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    write_json_file(dir / "tft_config.json", Json{{"config", to_json(cfg_)}, {"layout", to_json(layout_)}});
    nn::save_checkpoint(dir, *store_, nn::CheckpointInfo{cfg_.seed, 0});
}

std::unique_ptr<TftModel> TftModel::load(const std::filesystem::path& dir) {
    const Json j = read_json_file(dir / "tft_config.json");
    if (!j.contains("config") || !j.contains("layout")) {
        throw Error(ErrorKind::ParseError, (dir / "tft_config.json").string() + ": expected 'config' and 'layout'");
    }
    auto model = std::make_unique<TftModel>(tft_config_from_json(j["config"]), layout_from_json(j["layout"]));
    nn::load_checkpoint(dir, model->parameters());
    return model;
}

} // namespace windcast::tft
