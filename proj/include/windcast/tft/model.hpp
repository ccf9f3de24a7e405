#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

#include "windcast/tft/blocks.hpp"
#include "windcast/tft/config.hpp"

namespace windcast::tft {

/// One batch of windows. Categorical known inputs hold zero-based codes.
struct Batch {
    nn::Tensor static_inputs;   // [B, n_s]
    nn::Tensor observed_past;   // [B, k, n_o]
    nn::Tensor known_inputs;    // [B, k + tau, n_k]
    nn::Tensor target_past;     // [B, k, 1]
    nn::Tensor target_future;   // [B, tau, 1]
    std::vector<std::int64_t> origins;

    std::size_t size() const { return target_past.rank() > 0 ? target_past.dim(0) : 0; }
};

struct TftOutput {
    Var quantiles;        // [B, tau, |Q|]
    Var static_weights;   // [B, n_s], invalid without static inputs
    Var past_weights;     // [B, k, n_o + n_k + 1]
    Var future_weights;   // [B, tau, n_k]
    Var attention;        // [B, k + tau, k + tau]
};

class TftModel {
public:
    /// Initializes every parameter from cfg.seed.
    TftModel(TftConfig cfg, FeatureLayout layout);

    const TftConfig& config() const noexcept { return cfg_; }
    const FeatureLayout& layout() const noexcept { return layout_; }
    nn::ParameterStore& parameters() noexcept { return *store_; }
    const nn::ParameterStore& parameters() const noexcept { return *store_; }

    TftOutput forward(Tape& tape, const Batch& batch, const ForwardMode& mode) const;

    /// Writes tft_config.json plus the parameter checkpoint.
    void save(const std::filesystem::path& dir) const;
    static std::unique_ptr<TftModel> load(const std::filesystem::path& dir);

private:
    struct KnownEmbedding {
        std::optional<nn::Linear> linear;
        std::optional<nn::EmbeddingTable> table;
        std::size_t cardinality = 0;
    };

    void check_batch(const Batch& batch) const;
    Var embed_known(Tape& tape, const Batch& batch, std::size_t var, std::size_t start, std::size_t length) const;

    TftConfig cfg_;
    FeatureLayout layout_;
    std::unique_ptr<nn::ParameterStore> store_;

    std::vector<nn::Linear> static_embed_;
    std::vector<nn::Linear> observed_embed_;
    std::vector<KnownEmbedding> known_embed_;
    nn::Linear target_embed_;
    std::optional<VariableSelection> static_vsn_;
    std::optional<StaticEncoders> encoders_;
    std::optional<VariableSelection> past_vsn_;
    std::optional<VariableSelection> future_vsn_;
    std::optional<Seq2Seq> seq2seq_;
    std::optional<Grn> enrichment_;
    std::optional<InterpretableAttention> attention_;
    std::optional<GateAddNorm> post_attention_;
    std::optional<Grn> positionwise_;
    nn::Linear head_;
};

} // namespace windcast::tft
