#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "windcast/nn/parameter.hpp"
#include "windcast/nn/tape.hpp"

namespace windcast {
class Rng;
}

namespace windcast::nn {

struct AdamOptions {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Bias-corrected Adam on every parameter in the store; increments step counts.
void adam_step(ParameterStore& store, const AdamOptions& options);
void adam_step(Parameter& p, const AdamOptions& options);

// ------------------------------------------------------------- checkpoints

struct CheckpointInfo {
    std::uint64_t seed = 0;
    std::int64_t step = 0;
};

/// Writes `manifest.json` (names, shapes, byte offsets, seed, step) and
/// `weights.bin` (little-endian float64 in manifest order) into `dir`.
void save_checkpoint(const std::filesystem::path& dir, const ParameterStore& store, const CheckpointInfo& info);

/// Loads values by name into an existing store; shapes must agree.
CheckpointInfo load_checkpoint(const std::filesystem::path& dir, ParameterStore& store);

// ------------------------------------------------------- training driver

struct FitOptions {
    std::size_t max_epochs = 20;
    std::size_t patience = 3;
    std::size_t batch_size = 32;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;
    /// Per-epoch cap on sampled training windows; 0 uses all of them.
    std::size_t max_train_windows = 0;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
};

struct FitHistory {
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0;
    double best_val_loss = 0.0;
    bool stopped_early = false;
};

/// Builds the mean loss of a mini-batch of window indices on the given tape.
using BatchLoss = std::function<Var(Tape&, std::span<const std::size_t>, bool training, Rng& rng)>;

/// Mini-batch Adam with early stopping on validation loss. After the loop
/// the best-validation weights are restored. Throws DivergedLoss on a
/// non-finite loss and EmptyDataset when either window set is empty.
FitHistory fit(ParameterStore& store, std::size_t train_count, std::size_t val_count,
               const BatchLoss& batch_loss, const FitOptions& options);

/// Size-weighted mean loss over all windows in inference mode.
double evaluate_loss(std::size_t count, std::size_t batch_size, const BatchLoss& batch_loss);

} // namespace windcast::nn
