#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "windcast/common/io.hpp"
#include "windcast/tpe/space.hpp"

namespace windcast::decomp {

enum class Kind { VMD, EEMD, MSTL };
enum class VmdInit { Zero, Uniform, Random };

const char* to_string(Kind kind);
Kind kind_from_string(const std::string& text);

struct VmdConfig {
    std::size_t K = 4;
    double alpha = 2000.0;
    double tau_dual = 0.0;
    double tol = 1e-7;
    bool dc_mode = false;
    VmdInit init = VmdInit::Uniform;
    std::size_t max_iter = 500;
    std::uint64_t seed = 0;   // random init only
};

struct EemdConfig {
    std::size_t ensembles = 16;
    double noise_ratio = 0.2;   // noise std as a fraction of the signal std
    std::size_t max_imfs = 6;
    std::size_t max_siftings = 50;
    std::uint64_t seed = 0;
};

struct MstlConfig {
    std::vector<std::size_t> periods{24};
    /// Seasonal loess window per period (odd, >= 7); missing entries use 7 + 4i.
    std::vector<std::size_t> loess_windows;
    std::size_t iterations = 2;
};

struct DecompositionConfig {
    Kind kind = Kind::VMD;
    VmdConfig vmd;
    EemdConfig eemd;
    MstlConfig mstl;

    /// Bounds of the active kind; throws InvalidConfig.
    void validate() const;
};

Json to_json(const DecompositionConfig& cfg);
DecompositionConfig decomposition_from_json(const Json& j);

/// Applies a flat tuner configuration (e.g. {"K": 5, "alpha": 900}) on top
/// of `base`. Keys are interpreted for the active kind; unknown keys throw.
DecompositionConfig apply_overrides(const DecompositionConfig& base, const Json& overrides);

struct ModeSet {
    std::vector<std::vector<double>> modes;
    std::vector<double> residual;
    std::vector<double> center_frequencies;   // cycles/sample, VMD only
    std::vector<std::string> names;           // one per mode
    DecompositionConfig config;
    std::size_t input_length = 0;
    std::size_t iterations = 0;               // VMD iterations run
    bool converged = true;

    std::size_t size() const noexcept { return modes.size(); }
};

/// Frequency-domain ADMM on the mirror-extended signal. Modes come out in
/// ascending center frequency; the residual is what they leave unexplained.
ModeSet vmd_decompose(std::span<const double> signal, const VmdConfig& cfg);

struct EmdResult {
    std::vector<std::vector<double>> imfs;
    std::vector<double> trend;
};

/// Sifting with natural cubic-spline envelopes through mirrored extrema.
EmdResult emd_sift(std::span<const double> signal, std::size_t max_siftings,
                   std::size_t max_imfs = static_cast<std::size_t>(-1));

ModeSet eemd_decompose(std::span<const double> signal, const EemdConfig& cfg);

/// Iterated STL per period (ascending), then a loess trend. Modes are the
/// seasonal components followed by the trend.
ModeSet mstl_decompose(std::span<const double> signal, const MstlConfig& cfg);

ModeSet decompose(std::span<const double> signal, const DecompositionConfig& cfg);

/// Sum of modes plus residual.
std::vector<double> reconstruct(const ModeSet& modes);

/// Search space over the tunable fields of a kind.
tpe::SearchSpace param_space(Kind kind);

/// Odd seasonal-window grid used by the MSTL space.
std::vector<std::size_t> mstl_window_grid();

/// Degree-1 loess of y (at positions 0..n-1) evaluated at position x, using
/// the q nearest points with tricube weights.
double loess_at(std::span<const double> y, double x, std::size_t q);

/// `modes.csv` (one column per mode, then residual) and `meta.json`.
void save_modeset(const std::filesystem::path& dir, const ModeSet& modes);
ModeSet load_modeset(const std::filesystem::path& dir);

} // namespace windcast::decomp
