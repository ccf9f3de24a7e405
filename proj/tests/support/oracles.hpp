#pragma once

// Reference implementations and fixtures shared by the unit tests and the
// acceptance binary. Written with plain loops, independent of the code under test.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include "windcast/common/rng.hpp"
#include "windcast/decomp/decomposition.hpp"
#include "windcast/nn/ops.hpp"
#include "windcast/tft/model.hpp"

namespace windcast::testing {

using nn::Shape;
using nn::Tape;
using nn::Tensor;
using nn::Var;
using tft::Batch;
using tft::FeatureLayout;
using tft::TftConfig;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline Tensor random_tensor(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t(shape);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

inline Var weighted_sum(Tape& tape, Var x, std::uint64_t seed = 99) {
    Rng rng(seed);
    return sum_all(mul(x, tape.constant(random_tensor(x.shape(), rng))));
}

inline FeatureLayout tiny_layout() {
    FeatureLayout l;
    l.static_names = {"s0"};
    l.observed_names = {"o0", "o1"};
    l.known_names = {"k_real", "k_cat"};
    l.known_cardinality = {0, 3};
    l.target_name = "y";
    return l;
}

inline TftConfig tiny_config() {
    TftConfig c;
    c.hidden_size = 4;
    c.num_heads = 2;
    c.encoder_length = 3;
    c.horizon = 2;
    c.dropout = 0.0;
    c.seed = 5;
    return c;
}

inline Batch random_batch(const TftConfig& c, const FeatureLayout& l, std::size_t B, Rng& rng) {
    const std::size_t k = c.encoder_length, tau = c.horizon;
    Batch b;
    b.static_inputs = random_tensor({B, l.static_names.size()}, rng);
    b.observed_past = random_tensor({B, k, l.observed_names.size()}, rng);
    b.known_inputs = random_tensor({B, k + tau, l.known_names.size()}, rng);
    for (std::size_t r = 0; r < B * (k + tau); ++r) {
        for (std::size_t j = 0; j < l.known_names.size(); ++j) {
            if (l.known_cardinality[j] > 0) {
                b.known_inputs[r * l.known_names.size() + j] =
                    static_cast<double>(rng.uniform_int(0, static_cast<std::int64_t>(l.known_cardinality[j]) - 1));
            }
        }
    }
    b.target_past = random_tensor({B, k, 1}, rng);
    b.target_future = random_tensor({B, tau, 1}, rng);
    return b;
}

// Standard scaled dot-product attention written with loops.
inline std::vector<double> attention_oracle(const Tensor& x, const std::vector<const Tensor*>& wq,
                                     const std::vector<const Tensor*>& wk, const Tensor& wv, const Tensor& wh,
                                     bool causal) {
    const std::size_t B = x.dim(0), T = x.dim(1), d = x.dim(2), da = wv.dim(1), H = wq.size();
    auto project = [&](const Tensor& w, std::size_t b, std::size_t t, std::size_t j) {
        double s = 0.0;
        for (std::size_t i = 0; i < d; ++i) s += x[(b * T + t) * d + i] * w[i * da + j];
        return s;
    };
    std::vector<double> out(B * T * d, 0.0);
    for (std::size_t b = 0; b < B; ++b) {
        std::vector<double> avg(T * T, 0.0);
        for (std::size_t h = 0; h < H; ++h) {
            for (std::size_t t = 0; t < T; ++t) {
                std::vector<double> score(T, -INFINITY);
                double mx = -INFINITY;
                for (std::size_t u = 0; u < T; ++u) {
                    if (causal && u > t) continue;
                    double s = 0.0;
                    for (std::size_t j = 0; j < da; ++j) s += project(*wq[h], b, t, j) * project(*wk[h], b, u, j);
                    score[u] = s / std::sqrt(static_cast<double>(da));
                    mx = std::max(mx, score[u]);
                }
                double z = 0.0;
                for (std::size_t u = 0; u < T; ++u) z += std::isinf(score[u]) ? 0.0 : std::exp(score[u] - mx);
                for (std::size_t u = 0; u < T; ++u) {
                    avg[t * T + u] += (std::isinf(score[u]) ? 0.0 : std::exp(score[u] - mx) / z) / static_cast<double>(H);
                }
            }
        }
        for (std::size_t t = 0; t < T; ++t) {
            std::vector<double> mixed(da, 0.0);
            for (std::size_t u = 0; u < T; ++u) {
                for (std::size_t j = 0; j < da; ++j) mixed[j] += avg[t * T + u] * project(wv, b, u, j);
            }
            for (std::size_t o = 0; o < d; ++o) {
                double s = 0.0;
                for (std::size_t j = 0; j < da; ++j) s += mixed[j] * wh[j * d + o];
                out[(b * T + t) * d + o] = s;
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------- signals

inline std::vector<double> tone(std::size_t n, double freq, double amp = 1.0) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = amp * std::cos(kTwoPi * freq * static_cast<double>(i));
    return x;
}

inline std::vector<double> add(std::vector<double> a, const std::vector<double>& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    return a;
}

inline double rel_l2(const std::vector<double>& a, const std::vector<double>& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a[i] - b[i]) * (a[i] - b[i]);
        den += b[i] * b[i];
    }
    return std::sqrt(num / den);
}

inline std::vector<double> sum_modes(const decomp::ModeSet& m) {
    std::vector<double> s(m.input_length, 0.0);
    for (const auto& mode : m.modes) s = add(s, mode);
    return s;
}

// Naive DFT magnitude peaks on a fine frequency grid, independent of FFTW.
inline std::vector<double> dft_peaks(const std::vector<double>& x, std::size_t count) {
    const std::size_t grid = 4000;
    std::vector<double> mag(grid);
    for (std::size_t g = 0; g < grid; ++g) {
        const double f = 0.5 * static_cast<double>(g) / grid;
        double re = 0.0, im = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            re += x[i] * std::cos(kTwoPi * f * static_cast<double>(i));
            im -= x[i] * std::sin(kTwoPi * f * static_cast<double>(i));
        }
        mag[g] = std::hypot(re, im);
    }
    std::vector<std::pair<double, double>> local;
    for (std::size_t g = 1; g + 1 < grid; ++g) {
        if (mag[g] > mag[g - 1] && mag[g] >= mag[g + 1]) local.emplace_back(mag[g], 0.5 * static_cast<double>(g) / grid);
    }
    std::sort(local.rbegin(), local.rend());
    std::vector<double> peaks;
    for (std::size_t k = 0; k < count && k < local.size(); ++k) peaks.push_back(local[k].second);
    std::sort(peaks.begin(), peaks.end());
    return peaks;
}


} // namespace windcast::testing
