#include <algorithm>
#include <cmath>

#include "windcast/common/error.hpp"
#include "windcast/common/rng.hpp"
#include "windcast/decomp/decomposition.hpp"

namespace windcast::decomp {

namespace {

struct Extrema {
    std::vector<double> max_pos, max_val, min_pos, min_val;
};

// Interior local extrema; a flat run counts once, at its midpoint.
Extrema find_extrema(std::span<const double> h) {
    Extrema e;
    const std::size_t n = h.size();
    std::size_t i = 1;
    while (i + 1 < n) {
        std::size_t j = i;
        while (j + 1 < n && h[j + 1] == h[i]) ++j;
        if (j + 1 >= n) break;
        const double mid = 0.5 * static_cast<double>(i + j);
        if (h[i] > h[i - 1] && h[i] > h[j + 1]) {
            e.max_pos.push_back(std::floor(mid));
            e.max_val.push_back(h[i]);
        } else if (h[i] < h[i - 1] && h[i] < h[j + 1]) {
            e.min_pos.push_back(std::floor(mid));
            e.min_val.push_back(h[i]);
        }
        i = j + 1;
    }
    return e;
}

// Natural cubic spline through (x, y) evaluated at 0..n-1.
std::vector<double> spline_eval(const std::vector<double>& x, const std::vector<double>& y, std::size_t n) {
    const std::size_t m = x.size();
    std::vector<double> out(n);
    if (m == 1) {
        std::fill(out.begin(), out.end(), y[0]);
        return out;
    }
    std::vector<double> second(m, 0.0);
    if (m > 2) {
        // tridiagonal system for interior second derivatives
        std::vector<double> diag(m, 0.0), rhs(m, 0.0), upper(m, 0.0);
        for (std::size_t i = 1; i + 1 < m; ++i) {
            const double h0 = x[i] - x[i - 1], h1 = x[i + 1] - x[i];
            diag[i] = 2.0 * (h0 + h1);
            upper[i] = h1;
            rhs[i] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
            if (i > 1) {
                const double w = h0 / diag[i - 1];
                diag[i] -= w * upper[i - 1];
                rhs[i] -= w * rhs[i - 1];
            }
        }
        for (std::size_t i = m - 2; i >= 1; --i) {
            second[i] = (rhs[i] - upper[i] * second[i + 1]) / diag[i];
            if (i == 1) break;
        }
    }
    std::size_t seg = 0;
    for (std::size_t t = 0; t < n; ++t) {
        const double xt = static_cast<double>(t);
        while (seg + 2 < m && xt > x[seg + 1]) ++seg;
        const double h = x[seg + 1] - x[seg];
        const double a = (x[seg + 1] - xt) / h, b = (xt - x[seg]) / h;
        out[t] = a * y[seg] + b * y[seg + 1] +
                 ((a * a * a - a) * second[seg] + (b * b * b - b) * second[seg + 1]) * h * h / 6.0;
    }
    return out;
}

// Envelope through extrema, with the two outermost extrema at each end
// reflected about the boundary samples.
std::vector<double> envelope(const std::vector<double>& pos, const std::vector<double>& val, std::size_t n) {
    const double last = static_cast<double>(n - 1);
    std::vector<double> x, y;
    for (std::size_t k = std::min<std::size_t>(2, pos.size()); k-- > 0;) {
        if (pos[k] > 0.0) {
            x.push_back(-pos[k]);
            y.push_back(val[k]);
        }
    }
    x.insert(x.end(), pos.begin(), pos.end());
    y.insert(y.end(), val.begin(), val.end());
    const std::size_t m = pos.size();
    for (std::size_t k = 0; k < std::min<std::size_t>(2, m); ++k) {
        const std::size_t idx = m - 1 - k;
        if (pos[idx] < last) {
            x.push_back(2.0 * last - pos[idx]);
            y.push_back(val[idx]);
        }
    }
    return spline_eval(x, y, n);
}

bool enough_extrema(const Extrema& e) { return e.max_pos.size() >= 2 && e.min_pos.size() >= 2; }

} // namespace

EmdResult emd_sift(std::span<const double> signal, std::size_t max_siftings, std::size_t max_imfs) {
    const std::size_t n = signal.size();
    if (n < 4) throw Error(ErrorKind::SignalTooShort, "EMD needs at least 4 samples, got " + std::to_string(n));
    EmdResult result;
    std::vector<double> rest(signal.begin(), signal.end());
    while (result.imfs.size() < max_imfs) {
        if (!enough_extrema(find_extrema(rest))) break;
        std::vector<double> h = rest;
        for (std::size_t s = 0; s < max_siftings; ++s) {
            const Extrema e = find_extrema(h);
            if (!enough_extrema(e)) break;
            const auto upper = envelope(e.max_pos, e.max_val, n);
            const auto lower = envelope(e.min_pos, e.min_val, n);
            double num = 0.0, den = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double mean = 0.5 * (upper[i] + lower[i]);
                num += mean * mean;
                den += h[i] * h[i];
                h[i] -= mean;
            }
            if (den == 0.0 || num / den < 0.2) break;
        }
        for (std::size_t i = 0; i < n; ++i) rest[i] -= h[i];
        result.imfs.push_back(std::move(h));
    }
    result.trend = std::move(rest);
    return result;
}

ModeSet eemd_decompose(std::span<const double> signal, const EemdConfig& cfg) {
    const std::size_t n = signal.size();
    if (n < 10) throw Error(ErrorKind::SignalTooShort, "EEMD needs at least 10 samples, got " + std::to_string(n));
    if (cfg.ensembles < 1) throw Error(ErrorKind::InvalidConfig, "EEMD needs at least one ensemble member");
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(signal[i])) {
            throw Error(ErrorKind::NonFiniteInput, "EEMD input has a non-finite value at index " + std::to_string(i));
        }
        mean += signal[i];
    }
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : signal) var += (v - mean) * (v - mean);
    const double noise_std = cfg.noise_ratio * std::sqrt(var / static_cast<double>(n));

    std::vector<std::vector<double>> sums;
    std::vector<double> noisy(n);
    for (std::size_t e = 0; e < cfg.ensembles; ++e) {
        Rng rng(cfg.seed + e);
        for (std::size_t i = 0; i < n; ++i) noisy[i] = signal[i] + (noise_std > 0.0 ? noise_std * rng.normal() : 0.0);
        EmdResult r = emd_sift(noisy, cfg.max_siftings, cfg.max_imfs);
        if (r.imfs.size() > sums.size()) sums.resize(r.imfs.size(), std::vector<double>(n, 0.0));
        for (std::size_t k = 0; k < r.imfs.size(); ++k) {
            for (std::size_t i = 0; i < n; ++i) sums[k][i] += r.imfs[k][i];
        }
    }
    ModeSet out;
    out.config.kind = Kind::EEMD;
    out.config.eemd = cfg;
    out.input_length = n;
    out.residual.assign(signal.begin(), signal.end());
    for (std::size_t k = 0; k < sums.size(); ++k) {
        for (double& v : sums[k]) v /= static_cast<double>(cfg.ensembles);
        for (std::size_t i = 0; i < n; ++i) out.residual[i] -= sums[k][i];
        out.names.push_back("imf_" + std::to_string(k + 1));
        out.modes.push_back(std::move(sums[k]));
    }
    return out;
}

} // namespace windcast::decomp
