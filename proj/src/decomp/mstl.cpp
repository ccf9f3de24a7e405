#include <algorithm>
#include <cmath>

#include "windcast/common/error.hpp"
#include "windcast/decomp/decomposition.hpp"

namespace windcast::decomp {

double loess_at(std::span<const double> y, double x, std::size_t q) {
    const std::size_t n = y.size();
    if (n == 0) return 0.0;
    if (n == 1) return y[0];
    const std::size_t width = std::clamp<std::size_t>(q, 2, n);
    const double centre = std::round(x - 0.5 * static_cast<double>(width - 1));
    const auto lo = static_cast<std::size_t>(std::clamp(centre, 0.0, static_cast<double>(n - width)));
    const std::size_t hi = lo + width - 1;
    double h = std::max(x - static_cast<double>(lo), static_cast<double>(hi) - x);
    if (q > n) h += static_cast<double>((q - n) / 2);
    const double h_inner = 0.001 * h, h_outer = 0.999 * h;

    double sw = 0.0, sx = 0.0, sy = 0.0;
    std::vector<double> w(width);
    for (std::size_t i = 0; i < width; ++i) {
        const double xi = static_cast<double>(lo + i);
        const double r = std::abs(xi - x);
        double wi = 0.0;
        if (r <= h_inner) wi = 1.0;
        else if (r <= h_outer) {
            const double u = r / h;
            const double c = 1.0 - u * u * u;
            wi = c * c * c;
        }
        w[i] = wi;
        sw += wi;
        sx += wi * xi;
        sy += wi * y[lo + i];
    }
    if (sw <= 0.0) {
        const auto nearest = static_cast<std::size_t>(std::clamp(std::round(x), 0.0, static_cast<double>(n - 1)));
        return y[nearest];
    }
    const double mx = sx / sw, my = sy / sw;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < width; ++i) {
        const double dx = static_cast<double>(lo + i) - mx;
        sxx += w[i] * dx * dx;
        sxy += w[i] * dx * (y[lo + i] - my);
    }
    const double range = static_cast<double>(n - 1);
    if (std::sqrt(sxx / sw) <= 0.001 * range) return my;
    return my + (sxy / sxx) * (x - mx);
}

namespace {

std::size_t next_odd(double v) {
    auto k = static_cast<std::size_t>(std::ceil(v));
    if (k % 2 == 0) ++k;
    return k;
}

std::vector<double> moving_average(const std::vector<double>& x, std::size_t len) {
    std::vector<double> out(x.size() - len + 1);
    double acc = 0.0;
    for (std::size_t i = 0; i < len; ++i) acc += x[i];
    out[0] = acc / static_cast<double>(len);
    for (std::size_t i = 1; i < out.size(); ++i) {
        acc += x[i + len - 1] - x[i - 1];
        out[i] = acc / static_cast<double>(len);
    }
    return out;
}

std::vector<double> loess_smooth(std::span<const double> y, std::size_t q) {
    std::vector<double> out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = loess_at(y, static_cast<double>(i), q);
    return out;
}

std::size_t trend_window(std::size_t period, std::size_t seasonal_window) {
    return next_odd(1.5 * static_cast<double>(period) / (1.0 - 1.5 / static_cast<double>(seasonal_window)));
}

struct StlResult {
    std::vector<double> seasonal;
    std::vector<double> trend;
};

// Inner loop of STL without robustness weights.
StlResult stl(std::span<const double> x, std::size_t period, std::size_t ns, std::size_t inner = 2) {
    const std::size_t n = x.size();
    const std::size_t nt = trend_window(period, ns);
    const std::size_t nl = next_odd(static_cast<double>(period));
    StlResult r;
    r.trend.assign(n, 0.0);
    r.seasonal.assign(n, 0.0);
    std::vector<double> cycle(n + 2 * period), sub;
    for (std::size_t pass = 0; pass < inner; ++pass) {
        // cycle-subseries smoothing, extended one period at both ends
        for (std::size_t phase = 0; phase < period; ++phase) {
            sub.clear();
            for (std::size_t t = phase; t < n; t += period) sub.push_back(x[t] - r.trend[t]);
            const auto m = static_cast<long>(sub.size());
            for (long k = -1; k <= m; ++k) {
                cycle[phase + period * static_cast<std::size_t>(k + 1)] = loess_at(sub, static_cast<double>(k), ns);
            }
        }
        // low-pass filter of the cycle series
        auto low = moving_average(moving_average(moving_average(cycle, period), period), 3);
        low = loess_smooth(low, nl);
        for (std::size_t t = 0; t < n; ++t) r.seasonal[t] = cycle[period + t] - low[t];
        std::vector<double> deseason(n);
        for (std::size_t t = 0; t < n; ++t) deseason[t] = x[t] - r.seasonal[t];
        r.trend = loess_smooth(deseason, nt);
    }
    return r;
}

} // namespace

ModeSet mstl_decompose(std::span<const double> signal, const MstlConfig& cfg) {
    const std::size_t n = signal.size();
    if (cfg.periods.empty()) throw Error(ErrorKind::InvalidConfig, "MSTL needs at least one period");
    if (n < 4) throw Error(ErrorKind::SignalTooShort, "MSTL needs at least 4 samples, got " + std::to_string(n));
    for (std::size_t i = 0; i < cfg.periods.size(); ++i) {
        const std::size_t p = cfg.periods[i];
        if (p < 2) throw Error(ErrorKind::InvalidConfig, "MSTL periods must be >= 2");
        if (i > 0 && p <= cfg.periods[i - 1]) throw Error(ErrorKind::InvalidConfig, "MSTL periods must be strictly ascending");
        if (2 * p > n) {
            throw Error(ErrorKind::PeriodTooLong, "period " + std::to_string(p) + " needs at least " +
                                                      std::to_string(2 * p) + " samples, got " + std::to_string(n));
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(signal[i])) {
            throw Error(ErrorKind::NonFiniteInput, "MSTL input has a non-finite value at index " + std::to_string(i));
        }
    }
    if (cfg.iterations < 1) throw Error(ErrorKind::InvalidConfig, "MSTL needs iterations >= 1");

    const std::size_t P = cfg.periods.size();
    std::vector<std::size_t> windows(P);
    for (std::size_t i = 0; i < P; ++i) {
        windows[i] = i < cfg.loess_windows.size() ? cfg.loess_windows[i] : 7 + 4 * i;
        if (windows[i] < 7 || windows[i] % 2 == 0) {
            throw Error(ErrorKind::InvalidConfig, "MSTL loess windows must be odd and >= 7");
        }
    }

    std::vector<std::vector<double>> seasonal(P, std::vector<double>(n, 0.0));
    std::vector<double> partial(n);
    for (std::size_t it = 0; it < cfg.iterations; ++it) {
        for (std::size_t i = 0; i < P; ++i) {
            for (std::size_t t = 0; t < n; ++t) {
                double s = signal[t];
                for (std::size_t j = 0; j < P; ++j) {
                    if (j != i) s -= seasonal[j][t];
                }
                partial[t] = s;
            }
            seasonal[i] = stl(partial, cfg.periods[i], windows[i]).seasonal;
        }
    }
    std::vector<double> deseason(n);
    for (std::size_t t = 0; t < n; ++t) {
        double s = signal[t];
        for (const auto& sc : seasonal) s -= sc[t];
        deseason[t] = s;
    }
    std::vector<double> trend = loess_smooth(deseason, trend_window(cfg.periods.back(), windows.back()));

    ModeSet out;
    out.config.kind = Kind::MSTL;
    out.config.mstl = cfg;
    out.input_length = n;
    for (std::size_t i = 0; i < P; ++i) {
        out.names.push_back("seasonal_" + std::to_string(cfg.periods[i]));
        out.modes.push_back(std::move(seasonal[i]));
    }
    out.names.push_back("trend");
    out.modes.push_back(std::move(trend));
    out.residual.assign(signal.begin(), signal.end());
    for (const auto& m : out.modes) {
        for (std::size_t t = 0; t < n; ++t) out.residual[t] -= m[t];
    }
    return out;
}

} // namespace windcast::decomp
