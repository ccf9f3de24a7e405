#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>

#include <fftw3.h>

#include "windcast/common/error.hpp"
#include "windcast/common/rng.hpp"
#include "windcast/decomp/decomposition.hpp"

namespace windcast::decomp {

namespace {

using cplx = std::complex<double>;

std::vector<cplx> rfft(const std::vector<double>& x) {
    const int n = static_cast<int>(x.size());
    std::vector<double> in = x;
    std::vector<cplx> out(x.size() / 2 + 1);
    fftw_plan plan = fftw_plan_dft_r2c_1d(n, in.data(), reinterpret_cast<fftw_complex*>(out.data()), FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
    return out;
}

std::vector<double> irfft(const std::vector<cplx>& spectrum, std::size_t n) {
    std::vector<cplx> in = spectrum;   // c2r overwrites its input
    std::vector<double> out(n);
    fftw_plan plan = fftw_plan_dft_c2r_1d(static_cast<int>(n), reinterpret_cast<fftw_complex*>(in.data()), out.data(),
                                          FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
    for (double& v : out) v /= static_cast<double>(n);
    return out;
}

} // namespace

ModeSet vmd_decompose(std::span<const double> signal, const VmdConfig& cfg) {
    const std::size_t N = signal.size();
    const std::size_t K = cfg.K;
    if (K < 1) throw Error(ErrorKind::InvalidConfig, "VMD needs K >= 1");
    if (N < 2 * K || N < 2) {
        throw Error(ErrorKind::SignalTooShort, "VMD with K=" + std::to_string(K) + " needs at least " +
                                                   std::to_string(2 * K) + " samples, got " + std::to_string(N));
    }
    for (std::size_t i = 0; i < N; ++i) {
        if (!std::isfinite(signal[i])) {
            throw Error(ErrorKind::NonFiniteInput, "VMD input has a non-finite value at index " + std::to_string(i));
        }
    }

    // mirror extension to length 2N
    const std::size_t half = N / 2;
    const std::size_t M = 2 * N;
    std::vector<double> ext(M);
    for (std::size_t i = 0; i < half; ++i) ext[i] = signal[half - 1 - i];
    for (std::size_t i = 0; i < N; ++i) ext[half + i] = signal[i];
    for (std::size_t i = 0; i < N - half; ++i) ext[half + N + i] = signal[N - 1 - i];

    const std::vector<cplx> f_hat = rfft(ext);
    const std::size_t B = f_hat.size();   // N + 1 bins, omega_j = j / M
    std::vector<double> omega_grid(B);
    for (std::size_t j = 0; j < B; ++j) omega_grid[j] = static_cast<double>(j) / static_cast<double>(M);

    std::vector<double> omega(K, 0.0);
    switch (cfg.init) {
    case VmdInit::Zero: break;
    case VmdInit::Uniform:
        for (std::size_t k = 0; k < K; ++k) omega[k] = 0.5 * static_cast<double>(k) / static_cast<double>(K);
        break;
    case VmdInit::Random: {
        Rng rng(cfg.seed);
        for (double& w : omega) w = rng.uniform(0.0, 0.5);
        std::sort(omega.begin(), omega.end());
        break;
    }
    }
    if (cfg.dc_mode) omega[0] = 0.0;

    std::vector<std::vector<cplx>> u(K, std::vector<cplx>(B));
    std::vector<cplx> lambda(B), total(B), others(B), fresh(B);
    ModeSet out;
    out.converged = false;
    for (std::size_t it = 0; it < cfg.max_iter; ++it) {
        double change = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            double num = 0.0, den = 0.0, diff = 0.0, prev = 0.0;
            for (std::size_t j = 0; j < B; ++j) {
                others[j] = total[j] - u[k][j];
                const double d = omega_grid[j] - omega[k];
                fresh[j] = (f_hat[j] - others[j] + lambda[j] * 0.5) / (1.0 + 2.0 * cfg.alpha * d * d);
                const double p = std::norm(fresh[j]);
                if (j + 1 < B) {
                    num += omega_grid[j] * p;
                    den += p;
                }
                diff += std::norm(fresh[j] - u[k][j]);
                prev += std::norm(u[k][j]);
            }
            if (!(cfg.dc_mode && k == 0) && den > 0.0) omega[k] = num / den;
            if (prev > 0.0) change += diff / prev;
            else if (diff > 0.0) change = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < B; ++j) {
                u[k][j] = fresh[j];
                total[j] = others[j] + fresh[j];
            }
        }
        if (cfg.tau_dual != 0.0) {
            for (std::size_t j = 0; j < B; ++j) lambda[j] += cfg.tau_dual * (f_hat[j] - total[j]);
        }
        out.iterations = it + 1;
        if (change < cfg.tol) {
            out.converged = true;
            break;
        }
    }

    std::vector<std::size_t> order(K);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return omega[a] < omega[b]; });

    out.input_length = N;
    out.config.kind = Kind::VMD;
    out.config.vmd = cfg;
    out.residual.assign(signal.begin(), signal.end());
    for (std::size_t r = 0; r < K; ++r) {
        const std::size_t k = order[r];
        const std::vector<double> full = irfft(u[k], M);
        std::vector<double> mode(full.begin() + static_cast<std::ptrdiff_t>(half),
                                 full.begin() + static_cast<std::ptrdiff_t>(half + N));
        for (std::size_t i = 0; i < N; ++i) out.residual[i] -= mode[i];
        out.modes.push_back(std::move(mode));
        out.center_frequencies.push_back(omega[k]);
        out.names.push_back("imf_" + std::to_string(r + 1));
    }
    return out;
}

} // namespace windcast::decomp
