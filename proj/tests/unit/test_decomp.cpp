#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "support/oracles.hpp"
#include "windcast/common/error.hpp"
#include "windcast/common/rng.hpp"
#include "windcast/decomp/decomposition.hpp"

using namespace windcast;
using namespace windcast::decomp;
using namespace windcast::testing;

TEST_CASE("vmd single tone matches the spectral peak") {
    const auto x = tone(512, 0.05);
    VmdConfig cfg;
    cfg.K = 1;
    cfg.alpha = 2000;
    cfg.tau_dual = 0;
    cfg.tol = 1e-7;
    ModeSet m = vmd_decompose(x, cfg);
    REQUIRE(m.size() == 1);
    const double peak = dft_peaks(x, 1)[0];
    CHECK(std::abs(peak - 0.05) < 1e-3);
    CHECK(std::abs(m.center_frequencies[0] - peak) / peak < 0.05);
    CHECK(rel_l2(m.modes[0], x) < 0.05);
}

TEST_CASE("vmd two tones are separated and ordered") {
    const auto x = add(tone(512, 0.02), tone(512, 0.2));
    VmdConfig cfg;
    cfg.K = 2;
    cfg.alpha = 2000;
    cfg.tol = 1e-7;
    ModeSet m = vmd_decompose(x, cfg);
    REQUIRE(m.size() == 2);
    const auto peaks = dft_peaks(x, 2);
    for (std::size_t k = 0; k < 2; ++k) CHECK(std::abs(m.center_frequencies[k] - peaks[k]) / peaks[k] < 0.05);
    CHECK(m.center_frequencies[0] <= m.center_frequencies[1]);

    // the dual ascent enforces reconstruction; tau_dual = 0 only shrinks
    cfg.tau_dual = 0.1;
    ModeSet md = vmd_decompose(x, cfg);
    REQUIRE(md.converged);
    CHECK(rel_l2(sum_modes(md), x) <= 0.05);
    CHECK(rel_l2(md.modes[0], tone(512, 0.02)) < 0.1);
    CHECK(rel_l2(md.modes[1], tone(512, 0.2)) < 0.1);
}

TEST_CASE("vmd zero signal gives zero modes") {
    std::vector<double> z(64, 0.0);
    VmdConfig cfg;
    cfg.K = 3;
    ModeSet m = vmd_decompose(z, cfg);
    for (const auto& mode : m.modes) {
        for (double v : mode) CHECK(v == 0.0);
    }
    for (double v : m.residual) CHECK(v == 0.0);
}

TEST_CASE("vmd invariants: ordering, energy, amplitude linearity, determinism") {
    Rng rng(4);
    std::vector<double> x = add(add(tone(600, 0.01, 2.0), tone(600, 0.08)), tone(600, 0.3, 0.5));
    for (double& v : x) v += 0.01 * rng.normal();
    VmdConfig cfg;
    cfg.K = 3;
    ModeSet m = vmd_decompose(x, cfg);
    REQUIRE(m.converged);
    for (std::size_t k = 1; k < m.size(); ++k) CHECK(m.center_frequencies[k - 1] <= m.center_frequencies[k]);
    double energy = 0.0, signal = 0.0;
    for (const auto& mode : m.modes) {
        for (double v : mode) energy += v * v;
    }
    for (double v : x) signal += v * v;
    CHECK(energy <= signal * 1.01);

    std::vector<double> scaled = x;
    for (double& v : scaled) v *= 7.5;
    ModeSet ms = vmd_decompose(scaled, cfg);
    for (std::size_t k = 0; k < m.size(); ++k) {
        CHECK(std::abs(ms.center_frequencies[k] - m.center_frequencies[k]) <= 1e-6 * m.center_frequencies[k]);
    }
    ModeSet again = vmd_decompose(x, cfg);
    CHECK(again.modes == m.modes);
    CHECK(again.center_frequencies == m.center_frequencies);
}

TEST_CASE("vmd options and errors") {
    const auto x = add(tone(400, 0.0), tone(400, 0.15));   // DC plus a tone
    VmdConfig cfg;
    cfg.K = 2;
    cfg.dc_mode = true;
    ModeSet m = vmd_decompose(x, cfg);
    CHECK(m.center_frequencies[0] == 0.0);
    CHECK(std::abs(m.center_frequencies[1] - 0.15) < 0.0075);

    cfg.dc_mode = false;
    cfg.init = VmdInit::Random;
    cfg.seed = 9;
    CHECK(vmd_decompose(x, cfg).modes == vmd_decompose(x, cfg).modes);
    cfg.init = VmdInit::Zero;
    CHECK_NOTHROW(vmd_decompose(x, cfg));
    cfg.tau_dual = 0.1;
    CHECK_NOTHROW(vmd_decompose(x, cfg));

    cfg.K = 3;
    CHECK_THROWS_AS(vmd_decompose(std::vector<double>(5, 1.0), cfg), Error);
    std::vector<double> bad = x;
    bad[3] = std::nan("");
    try {
        vmd_decompose(bad, cfg);
        FAIL("expected NonFiniteInput");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NonFiniteInput);
    }
}

TEST_CASE("emd sifting basics") {
    const auto x = tone(400, 1.0 / 40.0);   // ten periods
    EmdResult r = emd_sift(x, 50);
    REQUIRE(r.imfs.size() == 1);
    CHECK(rel_l2(r.imfs[0], x) < 0.1);

    std::vector<double> c(50, 3.0);
    EmdResult rc = emd_sift(c, 50);
    CHECK(rc.imfs.empty());
    CHECK(rc.trend == c);

    Rng rng(2);
    std::vector<double> noisy(300);
    for (std::size_t i = 0; i < noisy.size(); ++i) noisy[i] = std::sin(0.05 * i) + 0.3 * rng.normal() + 0.01 * i;
    EmdResult rn = emd_sift(noisy, 30);
    std::vector<double> total = rn.trend;
    for (const auto& imf : rn.imfs) total = add(total, imf);
    for (std::size_t i = 0; i < noisy.size(); ++i) CHECK(std::abs(total[i] - noisy[i]) <= 1e-9);

    CHECK_THROWS_AS(emd_sift(std::vector<double>{1, 2, 3}, 10), Error);
}

TEST_CASE("eemd degenerate ensemble equals emd, monotone ramp, determinism") {
    Rng rng(8);
    std::vector<double> x(256);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(0.2 * i) + 0.5 * std::sin(0.031 * i) + 0.1 * rng.normal();
    EemdConfig cfg;
    cfg.ensembles = 1;
    cfg.noise_ratio = 0.0;
    cfg.max_imfs = 6;
    ModeSet m = eemd_decompose(x, cfg);
    EmdResult r = emd_sift(x, cfg.max_siftings, cfg.max_imfs);
    REQUIRE(m.size() == r.imfs.size());
    for (std::size_t k = 0; k < m.size(); ++k) CHECK(m.modes[k] == r.imfs[k]);

    std::vector<double> ramp(100);
    for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = 0.5 * i - 3.0;
    ModeSet mr = eemd_decompose(ramp, cfg);
    CHECK(mr.size() == 0);
    CHECK(mr.residual == ramp);

    cfg.ensembles = 6;
    cfg.noise_ratio = 0.2;
    cfg.seed = 11;
    ModeSet a = eemd_decompose(x, cfg), b = eemd_decompose(x, cfg);
    CHECK(a.modes == b.modes);
    CHECK(a.residual == b.residual);
    const auto rec = reconstruct(a);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(rec[i] - x[i]) <= 1e-9);
}

TEST_CASE("mstl constant and periodic signals") {
    std::vector<double> c(96, 4.25);
    MstlConfig cfg;
    cfg.periods = {24};
    ModeSet m = mstl_decompose(c, cfg);
    REQUIRE(m.size() == 2);
    for (double v : m.modes[0]) CHECK(std::abs(v) < 1e-12);
    for (double v : m.modes[1]) CHECK(std::abs(v - 4.25) < 1e-12);
    for (double v : m.residual) CHECK(std::abs(v) < 1e-12);

    Rng rng(3);
    std::vector<double> pattern(24);
    double mean = 0.0;
    for (double& v : pattern) {
        v = rng.uniform(-1, 1);
        mean += v;
    }
    for (double& v : pattern) v -= mean / 24.0;
    std::vector<double> x(24 * 12);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = pattern[i % 24];
    // oracle: cycle-subseries means reproduce the pattern
    std::vector<double> phase_mean(24, 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) phase_mean[i % 24] += x[i] / 12.0;
    std::vector<double> oracle(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) oracle[i] = phase_mean[i % 24];
    ModeSet mp = mstl_decompose(x, cfg);
    CHECK(rel_l2(mp.modes[0], oracle) < 0.05);
    double res = 0.0;
    for (double v : mp.residual) res = std::max(res, std::abs(v));
    CHECK(res < 0.05);
}

TEST_CASE("mstl additivity, multiple periods and errors") {
    Rng rng(12);
    std::vector<double> x(24 * 7 * 4);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = std::sin(kTwoPi * i / 24.0) + 0.5 * std::sin(kTwoPi * i / 168.0) + 0.002 * i + 0.2 * rng.normal();
    }
    MstlConfig cfg;
    cfg.periods = {24, 168};
    cfg.loess_windows = {11, 15};
    cfg.iterations = 2;
    ModeSet m = mstl_decompose(x, cfg);
    CHECK(m.size() == 3);
    CHECK(m.names[2] == "trend");
    const auto rec = reconstruct(m);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(rec[i] - x[i]) <= 1e-9);
    CHECK(mstl_decompose(x, cfg).modes == m.modes);

    cfg.periods = {24, 400};
    try {
        mstl_decompose(x, cfg);
        FAIL("expected PeriodTooLong");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::PeriodTooLong);
    }
}

TEST_CASE("loess reproduces lines exactly") {
    std::vector<double> y(30);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = 2.0 - 0.25 * i;
    for (double x : {-1.0, 0.0, 7.0, 29.0, 30.0}) CHECK(loess_at(y, x, 7) == doctest::Approx(2.0 - 0.25 * x));
    CHECK(loess_at(y, 10.0, 100) == doctest::Approx(2.0 - 0.25 * 10));
}

TEST_CASE("reconstruct") {
    ModeSet m;
    m.modes = {{1.0, 2.0, 3.0}};
    m.residual = {0.0, 0.0, 0.0};
    m.input_length = 3;
    CHECK(reconstruct(m) == m.modes[0]);
}

TEST_CASE("param spaces") {
    const auto vmd = param_space(Kind::VMD);
    const auto eemd = param_space(Kind::EEMD);
    const auto mstl = param_space(Kind::MSTL);
    CHECK(vmd.find("K")->lo == 2);
    CHECK(vmd.find("K")->hi == 12);
    CHECK(vmd.find("alpha")->kind == tpe::ParamKind::LogUniform);
    CHECK(vmd.find("alpha")->lo == 100);
    CHECK(vmd.find("alpha")->hi == 10000);
    CHECK(vmd.find("tol")->lo == 1e-8);
    CHECK(vmd.find("tol")->hi == 1e-5);
    CHECK(vmd.find("tau_dual")->choices.size() == 3);
    CHECK(eemd.find("ensembles")->hi == 64);
    CHECK(eemd.find("noise_ratio")->lo == 0.05);
    CHECK(eemd.find("max_imfs")->lo == 4);
    CHECK(mstl.find("iterations")->hi == 3);
    const auto& grid = mstl.find("seasonal_window")->choices;
    CHECK(grid.front() == 7);
    CHECK(grid.back() == 101);
    for (const auto& w : grid) CHECK(w.get<int>() % 2 == 1);

    for (const auto* s : {&vmd, &eemd, &mstl}) {
        const auto back = tpe::space_from_json(tpe::to_json(*s));
        CHECK(tpe::to_json(back) == tpe::to_json(*s));
    }

    // extreme corners of each space are valid configs
    DecompositionConfig base;
    base.kind = Kind::VMD;
    CHECK_NOTHROW(apply_overrides(base, {{"K", 12}, {"alpha", 100.0}, {"tol", 1e-8}, {"tau_dual", 1.0}}));
    base.kind = Kind::EEMD;
    CHECK_NOTHROW(apply_overrides(base, {{"ensembles", 8}, {"noise_ratio", 0.4}, {"max_imfs", 10}}));
    base.kind = Kind::MSTL;
    DecompositionConfig mc = apply_overrides(base, {{"iterations", 3}, {"seasonal_window", 101}});
    CHECK(mc.mstl.loess_windows == std::vector<std::size_t>{101});
    CHECK_THROWS_AS(apply_overrides(base, {{"bogus", 1}}), Error);
}

TEST_CASE("config json and modeset storage round trip") {
    DecompositionConfig cfg;
    cfg.kind = Kind::VMD;
    cfg.vmd.K = 3;
    cfg.vmd.alpha = 1234.5;
    const auto back = decomposition_from_json(to_json(cfg));
    CHECK(to_json(back) == to_json(cfg));

    const auto x = add(tone(300, 0.03), tone(300, 0.21));
    ModeSet m = decompose(x, cfg);
    const auto dir = std::filesystem::temp_directory_path() / "windcast_modes_rt";
    std::filesystem::remove_all(dir);
    save_modeset(dir, m);
    ModeSet l = load_modeset(dir);
    CHECK(l.modes == m.modes);
    CHECK(l.residual == m.residual);
    CHECK(l.center_frequencies == m.center_frequencies);
    CHECK(l.names == m.names);
}
