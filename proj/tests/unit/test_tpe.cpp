#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "windcast/common/error.hpp"
#include "windcast/tpe/optimizer.hpp"

using namespace windcast;
using namespace windcast::tpe;

namespace {

SearchSpace mixed_space() {
    return SearchSpace{{ParamSpec::uniform("u", -2.0, 3.0), ParamSpec::log_uniform("lr", 1e-4, 1e-1),
                        ParamSpec::int_uniform("k", 2, 12), ParamSpec::categorical("c", {"a", "b", 0.5})}};
}

double quadratic(const Config& c) {
    const double x = c["x"].get<double>();
    return (x - 3.0) * (x - 3.0);
}

double best_after(std::size_t budget, std::uint64_t seed, bool use_tpe) {
    const SearchSpace space{{ParamSpec::uniform("x", 0.0, 10.0)}};
    Rng rng(seed);
    TpeConfig cfg;
    std::vector<Observation> obs;
    double best = INFINITY;
    for (std::size_t i = 0; i < budget; ++i) {
        Config c = use_tpe ? suggest(space, obs, cfg, rng) : sample_random(space, rng);
        const double loss = quadratic(c);
        obs.push_back({c, loss});
        best = std::min(best, loss);
    }
    return best;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace

TEST_CASE("sample_random respects priors") {
    Rng rng(1);
    const SearchSpace one{{ParamSpec::categorical("c", {"a"})}};
    for (int i = 0; i < 20; ++i) CHECK(sample_random(one, rng)["c"] == "a");

    const SearchSpace unit{{ParamSpec::uniform("x", 0.0, 1.0)}};
    for (int i = 0; i < 1000; ++i) {
        const double x = sample_random(unit, rng)["x"].get<double>();
        CHECK((x >= 0.0 && x <= 1.0));
    }

    const SearchSpace logs{{ParamSpec::log_uniform("x", 1e-3, 1e3)}};
    std::vector<double> draws;
    for (int i = 0; i < 10000; ++i) draws.push_back(sample_random(logs, rng)["x"].get<double>());
    const double med = median(draws);
    CHECK(med > 1.0 / 3.0);
    CHECK(med < 3.0);

    const auto space = mixed_space();
    for (int i = 0; i < 200; ++i) CHECK(contains(space, sample_random(space, rng)));
}

TEST_CASE("split_observations") {
    std::vector<Observation> obs;
    for (int i = 0; i < 10; ++i) obs.push_back({Json{{"i", i}}, static_cast<double>((i * 7) % 10)});
    auto s = split_observations(obs, 0.25);
    CHECK(s.good.size() == 3);   // ceil(2.5)
    CHECK(s.good.size() + s.bad.size() == obs.size());
    double max_good = 0.0, min_bad = INFINITY;
    for (const auto& o : s.good) max_good = std::max(max_good, o.loss);
    for (const auto& o : s.bad) min_bad = std::min(min_bad, o.loss);
    CHECK(max_good <= min_bad);

    std::vector<Observation> same;
    for (int i = 0; i < 8; ++i) same.push_back({Json{{"i", i}}, 1.0});
    s = split_observations(same, 0.25);
    REQUIRE(s.good.size() == 2);
    CHECK(s.good[0].config["i"] == 0);
    CHECK(s.good[1].config["i"] == 1);

    s = split_observations({{Json{{"i", 0}}, 0.3}}, 0.25);
    CHECK(s.good.size() == 1);
    CHECK(s.bad.empty());

    std::vector<Observation> failed = {{Json{{"i", 0}}, INFINITY}, {Json{{"i", 1}}, 0.4}};
    s = split_observations(failed, 0.25);
    CHECK(s.good[0].config["i"] == 1);

    CHECK_THROWS_AS(split_observations({}, 0.25), Error);
}

TEST_CASE("parzen density shapes") {
    const auto spec = ParamSpec::uniform("x", 0.0, 4.0);
    ParzenDensity prior(spec, {}, 1.0);
    for (double x : {0.0, 0.7, 2.0, 4.0}) CHECK(prior.density(x) == doctest::Approx(0.25));

    ParzenDensity single(spec, {2.0}, 1.0);
    double best_x = -1.0, best_d = -1.0;
    for (int i = 0; i <= 4000; ++i) {
        const double x = 0.001 * i;
        if (single.density(x) > best_d) {
            best_d = single.density(x);
            best_x = x;
        }
    }
    CHECK(best_x == doctest::Approx(2.0).epsilon(1e-9));

    // normalization: trapezoid integral over the domain
    ParzenDensity several(spec, {0.1, 0.5, 3.9, 2.2, 2.25}, 1.0);
    double integral = 0.0;
    const int steps = 40000;
    for (int i = 0; i <= steps; ++i) {
        const double w = (i == 0 || i == steps) ? 0.5 : 1.0;
        integral += w * several.density(4.0 * i / steps) * 4.0 / steps;
    }
    CHECK(integral == doctest::Approx(1.0).epsilon(1e-6));

    // bandwidths are clamped to [range / min(100, n + 1), range]
    for (double s : several.bandwidths()) {
        CHECK(s >= 4.0 / 6.0 - 1e-12);
        CHECK(s <= 4.0);
    }

    const auto cat = ParamSpec::categorical("c", {"a", "b"});
    ParzenDensity counts(cat, {"a", "a", "b", "a"}, 1.0);
    CHECK(counts.density("a") == doctest::Approx(4.0 / 6.0));
    CHECK(counts.density("b") == doctest::Approx(2.0 / 6.0));

    const auto ints = ParamSpec::int_uniform("k", 2, 12);
    ParzenDensity mass(ints, {3, 3, 10}, 1.0);
    double total = 0.0;
    for (long k = 2; k <= 12; ++k) total += mass.density(k);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(mass.density(3) > mass.density(7));

    const auto logs = ParamSpec::log_uniform("lr", 1e-4, 1e-1);
    ParzenDensity lp(logs, {}, 1.0);
    // uniform in log space
    CHECK(lp.log_density(1e-3) == doctest::Approx(lp.log_density(3e-2)));

    CHECK_THROWS_AS(ParzenDensity(spec, {5.0}, 1.0), Error);
    CHECK_THROWS_AS(ParzenDensity(cat, {"z"}, 1.0), Error);
}

TEST_CASE("parzen samples stay in bounds") {
    Rng rng(5);
    for (const auto& spec : mixed_space().params) {
        std::vector<Json> samples;
        for (int i = 0; i < 4; ++i) samples.push_back(sample_random(SearchSpace{{spec}}, rng)[spec.name]);
        ParzenDensity d(spec, samples, 1.0);
        for (int i = 0; i < 300; ++i) CHECK(contains(SearchSpace{{spec}}, Json{{spec.name, d.sample(rng)}}));
    }
}

TEST_CASE("suggest fallback, validity and determinism") {
    const auto space = mixed_space();
    TpeConfig cfg;
    Rng rng(3);
    CHECK(contains(space, suggest(space, {}, cfg, rng)));

    std::vector<Observation> obs;
    for (int i = 0; i < 12; ++i) {
        Config c = sample_random(space, rng);
        obs.push_back({c, c["u"].get<double>() * c["u"].get<double>() + (c["c"] == "b" ? 0.0 : 1.0)});
    }
    for (int i = 0; i < 50; ++i) CHECK(contains(space, suggest(space, obs, cfg, rng)));
    Rng a(42), b(42);
    CHECK(suggest(space, obs, cfg, a) == suggest(space, obs, cfg, b));
}

TEST_CASE("suggest concentrates on the good cluster") {
    const SearchSpace space{{ParamSpec::uniform("x", 0.0, 10.0)}};
    TpeConfig cfg;
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(seed);
        std::vector<Observation> obs;
        for (int i = 0; i < 3; ++i) obs.push_back({Json{{"x", 7.0}}, 0.0});
        for (int i = 0; i < 9; ++i) obs.push_back({Json{{"x", (i + 0.5) * 10.0 / 9.0}}, 1.0});
        ParzenDensity l(space.params[0], {7.0, 7.0, 7.0}, cfg.prior_weight);
        const double bandwidth = l.bandwidths()[0];
        if (std::abs(suggest(space, obs, cfg, rng)["x"].get<double>() - 7.0) <= bandwidth) ++hits;
    }
    CHECK(hits >= 80);
}

TEST_CASE("tpe beats random search on a quadratic") {
    CHECK(std::sqrt(best_after(100, 2024, true)) < 0.5);
    std::vector<double> tpe_best, random_best;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        tpe_best.push_back(best_after(100, seed, true));
        random_best.push_back(best_after(100, seed, false));
    }
    CHECK(median(tpe_best) < median(random_best));
}

TEST_CASE("observation and config json") {
    Observation o{Json{{"x", 1.5}, {"c", "a"}}, INFINITY};
    const auto back = observation_from_json(to_json(o));
    CHECK(back.config == o.config);
    CHECK(std::isinf(back.loss));
    TpeConfig cfg;
    cfg.gamma = 0.3;
    cfg.seed = 9;
    const auto c2 = tpe_config_from_json(to_json(cfg));
    CHECK(c2.gamma == 0.3);
    CHECK(c2.seed == 9);
    CHECK_THROWS_AS(tpe_config_from_json(Json{{"gamma", 1.5}}), Error);
}
