#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "windcast/common/error.hpp"
#include "windcast/common/rng.hpp"
#include "windcast/data/synthetic.hpp"
#include "windcast/eval/metrics.hpp"
#include "windcast/tuner/tuner.hpp"

using namespace windcast;
using namespace windcast::tuner;
using tpe::ParamSpec;

namespace {

TunerConfig analytic_config() {
    TunerConfig c;
    c.u_space.params = {ParamSpec::uniform("a", 0.0, 1.0), ParamSpec::int_uniform("K", 2, 6)};
    c.v_space.params = {ParamSpec::uniform("b", 0.0, 1.0)};
    c.n_init = 4;
    c.n_max = 10;
    c.patience = 0;
    c.seed = 17;
    return c;
}

// Separable bowl: optimum at a = 0.3, K = 4, b = 0.7.
double bowl(const tpe::Config& u, const tpe::Config& v) {
    const double a = u.at("a").get<double>(), b = v.at("b").get<double>();
    const double K = u.at("K").get<double>();
    return (a - 0.3) * (a - 0.3) + 0.01 * (K - 4) * (K - 4) + (b - 0.7) * (b - 0.7);
}

const Evaluator analytic = guarded(bowl);

void check_invariants(const TunerState& s, const TunerConfig& cfg) {
    CHECK(s.observations.size() <= cfg.n_init + 2 * cfg.n_max);
    std::size_t accepted = 0;
    for (const auto& t : s.trials) {
        if (t.phase == "init") continue;
        if (t.accepted) {
            ++accepted;
            CHECK(t.reference_loss - t.loss > cfg.theta);
        } else {
            CHECK_FALSE(t.reference_loss - t.loss > cfg.theta);
        }
    }
    CHECK(s.observations.size() == cfg.n_init + accepted);
    double best = s.observations[0].loss;
    for (const auto& e : s.observations) best = std::min(best, e.loss);
    CHECK(s.best().loss == best);
    const auto curve = best_curve(s, cfg.n_init);
    for (std::size_t i = 1; i < curve.size(); ++i) CHECK(curve[i] <= curve[i - 1]);
}

} // namespace

TEST_CASE("initialization") {
    TunerConfig cfg = analytic_config();
    cfg.n_init = 1;
    const TunerState one = initialize(cfg, analytic);
    CHECK(one.observations.size() == 1);

    cfg.n_init = 5;
    const TunerState five = initialize(cfg, analytic);
    REQUIRE(five.observations.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) {
        for (std::size_t j = i + 1; j < 5; ++j) {
            CHECK_FALSE((five.observations[i].u == five.observations[j].u && five.observations[i].v == five.observations[j].v));
        }
        CHECK(tpe::contains(cfg.u_space, five.observations[i].u));
        CHECK(tpe::contains(cfg.v_space, five.observations[i].v));
        CHECK(five.observations[i].loss == bowl(five.observations[i].u, five.observations[i].v));
    }
    std::size_t argmin = 0;
    for (std::size_t i = 1; i < 5; ++i) {
        if (five.observations[i].loss < five.observations[argmin].loss) argmin = i;
    }
    CHECK(five.best_index() == argmin);

    // tiny discrete spaces still give distinct pairs while possible
    TunerConfig small = cfg;
    small.u_space.params = {ParamSpec::int_uniform("K", 2, 3)};
    small.v_space.params = {ParamSpec::categorical("h", {Json(8), Json(16)})};
    small.n_init = 4;
    const TunerState s = initialize(small, guarded([](const tpe::Config&, const tpe::Config&) { return 1.0; }));
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = i + 1; j < 4; ++j) {
            CHECK_FALSE((s.observations[i].u == s.observations[j].u && s.observations[i].v == s.observations[j].v));
        }
    }

    const Evaluator failing = guarded([](const tpe::Config&, const tpe::Config&) -> double {
        throw Error(ErrorKind::SignalTooShort, "boom");
    });
    try {
        initialize(cfg, failing);
        FAIL("expected AllTrialsFailed");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::AllTrialsFailed);
    }
    const EvalResult r = failing(Json::object(), Json::object());
    CHECK(std::isinf(r.loss));
    CHECK(r.failure.find("boom") != std::string::npos);
    CHECK(std::isinf(guarded([](const tpe::Config&, const tpe::Config&) { return NAN; })({}, {}).loss));
}

TEST_CASE("alternating steps") {
    SUBCASE("theta = inf freezes the observation set") {
        TunerConfig cfg = analytic_config();
        cfg.theta = std::numeric_limits<double>::infinity();
        TunerState s = initialize(cfg, analytic);
        const double best = s.best().loss;
        for (int i = 0; i < 10; ++i) step(s, cfg, analytic);
        CHECK(s.observations.size() == cfg.n_init);
        CHECK(s.best().loss == best);
        CHECK(s.trials.size() == cfg.n_init + 20);
        check_invariants(s, cfg);
    }
    SUBCASE("theta = 0 accepts strict improvements") {
        TunerConfig cfg = analytic_config();
        TunerState s = initialize(cfg, analytic);
        const double initial = s.best().loss;
        for (int i = 0; i < 10; ++i) step(s, cfg, analytic);
        CHECK(s.observations.size() > cfg.n_init);
        CHECK(s.best().loss < initial);
        CHECK(s.iteration == 10);
        check_invariants(s, cfg);
        CHECK(best_curve(s, cfg.n_init).size() == 11);
    }
    SUBCASE("conditioned proposals keep the frozen coordinate") {
        TunerConfig cfg = analytic_config();
        TunerState s = initialize(cfg, analytic);
        const Entry best = s.best();
        step(s, cfg, analytic);
        const Trial& u_trial = s.trials[cfg.n_init];
        CHECK(u_trial.phase == "U");
        CHECK(u_trial.v == best.v);
        CHECK(u_trial.reference_loss == best.loss);
        const Trial& v_trial = s.trials[cfg.n_init + 1];
        CHECK(v_trial.phase == "V");
        std::size_t after_u = 0;
        for (std::size_t i = 0; i < s.observations.size(); ++i) {
            if (s.observations[i].loss < s.observations[after_u].loss) after_u = i;
        }
        CHECK(v_trial.u == s.observations[after_u].u);
    }
}

TEST_CASE("repeated proposals are not re-evaluated") {
    TunerConfig cfg = analytic_config();
    cfg.u_space.params = {ParamSpec::int_uniform("K", 2, 3)};
    cfg.v_space.params = {ParamSpec::categorical("b", {Json(0.1), Json(0.7)})};
    cfg.n_init = 2;
    cfg.n_max = 6;
    std::size_t calls = 0;
    const Evaluator counting = guarded([&](const tpe::Config& u, const tpe::Config& v) {
        ++calls;
        return std::abs(u.at("K").get<double>() - 3) + std::abs(v.at("b").get<double>() - 0.7);
    });
    TunerState s = initialize(cfg, counting);
    for (int i = 0; i < 6; ++i) step(s, cfg, counting);
    std::set<std::string> distinct;
    std::size_t reused = 0;
    for (const auto& t : s.trials) {
        distinct.insert(t.u.dump() + t.v.dump());
        if (t.reused) {
            ++reused;
            CHECK_FALSE(t.accepted);
        }
    }
    CHECK(calls == distinct.size());
    CHECK(reused == s.trials.size() - distinct.size());
    CHECK(reused > 0);
    check_invariants(s, cfg);
}

TEST_CASE("run, early stop and resume") {
    TunerConfig cfg = analytic_config();
    cfg.n_max = 0;
    TunerState init_only;
    run(init_only, cfg, analytic);
    CHECK(init_only.observations.size() == cfg.n_init);
    CHECK(init_only.trials.size() == cfg.n_init);

    // a flat objective never improves, so patience ends the run
    TunerConfig flat = analytic_config();
    flat.patience = 5;
    flat.n_max = 50;
    TunerState f;
    run(f, flat, guarded([](const tpe::Config&, const tpe::Config&) { return 2.0; }));
    CHECK(f.iteration == 5);
    CHECK(f.idle_steps == 5);

    cfg.n_max = 8;
    TunerState full;
    std::size_t callbacks = 0;
    run(full, cfg, analytic, [&](const TunerState&) { ++callbacks; });
    CHECK(callbacks == 9);
    check_invariants(full, cfg);
    const std::string reference = study_to_json(cfg, full).dump();

    TunerState again;
    run(again, cfg, analytic);
    CHECK(study_to_json(cfg, again).dump() == reference);

    // stop after three steps, round-trip through text, finish
    TunerState partial = initialize(cfg, analytic);
    for (int i = 0; i < 3; ++i) step(partial, cfg, analytic);
    const std::string saved = study_to_json(cfg, partial).dump(2);
    auto [cfg2, resumed] = study_from_json(Json::parse(saved));
    CHECK(to_json(cfg2) == to_json(cfg));
    run(resumed, cfg2, analytic);
    CHECK(study_to_json(cfg2, resumed).dump() == reference);

    const Json study = study_to_json(cfg, full);
    CHECK(study["best"]["loss"].get<double>() == full.best().loss);
    CHECK(study["finished"].get<bool>());
}

TEST_CASE("tuner config json") {
    TunerConfig c = analytic_config();
    c.theta = std::numeric_limits<double>::infinity();
    c.evaluation_split = EvalSpan::Test;
    c.pipeline.scope = DecompositionScope::CausalWindow;
    const TunerConfig back = tuner_config_from_json(to_json(c));
    CHECK(to_json(back) == to_json(c));
    CHECK(std::isinf(back.theta));

    const TunerConfig defaults = tuner_config_from_json(Json::object());
    CHECK(defaults.u_space.find("K") != nullptr);
    CHECK(defaults.v_space.find("hidden_size") != nullptr);
    CHECK(defaults.evaluation_split == EvalSpan::Validation);
    CHECK_THROWS_AS(tuner_config_from_json(Json{{"n_init", 0}}), Error);
    CHECK_THROWS_AS(tuner_config_from_json(Json{{"theta", -1.0}}), Error);
    CHECK_THROWS_AS(tuner_config_from_json(Json{{"bogus", 1}}), Error);
    CHECK_THROWS_AS(tuner_config_from_json(Json{{"evaluation_split", "train"}}), Error);
}

// ------------------------------------------------------------ real pipeline

namespace {

data::DatasetSplit slice_split(const data::SeriesFrame& frame, std::size_t a, std::size_t b, std::size_t c) {
    data::DatasetSplit s;
    s.train = frame.slice_rows(0, a);
    s.val = frame.slice_rows(a, b);
    s.test = frame.slice_rows(b, c);
    return s;
}

data::DatasetSplit synthetic_split() {
    data::SyntheticOptions o;
    o.years = 1;
    o.seed = 3;
    const data::SeriesFrame frame = data::generate_synthetic(o);
    return slice_split(frame, 1200, 1500, 1800);
}

tft::TftConfig tiny_model() {
    tft::TftConfig v;
    v.hidden_size = 8;
    v.num_heads = 2;
    v.encoder_length = 24;
    v.horizon = 12;
    v.batch_size = 32;
    v.max_epochs = 3;
    v.patience = 2;
    v.max_train_windows = 128;
    v.dropout = 0.0;
    v.seed = 1;
    return v;
}

decomp::DecompositionConfig vmd(std::size_t K) {
    decomp::DecompositionConfig d;
    d.kind = decomp::Kind::VMD;
    d.vmd.K = K;
    d.vmd.max_iter = 200;
    return d;
}

} // namespace

TEST_CASE("series preparation") {
    data::DatasetSplit split = synthetic_split();
    // knock a hole into validation: three rows go missing
    std::vector<bool> keep(split.val.rows(), true);
    keep[10] = keep[11] = keep[12] = false;
    split.val = split.val.filter_rows(keep);
    const PreparedSeries s = prepare_series(split);
    CHECK(s.frame.rows() == 1800);
    CHECK(s.frame.unusable[1210] == 1);
    CHECK(s.frame.unusable[1209] == 0);
    CHECK(std::isnan(s.actual[1211]));
    CHECK(std::isfinite(s.filled[1211]));
    CHECK(s.frame.has_column("hour"));
    CHECK(s.layout.known_names.size() == 4);
    for (std::size_t r = 1; r < s.frame.rows(); ++r) CHECK(s.frame.timestamps[r] - s.frame.timestamps[r - 1] == kSecondsPerHour);
    // training rows span [0, 1] after scaling
    const auto& ws = s.frame.column("Ws_avg");
    double lo = 1e9, hi = -1e9;
    for (std::size_t r = 0; r < 1200; ++r) {
        lo = std::min(lo, ws[r]);
        hi = std::max(hi, ws[r]);
    }
    CHECK(lo == doctest::Approx(0.0));
    CHECK(hi == doctest::Approx(1.0));
    CHECK(s.row_of(s.val_begin) == 1200);
    CHECK(s.row_of(s.test_begin) == 1500);
    CHECK(span_bounds(s, EvalSpan::Test).second == s.end);

    data::DatasetSplit bad = split;
    std::swap(bad.train, bad.test);
    CHECK_THROWS_AS(prepare_series(bad), Error);
}

TEST_CASE("pipeline forecasts and persistence") {
    const PreparedSeries s = prepare_series(synthetic_split());
    const TrainedPipeline p = fit_pipeline(s, vmd(3), tiny_model());
    CHECK(p.models.size() == 3);
    CHECK(p.ranges.size() == 3);
    const SpanForecast f = forecast_span(p, s, s.test_begin, s.end);
    CHECK(f.origins.size() == 300 / 12);
    CHECK(f.actual.size() == 300);
    for (std::size_t i = 1; i < f.origins.size(); ++i) CHECK(f.origins[i] - f.origins[i - 1] >= 12 * kSecondsPerHour);
    for (double v : f.predicted) CHECK(v >= 0.0);
    const double loss = eval::nmae(f.actual, f.predicted);
    CHECK(std::isfinite(loss));

    // quantile forecast at the first origin: the median matches the span forecast
    const std::size_t origin = s.row_of(f.origins[0]);
    const auto q = forecast_quantiles(p, s, origin);
    REQUIRE(q.size() == 12);
    for (std::size_t j = 0; j < 12; ++j) {
        REQUIRE(q[j].size() == 3);
        CHECK(q[j][1] == doctest::Approx(f.forecast[0][j]).epsilon(1e-12));
    }
    CHECK_THROWS_AS(forecast_quantiles(p, s, 5), Error);

    const auto dir = std::filesystem::temp_directory_path() / "windcast_pipeline";
    std::filesystem::remove_all(dir);
    save_pipeline(dir, p);
    const TrainedPipeline loaded = load_pipeline(dir);
    const SpanForecast g = forecast_span(loaded, s, s.test_begin, s.end);
    CHECK(g.predicted == f.predicted);

    const SpanForecast naive = persistence_span(s, 24, 12, s.test_begin, s.end);
    CHECK(naive.origins == f.origins);
    for (std::size_t i = 0; i < naive.origins.size(); ++i) {
        const std::size_t t = s.row_of(naive.origins[i]);
        for (double v : naive.forecast[i]) CHECK(v == s.actual[t - 1]);
    }

    // no decomposition: one model on the target itself, zero residual
    const TrainedPipeline plain = fit_pipeline(s, std::nullopt, tiny_model());
    CHECK(plain.models.size() == 1);
    CHECK(std::isfinite(eval::nmae(forecast_span(plain, s, s.test_begin, s.end).actual,
                                   forecast_span(plain, s, s.test_begin, s.end).predicted)));
}

TEST_CASE("evaluate: determinism, untrained models, planted oracle") {
    const PreparedSeries s = prepare_series(synthetic_split());
    TunerConfig cfg;
    cfg.u_base = vmd(2);
    cfg.v_base = tiny_model();
    const tpe::Config u{{"K", 2}}, v{{"hidden_size", 8}};
    const double a = evaluate(cfg, s, u, v), b = evaluate(cfg, s, u, v);
    CHECK(std::isfinite(a));
    CHECK(a == b);

    // max_epochs = 0: the loss of the freshly initialized models
    cfg.v_base.max_epochs = 0;
    const double untrained = evaluate(cfg, s, u, v);
    CHECK(std::isfinite(untrained));
    TrainedPipeline manual;
    manual.decomposition = decomp::apply_overrides(cfg.u_base, u);
    manual.model_config = tft::apply_overrides(cfg.v_base, v);
    manual.modes = decomp::decompose(s.filled, *manual.decomposition);
    for (std::size_t m = 0; m < manual.modes.size(); ++m) {
        const auto& mode = manual.modes.modes[m];
        const auto [lo, hi] = std::minmax_element(mode.begin(), mode.begin() + 1200);
        manual.ranges.emplace_back(*lo, *hi);
        tft::TftConfig c = manual.model_config;
        c.seed = Rng::derive(manual.model_config.seed, m);
        manual.models.push_back(std::make_unique<tft::TftModel>(c, s.layout));
    }
    const auto [from, to] = span_bounds(s, EvalSpan::Validation);
    const SpanForecast mf = forecast_span(manual, s, from, to);
    CHECK(untrained == eval::nmae(mf.actual, mf.predicted));

    // the target is a known real covariate shifted by nothing: forecastable exactly
    data::SeriesFrame frame;
    Rng rng(4);
    const std::size_t n = 1400;
    std::vector<double> known(n), target(n), obs(n);
    double phase = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        frame.timestamps.push_back(static_cast<Timestamp>(i) * kSecondsPerHour);
        phase += 0.05 + 0.1 * rng.uniform();
        known[i] = 1000.0 + 800.0 * std::sin(phase);
        target[i] = known[i];
        obs[i] = rng.uniform();
    }
    frame.resolution = kSecondsPerHour;
    data::FeatureSpec t{"power", data::Role::Target};
    data::FeatureSpec k{"schedule", data::Role::KnownFuture};
    data::FeatureSpec o{"noise", data::Role::ObservedPast};
    frame.set_column(t, target);
    frame.set_column(k, known);
    frame.set_column(o, obs);
    const PreparedSeries planted = prepare_series(slice_split(frame, 1000, 1200, 1400));
    CHECK(planted.layout.known_names == std::vector<std::string>{"schedule"});
    TunerConfig pc;
    pc.u_base = vmd(2);
    pc.v_base = tiny_model();
    pc.v_base.max_epochs = 30;
    pc.v_base.patience = 30;
    pc.v_base.max_train_windows = 0;
    pc.v_base.learning_rate = 5e-3;
    const double planted_loss = evaluate(pc, planted, Json::object(), Json::object());
    INFO("planted loss ", planted_loss);
    CHECK(planted_loss < 0.05);
}

TEST_CASE("causal-window scope") {
    const PreparedSeries s = prepare_series(synthetic_split());
    PipelineOptions opts;
    opts.scope = DecompositionScope::CausalWindow;
    opts.causal_window = 240;
    const TrainedPipeline p = fit_pipeline(s, vmd(2), tiny_model(), opts);
    // the fitted decomposition stops where the test split starts
    CHECK(p.modes.input_length == 1500);
    const SpanForecast f = forecast_span(p, s, s.test_begin, s.end);
    CHECK(f.origins.size() == 25);
    CHECK(std::isfinite(eval::nmae(f.actual, f.predicted)));

    // the forecast at an origin ignores every later sample
    PreparedSeries cut = s;
    const std::size_t origin = s.row_of(f.origins[3]);
    for (std::size_t r = origin; r < cut.filled.size(); ++r) cut.filled[r] += 500.0;
    const auto a = forecast_quantiles(p, s, origin);
    const auto b = forecast_quantiles(p, cut, origin);
    CHECK(a == b);

    opts.causal_window = 10;
    CHECK_THROWS_AS(fit_pipeline(s, vmd(2), tiny_model(), opts), Error);
}
