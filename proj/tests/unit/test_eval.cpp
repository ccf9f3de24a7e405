#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "windcast/common/csv.hpp"
#include "windcast/common/error.hpp"
#include "windcast/common/rng.hpp"
#include "windcast/eval/baselines.hpp"
#include "windcast/eval/report.hpp"

using namespace windcast;
using namespace windcast::eval;

namespace {

std::vector<Timestamp> hourly(int year, std::size_t n) {
    std::vector<Timestamp> ts;
    const Timestamp start = from_civil(year, 1, 1);
    for (std::size_t i = 0; i < n; ++i) ts.push_back(start + static_cast<Timestamp>(i) * kSecondsPerHour);
    return ts;
}

std::size_t count_lines(const std::filesystem::path& p) {
    const std::string text = read_text_file(p);
    return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

} // namespace

TEST_CASE("nmae and nrmse goldens") {
    const std::vector<double> y{0.0, 2.0}, yhat{1.0, 1.0};
    CHECK(nmae(y, yhat) == 0.5);
    CHECK(nrmse(y, yhat) == 0.5);
    CHECK(nmae(y, y) == 0.0);
    CHECK(nrmse(y, y) == 0.0);
    CHECK(nmae(y, yhat, 4.0) == 0.25);

    const std::vector<double> a{3.0, 1.0, 4.0, 1.5}, b{2.5, 1.0, 5.0, 0.0};
    std::vector<double> ac, bc;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ac.push_back(a[i] * 7.25);
        bc.push_back(b[i] * 7.25);
    }
    CHECK(nmae(ac, bc) == doctest::Approx(nmae(a, b)).epsilon(1e-14));
    CHECK(nrmse(ac, bc) == doctest::Approx(nrmse(a, b)).epsilon(1e-14));

    const MetricReport r = metric_report(y, yhat);
    CHECK(r.count == 2);
    CHECK(r.y_max == 2.0);

    const std::vector<double> one{1.0}, zeros{0.0, 0.0};
    CHECK_THROWS_AS(nmae(y, one), Error);
    CHECK_THROWS_AS(nrmse(zeros, zeros), Error);
    try {
        nmae(zeros, zeros);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ZeroMaxActual);
    }
    try {
        nmae(y, one);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::LengthMismatch);
    }
}

TEST_CASE("nrmse is never below nmae") {
    Rng rng(11);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = static_cast<std::size_t>(rng.uniform_int(1, 50));
        std::vector<double> y(n), yhat(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = rng.uniform(0.0, 10.0);
            yhat[i] = rng.uniform(-2.0, 12.0);
        }
        y[0] = std::max(y[0], 0.1);
        const double a = nmae(y, yhat), b = nrmse(y, yhat);
        CHECK(a >= 0.0);
        CHECK(std::isfinite(b));
        CHECK(b >= a * (1.0 - 1e-12));
    }
}

TEST_CASE("grouping by month, season and year") {
    {
        const auto ts = hourly(2017, 24 * 31);
        std::vector<double> y(ts.size(), 1.0), yhat(ts.size(), 0.5);
        const auto g = group_by_period(ts, y, yhat, Granularity::Month);
        REQUIRE(g.entries.size() == 1);
        CHECK(g.entries[0].label == "Jan");
    }
    const auto ts = hourly(2017, 24 * 365);
    Rng rng(3);
    std::vector<double> y(ts.size()), yhat(ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) {
        y[i] = rng.uniform(0.0, 2000.0);
        yhat[i] = y[i] + rng.normal(0.0, 100.0);
    }
    const auto months = group_by_period(ts, y, yhat, Granularity::Month);
    const auto seasons = group_by_period(ts, y, yhat, Granularity::Season);
    const auto years = group_by_period(ts, y, yhat, Granularity::Year);
    REQUIRE(months.entries.size() == 12);
    CHECK(months.entries[2].label == "Mar");
    REQUIRE(seasons.entries.size() == 4);
    CHECK(seasons.entries[0].label == "spring");
    CHECK(seasons.entries[3].label == "winter");
    CHECK(seasons.entries[0].report.count == 24u * (31 + 30 + 31));
    CHECK(seasons.entries[3].report.count == 24u * (31 + 28 + 31));
    REQUIRE(years.entries.size() == 1);
    CHECK(years.entries[0].label == "2017");
    CHECK(years.entries[0].report.nmae == nmae(y, yhat));

    for (auto g : {Granularity::Month, Granularity::Season, Granularity::Year}) {
        for (const auto& e : group_by_period(ts, y, y, g).entries) {
            CHECK(e.report.nmae == 0.0);
            CHECK(e.report.nrmse == 0.0);
        }
    }

    // two groups: the per-group-normalized global nmae is their count-weighted mean
    const auto two = hourly(2017, 24 * 59);
    std::vector<double> y2(two.size()), f2(two.size());
    for (std::size_t i = 0; i < two.size(); ++i) {
        const bool jan = i < 24 * 31;
        y2[i] = (jan ? 10.0 : 40.0) * (1.0 + std::sin(0.1 * static_cast<double>(i)));
        f2[i] = y2[i] + (jan ? 1.0 : 3.0) * std::cos(0.37 * static_cast<double>(i));
    }
    const auto g2 = group_by_period(two, y2, f2, Granularity::Month);
    REQUIRE(g2.entries.size() == 2);
    double global = 0.0;
    for (std::size_t i = 0; i < two.size(); ++i) {
        const double ymax = i < 24 * 31 ? g2.entries[0].report.y_max : g2.entries[1].report.y_max;
        global += std::abs(y2[i] - f2[i]) / ymax;
    }
    global /= static_cast<double>(two.size());
    const double lo = std::min(g2.entries[0].report.nmae, g2.entries[1].report.nmae);
    const double hi = std::max(g2.entries[0].report.nmae, g2.entries[1].report.nmae);
    CHECK(global >= lo);
    CHECK(global <= hi);
    CHECK(global == doctest::Approx((g2.entries[0].report.nmae * 24 * 31 + g2.entries[1].report.nmae * 24 * 28) /
                                    static_cast<double>(two.size()))
                         .epsilon(1e-12));

    // an all-zero month is skipped with a warning
    std::vector<double> z = y2;
    for (std::size_t i = 0; i < 24 * 31; ++i) z[i] = 0.0;
    const auto skipped = group_by_period(two, z, f2, Granularity::Month);
    CHECK(skipped.entries.size() == 1);
    CHECK(skipped.warnings.size() == 1);

    const std::vector<double> shorter(3, 1.0);
    CHECK_THROWS_AS(group_by_period(two, shorter, shorter, Granularity::Month), Error);
    CHECK_THROWS_AS(granularity_from_string("week"), Error);
}

TEST_CASE("persistence baseline") {
    const std::vector<double> h{1.0, 3.0, 5.0};
    CHECK(persistence_baseline(h, 4) == std::vector<double>{5.0, 5.0, 5.0, 5.0});
    CHECK_THROWS_AS(persistence_baseline(std::vector<double>{}, 3), Error);

    const std::vector<double> flat(10, 2.5), future(6, 2.5);
    CHECK(nmae(future, persistence_baseline(flat, 6)) == 0.0);

    // on a ramp with slope s the error at step h is s * h
    std::vector<double> ramp;
    for (int i = 0; i < 20; ++i) ramp.push_back(0.75 * i);
    const auto f = persistence_baseline(std::span<const double>(ramp).first(12), 8);
    for (std::size_t h = 0; h < 8; ++h) CHECK(std::abs(ramp[12 + h] - f[h]) == doctest::Approx(0.75 * (h + 1)));

    // i.i.d. zero-mean target: persistence error stays well away from zero
    Rng rng(5);
    std::vector<double> actual, pred;
    for (int block = 0; block < 200; ++block) {
        std::vector<double> hist(8), next(24);
        for (double& v : hist) v = rng.normal();
        for (double& v : next) v = rng.normal();
        const auto p = persistence_baseline(hist, 24);
        actual.insert(actual.end(), next.begin(), next.end());
        pred.insert(pred.end(), p.begin(), p.end());
    }
    CHECK(nmae(actual, pred) > 0.1);
}

namespace {

tft::WindowData toy_data(std::size_t n, bool constant, std::uint64_t seed) {
    Rng rng(seed);
    tft::WindowData d;
    d.layout.observed_names = {"x"};
    d.layout.known_names = {"hour"};
    d.layout.known_cardinality = {24};
    d.layout.target_name = "y";
    d.observed.assign(1, std::vector<double>(n));
    d.known.assign(1, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        d.timestamps.push_back(static_cast<Timestamp>(i) * kSecondsPerHour);
        d.observed[0][i] = rng.uniform();
        d.known[0][i] = static_cast<double>(i % 24);
        d.target.push_back(constant ? 0.4 : 0.5 + 0.4 * std::sin(2.0 * M_PI * static_cast<double>(i) / 24.0));
    }
    return d;
}

} // namespace

TEST_CASE("mlp and lstm baselines") {
    const tft::WindowData d = toy_data(400, true, 1);
    const auto tr = tft::window_origins(d, 8, 4, 0, 300 * kSecondsPerHour, 1);
    const auto va = tft::window_origins(d, 8, 4, 300 * kSecondsPerHour, 400 * kSecondsPerHour, 4);
    for (BaselineKind kind : {BaselineKind::Mlp, BaselineKind::Lstm}) {
        INFO(to_string(kind));
        BaselineConfig cfg;
        cfg.hidden_size = 8;
        cfg.encoder_length = 8;
        cfg.horizon = 4;
        cfg.batch_size = 16;
        cfg.max_epochs = 50;
        cfg.patience = 50;
        cfg.learning_rate = 1e-2;
        cfg.seed = 2;
        BaselineModel model(kind, cfg, 1);
        const auto hist = train_baseline(model, d, tr, va);
        CHECK(hist.best_val_loss < 1e-4);
        const auto pred = predict_baseline(model, d, va);
        REQUIRE(pred.size() == va.size());
        for (const auto& row : pred) CHECK(row.size() == 4);

        cfg.max_epochs = 3;
        BaselineModel a(kind, cfg, 1), b(kind, cfg, 1);
        const auto ha = train_baseline(a, d, tr, va), hb = train_baseline(b, d, tr, va);
        CHECK(ha.best_val_loss == hb.best_val_loss);
        CHECK(predict_baseline(a, d, va) == predict_baseline(b, d, va));
    }
    BaselineConfig bad;
    bad.horizon = 0;
    CHECK_THROWS_AS(BaselineModel(BaselineKind::Mlp, bad, 1), Error);
    CHECK(baseline_config_from_json(to_json(BaselineConfig{})).hidden_size == 16);
}

TEST_CASE("report export") {
    const auto dir = std::filesystem::temp_directory_path() / "windcast_eval_report";
    std::filesystem::remove_all(dir);
    export_report(dir, {});
    CHECK(count_lines(dir / "scatter.csv") == 1);
    CHECK(count_lines(dir / "box.csv") == 1);
    CHECK(count_lines(dir / "grouped.csv") == 1);
    CHECK(load_metrics(dir / "metrics.json").empty());

    const auto ts = hourly(2017, 24 * 400);
    Rng rng(9);
    std::vector<double> y(ts.size()), f1(ts.size()), f2(ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) {
        y[i] = rng.uniform(0.0, 1500.0);
        f1[i] = y[i] + rng.normal(0.0, 50.0);
        f2[i] = y[i] + rng.normal(0.0, 200.0);
    }
    const std::vector<ModelEvaluation> models{evaluate_forecasts("tft", ts, y, f1), evaluate_forecasts("persistence", ts, y, f2)};
    export_report(dir, models, Json{{"note", "x"}});
    CHECK(count_lines(dir / "scatter.csv") == 1 + 2 * ts.size());
    CHECK(count_lines(dir / "box.csv") == 1 + 2 * ts.size());
    // 12 months, 4 seasons and 2 years per model
    CHECK(count_lines(dir / "grouped.csv") == 1 + 2 * (12 + 4 + 2));

    const auto loaded = load_metrics(dir / "metrics.json");
    REQUIRE(loaded.size() == 2);
    for (std::size_t m = 0; m < 2; ++m) {
        CHECK(to_json(loaded[m]) == to_json(models[m].metrics));
        CHECK(loaded[m].overall.nmae == models[m].metrics.overall.nmae);
    }
    CHECK(read_json_file(dir / "metrics.json")["note"] == "x");

    const auto table = read_csv(dir / "scatter.csv");
    CHECK(table.header == std::vector<std::string>{"timestamp", "actual", "predicted", "model"});
}
