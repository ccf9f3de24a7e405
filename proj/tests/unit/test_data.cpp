#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "windcast/common/error.hpp"
#include "windcast/common/io.hpp"
#include "windcast/common/rng.hpp"
#include "windcast/data/pipeline.hpp"
#include "windcast/data/synthetic.hpp"

using namespace windcast;
using namespace windcast::data;

namespace {

const double kNaN = std::nan("");

std::filesystem::path temp_file(const std::string& name, const std::string& content) {
    const auto dir = std::filesystem::temp_directory_path() / "windcast_data_tests";
    std::filesystem::create_directories(dir);
    const auto p = dir / name;
    write_text_file(p, content);
    return p;
}

std::vector<FeatureSpec> power_schema() {
    return {FeatureSpec{"P_avg", Role::Target, Aggregation::Mean, std::nullopt, "kW"},
            FeatureSpec{"Ws_avg", Role::ObservedPast, Aggregation::Mean, std::nullopt, "m/s"}};
}

SeriesFrame hourly_frame(std::size_t n, Timestamp start = from_civil(2017, 1, 1)) {
    SeriesFrame f;
    f.resolution = kSecondsPerHour;
    f.schema = {FeatureSpec{"y", Role::Target}, FeatureSpec{"ws", Role::ObservedPast},
                FeatureSpec{"temp", Role::ObservedPast}};
    f.columns.assign(3, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) f.timestamps.push_back(start + static_cast<Timestamp>(i) * kSecondsPerHour);
    return f;
}

} // namespace

TEST_CASE("ingest parses a small csv") {
    const auto p = temp_file("three.csv",
                             "Date_time,P_avg,Ws_avg\n"
                             "2017-01-01T00:00:00Z,10.5,4.0\n"
                             "2017-01-01T01:00:00Z,11,4.5\n"
                             "2017-01-01T02:00:00Z,12,5\n");
    SeriesFrame f = ingest_csv(p, power_schema(), "Date_time");
    CHECK(f.rows() == 3);
    CHECK(f.columns.size() == 2);
    CHECK(f.column("P_avg")[0] == 10.5);
    CHECK(f.resolution == kSecondsPerHour);
}

TEST_CASE("ingest marks NaN, empty and garbage cells missing") {
    const auto p = temp_file("nan.csv",
                             "Date_time,P_avg,Ws_avg\n"
                             "2017-01-01T00:00:00Z,NaN,4.0\n"
                             "2017-01-01T01:00:00Z,,abc\n");
    SeriesFrame f = ingest_csv(p, power_schema(), "Date_time");
    CHECK(std::isnan(f.column("P_avg")[0]));
    CHECK(std::isnan(f.column("P_avg")[1]));
    CHECK(std::isnan(f.column("Ws_avg")[1]));
    CHECK(f.column("Ws_avg")[0] == 4.0);
}

TEST_CASE("ingest sorts rows like a reference sort and keeps the last duplicate") {
    Rng rng(5);
    std::vector<std::pair<Timestamp, double>> rows;
    for (int i = 0; i < 50; ++i) rows.emplace_back(from_civil(2017, 3, 1) + rng.uniform_int(0, 30) * 3600, i);
    std::string csv = "ts,P_avg,Ws_avg\n";
    for (auto& [t, v] : rows) csv += format_iso8601(t) + "," + std::to_string(v) + ",1\n";
    SeriesFrame f = ingest_csv(temp_file("shuffled.csv", csv), power_schema(), "ts");

    // reference: for each timestamp the value of the last row carrying it, in ascending time
    std::map<Timestamp, double> ref;
    for (auto& [t, v] : rows) ref[t] = v;
    REQUIRE(f.rows() == ref.size());
    std::size_t i = 0;
    for (auto& [t, v] : ref) {
        CHECK(f.timestamps[i] == t);
        CHECK(f.column("P_avg")[i] == v);
        ++i;
    }
}

TEST_CASE("ingest error paths") {
    CHECK_THROWS_AS(ingest_csv(temp_file("empty.csv", ""), power_schema(), "ts"), Error);
    try {
        ingest_csv(temp_file("nocol.csv", "ts,P_avg\n2017-01-01,1\n"), power_schema(), "ts");
        FAIL("expected MissingColumn");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::MissingColumn);
        CHECK(std::string(e.what()).find("Ws_avg") != std::string::npos);
    }
    try {
        ingest_csv(temp_file("badts.csv", "ts,P_avg,Ws_avg\n2017-01-01,1,1\nnot-a-date,2,2\n"), power_schema(), "ts");
        FAIL("expected UnparsableTimestamp");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::UnparsableTimestamp);
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    try {
        ingest_csv("/nonexistent/x.csv", power_schema(), "ts");
        FAIL("expected FileNotFound");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::FileNotFound);
    }
}

TEST_CASE("clip outliers to physical bounds") {
    SeriesFrame f = hourly_frame(4);
    f.schema[2].physical_bounds = std::make_pair(-10.0, 45.0);
    f.columns[2] = {-15.0, -10.0, 20.0, 50.0};
    f.columns[1] = {-3.0, 100.0, 1.0, 2.0};   // no bounds: untouched
    SeriesFrame c = clip_outliers(f);
    CHECK(c.columns[2] == std::vector<double>{-10.0, -10.0, 20.0, 45.0});
    CHECK(c.columns[1] == f.columns[1]);

    Rng rng(3);
    for (double& v : f.columns[2]) v = rng.uniform(-100, 100);
    c = clip_outliers(f);
    for (double v : c.columns[2]) {
        CHECK(v >= -10.0);
        CHECK(v <= 45.0);
    }
    f.columns[2] = {0.0, 1.0, 2.0, 3.0};
    CHECK(clip_outliers(f).columns[2] == f.columns[2]);
}

TEST_CASE("impute single missing hour from identical neighbour day") {
    SeriesFrame f = hourly_frame(24 * 7);
    for (std::size_t i = 0; i < f.rows(); ++i) {
        f.columns[0][i] = static_cast<double>(i % 24);
        f.columns[1][i] = 5.0 + static_cast<double>(i % 24) * 0.1;
        f.columns[2][i] = 10.0;
    }
    f.columns[0][24 * 3 + 5] = kNaN;
    SeriesFrame out = impute_missing(f);
    CHECK(out.columns[0][24 * 3 + 5] == 5.0);
    CHECK(out.unusable.empty());
}

TEST_CASE("impute chooses the candidate day with the closest weather (brute-force oracle)") {
    Rng rng(17);
    SeriesFrame f = hourly_frame(24 * 9);
    for (std::size_t i = 0; i < f.rows(); ++i) {
        f.columns[0][i] = rng.uniform(0, 100);
        f.columns[1][i] = rng.uniform(0, 20);
        f.columns[2][i] = rng.uniform(-5, 30);
    }
    const std::size_t gap = 24 * 4 + 10;
    // day t-1 carries the same weather as day t, day t+1 does not
    for (std::size_t i = 24 * 4; i < 24 * 5; ++i) {
        f.columns[1][i] = f.columns[1][i - 24];
        f.columns[2][i] = f.columns[2][i - 24];
    }
    f.columns[0][gap] = kNaN;

    // oracle: RMS of scaled weather differences over +-12 h for every shift
    auto scale = [&](std::size_t c) {
        auto [lo, hi] = std::minmax_element(f.columns[c].begin(), f.columns[c].end());
        return std::make_pair(*lo, *hi);
    };
    const auto s1 = scale(1), s2 = scale(2);
    double best = 1e300;
    int best_d = 0;
    for (int d : {-1, 1, -2, 2, -3, 3}) {
        double acc = 0.0;
        int cnt = 0;
        for (int j = -12; j <= 12; ++j) {
            const long a = static_cast<long>(gap) + j, b = a + 24 * d;
            if (a < 0 || b < 0 || b >= static_cast<long>(f.rows())) continue;
            const double d1 = (f.columns[1][a] - f.columns[1][b]) / (s1.second - s1.first);
            const double d2 = (f.columns[2][a] - f.columns[2][b]) / (s2.second - s2.first);
            acc += d1 * d1 + d2 * d2;
            cnt += 2;
        }
        const double dist = std::sqrt(acc / cnt);
        if (dist < best) {
            best = dist;
            best_d = d;
        }
    }
    CHECK(best_d == -1);
    SeriesFrame out = impute_missing(f);
    CHECK(out.columns[0][gap] == f.columns[0][gap - 24]);
}

TEST_CASE("gaps of at least max_gap stay missing and are flagged") {
    SeriesFrame f = hourly_frame(24 * 10);
    for (std::size_t i = 0; i < f.rows(); ++i) {
        f.columns[0][i] = 1.0 + static_cast<double>(i % 24);
        f.columns[1][i] = 4.0;
        f.columns[2][i] = 12.0;
    }
    for (std::size_t i = 24 * 4; i < 24 * 6; ++i) f.columns[0][i] = kNaN;
    f.columns[0][10] = kNaN;
    SeriesFrame out = impute_missing(f, ImputeOptions{kSecondsPerDay});
    REQUIRE(out.unusable.size() == f.rows());
    for (std::size_t i = 24 * 4; i < 24 * 6; ++i) {
        CHECK(std::isnan(out.columns[0][i]));
        CHECK(out.unusable[i] == 1);
    }
    CHECK(out.columns[0][10] == 11.0);
    CHECK(out.unusable[10] == 0);
    // non-missing cells never change
    for (std::size_t c = 0; c < 3; ++c) {
        for (std::size_t i = 0; i < f.rows(); ++i) {
            if (!std::isnan(f.columns[c][i])) CHECK(out.columns[c][i] == f.columns[c][i]);
        }
    }
}

TEST_CASE("impute rejects columns with fewer than two values") {
    SeriesFrame f = hourly_frame(5);
    f.columns[1].assign(5, kNaN);
    f.columns[1][0] = 1.0;
    CHECK_THROWS_AS(impute_missing(f), Error);
}

TEST_CASE("resample aggregations") {
    SeriesFrame f;
    f.resolution = 600;
    f.schema = {FeatureSpec{"p", Role::Target, Aggregation::Mean}, FeatureSpec{"lo", Role::ObservedPast, Aggregation::Min},
                FeatureSpec{"hi", Role::ObservedPast, Aggregation::Max},
                FeatureSpec{"sd", Role::ObservedPast, Aggregation::StdPool}};
    const Timestamp t0 = from_civil(2017, 5, 1);
    for (int i = 0; i < 12; ++i) f.timestamps.push_back(t0 + i * 600);
    std::vector<double> seq{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
    f.columns = {seq, seq, seq, seq};
    SeriesFrame h = resample(f, 3600);
    REQUIRE(h.rows() == 2);
    CHECK(h.timestamps[0] == t0);
    CHECK(h.columns[0][0] == 3.5);
    CHECK(h.columns[1][0] == 1.0);
    CHECK(h.columns[2][0] == 6.0);
    CHECK(h.columns[3][0] == doctest::Approx(std::sqrt((1 + 4 + 9 + 16 + 25 + 36) / 6.0)));
    CHECK(h.columns[0][1] == 9.5);

    for (auto& c : f.columns) std::fill(c.begin(), c.end(), 2.75);
    h = resample(f, 3600);
    for (const auto& c : h.columns) CHECK(c[0] == 2.75);

    f.columns[0][7] = kNaN;
    h = resample(f, 3600);
    CHECK(!std::isnan(h.columns[0][0]));
    CHECK(std::isnan(h.columns[0][1]));

    CHECK_THROWS_AS(resample(f, 900), Error);
}

TEST_CASE("resample identity and idempotence") {
    SyntheticOptions o;
    o.years = 1;
    o.resolution = 600;
    SeriesFrame raw = generate_synthetic(o);
    raw = raw.slice_rows(0, 6 * 24 * 20);
    SeriesFrame same = resample(raw, 600);
    CHECK(same.timestamps == raw.timestamps);
    CHECK(same.columns == raw.columns);

    SeriesFrame h1 = resample(raw, 3600);
    SeriesFrame h2 = resample(h1, 3600);
    CHECK(h1.timestamps == h2.timestamps);
    CHECK(h1.columns == h2.columns);
    CHECK(h1.rows() == 24 * 20);
}

TEST_CASE("resample fills absent records with missing bins") {
    SeriesFrame f = hourly_frame(6);
    f.timestamps.erase(f.timestamps.begin() + 2);
    for (auto& c : f.columns) c.erase(c.begin() + 2);
    SeriesFrame r = resample(f, 3600);
    CHECK(r.rows() == 6);
    CHECK(std::isnan(r.columns[0][2]));
}

TEST_CASE("calendar features and season mapping") {
    SeriesFrame f = hourly_frame(1, from_civil(2017, 4, 15, 12));
    SeriesFrame c = add_calendar_features(f);
    CHECK(c.column("month")[0] == 4);
    CHECK(c.column("season")[0] == 0);
    CHECK(c.column("hour")[0] == 12);
    CHECK(std::string(season_name(0)) == "spring");
    CHECK(c.spec("month").role == Role::KnownFuture);

    f.timestamps[0] = from_civil(2017, 12, 1);
    CHECK(add_calendar_features(f).column("season")[0] == 3);
    f.timestamps[0] = from_civil(2017, 7, 1);
    CHECK(add_calendar_features(f).column("season")[0] == 1);
    f.timestamps[0] = from_civil(2017, 10, 1);
    CHECK(add_calendar_features(f).column("season")[0] == 2);

    SeriesFrame w = hourly_frame(24 * 15);
    SeriesFrame wc = add_calendar_features(w);
    for (std::size_t i = 0; i + 24 * 7 < w.rows(); ++i) {
        CHECK(wc.column("day_of_week")[i] == wc.column("day_of_week")[i + 24 * 7]);
    }
    // 2017-01-02 was a Monday
    CHECK(wc.column("day_of_week")[24] == 0);
}

TEST_CASE("min-max normalization") {
    SeriesFrame f = hourly_frame(3);
    f.columns[0] = {0, 5, 10};
    f.columns[1] = {3, 3, 3};
    auto [n, p] = normalize_minmax(f);
    CHECK(n.columns[0] == std::vector<double>{0, 0.5, 1});
    CHECK(n.columns[1] == std::vector<double>{0, 0, 0});
    CHECK(p.ranges["ws"] == std::make_pair(3.0, 3.0));

    SeriesFrame t = hourly_frame(1);
    t.columns[0] = {12};
    t.columns[1] = {3};
    t.columns[2] = {0};
    auto [nt, pt] = normalize_minmax(t, &p);
    CHECK(nt.columns[0][0] == doctest::Approx(1.2).epsilon(1e-15));
    CHECK(pt.ranges == p.ranges);

    CHECK(denormalize(0.5, {0.0, 10.0}) == 5.0);
    CHECK(denormalize(0.0, {3.0, 3.0}) == 3.0);
    CHECK_THROWS_AS(denormalize(std::vector<double>{1.0}, p, "nope"), Error);

    // calendar codes pass through
    SeriesFrame cal = add_calendar_features(hourly_frame(30));
    auto [nc, pc] = normalize_minmax(cal);
    CHECK(nc.column("hour") == cal.column("hour"));
    CHECK(pc.ranges.count("hour") == 0);
}

TEST_CASE("normalize then denormalize is identity within 1e-12 relative") {
    Rng rng(23);
    SeriesFrame f = hourly_frame(500);
    for (auto& c : f.columns) {
        const double lo = rng.uniform(-1000, 0), hi = rng.uniform(1, 5000);
        for (double& v : c) v = rng.uniform(lo, hi);
    }
    auto [n, p] = normalize_minmax(f);
    for (std::size_t c = 0; c < f.columns.size(); ++c) {
        const auto back = denormalize(n.columns[c], p, f.schema[c].name);
        const auto range = p.ranges[f.schema[c].name];
        const double mag = std::max(std::abs(range.first), std::abs(range.second));
        for (std::size_t i = 0; i < back.size(); ++i) {
            CHECK(std::abs(back[i] - f.columns[c][i]) <= 1e-12 * mag);
        }
    }
    const Json j = to_json(p);
    CHECK(normalization_from_json(j).ranges == p.ranges);
}

TEST_CASE("split by year") {
    SeriesFrame f = hourly_frame(0);
    for (int y = 2012; y <= 2018; ++y) {
        f.timestamps.push_back(from_civil(y, 6, 1));
        for (auto& c : f.columns) c.push_back(y);
    }
    DatasetSplit s = split_by_year(f, {2012, 2013, 2014, 2015}, {2016}, {2017, 2018});
    CHECK(s.train.rows() == 4);
    CHECK(s.val.rows() == 1);
    CHECK(s.test.rows() == 2);
    CHECK(s.train.rows() + s.val.rows() + s.test.rows() == f.rows());
    CHECK(s.train.timestamps.back() < s.val.timestamps.front());
    CHECK(s.val.timestamps.back() < s.test.timestamps.front());

    try {
        split_by_year(f, {2012, 2016}, {2016}, {2017});
        FAIL("expected OverlappingYears");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::OverlappingYears);
    }
    SeriesFrame only2016 = hourly_frame(48, from_civil(2016, 3, 1));
    try {
        split_by_year(only2016, {2012, 2013, 2014, 2015}, {2016}, {2017, 2018});
        FAIL("expected EmptySplit");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::EmptySplit);
    }
}

TEST_CASE("schema json round trip and validation") {
    Schema s = synthetic_schema();
    Schema back = schema_from_json(to_json(s));
    REQUIRE(back.features.size() == s.features.size());
    for (std::size_t i = 0; i < s.features.size(); ++i) {
        CHECK(back.features[i].name == s.features[i].name);
        CHECK(back.features[i].role == s.features[i].role);
        CHECK(back.features[i].aggregation == s.features[i].aggregation);
        CHECK(back.features[i].physical_bounds == s.features[i].physical_bounds);
    }
    auto two_targets = s.features;
    two_targets[1].role = Role::Target;
    CHECK_THROWS_AS(validate_schema(two_targets), Error);
    auto dup = s.features;
    dup[1].name = dup[0].name;
    CHECK_THROWS_AS(validate_schema(dup), Error);
}

TEST_CASE("frame save and load round trip") {
    SyntheticOptions o;
    o.years = 1;
    o.missing_fraction = 0.01;
    SeriesFrame f = add_calendar_features(generate_synthetic(o).slice_rows(0, 200));
    f.unusable.assign(f.rows(), 0);
    f.unusable[7] = 1;
    const auto dir = std::filesystem::temp_directory_path() / "windcast_frame_rt";
    std::filesystem::remove_all(dir);
    save_frame(dir, f);
    SeriesFrame g = load_frame(dir);
    CHECK(g.timestamps == f.timestamps);
    CHECK(g.resolution == f.resolution);
    CHECK(g.unusable == f.unusable);
    REQUIRE(g.columns.size() == f.columns.size());
    for (std::size_t c = 0; c < f.columns.size(); ++c) {
        for (std::size_t i = 0; i < f.rows(); ++i) {
            if (std::isnan(f.columns[c][i])) CHECK(std::isnan(g.columns[c][i]));
            else CHECK(g.columns[c][i] == f.columns[c][i]);
        }
    }
    CHECK(g.spec("month").code_offset == 1);
}

TEST_CASE("synthetic data is deterministic and physically bounded") {
    SyntheticOptions o;
    o.years = 1;
    SeriesFrame a = generate_synthetic(o), b = generate_synthetic(o);
    CHECK(a.columns == b.columns);
    CHECK(a.rows() == 366 * 24);   // 2016 is a leap year
    for (double v : a.target()) {
        CHECK(v >= 0.0);
        CHECK(v <= 2000.0);
    }
}

TEST_CASE("interpolate_missing") {
    auto v = interpolate_missing({kNaN, 1.0, kNaN, kNaN, 4.0, kNaN});
    CHECK(v == std::vector<double>{1.0, 1.0, 2.0, 3.0, 4.0, 4.0});
}
