#include "windcast/data/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "windcast/common/error.hpp"
#include "windcast/common/rng.hpp"

namespace windcast::data {

Schema synthetic_schema() {
    Schema s;
    s.timestamp_column = "Date_time";
    FeatureSpec p{"P_avg", Role::Target, Aggregation::Mean, std::make_pair(0.0, 2000.0), "kW"};
    FeatureSpec ws{"Ws_avg", Role::ObservedPast, Aggregation::Mean, std::make_pair(0.0, 40.0), "m/s"};
    FeatureSpec wsd{"Ws_std", Role::ObservedPast, Aggregation::StdPool, std::make_pair(0.0, 20.0), "m/s"};
    FeatureSpec ot{"Ot_avg", Role::ObservedPast, Aggregation::Mean, std::make_pair(-10.0, 45.0), "degC"};
    FeatureSpec rated{"rated_power", Role::Static, Aggregation::Mean, std::nullopt, "kW"};
    s.features = {p, ws, wsd, ot, rated};
    return s;
}

SeriesFrame generate_synthetic(const SyntheticOptions& o) {
    if (o.years < 1 || o.resolution <= 0 || kSecondsPerHour % o.resolution != 0) {
        throw Error(ErrorKind::InvalidConfig, "synthetic data needs years >= 1 and a resolution dividing one hour");
    }
    const Timestamp start = from_civil(o.start_year, 1, 1);
    const Timestamp stop = from_civil(o.start_year + o.years, 1, 1);
    const auto n = static_cast<std::size_t>((stop - start) / o.resolution);

    const double two_pi = 2.0 * std::numbers::pi;
    const double year_s = 365.25 * kSecondsPerDay;
    const double step_h = static_cast<double>(o.resolution) / kSecondsPerHour;
    const double phi = std::pow(0.97, step_h);
    const double innovation = o.noise_std * std::sqrt((1.0 - phi * phi) / (1.0 - 0.97 * 0.97));

    Rng noise(Rng::derive(o.seed, 0));
    Rng sensor(Rng::derive(o.seed, 1));
    Rng faults(Rng::derive(o.seed, 2));

    SeriesFrame f;
    f.schema = synthetic_schema().features;
    f.resolution = o.resolution;
    f.columns.assign(f.schema.size(), std::vector<double>(n));
    f.timestamps.resize(n);
    auto& power = f.columns[0];
    auto& ws = f.columns[1];
    auto& wsd = f.columns[2];
    auto& ot = f.columns[3];
    auto& rated = f.columns[4];

    double ar = 0.0;
    const Timestamp jan15 = from_civil(o.start_year, 1, 15);
    for (std::size_t i = 0; i < n; ++i) {
        const Timestamp t = start + static_cast<Timestamp>(i) * o.resolution;
        f.timestamps[i] = t;
        const double hours = static_cast<double>(t - start) / kSecondsPerHour;
        const double season = std::cos(two_pi * static_cast<double>(t - jan15) / year_s);
        ar = phi * ar + innovation * noise.normal();
        const double level = 0.42 + 0.16 * season + 0.12 * std::sin(two_pi * hours / 24.0 - 1.0) +
                             0.10 * std::sin(two_pi * hours / 84.0) + ar;
        const double load = std::clamp(level, 0.0, 1.0);
        power[i] = o.rated_power * load;
        ws[i] = std::max(0.0, 3.0 + 9.0 * std::cbrt(load) + 0.25 * sensor.normal());
        wsd[i] = 0.8 + 0.1 * ws[i] + 0.1 * std::abs(sensor.normal());
        ot[i] = 11.0 - 9.0 * season + 4.0 * std::sin(two_pi * hours / 24.0 - 2.0) + sensor.normal();
        rated[i] = o.rated_power;
    }

    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (o.missing_fraction > 0.0) {
        for (std::size_t c = 0; c < 4; ++c) {
            for (std::size_t i = 0; i < n; ++i) {
                if (faults.uniform() < o.missing_fraction) f.columns[c][i] = nan;
            }
        }
    }
    if (o.outlier_fraction > 0.0) {
        for (std::size_t i = 0; i < n; ++i) {
            if (faults.uniform() < o.outlier_fraction) ot[i] = -15.0 - 10.0 * faults.uniform();
        }
    }
    for (std::size_t g = 0; g < o.long_gaps; ++g) {
        const auto len = static_cast<std::size_t>(faults.uniform_int(2, 4) * kSecondsPerDay / o.resolution);
        if (len >= n) break;
        const auto at = static_cast<std::size_t>(faults.uniform_int(0, static_cast<std::int64_t>(n - len - 1)));
        for (std::size_t c = 0; c < f.columns.size(); ++c) {
            std::fill(f.columns[c].begin() + static_cast<std::ptrdiff_t>(at),
                      f.columns[c].begin() + static_cast<std::ptrdiff_t>(at + len), nan);
        }
    }
    return f;
}

} // namespace windcast::data
