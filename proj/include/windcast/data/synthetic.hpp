#pragma once

#include <cstdint>

#include "windcast/data/frame.hpp"

namespace windcast::data {

/// Wind-like toy data: power follows a seasonal cycle, a diurnal tone and a
/// multi-day synoptic tone on top of AR(1) noise, with wind speed and
/// temperature covariates consistent with it.
struct SyntheticOptions {
    int start_year = 2016;
    int years = 3;
    Timestamp resolution = kSecondsPerHour;
    std::uint64_t seed = 7;
    double rated_power = 2000.0;      // kW
    double noise_std = 0.035;         // AR(1) innovation, fraction of rated power per hour
    double missing_fraction = 0.0;    // isolated missing cells
    std::size_t long_gaps = 0;        // multi-day outages
    double outlier_fraction = 0.0;    // temperatures pushed below the physical floor
};

/// Schema of the generated columns: P_avg (target), Ws_avg and Ws_std and
/// Ot_avg (observed_past), rated_power (static).
Schema synthetic_schema();

SeriesFrame generate_synthetic(const SyntheticOptions& options);

} // namespace windcast::data
