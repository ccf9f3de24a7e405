#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "windcast/common/io.hpp"
#include "windcast/common/time.hpp"

namespace windcast::eval {

struct MetricReport {
    double nmae = 0.0;
    double nrmse = 0.0;
    std::size_t count = 0;
    double y_max = 0.0;
};

/// Mean absolute error over T * y_max, with y_max = max(y) unless given
/// (e.g. rated capacity). Throws LengthMismatch, ZeroMaxActual.
double nmae(std::span<const double> y, std::span<const double> yhat, std::optional<double> y_max = std::nullopt);
double nrmse(std::span<const double> y, std::span<const double> yhat, std::optional<double> y_max = std::nullopt);
MetricReport metric_report(std::span<const double> y, std::span<const double> yhat,
                           std::optional<double> y_max = std::nullopt);

enum class Granularity { Month, Season, Year };

const char* to_string(Granularity g);
Granularity granularity_from_string(const std::string& text);

struct GroupEntry {
    std::string label;
    MetricReport report;
};

struct GroupedReport {
    Granularity granularity = Granularity::Month;
    std::vector<GroupEntry> entries;     // calendar order
    std::vector<std::string> warnings;   // groups skipped for an all-zero actual
};

/// Metrics per calendar month ("Jan".."Dec"), season ("spring".."winter")
/// or year, each normalized by its own maximum (or by `y_max` if given).
GroupedReport group_by_period(std::span<const Timestamp> timestamps, std::span<const double> y,
                              std::span<const double> yhat, Granularity granularity,
                              std::optional<double> y_max = std::nullopt);

/// The last history value repeated `horizon` times. Throws EmptyHistory.
std::vector<double> persistence_baseline(std::span<const double> history, std::size_t horizon);

Json to_json(const MetricReport& report);
MetricReport metric_report_from_json(const Json& j);
Json to_json(const GroupedReport& report);
GroupedReport grouped_report_from_json(const Json& j);

} // namespace windcast::eval
