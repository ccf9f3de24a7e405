#include "windcast/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "windcast/common/error.hpp"

namespace windcast::eval {

namespace {

double resolve_max(std::span<const double> y, std::span<const double> yhat, std::optional<double> y_max) {
    if (y.size() != yhat.size()) {
        throw Error(ErrorKind::LengthMismatch, "actual has " + std::to_string(y.size()) + " values, forecast has " +
                                                   std::to_string(yhat.size()));
    }
    if (y.empty()) throw Error(ErrorKind::LengthMismatch, "empty series");
    const double m = y_max ? *y_max : *std::max_element(y.begin(), y.end());
    if (!(m > 0.0)) throw Error(ErrorKind::ZeroMaxActual, "maximum actual value is " + std::to_string(m));
    return m;
}

} // namespace

double nmae(std::span<const double> y, std::span<const double> yhat, std::optional<double> y_max) {
    const double m = resolve_max(y, yhat, y_max);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += std::abs(y[i] - yhat[i]);
    return s / static_cast<double>(y.size()) / m;
}

double nrmse(std::span<const double> y, std::span<const double> yhat, std::optional<double> y_max) {
    const double m = resolve_max(y, yhat, y_max);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += (y[i] - yhat[i]) * (y[i] - yhat[i]);
    return std::sqrt(s / static_cast<double>(y.size())) / m;
}

MetricReport metric_report(std::span<const double> y, std::span<const double> yhat, std::optional<double> y_max) {
    const double m = resolve_max(y, yhat, y_max);
    return {nmae(y, yhat, m), nrmse(y, yhat, m), y.size(), m};
}

const char* to_string(Granularity g) {
    switch (g) {
    case Granularity::Month: return "month";
    case Granularity::Season: return "season";
    case Granularity::Year: return "year";
    }
    return "?";
}

Granularity granularity_from_string(const std::string& text) {
    if (text == "month") return Granularity::Month;
    if (text == "season") return Granularity::Season;
    if (text == "year") return Granularity::Year;
    throw Error(ErrorKind::InvalidConfig, "unknown granularity '" + text + "' (expected month, season or year)");
}

GroupedReport group_by_period(std::span<const Timestamp> timestamps, std::span<const double> y,
                              std::span<const double> yhat, Granularity granularity, std::optional<double> y_max) {
    if (timestamps.size() != y.size() || y.size() != yhat.size()) {
        throw Error(ErrorKind::LengthMismatch, "timestamps, actual and forecast lengths differ");
    }
    // key orders groups chronologically within the calendar
    std::map<int, std::pair<std::vector<double>, std::vector<double>>> groups;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const CivilTime c = to_civil(timestamps[i]);
        int key = 0;
        switch (granularity) {
        case Granularity::Month: key = static_cast<int>(c.month); break;
        case Granularity::Season: key = static_cast<int>(season_of_month(c.month)); break;
        case Granularity::Year: key = c.year; break;
        }
        groups[key].first.push_back(y[i]);
        groups[key].second.push_back(yhat[i]);
    }
    GroupedReport out;
    out.granularity = granularity;
    for (const auto& [key, series] : groups) {
        std::string label;
        switch (granularity) {
        case Granularity::Month: label = month_name(static_cast<unsigned>(key)); break;
        case Granularity::Season: label = season_name(static_cast<unsigned>(key)); break;
        case Granularity::Year: label = std::to_string(key); break;
        }
        try {
            out.entries.push_back({label, metric_report(series.first, series.second, y_max)});
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::ZeroMaxActual) throw;
            out.warnings.push_back(label + ": skipped, " + e.what());
        }
    }
    return out;
}

std::vector<double> persistence_baseline(std::span<const double> history, std::size_t horizon) {
    if (history.empty()) throw Error(ErrorKind::EmptyHistory, "persistence needs at least one observation");
    return std::vector<double>(horizon, history.back());
}

Json to_json(const MetricReport& r) {
    return Json{{"nmae", encode_real(r.nmae)}, {"nrmse", encode_real(r.nrmse)}, {"count", r.count},
                {"y_max", encode_real(r.y_max)}};
}

MetricReport metric_report_from_json(const Json& j) {
    try {
        return {decode_real(j.at("nmae")), decode_real(j.at("nrmse")), j.at("count").get<std::size_t>(),
                decode_real(j.at("y_max"))};
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::ParseError, std::string("metric report: ") + e.what());
    }
}

Json to_json(const GroupedReport& r) {
    Json entries = Json::array();
    for (const auto& e : r.entries) {
        Json item = to_json(e.report);
        item["label"] = e.label;
        entries.push_back(item);
    }
    return Json{{"granularity", to_string(r.granularity)}, {"entries", entries}, {"warnings", r.warnings}};
}

GroupedReport grouped_report_from_json(const Json& j) {
    try {
        GroupedReport r;
        r.granularity = granularity_from_string(j.at("granularity").get<std::string>());
        for (const auto& e : j.at("entries")) r.entries.push_back({e.at("label").get<std::string>(), metric_report_from_json(e)});
        if (j.contains("warnings")) r.warnings = j["warnings"].get<std::vector<std::string>>();
        return r;
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::ParseError, std::string("grouped report: ") + e.what());
    }
}

} // namespace windcast::eval
