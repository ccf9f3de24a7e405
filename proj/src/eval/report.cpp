#include "windcast/eval/report.hpp"

#include <cmath>
#include <sstream>

#include "windcast/common/csv.hpp"
#include "windcast/common/error.hpp"

namespace windcast::eval {

ModelEvaluation evaluate_forecasts(const std::string& model, std::vector<Timestamp> timestamps,
                                   std::vector<double> actual, std::vector<double> predicted,
                                   std::optional<double> y_max) {
    ModelEvaluation e;
    e.metrics.model = model;
    e.metrics.overall = metric_report(actual, predicted, y_max);
    for (Granularity g : {Granularity::Month, Granularity::Season, Granularity::Year}) {
        e.metrics.grouped.push_back(group_by_period(timestamps, actual, predicted, g, y_max));
    }
    e.timestamps = std::move(timestamps);
    e.actual = std::move(actual);
    e.predicted = std::move(predicted);
    return e;
}

Json to_json(const ModelMetrics& m) {
    Json grouped = Json::array();
    for (const auto& g : m.grouped) grouped.push_back(to_json(g));
    return Json{{"model", m.model}, {"overall", to_json(m.overall)}, {"grouped", grouped}};
}

ModelMetrics model_metrics_from_json(const Json& j) {
    try {
        ModelMetrics m;
        m.model = j.at("model").get<std::string>();
        m.overall = metric_report_from_json(j.at("overall"));
        for (const auto& g : j.at("grouped")) m.grouped.push_back(grouped_report_from_json(g));
        return m;
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::ParseError, std::string("model metrics: ") + e.what());
    }
}

void export_report(const std::filesystem::path& dir, const std::vector<ModelEvaluation>& models, const Json& extra) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::IoError, "cannot create '" + dir.string() + "': " + ec.message());

    Json metrics = extra.is_object() ? extra : Json::object();
    Json list = Json::array();
    for (const auto& m : models) list.push_back(to_json(m.metrics));
    metrics["models"] = list;
    write_json_file(dir / "metrics.json", metrics);

    std::ostringstream scatter, box, grouped;
    scatter << "timestamp,actual,predicted,model\n";
    box << "model,abs_error\n";
    grouped << "model,granularity,label,nmae,nrmse\n";
    for (const auto& m : models) {
        const std::string name = csv_field(m.metrics.model);
        for (std::size_t i = 0; i < m.actual.size(); ++i) {
            scatter << format_iso8601(m.timestamps[i]) << ',' << format_real(m.actual[i]) << ','
                    << format_real(m.predicted[i]) << ',' << name << '\n';
            box << name << ',' << format_real(std::abs(m.actual[i] - m.predicted[i])) << '\n';
        }
        for (const auto& g : m.metrics.grouped) {
            for (const auto& e : g.entries) {
                grouped << name << ',' << to_string(g.granularity) << ',' << csv_field(e.label) << ','
                        << format_real(e.report.nmae) << ',' << format_real(e.report.nrmse) << '\n';
            }
        }
    }
    write_text_file(dir / "scatter.csv", scatter.str());
    write_text_file(dir / "box.csv", box.str());
    write_text_file(dir / "grouped.csv", grouped.str());
}

std::vector<ModelMetrics> load_metrics(const std::filesystem::path& path) {
    const Json j = read_json_file(path);
    if (!j.contains("models") || !j["models"].is_array()) {
        throw Error(ErrorKind::ParseError, path.string() + ": expected a 'models' array");
    }
    std::vector<ModelMetrics> out;
    for (const auto& m : j["models"]) out.push_back(model_metrics_from_json(m));
    return out;
}

} // namespace windcast::eval
