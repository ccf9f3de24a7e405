// windcast: ingest -> decompose -> tune -> train -> forecast -> evaluate -> report.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "run_manifest.hpp"
#include "windcast/common/csv.hpp"
#include "windcast/common/error.hpp"
#include "windcast/data/pipeline.hpp"
#include "windcast/data/synthetic.hpp"
#include "windcast/eval/report.hpp"
#include "windcast/tuner/tuner.hpp"

namespace fs = std::filesystem;

namespace windcast::cli {
namespace {

std::string message_of(const Error& e) {
    const std::string prefix = std::string(to_string(e.kind())) + ": ";
    const std::string what = e.what();
    return what.rfind(prefix, 0) == 0 ? what.substr(prefix.size()) : what;
}

void require_exists(const fs::path& path, const std::string& what) {
    if (!fs::exists(path)) throw Error(ErrorKind::FileNotFound, what + " '" + path.string() + "' does not exist");
}

// Reads a JSON config and parses it, naming the file in any error.
template <class Parse>
auto load_config(const fs::path& path, const std::string& what, Parse parse, Json* raw = nullptr) {
    require_exists(path, what);
    const Json j = read_json_file(path);
    if (raw) *raw = j;
    try {
        return parse(j);
    } catch (const Error& e) {
        throw Error(e.kind(), path.string() + ": " + message_of(e));
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::InvalidConfig, path.string() + ": " + e.what());
    }
}

void check_keys(const Json& j, const std::vector<std::string>& known, const std::string& what) {
    if (!j.is_object()) throw Error(ErrorKind::InvalidConfig, what + " must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw Error(ErrorKind::InvalidConfig, "unknown " + what + " key '" + key + "'");
        }
    }
}

struct IngestConfig {
    Timestamp resample_seconds = 0;   // 0 keeps the native resolution
    bool clip = true;
    data::ImputeOptions impute;
    std::optional<std::vector<int>> train_years, val_years, test_years;
};

IngestConfig ingest_config_from_json(const Json& j) {
    check_keys(j, {"resample_seconds", "clip", "impute", "split"}, "ingest config");
    IngestConfig c;
    c.resample_seconds = j.value("resample_seconds", c.resample_seconds);
    c.clip = j.value("clip", c.clip);
    if (j.contains("impute")) {
        const Json& im = j["impute"];
        check_keys(im, {"max_gap_seconds", "search_days", "context_hours", "weather_columns"}, "impute");
        c.impute.max_gap = im.value("max_gap_seconds", c.impute.max_gap);
        c.impute.search_days = im.value("search_days", c.impute.search_days);
        c.impute.context_hours = im.value("context_hours", c.impute.context_hours);
        c.impute.weather_columns = im.value("weather_columns", c.impute.weather_columns);
    }
    if (j.contains("split")) {
        const Json& s = j["split"];
        check_keys(s, {"train_years", "val_years", "test_years"}, "split");
        c.train_years = s.at("train_years").get<std::vector<int>>();
        c.val_years = s.at("val_years").get<std::vector<int>>();
        c.test_years = s.at("test_years").get<std::vector<int>>();
    }
    if (c.resample_seconds < 0) throw Error(ErrorKind::InvalidConfig, "resample_seconds must be >= 0");
    return c;
}

data::SyntheticOptions synthetic_from_json(const Json& j) {
    check_keys(j, {"start_year", "years", "resolution_seconds", "seed", "rated_power", "noise_std", "missing_fraction",
                   "long_gaps", "outlier_fraction"},
               "synthetic config");
    data::SyntheticOptions o;
    o.start_year = j.value("start_year", o.start_year);
    o.years = j.value("years", o.years);
    o.resolution = j.value("resolution_seconds", o.resolution);
    o.seed = j.value("seed", o.seed);
    o.rated_power = j.value("rated_power", o.rated_power);
    o.noise_std = j.value("noise_std", o.noise_std);
    o.missing_fraction = j.value("missing_fraction", o.missing_fraction);
    o.long_gaps = j.value("long_gaps", o.long_gaps);
    o.outlier_fraction = j.value("outlier_fraction", o.outlier_fraction);
    return o;
}

data::DatasetSplit read_split(const fs::path& dir) {
    require_exists(dir / "split.json", "split");
    return data::load_split(dir);
}

void log(const std::string& line) { std::cerr << "windcast: " << line << "\n"; }

std::string percent(double fraction) {
    if (!std::isfinite(fraction)) return "inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f%%", 100.0 * fraction);
    return buf;
}

// ------------------------------------------------------------------ commands

struct Args {
    std::vector<std::string> raw;
    std::uint64_t seed = 0;
    CLI::Option* seed_opt = nullptr;
    bool seeded() const { return seed_opt && seed_opt->count() > 0; }
};

void cmd_synth(const Args& a, const std::string& config, const fs::path& out) {
    RunRecorder rec("synth", a.raw);
    data::SyntheticOptions o;
    if (!config.empty()) {
        Json raw;
        o = load_config(config, "synthetic config", synthetic_from_json, &raw);
        rec.config("synthetic", config, raw);
    }
    if (a.seeded()) o.seed = a.seed;
    rec.seed("synthetic", o.seed);
    const data::Schema schema = data::synthetic_schema();
    const data::SeriesFrame frame = data::generate_synthetic(o);
    fs::create_directories(out);
    data::write_frame_csv(out / "synthetic.csv", frame, schema.timestamp_column);
    write_json_file(out / "schema.json", data::to_json(schema));
    Json ingest{{"resample_seconds", 0}, {"clip", true}};
    if (o.years >= 3) {
        std::vector<int> train;
        for (int y = o.start_year; y < o.start_year + o.years - 2; ++y) train.push_back(y);
        ingest["split"] = Json{{"train_years", train},
                               {"val_years", {o.start_year + o.years - 2}},
                               {"test_years", {o.start_year + o.years - 1}}};
    }
    write_json_file(out / "ingest.json", ingest);
    rec.write(out);
    log("wrote " + std::to_string(frame.rows()) + " rows to " + (out / "synthetic.csv").string());
}

void cmd_ingest(const Args& a, const fs::path& input, const fs::path& schema_path, const std::string& config,
                const fs::path& out) {
    RunRecorder rec("ingest", a.raw);
    Json raw_schema;
    const data::Schema schema = load_config(schema_path, "schema", data::schema_from_json, &raw_schema);
    rec.config("schema", schema_path, raw_schema);
    IngestConfig cfg;
    if (!config.empty()) {
        Json raw;
        cfg = load_config(config, "ingest config", ingest_config_from_json, &raw);
        rec.config("ingest", config, raw);
    }
    require_exists(input, "input");
    rec.input("csv", input);

    data::SeriesFrame frame = data::ingest_csv(input, schema.features, schema.timestamp_column);
    if (cfg.clip) frame = data::clip_outliers(frame);
    if (cfg.resample_seconds > 0) frame = data::resample(frame, cfg.resample_seconds);
    frame = data::impute_missing(frame, cfg.impute);

    fs::remove_all(out);
    data::save_frame(out / "frame", frame);
    if (cfg.train_years) {
        const auto split = data::split_by_year(frame, *cfg.train_years, *cfg.val_years, *cfg.test_years);
        data::save_split(out / "split", split);
        log("split " + std::to_string(split.train.rows()) + "/" + std::to_string(split.val.rows()) + "/" +
            std::to_string(split.test.rows()) + " rows");
    }
    std::size_t unusable = 0;
    for (std::size_t r = 0; r < frame.rows(); ++r) unusable += frame.row_unusable(r) ? 1 : 0;
    Json missing = Json::object();
    for (std::size_t c = 0; c < frame.schema.size(); ++c) {
        missing[frame.schema[c].name] = std::count_if(frame.columns[c].begin(), frame.columns[c].end(),
                                                      [](double v) { return std::isnan(v); });
    }
    write_json_file(out / "ingest_summary.json",
                    Json{{"rows", frame.rows()}, {"resolution_seconds", frame.resolution}, {"unusable_rows", unusable},
                         {"missing_after_imputation", missing}});
    rec.write(out);
    log("ingested " + std::to_string(frame.rows()) + " rows");
}

void cmd_decompose(const Args& a, const fs::path& frame_path, const fs::path& config, const fs::path& out) {
    RunRecorder rec("decompose", a.raw);
    Json raw;
    decomp::DecompositionConfig cfg = load_config(config, "decomposition config", decomp::decomposition_from_json, &raw);
    rec.config("decomposition", config, raw);
    if (a.seeded()) cfg.vmd.seed = cfg.eemd.seed = a.seed;
    rec.seed("vmd", cfg.vmd.seed);
    rec.seed("eemd", cfg.eemd.seed);
    require_exists(frame_path, "frame");
    rec.input("frame", frame_path);

    std::vector<double> signal;
    if (fs::exists(frame_path / "split.json")) {
        // the same grid the train command decomposes
        signal = tuner::prepare_series(data::load_split(frame_path)).filled;
    } else {
        signal = data::interpolate_missing(data::load_frame(frame_path).target());
    }
    const decomp::ModeSet modes = decomp::decompose(signal, cfg);
    fs::remove_all(out);
    decomp::save_modeset(out, modes);
    rec.write(out);
    log(std::to_string(modes.size()) + " modes from " + std::to_string(signal.size()) + " samples");
}

void cmd_tune(const Args& a, const fs::path& split_path, const fs::path& config, const fs::path& out, bool resume) {
    RunRecorder rec("tune", a.raw);
    Json raw;
    tuner::TunerConfig cfg = load_config(config, "tuner config", tuner::tuner_config_from_json, &raw);
    rec.config("tuner", config, raw);
    if (a.seeded()) cfg.seed = a.seed;
    rec.seed("tuner", cfg.seed);
    rec.seed("model", cfg.v_base.seed);
    rec.set("tpe_settings", tpe::to_json(cfg.tpe));
    rec.input("split", split_path);
    const tuner::PreparedSeries series = tuner::prepare_series(read_split(split_path));

    const fs::path study_path = out / "study.json";
    tuner::TunerState state;
    if (resume && fs::exists(study_path)) {
        auto [saved_cfg, saved_state] = tuner::study_from_json(read_json_file(study_path));
        if (tuner::to_json(saved_cfg) != tuner::to_json(cfg)) {
            throw Error(ErrorKind::InvalidConfig, study_path.string() + ": the saved study was run with a different config");
        }
        state = std::move(saved_state);
        log("resuming at iteration " + std::to_string(state.iteration));
    } else {
        fs::remove_all(out);
    }
    fs::create_directories(out);

    const tuner::Evaluator inner = tuner::pipeline_evaluator(cfg, series);
    std::size_t evaluated = 0;
    const tuner::Evaluator logged = [&](const tpe::Config& u, const tpe::Config& v) {
        const tuner::EvalResult r = inner(u, v);
        log("trial " + std::to_string(++evaluated) + " U=" + u.dump() + " V=" + v.dump() + " nMAE=" + percent(r.loss) +
            (r.failure.empty() ? "" : " failed: " + r.failure));
        return r;
    };
    tuner::run(state, cfg, logged, [&](const tuner::TunerState& s) {
        write_json_file(study_path, tuner::study_to_json(cfg, s));
    });

    const tuner::Entry& best = state.best();
    write_json_file(out / "best_u.json", decomp::to_json(decomp::apply_overrides(cfg.u_base, best.u)));
    write_json_file(out / "best_v.json", tft::to_json(tft::apply_overrides(cfg.v_base, best.v)));
    write_json_file(out / "pipeline.json", tuner::to_json(cfg.pipeline));
    rec.write(out);
    log(std::string("best ") + tuner::to_string(cfg.evaluation_split) + " nMAE " + percent(best.loss) + " after " +
        std::to_string(state.iteration) + " steps");
}

void cmd_train(const Args& a, const fs::path& split_path, const fs::path& tft_config, const std::string& decomp_config,
               const std::string& modes_dir, const std::string& pipeline_config, bool no_decomp, const fs::path& out) {
    RunRecorder rec("train", a.raw);
    Json raw;
    tft::TftConfig v = load_config(tft_config, "model config", tft::tft_config_from_json, &raw);
    rec.config("model", tft_config, raw);
    if (a.seeded()) v.seed = a.seed;
    rec.seed("model", v.seed);

    const int sources = (decomp_config.empty() ? 0 : 1) + (no_decomp ? 1 : 0);
    if (sources > 1) throw Error(ErrorKind::InvalidConfig, "--decomp-config and --no-decomp exclude each other");
    if (no_decomp && !modes_dir.empty()) throw Error(ErrorKind::InvalidConfig, "--modes and --no-decomp exclude each other");
    std::optional<decomp::DecompositionConfig> u;
    std::optional<decomp::ModeSet> modes;
    if (!modes_dir.empty()) {
        require_exists(modes_dir, "modes");
        rec.input("modes", modes_dir);
        modes = decomp::load_modeset(modes_dir);
        u = modes->config;
    }
    if (!decomp_config.empty()) {
        Json raw_u;
        u = load_config(decomp_config, "decomposition config", decomp::decomposition_from_json, &raw_u);
        rec.config("decomposition", decomp_config, raw_u);
    }
    if (!u && !no_decomp) throw Error(ErrorKind::InvalidConfig, "train needs --decomp-config, --modes or --no-decomp");
    tuner::PipelineOptions options;
    if (!pipeline_config.empty()) {
        Json raw_p;
        options = load_config(pipeline_config, "pipeline config", tuner::pipeline_options_from_json, &raw_p);
        rec.config("pipeline", pipeline_config, raw_p);
    }
    rec.input("split", split_path);
    const tuner::PreparedSeries series = tuner::prepare_series(read_split(split_path));

    const tuner::TrainedPipeline p = tuner::fit_pipeline(series, u, v, options, modes ? &*modes : nullptr);
    const auto [from, to] = tuner::span_bounds(series, tuner::EvalSpan::Validation);
    const tuner::SpanForecast f = tuner::forecast_span(p, series, from, to);
    const eval::MetricReport val = eval::metric_report(f.actual, f.predicted);

    fs::remove_all(out);
    tuner::save_pipeline(out, p);
    write_json_file(out / "data.json", Json{{"split", fs::absolute(split_path).lexically_normal().string()}});
    write_json_file(out / "training.json", Json{{"validation", eval::to_json(val)}, {"modes", p.models.size()}});
    rec.write(out);
    log("trained " + std::to_string(p.models.size()) + " mode models, validation nMAE " + percent(val.nmae));
}

void cmd_forecast(const Args& a, const fs::path& model_dir, const std::string& split_opt, const std::string& origin,
                  const std::string& span, std::size_t horizon, const fs::path& out) {
    RunRecorder rec("forecast", a.raw);
    require_exists(model_dir / "pipeline.json", "model");
    rec.input("model", model_dir);
    const tuner::TrainedPipeline p = tuner::load_pipeline(model_dir);
    fs::path split_path = split_opt;
    if (split_path.empty()) split_path = read_json_file(model_dir / "data.json").at("split").get<std::string>();
    rec.input("split", split_path);
    const tuner::PreparedSeries series = tuner::prepare_series(read_split(split_path));

    const std::size_t tau = p.model_config.horizon;
    if (horizon == 0) horizon = tau;
    if (horizon > tau) {
        throw Error(ErrorKind::InvalidConfig, "--horizon " + std::to_string(horizon) + " exceeds the trained horizon of " +
                                                  std::to_string(tau));
    }
    if (origin.empty() == span.empty()) throw Error(ErrorKind::InvalidConfig, "give exactly one of --origin and --span");
    std::vector<std::size_t> rows;
    if (!origin.empty()) {
        const auto ts = parse_iso8601(origin);
        if (!ts) throw Error(ErrorKind::UnparsableTimestamp, "--origin '" + origin + "'");
        const std::size_t row = series.row_of(*ts);
        if (row >= series.frame.rows() || series.frame.timestamps[row] != *ts) {
            throw Error(ErrorKind::InvalidConfig, "--origin " + origin + " is not on the data grid");
        }
        rows.push_back(row);
    } else {
        const auto [from, to] = tuner::span_bounds(series, tuner::eval_span_from_string(span));
        for (Timestamp t : tuner::forecast_span(p, series, from, to).origins) rows.push_back(series.row_of(t));
    }

    std::ostringstream csv;
    csv << "timestamp,horizon_step,quantile,value\n";
    const auto& quantiles = p.model_config.quantiles;
    for (std::size_t row : rows) {
        const auto q = tuner::forecast_quantiles(p, series, row);
        for (std::size_t qi = 0; qi < quantiles.size(); ++qi) {
            for (std::size_t j = 0; j < horizon; ++j) {
                csv << format_iso8601(series.frame.timestamps[row + j]) << "," << j + 1 << "," << format_real(quantiles[qi])
                    << "," << format_real(q[j][qi]) << "\n";
            }
        }
    }
    write_text_file(out, csv.str());
    rec.write(out);
    log(std::to_string(rows.size()) + " origin(s), " + std::to_string(horizon) + " steps, " +
        std::to_string(quantiles.size()) + " quantiles");
}

// timestamp -> actual target value; NaN cells are left out
std::map<Timestamp, double> read_actuals(const fs::path& path, const std::string& column) {
    std::map<Timestamp, double> out;
    auto add_frame = [&](const data::SeriesFrame& f) {
        const auto& y = column.empty() ? f.target() : f.column(column);
        for (std::size_t i = 0; i < f.rows(); ++i) {
            if (std::isfinite(y[i])) out[f.timestamps[i]] = y[i];
        }
    };
    require_exists(path, "actuals");
    if (fs::is_directory(path)) {
        if (fs::exists(path / "split.json")) {
            const auto s = data::load_split(path);
            add_frame(s.train);
            add_frame(s.val);
            add_frame(s.test);
        } else {
            add_frame(data::load_frame(path));
        }
        return out;
    }
    const CsvTable t = read_csv(path);
    if (t.header.size() < 2) throw Error(ErrorKind::MissingColumn, path.string() + ": need a timestamp and a value column");
    const std::size_t vc = column.empty() ? 1 : t.column(column);
    if (vc == std::string::npos) throw Error(ErrorKind::MissingColumn, path.string() + ": no column '" + column + "'");
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto ts = parse_iso8601(t.rows[r].at(0));
        if (!ts) throw Error(ErrorKind::UnparsableTimestamp, path.string() + ":" + std::to_string(t.line_numbers[r]));
        const auto v = parse_real(t.rows[r].at(vc));
        if (v) out[*ts] = *v;
    }
    return out;
}

void cmd_evaluate(const Args& a, const std::vector<std::string>& forecasts, const fs::path& actuals_path,
                  const std::string& actual_column, std::vector<std::string> groups, double quantile,
                  std::optional<double> y_max, const fs::path& out) {
    RunRecorder rec("evaluate", a.raw);
    if (groups.empty()) groups = {"month", "season", "year"};
    std::vector<eval::Granularity> wanted;
    for (const auto& g : groups) wanted.push_back(eval::granularity_from_string(g));
    rec.input("actuals", actuals_path);
    const auto actuals = read_actuals(actuals_path, actual_column);

    std::vector<eval::ModelEvaluation> models;
    for (const auto& file : forecasts) {
        require_exists(file, "forecast file");
        rec.input("forecast:" + fs::path(file).stem().string(), file);
        const CsvTable t = read_csv(file);
        const std::size_t c_ts = t.column("timestamp"), c_q = t.column("quantile"), c_v = t.column("value");
        for (auto [c, name] : {std::pair{c_ts, "timestamp"}, {c_q, "quantile"}, {c_v, "value"}}) {
            if (c == std::string::npos) throw Error(ErrorKind::MissingColumn, file + ": no column '" + name + "'");
        }
        std::vector<Timestamp> ts;
        std::vector<double> y, yhat;
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            const std::string where = file + ":" + std::to_string(t.line_numbers[r]);
            const auto q = parse_real(t.rows[r].at(c_q));
            if (!q) throw Error(ErrorKind::ParseError, where + ": bad quantile");
            if (std::abs(*q - quantile) > 1e-9) continue;
            const auto when = parse_iso8601(t.rows[r].at(c_ts));
            if (!when) throw Error(ErrorKind::UnparsableTimestamp, where);
            const auto v = parse_real(t.rows[r].at(c_v));
            if (!v) throw Error(ErrorKind::ParseError, where + ": bad value");
            const auto it = actuals.find(*when);
            if (it == actuals.end()) continue;
            ts.push_back(*when);
            y.push_back(it->second);
            yhat.push_back(*v);
        }
        if (ts.empty()) {
            throw Error(ErrorKind::LengthMismatch, file + ": no forecast at quantile " + format_real(quantile) +
                                                       " matches an actual value");
        }
        eval::ModelEvaluation m = eval::evaluate_forecasts(fs::path(file).stem().string(), ts, y, yhat, y_max);
        std::erase_if(m.metrics.grouped, [&](const eval::GroupedReport& g) {
            return std::find(wanted.begin(), wanted.end(), g.granularity) == wanted.end();
        });
        log(m.metrics.model + ": " + std::to_string(ts.size()) + " points, nMAE " + percent(m.metrics.overall.nmae) +
            ", nRMSE " + percent(m.metrics.overall.nrmse));
        models.push_back(std::move(m));
    }
    Json extra{{"quantile", quantile}, {"groups", groups}};
    if (y_max) extra["y_max"] = *y_max;
    fs::remove_all(out);
    eval::export_report(out, models, extra);
    rec.write(out);
}

std::string study_summary(const Json& j) {
    const auto [cfg, state] = tuner::study_from_json(j);
    std::size_t accepted = 0, failed = 0;
    for (const auto& t : state.trials) {
        accepted += t.accepted && t.phase != "init" ? 1 : 0;
        failed += t.failure.empty() ? 0 : 1;
    }
    std::ostringstream md;
    md << "# Tuning study\n\n";
    md << "- evaluation span: " << tuner::to_string(cfg.evaluation_split) << "\n";
    md << "- trials: " << state.trials.size() << " (" << cfg.n_init << " initial), accepted: " << accepted
       << ", failed: " << failed << "\n";
    md << "- steps: " << state.iteration << " of " << cfg.n_max << "\n";
    const tuner::Entry& best = state.best();
    md << "- best nMAE: " << percent(best.loss) << "\n";
    md << "- best U: `" << best.u.dump() << "`\n";
    md << "- best V: `" << best.v.dump() << "`\n\n";
    md << "## Best loss per step\n\n";
    const auto curve = tuner::best_curve(state, cfg.n_init);
    for (std::size_t i = 0; i < curve.size(); ++i) md << (i == 0 ? "init" : std::to_string(i)) << ": " << percent(curve[i]) << "\n";
    md << "\n## Trials\n\n| phase | step | nMAE | reference | accepted | U | V |\n|---|---|---|---|---|---|---|\n";
    for (const auto& t : state.trials) {
        md << "| " << t.phase << " | " << t.iteration << " | " << (t.failure.empty() ? percent(t.loss) : "failed: " + t.failure)
           << " | " << (t.phase == "init" ? "" : percent(t.reference_loss)) << " | " << (t.phase == "init" ? "" : t.accepted ? "yes" : t.reused ? "no (repeat)" : "no") << " | `"
           << t.u.dump() << "` | `" << t.v.dump() << "` |\n";
    }
    return md.str();
}

std::string metrics_summary(const fs::path& path) {
    const auto models = eval::load_metrics(path);
    std::ostringstream md;
    md << "# Forecast evaluation\n\n| model | points | nMAE | nRMSE |\n|---|---|---|---|\n";
    for (const auto& m : models) {
        md << "| " << m.model << " | " << m.overall.count << " | " << percent(m.overall.nmae) << " | "
           << percent(m.overall.nrmse) << " |\n";
    }
    if (models.empty()) return md.str();
    for (std::size_t g = 0; g < models.front().grouped.size(); ++g) {
        md << "\n## nMAE by " << eval::to_string(models.front().grouped[g].granularity) << "\n\n| group |";
        for (const auto& m : models) md << " " << m.model << " |";
        md << "\n|---|";
        for (std::size_t i = 0; i < models.size(); ++i) md << "---|";
        md << "\n";
        for (std::size_t e = 0; e < models.front().grouped[g].entries.size(); ++e) {
            md << "| " << models.front().grouped[g].entries[e].label << " |";
            for (const auto& m : models) {
                const auto& entries = m.grouped.at(g).entries;
                md << " " << (e < entries.size() ? percent(entries[e].report.nmae) : "") << " |";
            }
            md << "\n";
        }
    }
    return md.str();
}

void cmd_report(const Args& a, const std::string& study, const std::string& report_dir, const fs::path& out) {
    RunRecorder rec("report", a.raw);
    if (study.empty() == report_dir.empty()) throw Error(ErrorKind::InvalidConfig, "give exactly one of --study and --report-dir");
    std::string text;
    if (!study.empty()) {
        fs::path path = study;
        if (fs::is_directory(path)) path /= "study.json";
        require_exists(path, "study");
        rec.input("study", path);
        text = study_summary(read_json_file(path));
    } else {
        const fs::path path = fs::path(report_dir) / "metrics.json";
        require_exists(path, "metrics");
        rec.input("metrics", path);
        text = metrics_summary(path);
    }
    write_text_file(out, text);
    rec.write(out);
}

int run_cli(std::vector<std::string> args);

int cmd_replay(const fs::path& manifest_path) {
    const Json m = read_json_file(manifest_path);
    const auto args = m.at("args").get<std::vector<std::string>>();
    if (m.at("command").get<std::string>() == "replay") throw Error(ErrorKind::InvalidConfig, "cannot replay a replay");
    const fs::path cwd = m.at("working_directory").get<std::string>();
    const fs::path previous = fs::current_path();
    fs::current_path(cwd);
    for (const auto& [role, entry] : m.at("inputs").items()) {
        const fs::path path = entry.at("path").get<std::string>();
        if (!fs::exists(path) || digest_path(path) != entry.at("sha256").get<std::string>()) {
            throw Error(ErrorKind::InvalidConfig, "input " + role + " '" + path.string() + "' changed since the recorded run");
        }
    }
    for (const auto& [role, entry] : m.at("configs").items()) {
        const fs::path path = entry.at("path").get<std::string>();
        if (!fs::exists(path)) {
            write_json_file(path, entry.at("content"));
            log("restored " + role + " config " + path.string() + " from the manifest");
        } else if (read_json_file(path) != entry.at("content")) {
            throw Error(ErrorKind::InvalidConfig, role + " config '" + path.string() + "' differs from the recorded one");
        }
    }
    const int code = run_cli(args);
    if (code != 0) return code;
    std::size_t same = 0, differ = 0;
    for (const auto& o : m.at("outputs")) {
        const fs::path path = o.at("path").get<std::string>();
        if (fs::exists(path) && sha256_file(path) == o.at("sha256").get<std::string>()) {
            ++same;
        } else {
            ++differ;
            log("differs: " + path.string());
        }
    }
    fs::current_path(previous);
    log("replay: " + std::to_string(same) + " identical, " + std::to_string(differ) + " different");
    return differ == 0 ? 0 : 2;
}

int run_cli(std::vector<std::string> args) {
    CLI::App app{"Decomposition + temporal fusion transformer wind power forecasting"};
    app.require_subcommand(1);
    app.set_version_flag("--version", WINDCAST_VERSION);
    Args a;
    a.raw = args;

    auto add_seed = [&](CLI::App* sub) { a.seed_opt = sub->add_option("--seed", a.seed, "Overrides the config seed"); };

    std::string config, out, input, schema, frame, split, tft_config, decomp_config, modes, pipeline_config, model_dir,
        origin, span, actuals, actual_column, study, report_dir, manifest;
    std::vector<std::string> forecasts, groups;
    bool resume = false, no_decomp = false;
    std::size_t horizon = 0;
    double quantile = 0.5, y_max = 0.0;

    auto* synth = app.add_subcommand("synth", "Write the bundled synthetic wind-like dataset");
    synth->add_option("--config", config, "Synthetic data config JSON")->check(CLI::ExistingFile);
    synth->add_option("--out", out, "Output directory")->required();
    add_seed(synth);

    auto* ingest = app.add_subcommand("ingest", "Parse, clean, resample, impute and split a CSV");
    ingest->add_option("--input", input, "SCADA CSV")->required();
    ingest->add_option("--schema", schema, "Schema JSON")->required();
    ingest->add_option("--config", config, "Ingest config JSON");
    ingest->add_option("--out", out, "Output directory (frame/, split/)")->required();

    auto* decompose = app.add_subcommand("decompose", "Decompose the target series into modes");
    decompose->add_option("--frame", frame, "Frame or split directory")->required();
    decompose->add_option("--config", config, "Decomposition config JSON")->required();
    decompose->add_option("--out", out, "Mode set directory")->required();
    add_seed(decompose);

    auto* tune = app.add_subcommand("tune", "Alternate TPE search over decomposition and model hyperparameters");
    tune->add_option("--split", split, "Split directory")->required();
    tune->add_option("--tuner-config", config, "Tuner config JSON")->required();
    tune->add_option("--out", out, "Study directory")->required();
    tune->add_flag("--resume", resume, "Continue the study in --out");
    add_seed(tune);

    auto* train = app.add_subcommand("train", "Train one TFT per mode");
    train->add_option("--split", split, "Split directory")->required();
    train->add_option("--tft-config", tft_config, "Model config JSON")->required();
    train->add_option("--decomp-config", decomp_config, "Decomposition config JSON");
    train->add_option("--modes", modes, "Precomputed mode set directory");
    train->add_option("--pipeline-config", pipeline_config, "Decomposition scope JSON");
    train->add_flag("--no-decomp", no_decomp, "Train a single model on the raw target");
    train->add_option("--out", out, "Model directory")->required();
    add_seed(train);

    auto* forecast = app.add_subcommand("forecast", "Quantile forecasts from a trained model directory");
    forecast->add_option("--model-dir", model_dir, "Model directory")->required();
    forecast->add_option("--split", split, "Split directory (default: the one used in training)");
    forecast->add_option("--origin", origin, "First forecast timestamp (ISO 8601)");
    forecast->add_option("--span", span, "Every non-overlapping origin of: validation, test_paper_faithful");
    forecast->add_option("--horizon", horizon, "Steps ahead, at most the trained horizon");
    forecast->add_option("--out", out, "Forecast CSV")->required();

    auto* evaluate = app.add_subcommand("evaluate", "nMAE/nRMSE overall and per month, season and year");
    evaluate->add_option("--forecasts", forecasts, "Forecast CSV (repeatable)")->required();
    evaluate->add_option("--actuals", actuals, "Frame/split directory or timestamp,value CSV")->required();
    evaluate->add_option("--actual-column", actual_column, "Column of the actuals (default: target)");
    evaluate->add_option("--group", groups, "month, season or year (repeatable; default all)");
    evaluate->add_option("--quantile", quantile, "Quantile used as the point forecast");
    auto* y_max_opt = evaluate->add_option("--y-max", y_max, "Normalizer instead of the largest actual");
    evaluate->add_option("--out", out, "Report directory")->required();

    auto* report = app.add_subcommand("report", "Markdown summary of a study or an evaluation");
    report->add_option("--study", study, "Study directory or study.json");
    report->add_option("--report-dir", report_dir, "Evaluation report directory");
    report->add_option("--out", out, "Summary file")->required();

    auto* download = app.add_subcommand("download", "Show where to get the public SCADA dataset (nothing is fetched)");
    auto* replay = app.add_subcommand("replay", "Re-run a recorded command and compare its outputs");
    replay->add_option("--manifest", manifest, "Run manifest")->required();

    try {
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (synth->parsed()) cmd_synth(a, config, out);
        else if (ingest->parsed()) cmd_ingest(a, input, schema, config, out);
        else if (decompose->parsed()) cmd_decompose(a, frame, config, out);
        else if (tune->parsed()) cmd_tune(a, split, config, out, resume);
        else if (train->parsed()) cmd_train(a, split, tft_config, decomp_config, modes, pipeline_config, no_decomp, out);
        else if (forecast->parsed()) cmd_forecast(a, model_dir, split, origin, span, horizon, out);
        else if (evaluate->parsed()) {
            cmd_evaluate(a, forecasts, actuals, actual_column, groups, quantile,
                         y_max_opt->count() ? std::optional<double>(y_max) : std::nullopt, out);
        } else if (report->parsed()) cmd_report(a, study, report_dir, out);
        else if (download->parsed()) {
            std::cout << "The Engie wind farm SCADA data is published at https://opendata-renewables.engie.com\n"
                         "(10-minute records, four 2 MW turbines). It is not redistributed here.\n"
                         "Download the CSV export, write a schema JSON for its columns, then run\n"
                         "  windcast ingest --input <csv> --schema <schema.json> --config <ingest.json> --out <dir>\n";
        } else if (replay->parsed()) return cmd_replay(manifest);
    } catch (const Error& e) {
        std::cerr << "windcast " << app.get_subcommands().front()->get_name() << ": error: " << e.what() << "\n";
        return is_validation_error(e.kind()) ? 1 : 2;
    } catch (const Json::exception& e) {
        std::cerr << "windcast: error: malformed JSON: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "windcast: error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

} // namespace
} // namespace windcast::cli

int main(int argc, char** argv) { return windcast::cli::run_cli(std::vector<std::string>(argv + 1, argv + argc)); }
