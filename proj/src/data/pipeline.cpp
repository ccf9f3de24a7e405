#include "windcast/data/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <unordered_map>

#include "windcast/common/csv.hpp"
#include "windcast/common/error.hpp"

namespace windcast::data {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Timestamp floor_div(Timestamp a, Timestamp b) {
    Timestamp q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

Timestamp infer_resolution(const std::vector<Timestamp>& ts) {
    Timestamp best = 0;
    for (std::size_t i = 1; i < ts.size(); ++i) {
        const Timestamp d = ts[i] - ts[i - 1];
        if (d > 0 && (best == 0 || d < best)) best = d;
    }
    return best;
}

} // namespace

// ------------------------------------------------------------------ ingest

SeriesFrame ingest_csv(const std::filesystem::path& path, const std::vector<FeatureSpec>& schema,
                       const std::string& timestamp_column) {
    validate_schema(schema);
    const CsvTable table = read_csv(path);
    if (table.header.empty() || table.rows.empty()) {
        throw Error(ErrorKind::EmptyFile, path.string() + " has no data rows");
    }
    const std::size_t ts_col = table.column(timestamp_column);
    if (ts_col == std::string::npos) {
        throw Error(ErrorKind::MissingColumn, path.string() + ": header lacks timestamp column '" + timestamp_column + "'");
    }
    std::vector<std::size_t> col_idx;
    for (const auto& f : schema) {
        const std::size_t c = table.column(f.name);
        if (c == std::string::npos) {
            throw Error(ErrorKind::MissingColumn, path.string() + ": header lacks column '" + f.name + "'");
        }
        col_idx.push_back(c);
    }

    const std::size_t n = table.rows.size();
    std::vector<Timestamp> ts(n);
    for (std::size_t r = 0; r < n; ++r) {
        const auto& row = table.rows[r];
        const auto parsed = ts_col < row.size() ? parse_iso8601(row[ts_col]) : std::nullopt;
        if (!parsed) {
            throw Error(ErrorKind::UnparsableTimestamp,
                        path.string() + " line " + std::to_string(table.line_numbers[r]) + ": cannot parse timestamp '" +
                            (ts_col < row.size() ? row[ts_col] : std::string()) + "'");
        }
        ts[r] = *parsed;
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ts[a] < ts[b]; });

    SeriesFrame frame;
    frame.schema = schema;
    frame.columns.assign(schema.size(), {});
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t r = order[k];
        // stable order puts the last duplicate at the end of its run
        if (k + 1 < n && ts[order[k + 1]] == ts[r]) continue;
        frame.timestamps.push_back(ts[r]);
        const auto& row = table.rows[r];
        for (std::size_t c = 0; c < schema.size(); ++c) {
            const auto v = col_idx[c] < row.size() ? parse_real(row[col_idx[c]]) : std::nullopt;
            frame.columns[c].push_back(v ? *v : kNaN);
        }
    }
    frame.resolution = infer_resolution(frame.timestamps);
    return frame;
}

// -------------------------------------------------------------------- clip

SeriesFrame clip_outliers(const SeriesFrame& frame) {
    SeriesFrame out = frame;
    for (std::size_t c = 0; c < out.schema.size(); ++c) {
        const auto& bounds = out.schema[c].physical_bounds;
        if (!bounds) continue;
        for (double& v : out.columns[c]) {
            if (std::isnan(v)) continue;
            if (v < bounds->first) v = bounds->first;
            else if (v > bounds->second) v = bounds->second;
        }
    }
    return out;
}

// ------------------------------------------------------------------ impute

SeriesFrame impute_missing(const SeriesFrame& frame, const ImputeOptions& options) {
    const std::size_t n = frame.rows();
    for (std::size_t c = 0; c < frame.schema.size(); ++c) {
        const auto finite = std::count_if(frame.columns[c].begin(), frame.columns[c].end(),
                                          [](double v) { return !std::isnan(v); });
        if (finite < 2) {
            throw Error(ErrorKind::AllMissingColumn,
                        "column '" + frame.schema[c].name + "' has fewer than 2 non-missing values");
        }
    }
    if (frame.resolution <= 0) throw Error(ErrorKind::InvalidConfig, "imputation needs a known frame resolution");

    std::vector<std::size_t> weather;
    if (options.weather_columns.empty()) {
        for (std::size_t c = 0; c < frame.schema.size(); ++c) {
            if (frame.schema[c].role == Role::ObservedPast) weather.push_back(c);
        }
    } else {
        for (const auto& name : options.weather_columns) weather.push_back(frame.index_of(name));
    }
    std::vector<std::pair<double, double>> scale;
    for (std::size_t w : weather) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (double v : frame.columns[w]) {
            if (std::isnan(v)) continue;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        scale.emplace_back(lo, hi);
    }

    std::unordered_map<Timestamp, std::size_t> row_of;
    row_of.reserve(n);
    for (std::size_t r = 0; r < n; ++r) row_of.emplace(frame.timestamps[r], r);
    auto find_row = [&](Timestamp t) -> long {
        auto it = row_of.find(t);
        return it == row_of.end() ? -1 : static_cast<long>(it->second);
    };

    const Timestamp context = static_cast<Timestamp>(options.context_hours) * kSecondsPerHour;
    // mean squared scaled weather difference over the context window
    auto distance = [&](std::size_t r, Timestamp shift) {
        double acc = 0.0;
        std::size_t pairs = 0;
        for (Timestamp off = -context; off <= context; off += frame.resolution) {
            const long a = find_row(frame.timestamps[r] + off);
            const long b = find_row(frame.timestamps[r] + off + shift);
            if (a < 0 || b < 0) continue;
            for (std::size_t k = 0; k < weather.size(); ++k) {
                const double va = frame.columns[weather[k]][static_cast<std::size_t>(a)];
                const double vb = frame.columns[weather[k]][static_cast<std::size_t>(b)];
                if (std::isnan(va) || std::isnan(vb)) continue;
                const double span = scale[k].second - scale[k].first;
                const double d = span > 0 ? (va - vb) / span : 0.0;
                acc += d * d;
                ++pairs;
            }
        }
        return pairs == 0 ? std::numeric_limits<double>::infinity() : std::sqrt(acc / static_cast<double>(pairs));
    };

    std::vector<Timestamp> shifts;
    for (int d = 1; d <= options.search_days; ++d) {
        shifts.push_back(-d * kSecondsPerDay);
        shifts.push_back(d * kSecondsPerDay);
    }

    SeriesFrame out = frame;
    if (out.unusable.empty()) out.unusable.assign(n, 0);
    for (std::size_t c = 0; c < frame.schema.size(); ++c) {
        const auto& src = frame.columns[c];
        std::size_t r = 0;
        while (r < n) {
            if (!std::isnan(src[r])) {
                ++r;
                continue;
            }
            std::size_t end = r;
            while (end < n && std::isnan(src[end])) ++end;
            // absent records between rows count toward the gap length
            const Timestamp before = r > 0 ? frame.timestamps[r - 1] : frame.timestamps[r] - frame.resolution;
            const Timestamp after = end < n ? frame.timestamps[end] : frame.timestamps[end - 1] + frame.resolution;
            const Timestamp gap = after - before - frame.resolution;
            if (gap >= options.max_gap) {
                for (std::size_t k = r; k < end; ++k) out.unusable[k] = 1;
            } else {
                for (std::size_t k = r; k < end; ++k) {
                    double best = std::numeric_limits<double>::infinity();
                    double fill = kNaN;
                    bool found = false;
                    for (Timestamp s : shifts) {
                        const long cand = find_row(frame.timestamps[k] + s);
                        if (cand < 0 || std::isnan(src[static_cast<std::size_t>(cand)])) continue;
                        const double d = distance(k, s);
                        if (!found || d < best) {
                            best = d;
                            fill = src[static_cast<std::size_t>(cand)];
                            found = true;
                        }
                    }
                    if (found) out.columns[c][k] = fill;
                    else out.unusable[k] = 1;
                }
            }
            r = end;
        }
    }
    // absent records inside a long stretch: flag rows adjacent to a hole
    for (std::size_t k = 1; k < n; ++k) {
        if (frame.timestamps[k] - frame.timestamps[k - 1] - frame.resolution >= options.max_gap) {
            out.unusable[k - 1] = 1;
            out.unusable[k] = 1;
        }
    }
    if (std::none_of(out.unusable.begin(), out.unusable.end(), [](std::uint8_t v) { return v != 0; })) {
        out.unusable.clear();
    }
    return out;
}

// ---------------------------------------------------------------- resample

SeriesFrame resample(const SeriesFrame& frame, Timestamp target) {
    if (target <= 0 || frame.resolution <= 0 || target % frame.resolution != 0) {
        throw Error(ErrorKind::NonIntegerRatio, "target resolution " + std::to_string(target) +
                                                    " s is not a positive multiple of " +
                                                    std::to_string(frame.resolution) + " s");
    }
    SeriesFrame out;
    out.schema = frame.schema;
    out.resolution = target;
    out.columns.assign(frame.schema.size(), {});
    if (frame.rows() == 0) return out;

    const std::size_t ratio = static_cast<std::size_t>(target / frame.resolution);
    const Timestamp first_bin = floor_div(frame.timestamps.front(), target);
    const Timestamp last_bin = floor_div(frame.timestamps.back(), target);
    const std::size_t bins = static_cast<std::size_t>(last_bin - first_bin + 1);
    std::vector<std::size_t> begin(bins + 1, 0);
    {
        std::size_t r = 0;
        for (std::size_t b = 0; b < bins; ++b) {
            begin[b] = r;
            const Timestamp bin = first_bin + static_cast<Timestamp>(b);
            while (r < frame.rows() && floor_div(frame.timestamps[r], target) == bin) ++r;
        }
        begin[bins] = r;
    }
    bool any_bad = false;
    out.timestamps.resize(bins);
    std::vector<std::uint8_t> bad(bins, 0);
    for (std::size_t b = 0; b < bins; ++b) {
        out.timestamps[b] = (first_bin + static_cast<Timestamp>(b)) * target;
        for (std::size_t r = begin[b]; r < begin[b + 1]; ++r) {
            if (frame.row_unusable(r)) bad[b] = 1;
        }
        any_bad = any_bad || bad[b];
    }
    if (any_bad) out.unusable = std::move(bad);

    for (std::size_t c = 0; c < frame.schema.size(); ++c) {
        const auto& src = frame.columns[c];
        auto& dst = out.columns[c];
        dst.assign(bins, kNaN);
        for (std::size_t b = 0; b < bins; ++b) {
            const std::size_t lo = begin[b], hi = begin[b + 1];
            if (hi - lo != ratio) continue;
            bool missing = false;
            for (std::size_t r = lo; r < hi; ++r) missing = missing || std::isnan(src[r]);
            if (missing) continue;
            double acc = 0.0;
            switch (frame.schema[c].aggregation) {
            case Aggregation::Mean:
                for (std::size_t r = lo; r < hi; ++r) acc += src[r];
                acc /= static_cast<double>(ratio);
                break;
            case Aggregation::Min:
                acc = *std::min_element(src.begin() + static_cast<std::ptrdiff_t>(lo), src.begin() + static_cast<std::ptrdiff_t>(hi));
                break;
            case Aggregation::Max:
                acc = *std::max_element(src.begin() + static_cast<std::ptrdiff_t>(lo), src.begin() + static_cast<std::ptrdiff_t>(hi));
                break;
            case Aggregation::StdPool:
                for (std::size_t r = lo; r < hi; ++r) acc += src[r] * src[r];
                acc = std::sqrt(acc / static_cast<double>(ratio));
                break;
            }
            dst[b] = acc;
        }
    }
    return out;
}

// ---------------------------------------------------------------- calendar

SeriesFrame add_calendar_features(const SeriesFrame& frame) {
    const std::size_t n = frame.rows();
    std::vector<double> hour(n), dow(n), month(n), season(n);
    for (std::size_t r = 0; r < n; ++r) {
        const CivilTime ct = to_civil(frame.timestamps[r]);
        hour[r] = ct.hour;
        dow[r] = ct.weekday;
        month[r] = ct.month;
        season[r] = season_of_month(ct.month);
    }
    auto spec = [](const char* name, std::size_t card, int offset) {
        FeatureSpec f;
        f.name = name;
        f.role = Role::KnownFuture;
        f.aggregation = Aggregation::Mean;
        f.categorical = true;
        f.cardinality = card;
        f.code_offset = offset;
        return f;
    };
    SeriesFrame out = frame;
    out.set_column(spec("hour", 24, 0), std::move(hour));
    out.set_column(spec("day_of_week", 7, 0), std::move(dow));
    out.set_column(spec("month", 12, 1), std::move(month));
    out.set_column(spec("season", 4, 0), std::move(season));
    return out;
}

// ----------------------------------------------------------- normalization

double normalize(double value, const std::pair<double, double>& range) {
    const double span = range.second - range.first;
    return span > 0 ? (value - range.first) / span : 0.0;
}

double denormalize(double value, const std::pair<double, double>& range) {
    const double span = range.second - range.first;
    return span > 0 ? value * span + range.first : range.first;
}

Json to_json(const NormalizationParams& params) {
    Json j = Json::object();
    for (const auto& [name, r] : params.ranges) j[name] = {{"min", r.first}, {"max", r.second}};
    return j;
}

NormalizationParams normalization_from_json(const Json& j) {
    NormalizationParams p;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const double lo = it.value().at("min").get<double>();
        const double hi = it.value().at("max").get<double>();
        if (hi < lo) throw Error(ErrorKind::InvalidConfig, "normalization range for '" + it.key() + "' has max < min");
        p.ranges[it.key()] = {lo, hi};
    }
    return p;
}

std::pair<SeriesFrame, NormalizationParams> normalize_minmax(const SeriesFrame& frame, const NormalizationParams* params) {
    NormalizationParams fitted;
    SeriesFrame out = frame;
    for (std::size_t c = 0; c < frame.schema.size(); ++c) {
        const auto& spec = frame.schema[c];
        if (spec.categorical) continue;
        std::pair<double, double> range;
        if (params != nullptr) {
            auto it = params->ranges.find(spec.name);
            if (it == params->ranges.end()) {
                throw Error(ErrorKind::UnknownColumn, "no normalization range for column '" + spec.name + "'");
            }
            range = it->second;
        } else {
            double lo = std::numeric_limits<double>::infinity(), hi = -lo;
            for (double v : frame.columns[c]) {
                if (std::isnan(v)) continue;
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            range = std::isfinite(lo) ? std::make_pair(lo, hi) : std::make_pair(0.0, 0.0);
        }
        fitted.ranges[spec.name] = range;
        for (double& v : out.columns[c]) {
            if (!std::isnan(v)) v = normalize(v, range);
        }
    }
    return {std::move(out), std::move(fitted)};
}

std::vector<double> denormalize(const std::vector<double>& values, const NormalizationParams& params,
                                const std::string& column) {
    auto it = params.ranges.find(column);
    if (it == params.ranges.end()) throw Error(ErrorKind::UnknownColumn, "no normalization range for column '" + column + "'");
    std::vector<double> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = denormalize(values[i], it->second);
    return out;
}

// ------------------------------------------------------------------- split

DatasetSplit split_by_year(const SeriesFrame& frame, const std::vector<int>& train_years,
                           const std::vector<int>& val_years, const std::vector<int>& test_years) {
    const std::vector<const std::vector<int>*> lists{&train_years, &val_years, &test_years};
    const char* names[] = {"train", "val", "test"};
    for (std::size_t i = 0; i < 3; ++i) {
        if (lists[i]->empty()) throw Error(ErrorKind::EmptySplit, std::string(names[i]) + " year list is empty");
    }
    std::set<int> seen;
    for (const auto* l : lists) {
        for (int y : *l) {
            if (!seen.insert(y).second) throw Error(ErrorKind::OverlappingYears, "year " + std::to_string(y) + " appears in more than one split");
        }
    }
    auto max_of = [](const std::vector<int>& v) { return *std::max_element(v.begin(), v.end()); };
    auto min_of = [](const std::vector<int>& v) { return *std::min_element(v.begin(), v.end()); };
    if (!(max_of(train_years) < min_of(val_years) && max_of(val_years) < min_of(test_years))) {
        throw Error(ErrorKind::InvalidConfig, "split years must be ordered train < val < test");
    }

    std::vector<bool> keep[3];
    for (auto& k : keep) k.assign(frame.rows(), false);
    for (std::size_t r = 0; r < frame.rows(); ++r) {
        const int year = to_civil(frame.timestamps[r]).year;
        for (std::size_t i = 0; i < 3; ++i) {
            if (std::find(lists[i]->begin(), lists[i]->end(), year) != lists[i]->end()) keep[i][r] = true;
        }
    }
    DatasetSplit split;
    split.train = frame.filter_rows(keep[0]);
    split.val = frame.filter_rows(keep[1]);
    split.test = frame.filter_rows(keep[2]);
    split.train_years = train_years;
    split.val_years = val_years;
    split.test_years = test_years;
    const SeriesFrame* parts[] = {&split.train, &split.val, &split.test};
    for (std::size_t i = 0; i < 3; ++i) {
        if (parts[i]->rows() == 0) throw Error(ErrorKind::EmptySplit, std::string(names[i]) + " split has no rows");
    }
    return split;
}

void save_split(const std::filesystem::path& dir, const DatasetSplit& split) {
    save_frame(dir / "train", split.train);
    save_frame(dir / "val", split.val);
    save_frame(dir / "test", split.test);
    write_json_file(dir / "split.json",
                    Json{{"train_years", split.train_years}, {"val_years", split.val_years}, {"test_years", split.test_years}});
}

DatasetSplit load_split(const std::filesystem::path& dir) {
    const Json j = read_json_file(dir / "split.json");
    DatasetSplit split;
    try {
        split.train_years = j.at("train_years").get<std::vector<int>>();
        split.val_years = j.at("val_years").get<std::vector<int>>();
        split.test_years = j.at("test_years").get<std::vector<int>>();
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::ParseError, (dir / "split.json").string() + ": " + e.what());
    }
    split.train = load_frame(dir / "train");
    split.val = load_frame(dir / "val");
    split.test = load_frame(dir / "test");
    return split;
}

std::vector<double> interpolate_missing(const std::vector<double>& values) {
    std::vector<double> out = values;
    const std::size_t n = out.size();
    std::size_t prev = n;   // index of last finite value
    for (std::size_t i = 0; i < n; ++i) {
        if (std::isnan(out[i])) continue;
        if (prev == n) {
            for (std::size_t k = 0; k < i; ++k) out[k] = out[i];
        } else if (i > prev + 1) {
            for (std::size_t k = prev + 1; k < i; ++k) {
                const double w = static_cast<double>(k - prev) / static_cast<double>(i - prev);
                out[k] = out[prev] + w * (out[i] - out[prev]);
            }
        }
        prev = i;
    }
    if (prev == n) throw Error(ErrorKind::AllMissingColumn, "series has no finite values to interpolate");
    for (std::size_t k = prev + 1; k < n; ++k) out[k] = out[prev];
    return out;
}

} // namespace windcast::data
