#include <cmath>

#include "windcast/common/csv.hpp"
#include "windcast/common/error.hpp"
#include "windcast/decomp/decomposition.hpp"

namespace windcast::decomp {

const char* to_string(Kind kind) {
    switch (kind) {
    case Kind::VMD: return "VMD";
    case Kind::EEMD: return "EEMD";
    case Kind::MSTL: return "MSTL";
    }
    return "?";
}

Kind kind_from_string(const std::string& text) {
    if (text == "VMD" || text == "vmd") return Kind::VMD;
    if (text == "EEMD" || text == "eemd") return Kind::EEMD;
    if (text == "MSTL" || text == "mstl") return Kind::MSTL;
    throw Error(ErrorKind::InvalidConfig, "unknown decomposition kind '" + text + "' (expected VMD, EEMD or MSTL)");
}

namespace {

const char* init_name(VmdInit init) {
    switch (init) {
    case VmdInit::Zero: return "zero";
    case VmdInit::Uniform: return "uniform";
    case VmdInit::Random: return "random";
    }
    return "?";
}

VmdInit init_from_string(const std::string& text) {
    if (text == "zero") return VmdInit::Zero;
    if (text == "uniform") return VmdInit::Uniform;
    if (text == "random") return VmdInit::Random;
    throw Error(ErrorKind::InvalidConfig, "unknown VMD init '" + text + "' (expected zero, uniform or random)");
}

template <typename T>
T get_as(const Json& j, const std::string& key) {
    try {
        if constexpr (std::is_same_v<T, std::size_t>) {
            if (j.is_number_float() && j.get<double>() != std::floor(j.get<double>())) {
                throw Error(ErrorKind::InvalidConfig, "'" + key + "' must be an integer");
            }
            if (j.get<double>() < 0) throw Error(ErrorKind::InvalidConfig, "'" + key + "' must be non-negative");
            return static_cast<std::size_t>(j.get<double>());
        } else {
            return j.get<T>();
        }
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::InvalidConfig, "'" + key + "': " + e.what());
    }
}

void apply_vmd(VmdConfig& c, const std::string& key, const Json& v) {
    if (key == "K") c.K = get_as<std::size_t>(v, key);
    else if (key == "alpha") c.alpha = get_as<double>(v, key);
    else if (key == "tau_dual") c.tau_dual = get_as<double>(v, key);
    else if (key == "tol") c.tol = get_as<double>(v, key);
    else if (key == "dc_mode") c.dc_mode = get_as<bool>(v, key);
    else if (key == "init") c.init = init_from_string(get_as<std::string>(v, key));
    else if (key == "max_iter") c.max_iter = get_as<std::size_t>(v, key);
    else if (key == "seed") c.seed = get_as<std::uint64_t>(v, key);
    else throw Error(ErrorKind::InvalidConfig, "unknown VMD parameter '" + key + "'");
}

void apply_eemd(EemdConfig& c, const std::string& key, const Json& v) {
    if (key == "ensembles") c.ensembles = get_as<std::size_t>(v, key);
    else if (key == "noise_ratio") c.noise_ratio = get_as<double>(v, key);
    else if (key == "max_imfs") c.max_imfs = get_as<std::size_t>(v, key);
    else if (key == "max_siftings") c.max_siftings = get_as<std::size_t>(v, key);
    else if (key == "seed") c.seed = get_as<std::uint64_t>(v, key);
    else throw Error(ErrorKind::InvalidConfig, "unknown EEMD parameter '" + key + "'");
}

void apply_mstl(MstlConfig& c, const std::string& key, const Json& v) {
    if (key == "periods") c.periods = get_as<std::vector<std::size_t>>(v, key);
    else if (key == "loess_windows") c.loess_windows = get_as<std::vector<std::size_t>>(v, key);
    else if (key == "seasonal_window") c.loess_windows.assign(c.periods.size(), get_as<std::size_t>(v, key));
    else if (key == "iterations") c.iterations = get_as<std::size_t>(v, key);
    else throw Error(ErrorKind::InvalidConfig, "unknown MSTL parameter '" + key + "'");
}

} // namespace

void DecompositionConfig::validate() const {
    switch (kind) {
    case Kind::VMD:
        if (vmd.K < 1) throw Error(ErrorKind::InvalidConfig, "VMD K must be >= 1");
        if (!(vmd.alpha > 0)) throw Error(ErrorKind::InvalidConfig, "VMD alpha must be > 0");
        if (!(vmd.tau_dual >= 0)) throw Error(ErrorKind::InvalidConfig, "VMD tau_dual must be >= 0");
        if (!(vmd.tol > 0)) throw Error(ErrorKind::InvalidConfig, "VMD tol must be > 0");
        if (vmd.max_iter < 1) throw Error(ErrorKind::InvalidConfig, "VMD max_iter must be >= 1");
        break;
    case Kind::EEMD:
        if (eemd.ensembles < 1) throw Error(ErrorKind::InvalidConfig, "EEMD ensembles must be >= 1");
        if (!(eemd.noise_ratio >= 0)) throw Error(ErrorKind::InvalidConfig, "EEMD noise_ratio must be >= 0");
        if (eemd.max_imfs < 1) throw Error(ErrorKind::InvalidConfig, "EEMD max_imfs must be >= 1");
        break;
    case Kind::MSTL:
        if (mstl.periods.empty()) throw Error(ErrorKind::InvalidConfig, "MSTL needs at least one period");
        for (std::size_t p : mstl.periods) {
            if (p < 2) throw Error(ErrorKind::InvalidConfig, "MSTL periods must be >= 2");
        }
        for (std::size_t w : mstl.loess_windows) {
            if (w < 7 || w % 2 == 0) throw Error(ErrorKind::InvalidConfig, "MSTL loess windows must be odd and >= 7");
        }
        if (mstl.iterations < 1) throw Error(ErrorKind::InvalidConfig, "MSTL iterations must be >= 1");
        break;
    }
}

Json to_json(const DecompositionConfig& cfg) {
    Json j;
    j["kind"] = to_string(cfg.kind);
    j["vmd"] = {{"K", cfg.vmd.K},           {"alpha", cfg.vmd.alpha},       {"tau_dual", cfg.vmd.tau_dual},
                {"tol", cfg.vmd.tol},       {"dc_mode", cfg.vmd.dc_mode},   {"init", init_name(cfg.vmd.init)},
                {"max_iter", cfg.vmd.max_iter}, {"seed", cfg.vmd.seed}};
    j["eemd"] = {{"ensembles", cfg.eemd.ensembles}, {"noise_ratio", cfg.eemd.noise_ratio},
                 {"max_imfs", cfg.eemd.max_imfs},   {"max_siftings", cfg.eemd.max_siftings},
                 {"seed", cfg.eemd.seed}};
    j["mstl"] = {{"periods", cfg.mstl.periods}, {"loess_windows", cfg.mstl.loess_windows},
                 {"iterations", cfg.mstl.iterations}};
    return j;
}

DecompositionConfig decomposition_from_json(const Json& j) {
    if (!j.is_object()) throw Error(ErrorKind::InvalidConfig, "decomposition config must be a JSON object");
    DecompositionConfig cfg;
    if (j.contains("kind")) cfg.kind = kind_from_string(get_as<std::string>(j["kind"], "kind"));
    if (j.contains("vmd")) {
        for (auto it = j["vmd"].begin(); it != j["vmd"].end(); ++it) apply_vmd(cfg.vmd, it.key(), it.value());
    }
    if (j.contains("eemd")) {
        for (auto it = j["eemd"].begin(); it != j["eemd"].end(); ++it) apply_eemd(cfg.eemd, it.key(), it.value());
    }
    if (j.contains("mstl")) {
        // periods first so seasonal_window can size itself
        if (j["mstl"].contains("periods")) apply_mstl(cfg.mstl, "periods", j["mstl"]["periods"]);
        for (auto it = j["mstl"].begin(); it != j["mstl"].end(); ++it) {
            if (it.key() != "periods") apply_mstl(cfg.mstl, it.key(), it.value());
        }
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (it.key() != "kind" && it.key() != "vmd" && it.key() != "eemd" && it.key() != "mstl") {
            throw Error(ErrorKind::InvalidConfig, "unknown decomposition config key '" + it.key() + "'");
        }
    }
    cfg.validate();
    return cfg;
}

DecompositionConfig apply_overrides(const DecompositionConfig& base, const Json& overrides) {
    DecompositionConfig cfg = base;
    if (overrides.is_null()) return cfg;
    if (!overrides.is_object()) throw Error(ErrorKind::InvalidConfig, "decomposition overrides must be an object");
    for (auto it = overrides.begin(); it != overrides.end(); ++it) {
        switch (cfg.kind) {
        case Kind::VMD: apply_vmd(cfg.vmd, it.key(), it.value()); break;
        case Kind::EEMD: apply_eemd(cfg.eemd, it.key(), it.value()); break;
        case Kind::MSTL: apply_mstl(cfg.mstl, it.key(), it.value()); break;
        }
    }
    cfg.validate();
    return cfg;
}

ModeSet decompose(std::span<const double> signal, const DecompositionConfig& cfg) {
    cfg.validate();
    switch (cfg.kind) {
    case Kind::VMD: return vmd_decompose(signal, cfg.vmd);
    case Kind::EEMD: return eemd_decompose(signal, cfg.eemd);
    case Kind::MSTL: return mstl_decompose(signal, cfg.mstl);
    }
    throw Error(ErrorKind::InvalidConfig, "unknown decomposition kind");
}

std::vector<double> reconstruct(const ModeSet& modes) {
    std::vector<double> out = modes.residual;
    if (out.empty() && !modes.modes.empty()) out.assign(modes.modes.front().size(), 0.0);
    for (const auto& m : modes.modes) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += m[i];
    }
    return out;
}

std::vector<std::size_t> mstl_window_grid() {
    std::vector<std::size_t> grid;
    for (std::size_t w = 7; w <= 99; w += 4) grid.push_back(w);
    grid.push_back(101);
    return grid;
}

tpe::SearchSpace param_space(Kind kind) {
    using tpe::ParamSpec;
    tpe::SearchSpace s;
    switch (kind) {
    case Kind::VMD:
        s.params = {ParamSpec::int_uniform("K", 2, 12), ParamSpec::log_uniform("alpha", 100.0, 10000.0),
                    ParamSpec::log_uniform("tol", 1e-8, 1e-5),
                    ParamSpec::categorical("tau_dual", {Json(0.0), Json(0.1), Json(1.0)})};
        break;
    case Kind::EEMD:
        s.params = {ParamSpec::int_uniform("ensembles", 8, 64), ParamSpec::uniform("noise_ratio", 0.05, 0.4),
                    ParamSpec::int_uniform("max_imfs", 4, 10)};
        break;
    case Kind::MSTL: {
        std::vector<Json> windows;
        for (std::size_t w : mstl_window_grid()) windows.emplace_back(w);
        s.params = {ParamSpec::int_uniform("iterations", 1, 3), ParamSpec::categorical("seasonal_window", windows)};
        break;
    }
    }
    return s;
}

// ----------------------------------------------------------------- storage

void save_modeset(const std::filesystem::path& dir, const ModeSet& modes) {
    const std::size_t n = modes.input_length;
    std::string csv;
    for (std::size_t k = 0; k < modes.size(); ++k) csv += csv_field(modes.names[k]) + ",";
    csv += "residual\n";
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& m : modes.modes) csv += format_real(m[i]) + ",";
        csv += format_real(modes.residual[i]) + "\n";
    }
    write_text_file(dir / "modes.csv", csv);

    double res2 = 0.0, total2 = 0.0;
    const auto full = reconstruct(modes);
    for (std::size_t i = 0; i < n; ++i) {
        res2 += modes.residual[i] * modes.residual[i];
        total2 += full[i] * full[i];
    }
    Json meta;
    meta["format"] = "windcast-modes-v1";
    meta["config"] = to_json(modes.config);
    meta["names"] = modes.names;
    meta["center_frequencies"] = modes.center_frequencies;
    meta["input_length"] = n;
    meta["iterations"] = modes.iterations;
    meta["converged"] = modes.converged;
    meta["residual_relative_l2"] = total2 > 0 ? std::sqrt(res2 / total2) : 0.0;
    switch (modes.config.kind) {
    case Kind::VMD: meta["seed"] = modes.config.vmd.seed; break;
    case Kind::EEMD: meta["seed"] = modes.config.eemd.seed; break;
    case Kind::MSTL: meta["seed"] = 0; break;
    }
    write_json_file(dir / "meta.json", meta);
}

ModeSet load_modeset(const std::filesystem::path& dir) {
    const Json meta = read_json_file(dir / "meta.json");
    ModeSet m;
    m.config = decomposition_from_json(meta.at("config"));
    m.names = meta.at("names").get<std::vector<std::string>>();
    m.center_frequencies = meta.value("center_frequencies", std::vector<double>{});
    m.input_length = meta.at("input_length").get<std::size_t>();
    m.iterations = meta.value("iterations", std::size_t{0});
    m.converged = meta.value("converged", true);
    const CsvTable table = read_csv(dir / "modes.csv");
    if (table.header.size() != m.names.size() + 1 || table.rows.size() != m.input_length) {
        throw Error(ErrorKind::ParseError, (dir / "modes.csv").string() + " does not match meta.json");
    }
    m.modes.assign(m.names.size(), std::vector<double>(m.input_length));
    m.residual.resize(m.input_length);
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        if (row.size() != m.names.size() + 1) {
            throw Error(ErrorKind::ParseError, "modes.csv line " + std::to_string(table.line_numbers[i]) + ": wrong field count");
        }
        for (std::size_t k = 0; k <= m.names.size(); ++k) {
            const auto v = parse_real(row[k]);
            if (!v) throw Error(ErrorKind::ParseError, "modes.csv line " + std::to_string(table.line_numbers[i]) + ": bad number");
            (k < m.names.size() ? m.modes[k][i] : m.residual[i]) = *v;
        }
    }
    return m;
}

} // namespace windcast::decomp
