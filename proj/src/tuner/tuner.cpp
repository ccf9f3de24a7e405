#include "windcast/tuner/tuner.hpp"

#include <cmath>

#include "windcast/common/error.hpp"
#include "windcast/common/rng.hpp"
#include "windcast/eval/metrics.hpp"

namespace windcast::tuner {

void TunerConfig::validate() const {
    if (n_init < 1) throw Error(ErrorKind::InvalidConfig, "n_init must be >= 1");
    if (!(theta >= 0.0)) throw Error(ErrorKind::InvalidConfig, "theta must be >= 0");
    u_space.validate();
    v_space.validate();
    u_base.validate();
    v_base.validate();
    tpe.validate();
}

Json to_json(const TunerConfig& c) {
    return Json{{"n_init", c.n_init},
                {"n_max", c.n_max},
                {"theta", encode_real(c.theta)},
                {"patience", c.patience},
                {"u_space", tpe::to_json(c.u_space)},
                {"v_space", tpe::to_json(c.v_space)},
                {"u_base", decomp::to_json(c.u_base)},
                {"v_base", tft::to_json(c.v_base)},
                {"tpe", tpe::to_json(c.tpe)},
                {"pipeline", to_json(c.pipeline)},
                {"evaluation_split", to_string(c.evaluation_split)},
                {"seed", c.seed}};
}

TunerConfig tuner_config_from_json(const Json& j) {
    if (!j.is_object()) throw Error(ErrorKind::InvalidConfig, "tuner config must be a JSON object");
    static const std::vector<std::string> known{"n_init", "n_max",  "theta",    "patience", "u_space",          "v_space",
                                                "u_base", "v_base", "tpe",      "pipeline", "evaluation_split", "seed"};
    for (const auto& [key, value] : j.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw Error(ErrorKind::InvalidConfig, "unknown tuner config key '" + key + "'");
        }
    }
    TunerConfig c;
    try {
        c.n_init = j.value("n_init", c.n_init);
        c.n_max = j.value("n_max", c.n_max);
        if (j.contains("theta")) c.theta = decode_real(j["theta"]);
        c.patience = j.value("patience", c.patience);
        if (j.contains("u_base")) c.u_base = decomp::decomposition_from_json(j["u_base"]);
        if (j.contains("v_base")) c.v_base = tft::tft_config_from_json(j["v_base"]);
        c.u_space = j.contains("u_space") ? tpe::space_from_json(j["u_space"]) : decomp::param_space(c.u_base.kind);
        c.v_space = j.contains("v_space") ? tpe::space_from_json(j["v_space"]) : tft::model_param_space();
        if (j.contains("tpe")) c.tpe = tpe::tpe_config_from_json(j["tpe"]);
        if (j.contains("pipeline")) c.pipeline = pipeline_options_from_json(j["pipeline"]);
        if (j.contains("evaluation_split")) c.evaluation_split = eval_span_from_string(j["evaluation_split"].get<std::string>());
        c.seed = j.value("seed", c.seed);
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::InvalidConfig, std::string("tuner config: ") + e.what());
    }
    c.validate();
    return c;
}

std::size_t TunerState::best_index() const {
    if (observations.empty()) throw Error(ErrorKind::EmptyObservations, "the observation set is empty");
    std::size_t best = 0;
    for (std::size_t i = 1; i < observations.size(); ++i) {
        if (observations[i].loss < observations[best].loss) best = i;
    }
    return best;
}

Evaluator guarded(std::function<double(const tpe::Config&, const tpe::Config&)> objective) {
    return [objective = std::move(objective)](const tpe::Config& u, const tpe::Config& v) {
        EvalResult r;
        try {
            r.loss = objective(u, v);
            if (!std::isfinite(r.loss)) {
                r.failure = "non-finite loss";
                r.loss = std::numeric_limits<double>::infinity();
            }
        } catch (const Error& e) {
            r.failure = std::string(to_string(e.kind())) + ": " + e.what();
        } catch (const std::exception& e) {
            r.failure = e.what();
        }
        return r;
    };
}

double evaluate(const TunerConfig& cfg, const PreparedSeries& series, const tpe::Config& u, const tpe::Config& v) {
    const decomp::DecompositionConfig U = decomp::apply_overrides(cfg.u_base, u);
    const tft::TftConfig V = tft::apply_overrides(cfg.v_base, v);
    const TrainedPipeline p = fit_pipeline(series, U, V, cfg.pipeline);
    const auto [from, to] = span_bounds(series, cfg.evaluation_split);
    const SpanForecast f = forecast_span(p, series, from, to);
    return eval::nmae(f.actual, f.predicted);
}

Evaluator pipeline_evaluator(const TunerConfig& cfg, const PreparedSeries& series) {
    return guarded([&cfg, &series](const tpe::Config& u, const tpe::Config& v) { return evaluate(cfg, series, u, v); });
}

namespace {

tpe::Config draw(const tpe::SearchSpace& space, Rng& rng) {
    return space.empty() ? tpe::Config(Json::object()) : tpe::sample_random(space, rng);
}

Trial record(TunerState& state, const char* phase, const tpe::Config& u, const tpe::Config& v, const EvalResult& r,
             double reference) {
    Trial t;
    t.phase = phase;
    t.iteration = state.iteration;
    t.u = u;
    t.v = v;
    t.loss = r.loss;
    t.reference_loss = reference;
    t.failure = r.failure;
    return t;
}

// O restricted to entries whose frozen coordinate equals `frozen`, or all of
// O when fewer than two such entries exist, as observations of the free one.
std::vector<tpe::Observation> history(const TunerState& state, bool free_is_u, const tpe::Config& frozen) {
    std::vector<tpe::Observation> sub, all;
    for (const auto& e : state.observations) {
        const tpe::Config& fixed = free_is_u ? e.v : e.u;
        tpe::Observation o{free_is_u ? e.u : e.v, e.loss};
        if (fixed == frozen) sub.push_back(o);
        all.push_back(std::move(o));
    }
    return sub.size() >= 2 ? sub : all;
}

bool propose(TunerState& state, const TunerConfig& cfg, const Evaluator& evaluate, bool free_is_u, Rng& rng) {
    const tpe::SearchSpace& space = free_is_u ? cfg.u_space : cfg.v_space;
    if (space.empty()) return false;
    const Entry best = state.best();
    const tpe::Config& frozen = free_is_u ? best.v : best.u;
    const tpe::Config candidate = tpe::suggest(space, history(state, free_is_u, frozen), cfg.tpe, rng);
    const tpe::Config& u = free_is_u ? candidate : best.u;
    const tpe::Config& v = free_is_u ? best.v : candidate;
    // evaluations are deterministic, so a repeated pair reuses its recorded result
    const auto seen = std::find_if(state.trials.begin(), state.trials.end(),
                                   [&](const Trial& t) { return t.u == u && t.v == v; });
    const EvalResult r = seen != state.trials.end() ? EvalResult{seen->loss, seen->failure} : evaluate(u, v);
    Trial t = record(state, free_is_u ? "U" : "V", u, v, r, best.loss);
    t.reused = seen != state.trials.end();
    t.accepted = best.loss - r.loss > cfg.theta;
    if (t.accepted) state.observations.push_back({u, v, r.loss});
    state.trials.push_back(std::move(t));
    return state.trials.back().accepted;
}

} // namespace

TunerState initialize(const TunerConfig& cfg, const Evaluator& evaluate) {
    cfg.validate();
    TunerState state;
    Rng rng(cfg.seed);
    for (std::size_t i = 0; i < cfg.n_init; ++i) {
        tpe::Config u, v;
        for (int attempt = 0; attempt < 100; ++attempt) {
            u = draw(cfg.u_space, rng);
            v = draw(cfg.v_space, rng);
            const bool seen = std::any_of(state.observations.begin(), state.observations.end(),
                                          [&](const Entry& e) { return e.u == u && e.v == v; });
            if (!seen) break;
        }
        const EvalResult r = evaluate(u, v);
        Trial t = record(state, "init", u, v, r, r.loss);
        t.accepted = true;
        state.trials.push_back(std::move(t));
        state.observations.push_back({u, v, r.loss});
    }
    if (!std::isfinite(state.best().loss)) {
        std::string reason = state.trials.empty() ? "" : state.trials.front().failure;
        throw Error(ErrorKind::AllTrialsFailed, "all " + std::to_string(cfg.n_init) + " initial trials failed (first: " + reason + ")");
    }
    state.rng_state = rng.state();
    return state;
}

void step(TunerState& state, const TunerConfig& cfg, const Evaluator& evaluate) {
    Rng rng;
    rng.restore(state.rng_state);
    const bool u_accepted = propose(state, cfg, evaluate, true, rng);
    const bool v_accepted = propose(state, cfg, evaluate, false, rng);
    ++state.iteration;
    state.idle_steps = (u_accepted || v_accepted) ? 0 : state.idle_steps + 1;
    state.rng_state = rng.state();
}

bool finished(const TunerState& state, const TunerConfig& cfg) {
    return state.iteration >= cfg.n_max || (cfg.patience > 0 && state.idle_steps >= cfg.patience);
}

void run(TunerState& state, const TunerConfig& cfg, const Evaluator& evaluate,
         const std::function<void(const TunerState&)>& after_step) {
    if (state.observations.empty()) {
        state = initialize(cfg, evaluate);
        if (after_step) after_step(state);
    }
    while (!finished(state, cfg)) {
        step(state, cfg, evaluate);
        if (after_step) after_step(state);
    }
}

namespace {

Json entry_json(const tpe::Config& u, const tpe::Config& v, double loss) {
    return Json{{"u", u}, {"v", v}, {"loss", encode_real(loss)}};
}

} // namespace

Json study_to_json(const TunerConfig& cfg, const TunerState& state) {
    Json obs = Json::array();
    for (const auto& e : state.observations) obs.push_back(entry_json(e.u, e.v, e.loss));
    Json trials = Json::array();
    for (const auto& t : state.trials) {
        Json j = entry_json(t.u, t.v, t.loss);
        j["phase"] = t.phase;
        j["iteration"] = t.iteration;
        j["reference_loss"] = encode_real(t.reference_loss);
        j["accepted"] = t.accepted;
        if (!t.failure.empty()) j["failure"] = t.failure;
        if (t.reused) j["reused"] = true;
        trials.push_back(j);
    }
    Json out{{"config", to_json(cfg)},          {"observations", obs},         {"trials", trials},
             {"iteration", state.iteration},    {"idle_steps", state.idle_steps}, {"rng_state", state.rng_state},
             {"finished", finished(state, cfg)}};
    if (!state.observations.empty()) {
        const Entry& b = state.best();
        out["best"] = entry_json(b.u, b.v, b.loss);
    }
    return out;
}

std::pair<TunerConfig, TunerState> study_from_json(const Json& j) {
    try {
        TunerConfig cfg = tuner_config_from_json(j.at("config"));
        TunerState state;
        for (const auto& e : j.at("observations")) state.observations.push_back({e.at("u"), e.at("v"), decode_real(e.at("loss"))});
        for (const auto& t : j.at("trials")) {
            Trial trial;
            trial.phase = t.at("phase").get<std::string>();
            trial.iteration = t.at("iteration").get<std::size_t>();
            trial.u = t.at("u");
            trial.v = t.at("v");
            trial.loss = decode_real(t.at("loss"));
            trial.reference_loss = decode_real(t.at("reference_loss"));
            trial.accepted = t.at("accepted").get<bool>();
            trial.failure = t.value("failure", std::string());
            trial.reused = t.value("reused", false);
            state.trials.push_back(std::move(trial));
        }
        state.iteration = j.at("iteration").get<std::size_t>();
        state.idle_steps = j.at("idle_steps").get<std::size_t>();
        state.rng_state = j.at("rng_state").get<std::string>();
        return {std::move(cfg), std::move(state)};
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::ParseError, std::string("study file: ") + e.what());
    }
}

std::vector<double> best_curve(const TunerState& state, std::size_t n_init) {
    std::vector<double> curve;
    double best = std::numeric_limits<double>::infinity();
    std::size_t seen = 0;
    std::size_t iteration = 0;
    for (const auto& t : state.trials) {
        if (t.phase == "init") {
            best = std::min(best, t.loss);
            if (++seen == n_init) curve.push_back(best);
            continue;
        }
        while (iteration < t.iteration) {
            curve.push_back(best);
            ++iteration;
        }
        if (t.accepted) best = std::min(best, t.loss);
    }
    if (!state.trials.empty() && state.iteration > 0) {
        while (iteration < state.iteration) {
            curve.push_back(best);
            ++iteration;
        }
    }
    return curve;
}

} // namespace windcast::tuner
