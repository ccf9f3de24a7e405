#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "windcast/tpe/optimizer.hpp"
#include "windcast/tuner/pipeline.hpp"

namespace windcast::tuner {

struct TunerConfig {
    std::size_t n_init = 5;
    std::size_t n_max = 20;
    double theta = 0.0;               // required nMAE decrease
    std::size_t patience = 5;         // steps without an accepted proposal before stopping
    tpe::SearchSpace u_space;         // decomposition hyperparameters
    tpe::SearchSpace v_space;         // model hyperparameters
    decomp::DecompositionConfig u_base;
    tft::TftConfig v_base;
    tpe::TpeConfig tpe;
    PipelineOptions pipeline;
    EvalSpan evaluation_split = EvalSpan::Validation;
    std::uint64_t seed = 0;

    void validate() const;
};

Json to_json(const TunerConfig& cfg);
TunerConfig tuner_config_from_json(const Json& j);

/// Entry of the observation set O.
struct Entry {
    tpe::Config u;
    tpe::Config v;
    double loss = 0.0;
};

/// Every evaluated proposal, accepted or not.
struct Trial {
    std::string phase;                // "init", "U" or "V"
    std::size_t iteration = 0;
    tpe::Config u;
    tpe::Config v;
    double loss = 0.0;
    double reference_loss = 0.0;      // loss of the frozen-coordinate best it competed with
    bool accepted = false;
    std::string failure;
    bool reused = false;              // same (U, V) as an earlier trial; not re-evaluated
};

struct TunerState {
    std::vector<Entry> observations;
    std::vector<Trial> trials;
    std::size_t iteration = 0;
    std::size_t idle_steps = 0;       // consecutive steps that accepted nothing
    std::string rng_state;

    /// Index of the lowest loss in O (first on ties). Throws EmptyObservations.
    std::size_t best_index() const;
    const Entry& best() const { return observations[best_index()]; }
};

struct EvalResult {
    double loss = std::numeric_limits<double>::infinity();
    std::string failure;
};

using Evaluator = std::function<EvalResult(const tpe::Config& u, const tpe::Config& v)>;

/// Wraps an objective so that exceptions become +inf losses with the reason kept.
Evaluator guarded(std::function<double(const tpe::Config&, const tpe::Config&)> objective);

/// nMAE of the decomposed TFT pipeline on the configured evaluation span.
double evaluate(const TunerConfig& cfg, const PreparedSeries& series, const tpe::Config& u, const tpe::Config& v);
Evaluator pipeline_evaluator(const TunerConfig& cfg, const PreparedSeries& series);

/// n_init random (U, V) pairs. Throws AllTrialsFailed when none is finite.
TunerState initialize(const TunerConfig& cfg, const Evaluator& evaluate);

/// One alternating round: propose U with V frozen, then V with U frozen.
void step(TunerState& state, const TunerConfig& cfg, const Evaluator& evaluate);

/// True once n_max steps ran or `patience` consecutive steps accepted nothing.
bool finished(const TunerState& state, const TunerConfig& cfg);

/// Initializes when the state is empty, then steps until finished. The
/// callback, if set, runs after initialization and after every step.
void run(TunerState& state, const TunerConfig& cfg, const Evaluator& evaluate,
         const std::function<void(const TunerState&)>& after_step = {});

/// The study file: config plus full state, enough to resume or audit.
Json study_to_json(const TunerConfig& cfg, const TunerState& state);
std::pair<TunerConfig, TunerState> study_from_json(const Json& j);

/// Best-loss value after init and after each step.
std::vector<double> best_curve(const TunerState& state, std::size_t n_init);

} // namespace windcast::tuner
