#pragma once

#include <cstdint>
#include <vector>

#include "windcast/common/rng.hpp"
#include "windcast/tpe/space.hpp"

namespace windcast::tpe {

struct Observation {
    Config config;
    double loss = 0.0;   // +inf marks a failed trial
};

struct TpeConfig {
    double gamma = 0.25;
    std::size_t n_ei_candidates = 24;
    double prior_weight = 1.0;
    std::uint64_t seed = 0;

    void validate() const;
};

Config sample_random(const SearchSpace& space, Rng& rng);

struct ObservationSplit {
    std::vector<Observation> good;
    std::vector<Observation> bad;
};

/// good = the ceil(gamma * n) lowest losses, ties kept in insertion order.
ObservationSplit split_observations(const std::vector<Observation>& obs, double gamma);

/// One-parameter Parzen estimator. Continuous kinds mix truncated Gaussians
/// at the samples with a uniform prior component; log-uniform works on log
/// values and integers integrate the continuous fit over unit intervals.
/// Categoricals use counts smoothed by prior_weight per choice.
class ParzenDensity {
public:
    ParzenDensity(const ParamSpec& spec, const std::vector<Json>& samples, double prior_weight);

    /// Log density (continuous) or log probability mass (integer, categorical).
    double log_density(const Json& value) const;
    double density(const Json& value) const;
    Json sample(Rng& rng) const;

    const std::vector<double>& means() const noexcept { return mus_; }
    const std::vector<double>& bandwidths() const noexcept { return sigmas_; }

private:
    double log_pdf_internal(double z) const;
    double cdf_internal(double z) const;

    ParamSpec spec_;
    double lo_ = 0.0, hi_ = 1.0;   // internal domain
    std::vector<double> mus_, sigmas_, weights_, norms_;
    double prior_weight_ = 1.0;   // normalized weight of the uniform component
    std::vector<double> probs_;   // categorical
};

/// Random config for fewer than two observations, otherwise the per-parameter
/// argmax of l(x) / g(x) over candidates drawn from l.
Config suggest(const SearchSpace& space, const std::vector<Observation>& obs, const TpeConfig& cfg, Rng& rng);

Json to_json(const Observation& obs);
Observation observation_from_json(const Json& j);
Json to_json(const TpeConfig& cfg);
TpeConfig tpe_config_from_json(const Json& j);

} // namespace windcast::tpe
