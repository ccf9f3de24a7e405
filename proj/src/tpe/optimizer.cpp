#include "windcast/tpe/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "windcast/common/error.hpp"

namespace windcast::tpe {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kLogSqrt2Pi = 0.91893853320467274178;

double normal_cdf(double z) { return 0.5 * std::erfc(-z * kInvSqrt2); }

double log_sum_exp(const std::vector<double>& terms) {
    const double m = *std::max_element(terms.begin(), terms.end());
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double t : terms) s += std::exp(t - m);
    return m + std::log(s);
}

// Value mapped into the space the density is fitted in.
double to_internal(const ParamSpec& spec, const Json& value) {
    const double v = value.get<double>();
    return spec.kind == ParamKind::LogUniform ? std::log(v) : v;
}

} // namespace

void TpeConfig::validate() const {
    if (!(gamma > 0.0 && gamma < 1.0)) throw Error(ErrorKind::InvalidConfig, "TPE gamma must lie in (0, 1)");
    if (n_ei_candidates < 1) throw Error(ErrorKind::InvalidConfig, "TPE needs at least one EI candidate");
    if (!(prior_weight > 0.0)) throw Error(ErrorKind::InvalidConfig, "TPE prior_weight must be positive");
}

Config sample_random(const SearchSpace& space, Rng& rng) {
    Config c = Json::object();
    for (const auto& p : space.params) {
        switch (p.kind) {
        case ParamKind::Uniform: c[p.name] = rng.uniform(p.lo, p.hi); break;
        case ParamKind::LogUniform: c[p.name] = std::exp(rng.uniform(std::log(p.lo), std::log(p.hi))); break;
        case ParamKind::IntUniform:
            c[p.name] = static_cast<long>(rng.uniform_int(static_cast<std::int64_t>(p.lo), static_cast<std::int64_t>(p.hi)));
            break;
        case ParamKind::Categorical:
            c[p.name] = p.choices[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(p.choices.size()) - 1))];
            break;
        }
    }
    return c;
}

ObservationSplit split_observations(const std::vector<Observation>& obs, double gamma) {
    if (obs.empty()) throw Error(ErrorKind::EmptyObservations, "cannot split an empty observation list");
    std::vector<std::size_t> order(obs.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return obs[a].loss < obs[b].loss; });
    auto n_good = static_cast<std::size_t>(std::ceil(gamma * static_cast<double>(obs.size()) - 1e-12));
    n_good = std::clamp<std::size_t>(n_good, 1, obs.size());
    std::vector<bool> is_good(obs.size(), false);
    for (std::size_t i = 0; i < n_good; ++i) is_good[order[i]] = true;
    ObservationSplit s;
    for (std::size_t i = 0; i < obs.size(); ++i) (is_good[i] ? s.good : s.bad).push_back(obs[i]);
    return s;
}

ParzenDensity::ParzenDensity(const ParamSpec& spec, const std::vector<Json>& samples, double prior_weight)
    : spec_(spec) {
    if (spec.kind == ParamKind::Categorical) {
        std::vector<double> counts(spec.choices.size(), prior_weight);
        for (const auto& s : samples) {
            const std::size_t idx = choice_index(spec, s);
            if (idx == std::string::npos) {
                throw Error(ErrorKind::OutOfBoundsSample, "value " + s.dump() + " is not a choice of '" + spec.name + "'");
            }
            counts[idx] += 1.0;
        }
        const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
        for (double c : counts) probs_.push_back(c / total);
        return;
    }

    switch (spec.kind) {
    case ParamKind::LogUniform:
        lo_ = std::log(spec.lo);
        hi_ = std::log(spec.hi);
        break;
    case ParamKind::IntUniform:
        lo_ = spec.lo - 0.5;
        hi_ = spec.hi + 0.5;
        break;
    default:
        lo_ = spec.lo;
        hi_ = spec.hi;
    }
    for (const auto& s : samples) {
        if (!s.is_number() || s.get<double>() < spec.lo || s.get<double>() > spec.hi) {
            throw Error(ErrorKind::OutOfBoundsSample, "value " + s.dump() + " is outside the bounds of '" + spec.name + "'");
        }
        mus_.push_back(to_internal(spec, s));
    }
    const double range = hi_ - lo_;
    const double min_sigma = range / std::min(100.0, static_cast<double>(mus_.size()) + 1.0);
    for (std::size_t i = 0; i < mus_.size(); ++i) {
        double nearest = std::min(mus_[i] - lo_, hi_ - mus_[i]);
        for (std::size_t j = 0; j < mus_.size(); ++j) {
            if (j != i) nearest = std::min(nearest, std::abs(mus_[i] - mus_[j]));
        }
        const double sigma = std::clamp(nearest, min_sigma, range);
        sigmas_.push_back(sigma);
        norms_.push_back(normal_cdf((hi_ - mus_[i]) / sigma) - normal_cdf((lo_ - mus_[i]) / sigma));
    }
    const double total = static_cast<double>(mus_.size()) + prior_weight;
    prior_weight_ = prior_weight / total;
    weights_.assign(mus_.size(), 1.0 / total);
}

double ParzenDensity::log_pdf_internal(double z) const {
    if (z < lo_ || z > hi_) return -std::numeric_limits<double>::infinity();
    std::vector<double> terms;
    terms.reserve(mus_.size() + 1);
    terms.push_back(std::log(prior_weight_) - std::log(hi_ - lo_));
    for (std::size_t i = 0; i < mus_.size(); ++i) {
        const double u = (z - mus_[i]) / sigmas_[i];
        terms.push_back(std::log(weights_[i]) - 0.5 * u * u - kLogSqrt2Pi - std::log(sigmas_[i]) - std::log(norms_[i]));
    }
    return log_sum_exp(terms);
}

double ParzenDensity::cdf_internal(double z) const {
    z = std::clamp(z, lo_, hi_);
    double c = prior_weight_ * (z - lo_) / (hi_ - lo_);
    for (std::size_t i = 0; i < mus_.size(); ++i) {
        const double base = normal_cdf((lo_ - mus_[i]) / sigmas_[i]);
        c += weights_[i] * (normal_cdf((z - mus_[i]) / sigmas_[i]) - base) / norms_[i];
    }
    return c;
}

double ParzenDensity::log_density(const Json& value) const {
    if (spec_.kind == ParamKind::Categorical) {
        const std::size_t idx = choice_index(spec_, value);
        return idx == std::string::npos ? -std::numeric_limits<double>::infinity() : std::log(probs_[idx]);
    }
    if (spec_.kind == ParamKind::IntUniform) {
        const double k = std::round(value.get<double>());
        const double mass = cdf_internal(k + 0.5) - cdf_internal(k - 0.5);
        return mass > 0.0 ? std::log(mass) : -std::numeric_limits<double>::infinity();
    }
    return log_pdf_internal(to_internal(spec_, value));
}

double ParzenDensity::density(const Json& value) const { return std::exp(log_density(value)); }

Json ParzenDensity::sample(Rng& rng) const {
    if (spec_.kind == ParamKind::Categorical) {
        double u = rng.uniform(), acc = 0.0;
        for (std::size_t i = 0; i < probs_.size(); ++i) {
            acc += probs_[i];
            if (u < acc) return spec_.choices[i];
        }
        return spec_.choices.back();
    }
    double z = 0.0;
    double u = rng.uniform();
    if (u < prior_weight_ || mus_.empty()) {
        z = rng.uniform(lo_, hi_);
    } else {
        u -= prior_weight_;
        std::size_t k = std::min(static_cast<std::size_t>(u / weights_[0]), mus_.size() - 1);
        // truncated normal by rejection; the mean is in the domain and the
        // bandwidth is bounded below, so acceptance stays high
        do {
            z = rng.normal(mus_[k], sigmas_[k]);
        } while (z < lo_ || z > hi_);
    }
    switch (spec_.kind) {
    case ParamKind::LogUniform: return std::clamp(std::exp(z), spec_.lo, spec_.hi);
    case ParamKind::IntUniform: return static_cast<long>(std::clamp(std::round(z), spec_.lo, spec_.hi));
    default: return z;
    }
}

Config suggest(const SearchSpace& space, const std::vector<Observation>& obs, const TpeConfig& cfg, Rng& rng) {
    if (obs.size() < 2) return sample_random(space, rng);
    const ObservationSplit split = split_observations(obs, cfg.gamma);
    Config out = Json::object();
    for (const auto& p : space.params) {
        std::vector<Json> good, bad;
        for (const auto& o : split.good) {
            if (o.config.contains(p.name)) good.push_back(o.config[p.name]);
        }
        for (const auto& o : split.bad) {
            if (o.config.contains(p.name)) bad.push_back(o.config[p.name]);
        }
        const ParzenDensity l(p, good, cfg.prior_weight);
        const ParzenDensity g(p, bad, cfg.prior_weight);
        Json best;
        double best_score = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < cfg.n_ei_candidates; ++c) {
            Json cand = l.sample(rng);
            const double lg = g.log_density(cand);
            const double score = lg == -std::numeric_limits<double>::infinity()
                                     ? std::numeric_limits<double>::infinity()
                                     : l.log_density(cand) - lg;
            if (best.is_null() || score > best_score) {
                best = std::move(cand);
                best_score = score;
            }
        }
        out[p.name] = best;
    }
    return out;
}

Json to_json(const Observation& obs) { return Json{{"config", obs.config}, {"loss", encode_real(obs.loss)}}; }

Observation observation_from_json(const Json& j) {
    try {
        return Observation{j.at("config"), decode_real(j.at("loss"))};
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::ParseError, std::string("observation: ") + e.what());
    }
}

Json to_json(const TpeConfig& cfg) {
    return Json{{"gamma", cfg.gamma},
                {"n_ei_candidates", cfg.n_ei_candidates},
                {"prior_weight", cfg.prior_weight},
                {"seed", cfg.seed}};
}

TpeConfig tpe_config_from_json(const Json& j) {
    TpeConfig cfg;
    try {
        cfg.gamma = j.value("gamma", cfg.gamma);
        cfg.n_ei_candidates = j.value("n_ei_candidates", cfg.n_ei_candidates);
        cfg.prior_weight = j.value("prior_weight", cfg.prior_weight);
        cfg.seed = j.value("seed", cfg.seed);
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::InvalidConfig, std::string("tpe config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

} // namespace windcast::tpe
