#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace windcast {

/// Seeded generator with platform-independent draws. The std distributions
/// are implementation-defined, so uniform/normal are derived directly from
/// the 64-bit engine output.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [lo, hi] inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

    /// Standard normal (Box-Muller; the spare value is cached).
    double normal();

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    /// Engine state plus cached spare, suitable for resuming a run.
    std::string state() const;
    void restore(const std::string& state);

    /// Stable sub-seed for independent streams (splitmix64 over seed and index).
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t index);

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace windcast
