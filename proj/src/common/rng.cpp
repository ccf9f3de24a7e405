#include "windcast/common/rng.hpp"

#include <cmath>
#include <cstring>
#include <numbers>
#include <sstream>

#include "windcast/common/error.hpp"

namespace windcast {

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
    if (hi < lo) throw Error(ErrorKind::InvalidConfig, "uniform_int: hi < lo");
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<std::int64_t>(engine_());
    // rejection sampling keeps the draw unbiased
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return lo + static_cast<std::int64_t>(x % span);
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

std::string Rng::state() const {
    std::ostringstream os;
    os << engine_ << ' ' << (has_spare_ ? 1 : 0) << ' ';
    std::uint64_t bits = 0;
    std::memcpy(&bits, &spare_, sizeof bits);
    os << bits;
    return os.str();
}

void Rng::restore(const std::string& state) {
    std::istringstream is(state);
    int spare_flag = 0;
    std::uint64_t bits = 0;
    is >> engine_ >> spare_flag >> bits;
    if (!is) throw Error(ErrorKind::ParseError, "invalid rng state string");
    has_spare_ = spare_flag != 0;
    std::memcpy(&spare_, &bits, sizeof bits);
}

std::uint64_t Rng::derive(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace windcast
