#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace windcast {

/// Seconds since the Unix epoch, UTC.
using Timestamp = std::int64_t;

inline constexpr Timestamp kSecondsPerHour = 3600;
inline constexpr Timestamp kSecondsPerDay = 86400;

struct CivilTime {
    int year = 1970;
    unsigned month = 1;   // 1..12
    unsigned day = 1;     // 1..31
    unsigned hour = 0;
    unsigned minute = 0;
    unsigned second = 0;
    unsigned weekday = 3; // 0 = Monday .. 6 = Sunday
};

Timestamp from_civil(int year, unsigned month, unsigned day, unsigned hour = 0,
                     unsigned minute = 0, unsigned second = 0);
CivilTime to_civil(Timestamp ts);

/// Accepts `YYYY-MM-DD`, `YYYY-MM-DDTHH:MM[:SS[.fff]]` with optional `Z` or a
/// fixed `+HH:MM` / `-HH:MM` offset; a space may replace the `T`.
std::optional<Timestamp> parse_iso8601(std::string_view text);

/// Always `YYYY-MM-DDTHH:MM:SSZ`.
std::string format_iso8601(Timestamp ts);

/// 0 = spring (Mar-May), 1 = summer (Jun-Aug), 2 = autumn (Sep-Nov), 3 = winter (Dec-Feb).
unsigned season_of_month(unsigned month);
const char* season_name(unsigned season);
const char* month_name(unsigned month);

} // namespace windcast
