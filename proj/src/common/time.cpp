#include "windcast/common/time.hpp"

#include <cctype>
#include <chrono>
#include <cstdio>

namespace windcast {

namespace {

bool read_digits(std::string_view s, std::size_t& pos, std::size_t count, int& out) {
    if (pos + count > s.size()) return false;
    int v = 0;
    for (std::size_t i = 0; i < count; ++i) {
        const char c = s[pos + i];
        if (!std::isdigit(static_cast<unsigned char>(c))) return false;
        v = v * 10 + (c - '0');
    }
    pos += count;
    out = v;
    return true;
}

bool expect(std::string_view s, std::size_t& pos, char c) {
    if (pos < s.size() && s[pos] == c) {
        ++pos;
        return true;
    }
    return false;
}

} // namespace

Timestamp from_civil(int year, unsigned month, unsigned day, unsigned hour, unsigned minute,
                     unsigned second) {
    using namespace std::chrono;
    const sys_days d = year_month_day{std::chrono::year{year}, std::chrono::month{month},
                                      std::chrono::day{day}};
    return static_cast<Timestamp>(d.time_since_epoch().count()) * kSecondsPerDay +
           static_cast<Timestamp>(hour) * 3600 + static_cast<Timestamp>(minute) * 60 +
           static_cast<Timestamp>(second);
}

CivilTime to_civil(Timestamp ts) {
    using namespace std::chrono;
    Timestamp days = ts / kSecondsPerDay;
    Timestamp rem = ts % kSecondsPerDay;
    if (rem < 0) {
        rem += kSecondsPerDay;
        --days;
    }
    const sys_days sd{std::chrono::days{days}};
    const year_month_day ymd{sd};
    const weekday wd{sd};
    CivilTime out;
    out.year = static_cast<int>(ymd.year());
    out.month = static_cast<unsigned>(ymd.month());
    out.day = static_cast<unsigned>(ymd.day());
    out.hour = static_cast<unsigned>(rem / 3600);
    out.minute = static_cast<unsigned>((rem % 3600) / 60);
    out.second = static_cast<unsigned>(rem % 60);
    out.weekday = (wd.c_encoding() + 6) % 7;
    return out;
}

std::optional<Timestamp> parse_iso8601(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);

    std::size_t pos = 0;
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
    if (!read_digits(s, pos, 4, y) || !expect(s, pos, '-') || !read_digits(s, pos, 2, mo) ||
        !expect(s, pos, '-') || !read_digits(s, pos, 2, d)) {
        return std::nullopt;
    }
    if (mo < 1 || mo > 12 || d < 1 || d > 31) return std::nullopt;
    {
        using namespace std::chrono;
        const year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(mo)},
                                 std::chrono::day{static_cast<unsigned>(d)}};
        if (!ymd.ok()) return std::nullopt;
    }
    Timestamp offset = 0;
    if (pos < s.size()) {
        if (s[pos] != 'T' && s[pos] != ' ') return std::nullopt;
        ++pos;
        if (!read_digits(s, pos, 2, h) || !expect(s, pos, ':') || !read_digits(s, pos, 2, mi)) {
            return std::nullopt;
        }
        if (expect(s, pos, ':')) {
            if (!read_digits(s, pos, 2, sec)) return std::nullopt;
            if (expect(s, pos, '.')) {
                while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
            }
        }
        if (h > 23 || mi > 59 || sec > 60) return std::nullopt;
        if (pos < s.size()) {
            if (s[pos] == 'Z') {
                ++pos;
            } else if (s[pos] == '+' || s[pos] == '-') {
                const int sign = s[pos] == '+' ? 1 : -1;
                ++pos;
                int oh = 0, om = 0;
                if (!read_digits(s, pos, 2, oh)) return std::nullopt;
                expect(s, pos, ':');
                if (!read_digits(s, pos, 2, om)) return std::nullopt;
                offset = sign * (static_cast<Timestamp>(oh) * 3600 + static_cast<Timestamp>(om) * 60);
            } else {
                return std::nullopt;
            }
        }
        if (pos != s.size()) return std::nullopt;
    }
    return from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d),
                      static_cast<unsigned>(h), static_cast<unsigned>(mi),
                      static_cast<unsigned>(sec)) -
           offset;
}

std::string format_iso8601(Timestamp ts) {
    const CivilTime c = to_civil(ts);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02u:%02u:%02uZ", c.year, c.month, c.day,
                  c.hour, c.minute, c.second);
    return buf;
}

unsigned season_of_month(unsigned month) {
    switch (month) {
    case 3: case 4: case 5: return 0;
    case 6: case 7: case 8: return 1;
    case 9: case 10: case 11: return 2;
    default: return 3;
    }
}

const char* season_name(unsigned season) {
    static const char* names[] = {"spring", "summer", "autumn", "winter"};
    return season < 4 ? names[season] : "unknown";
}

const char* month_name(unsigned month) {
    static const char* names[] = {"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                  "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
    return (month >= 1 && month <= 12) ? names[month - 1] : "???";
}

} // namespace windcast
