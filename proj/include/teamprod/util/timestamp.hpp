#pragma once

#include <teamprod/error.hpp>

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace teamprod {

/// UTC instant at one-second resolution.
using Timestamp = std::chrono::sys_seconds;

inline constexpr std::chrono::seconds days(std::int64_t n) {
    return std::chrono::seconds(n * 86400);
}

inline Timestamp from_unix(std::int64_t seconds) {
    return Timestamp(std::chrono::seconds(seconds));
}

inline std::int64_t to_unix(Timestamp ts) {
    return ts.time_since_epoch().count();
}

namespace detail {

inline bool read_digits(std::string_view s, std::size_t pos, std::size_t n, int& out) {
    if (pos + n > s.size()) return false;
    int v = 0;
    for (std::size_t i = 0; i < n; ++i) {
        char c = s[pos + i];
        if (c < '0' || c > '9') return false;
        v = v * 10 + (c - '0');
    }
    out = v;
    return true;
}

}  // namespace detail

/// Accepts `YYYY-MM-DD`, `YYYY-MM-DDTHH:MM:SS` followed by `Z`, nothing, or a
/// `+HH:MM` / `-HH:MM` offset. A space may replace the `T`.
inline Timestamp parse_timestamp(std::string_view s) {
    using namespace std::chrono;
    auto fail = [&] { return Error(ErrorKind::malformed_input, "bad timestamp '" + std::string(s) + "'"); };
    int y, mo, d, h = 0, mi = 0, se = 0;
    if (!detail::read_digits(s, 0, 4, y) || s.size() < 10 || s[4] != '-' || s[7] != '-' ||
        !detail::read_digits(s, 5, 2, mo) || !detail::read_digits(s, 8, 2, d))
        throw fail();
    std::size_t pos = 10;
    if (pos < s.size() && (s[pos] == 'T' || s[pos] == ' ')) {
        if (!detail::read_digits(s, pos + 1, 2, h) || s.size() < pos + 9 || s[pos + 3] != ':' ||
            !detail::read_digits(s, pos + 4, 2, mi) || s[pos + 6] != ':' ||
            !detail::read_digits(s, pos + 7, 2, se))
            throw fail();
        pos += 9;
    }
    int offset_minutes = 0;
    if (pos < s.size()) {
        if (s[pos] == 'Z' && pos + 1 == s.size()) {
            pos += 1;
        } else if ((s[pos] == '+' || s[pos] == '-') && s.size() == pos + 6 && s[pos + 3] == ':') {
            int oh, om;
            if (!detail::read_digits(s, pos + 1, 2, oh) || !detail::read_digits(s, pos + 4, 2, om))
                throw fail();
            offset_minutes = (oh * 60 + om) * (s[pos] == '-' ? -1 : 1);
            pos = s.size();
        } else {
            throw fail();
        }
    }
    year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59 || se > 60) throw fail();
    auto t = sys_days(ymd) + hours(h) + minutes(mi) + seconds(se) - minutes(offset_minutes);
    return time_point_cast<seconds>(t);
}

inline std::string format_timestamp(Timestamp ts) {
    using namespace std::chrono;
    auto dp = floor<std::chrono::days>(ts);
    year_month_day ymd{dp};
    hh_mm_ss hms{ts - dp};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                  static_cast<int>(hms.seconds().count()));
    return buf;
}

}  // namespace teamprod
