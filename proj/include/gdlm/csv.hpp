#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "gdlm/errors.hpp"

namespace gdlm {

// Minimal CSV support for the formats this library defines: comma separated,
// no quoting, UTF-8, LF or CRLF line endings.

inline std::vector<std::string> split_csv_line(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::vector<std::string> out;
    size_t start = 0;
    while (true) {
        size_t pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.emplace_back(line.substr(start));
            break;
        }
        out.emplace_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

inline std::ifstream open_text_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open file: " + path);
    return in;
}

inline double parse_double(std::string_view s, const std::string& context) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw IoError("malformed number '" + std::string(s) + "' (" + context + ")");
    return v;
}

// --- civil timestamps ----------------------------------------------------
//
// Timestamps are fixed-offset civil times "YYYY-MM-DD HH:MM[:SS]" (a 'T'
// separator is also accepted). They are held as whole minutes since
// 1970-01-01 00:00; seconds must be zero.

namespace detail {

// days since 1970-01-01 for a civil date (Howard Hinnant's algorithm)
inline int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const int64_t era = (y >= 0 ? y : y - 399) / 400;
    const int64_t yoe = y - era * 400;
    const int64_t doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const int64_t doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + doe - 719468;
}

inline void civil_from_days(int64_t z, int& y, int& m, int& d) {
    z += 719468;
    const int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const int64_t doe = z - era * 146097;
    const int64_t yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const int64_t yr = yoe + era * 400;
    const int64_t doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const int64_t mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y = static_cast<int>(yr + (m <= 2));
}

inline bool parse_int_field(std::string_view s, int& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

} // namespace detail

/// Parses an ISO-8601 civil timestamp to minutes since 1970-01-01 00:00.
/// Returns false on malformed input (wrong shape, nonzero seconds,
/// out-of-range fields).
inline bool parse_timestamp_minutes(std::string_view s, int64_t& out_minutes) {
    // YYYY-MM-DD{ |T}HH:MM[:SS]
    if (s.size() < 16) return false;
    if (s[4] != '-' || s[7] != '-' || (s[10] != ' ' && s[10] != 'T') || s[13] != ':')
        return false;
    int y, mo, d, h, mi, sec = 0;
    if (!detail::parse_int_field(s.substr(0, 4), y)) return false;
    if (!detail::parse_int_field(s.substr(5, 2), mo)) return false;
    if (!detail::parse_int_field(s.substr(8, 2), d)) return false;
    if (!detail::parse_int_field(s.substr(11, 2), h)) return false;
    if (!detail::parse_int_field(s.substr(14, 2), mi)) return false;
    if (s.size() > 16) {
        if (s.size() != 19 || s[16] != ':') return false;
        if (!detail::parse_int_field(s.substr(17, 2), sec)) return false;
    }
    if (mo < 1 || mo > 12 || d < 1 || d > 31) return false;
    if (h < 0 || h > 23 || mi < 0 || mi > 59 || sec != 0) return false;
    out_minutes = detail::days_from_civil(y, mo, d) * 1440 + h * 60 + mi;
    return true;
}

inline std::string format_timestamp_minutes(int64_t minutes) {
    int64_t day = minutes / 1440;
    int64_t rem = minutes % 1440;
    if (rem < 0) { rem += 1440; day -= 1; }
    int y, m, d;
    detail::civil_from_days(day, y, m, d);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d %02d:%02d:%02d", y, m, d,
                  static_cast<int>(rem / 60), static_cast<int>(rem % 60), 0);
    return buf;
}

inline std::string format_date_of_minutes(int64_t minutes) {
    int64_t day = minutes / 1440;
    if (minutes % 1440 < 0) day -= 1;
    int y, m, d;
    detail::civil_from_days(day, y, m, d);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d);
    return buf;
}

} // namespace gdlm
