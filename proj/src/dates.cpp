#include "ehc/dates.hpp"

#include "ehc/error.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>
#include <vector>

namespace ehc {

namespace {

std::optional<int> parse_int(std::string_view s) {
    int v = 0;
    if (s.empty()) return std::nullopt;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

bool valid_ymd(int y, int m, int d) {
    using namespace std::chrono;
    return m >= 1 && m <= 12 && d >= 1 && d <= 31 &&
           year_month_day{year{y}, month{static_cast<unsigned>(m)}, day{static_cast<unsigned>(d)}}.ok();
}

std::string iso(int y, int m, int d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", y, m, d);
    return buf;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    while (true) {
        auto p = s.find(sep);
        out.push_back(s.substr(0, p));
        if (p == std::string_view::npos) break;
        s.remove_prefix(p + 1);
    }
    return out;
}

}  // namespace

std::optional<DateOrder> parse_date_order(std::string_view text) noexcept {
    if (text == "dmy" || text == "DMY" || text == "day-month-year") return DateOrder::DayMonthYear;
    if (text == "mdy" || text == "MDY" || text == "month-day-year") return DateOrder::MonthDayYear;
    return std::nullopt;
}

bool is_iso_date(std::string_view text) noexcept {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') return false;
    auto y = parse_int(text.substr(0, 4));
    auto m = parse_int(text.substr(5, 2));
    auto d = parse_int(text.substr(8, 2));
    return y && m && d && valid_ymd(*y, *m, *d);
}

std::string normalize_date(std::string_view text, DateOrder order) {
    if (is_iso_date(text)) return std::string(text);
    const auto parts = split(text, '/');
    if (parts.size() == 3) {
        auto a = parse_int(parts[0]);
        auto b = parse_int(parts[1]);
        auto y = parse_int(parts[2]);
        if (a && b && y && parts[2].size() == 4) {
            const int d = order == DateOrder::DayMonthYear ? *a : *b;
            const int m = order == DateOrder::DayMonthYear ? *b : *a;
            if (valid_ymd(*y, m, d)) return iso(*y, m, d);
        }
    }
    throw ValidationError("invalid date '" + std::string(text) + "'");
}

std::string format_iso_timestamp(TimestampMs ms) {
    using namespace std::chrono;
    const sys_time<milliseconds> tp{milliseconds{ms}};
    const auto day_point = floor<days>(tp);
    const year_month_day ymd{day_point};
    const hh_mm_ss hms{tp - day_point};
    char buf[40];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02ld.%03ldZ", int(ymd.year()),
                  unsigned(ymd.month()), unsigned(ymd.day()), static_cast<long>(hms.hours().count()),
                  static_cast<long>(hms.minutes().count()), static_cast<long>(hms.seconds().count()),
                  static_cast<long>(hms.subseconds().count()));
    return buf;
}

}  // namespace ehc
