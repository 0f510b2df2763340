#include "fg/marketdata/date.hpp"

#include <charconv>
#include <cstdio>

#include "fg/core/errors.hpp"

namespace fg {
namespace {

// Howard Hinnant's civil-calendar conversions.
int days_from_civil(int y, unsigned m, unsigned d) {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<int>(doe) - 719468;
}

void civil_from_days(int z, int& y, unsigned& m, unsigned& d) {
    z += 719468;
    const int era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    y = static_cast<int>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp < 10 ? mp + 3 : mp - 9;
    y += m <= 2;
}

unsigned days_in_month(int y, unsigned m) {
    static constexpr unsigned kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
    return m == 2 && leap ? 29 : kDays[m - 1];
}

}  // namespace

Date Date::from_ymd(int y, unsigned m, unsigned d) {
    if (m < 1 || m > 12 || d < 1 || d > days_in_month(y, m)) {
        throw DataError("invalid calendar date " + std::to_string(y) + "-" + std::to_string(m) + "-" +
                        std::to_string(d));
    }
    return Date{days_from_civil(y, m, d)};
}

Date Date::parse(std::string_view iso) {
    auto bad = [&] { return DataError("unparseable date '" + std::string(iso) + "', expected YYYY-MM-DD"); };
    if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-') throw bad();
    int y = 0;
    unsigned m = 0, d = 0;
    auto num = [&](std::size_t pos, std::size_t len, auto& out) {
        auto [p, ec] = std::from_chars(iso.data() + pos, iso.data() + pos + len, out);
        if (ec != std::errc() || p != iso.data() + pos + len) throw bad();
    };
    num(0, 4, y);
    num(5, 2, m);
    num(8, 2, d);
    return from_ymd(y, m, d);
}

std::string Date::iso() const {
    int y = 0;
    unsigned m = 0, d = 0;
    civil_from_days(days, y, m, d);
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", y, m, d);
    return buf;
}

int Date::weekday() const {
    // 1970-01-01 was a Thursday.
    const int w = (days + 3) % 7;
    return w < 0 ? w + 7 : w;
}

Date Date::next_business_day() const {
    Date d{days + 1};
    while (d.weekday() >= 5) ++d.days;
    return d;
}

}  // namespace fg
