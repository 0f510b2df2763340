#pragma once

#include <compare>
#include <string>
#include <string_view>

namespace fg {

// Calendar day stored as days since 1970-01-01.
struct Date {
    int days = 0;

    static Date parse(std::string_view iso);  // YYYY-MM-DD, throws DataError
    static Date from_ymd(int y, unsigned m, unsigned d);
    std::string iso() const;
    int weekday() const;  // 0 = Monday .. 6 = Sunday
    Date next_business_day() const;

    auto operator<=>(const Date&) const = default;
};

}  // namespace fg
