#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fg/core/matrix.hpp"
#include "fg/marketdata/date.hpp"

namespace fg {

// The six style groups used to tag raw factors.
inline constexpr std::array<std::string_view, 6> kFactorGroups = {
    "Value", "Growth", "Momentum", "Quality", "Size", "Liquidity"};

bool is_factor_group(std::string_view name);

struct FactorInfo {
    std::string name;
    // One of kFactorGroups when a mapping is supplied; otherwise the factor's own name.
    std::string group;
};

// One trading day: n active stocks by m factor exposures.
struct CrossSection {
    std::vector<std::string> stock_ids;
    Matrix factors;                    // n x m
    std::vector<double> prices;        // VWAP
    std::vector<std::string> sectors;

    std::size_t size() const { return stock_ids.size(); }
};

// Point-in-time factor panel. Immutable once validated.
struct FactorPanel {
    std::vector<Date> dates;
    std::vector<CrossSection> sections;
    std::vector<FactorInfo> factors;

    std::size_t n_dates() const { return dates.size(); }
    std::size_t n_factors() const { return factors.size(); }
    std::vector<std::string> factor_names() const;
    std::vector<std::string> group_names() const;  // distinct, in first-seen order

    // Index of `d`, or nullopt when the panel has no such date.
    std::optional<std::size_t> find_date(Date d) const;
    std::size_t date_index(Date d) const;  // throws LookupError

    // Throws DataError on any violated invariant: strictly increasing dates,
    // unique ids per date, matching shapes, finite factors, >= 2 stocks.
    void validate() const;
};

}  // namespace fg
