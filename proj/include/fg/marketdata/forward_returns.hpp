#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "fg/marketdata/panel.hpp"

namespace fg {

// r_{t+k} = (p_{t+k} - p_{t+1}) / p_{t+1} per stock of date t's cross-section.
// Dates without both t+1 and t+k in the calendar have no entry.
class ForwardReturns {
public:
    void set(int horizon, std::size_t date_index, std::vector<double> values);

    bool has(int horizon, std::size_t date_index) const;
    const std::vector<double>& at(int horizon, std::size_t date_index) const;
    std::vector<std::size_t> dates(int horizon) const;
    std::vector<int> horizons() const;

private:
    std::map<int, std::map<std::size_t, std::vector<double>>> by_horizon_;
};

// A stock missing from a later cross-section is valued at its last price on
// or before that date, never at a later one.
ForwardReturns compute_forward_returns(const FactorPanel& panel, std::span<const int> horizons);

}  // namespace fg
