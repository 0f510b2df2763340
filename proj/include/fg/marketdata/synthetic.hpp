#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "fg/marketdata/panel.hpp"

namespace fg {

struct SyntheticSpec {
    std::size_t n_stocks = 100;
    std::size_t n_factors = 8;
    std::size_t n_days = 500;
    std::size_t n_sectors = 10;
    double signal_strength = 1.0;
    std::uint64_t seed = 1;

    std::size_t n_planted = 3;       // capped at n_factors
    std::size_t n_negative = 0;      // planted factors with a negative loading
    double quadratic_weight = 1.0;   // weight of the centred square term
    std::size_t signal_window = 10;  // days over which a date's signal is realised
    double signal_scale = 0.02;      // expected window log-return per unit score at strength 1
    double idio_vol = 0.02;
    double sector_vol = 0.01;
    double market_vol = 0.01;

    // Optional presentation order of stocks; must be a permutation of 0..n-1.
    std::vector<std::size_t> stock_order;

    void validate() const;  // throws ConfigError
};

struct SyntheticMarket {
    FactorPanel panel;
    std::vector<std::size_t> planted;  // factor indices
    std::vector<int> planted_signs;    // +1 / -1 per planted factor
    std::size_t quadratic_factor = 0;
};

// Factors are i.i.d. N(0,1) per stock and date. A hidden score
//   s = (sum_j sign_j F_j + q (F_quad^2 - 1)/sqrt(2)) / sqrt(|planted| + q^2)
// drives log-price drift spread over the `signal_window` days starting two
// days after the date, so a date's factors never affect p_{t+1}. Sector and
// market shocks plus idiosyncratic noise complete the log increments.
SyntheticMarket generate_synthetic_market(const SyntheticSpec& spec);

FactorPanel generate_synthetic_market(std::size_t n_stocks, std::size_t n_factors, std::size_t n_days,
                                      std::size_t n_sectors, double signal_strength, std::uint64_t seed);

}  // namespace fg
