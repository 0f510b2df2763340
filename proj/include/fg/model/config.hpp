#pragma once

#include <array>
#include <cstddef>
#include <optional>

#include "fg/diffcore/ops.hpp"

namespace fg {

// Forward horizons in trading days, one deep-factor head each.
inline constexpr std::array<int, 5> kHorizons = {3, 5, 10, 15, 20};
inline constexpr std::size_t kNumHorizons = kHorizons.size();

std::size_t horizon_index(int k);  // throws ValidationError for k outside kHorizons

struct ModelConfig {
    std::size_t n_factors = 0;
    std::size_t context_dim = 32;
    std::size_t encoder_hidden = 64;
    std::size_t selection_hidden = 16;
    double leaky_slope = 0.01;
    double gat_slope = 0.2;
    std::optional<double> gamma_f;  // defaults to 1 / (2 m)
    double gamma_p = 0.5;
    diff::GateGradient selection_gradient = diff::GateGradient::constant;

    double factor_threshold() const;
    void validate() const;  // throws ConfigError
};

}  // namespace fg
