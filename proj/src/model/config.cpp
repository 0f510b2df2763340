#include "fg/model/config.hpp"

#include <algorithm>
#include <string>

#include "fg/core/errors.hpp"

namespace fg {

std::size_t horizon_index(int k) {
    auto it = std::find(kHorizons.begin(), kHorizons.end(), k);
    if (it == kHorizons.end()) throw ValidationError("horizon " + std::to_string(k) + " is not one of 3,5,10,15,20");
    return static_cast<std::size_t>(it - kHorizons.begin());
}

double ModelConfig::factor_threshold() const {
    return gamma_f ? *gamma_f : 1.0 / (2.0 * static_cast<double>(n_factors));
}

void ModelConfig::validate() const {
    if (n_factors < 1) throw ConfigError("model.n_factors must be >= 1");
    if (context_dim < 1) throw ConfigError("model.context_dim must be >= 1");
    if (encoder_hidden < 1) throw ConfigError("model.encoder_hidden must be >= 1");
    if (selection_hidden < 1) throw ConfigError("model.selection_hidden must be >= 1");
    if (!(leaky_slope >= 0.0) || !(gat_slope >= 0.0)) throw ConfigError("LeakyReLU slopes must be >= 0");
    const double gf = factor_threshold();
    if (!(gf >= 0.0 && gf < 1.0)) throw ConfigError("model.gamma_f must lie in [0, 1)");
    if (!(gamma_p > 0.0 && gamma_p <= 1.0)) throw ConfigError("model.gamma_p must lie in (0, 1]");
}

}  // namespace fg
