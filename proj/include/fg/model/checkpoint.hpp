#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "fg/model/config.hpp"
#include "fg/model/network.hpp"
#include "fg/model/params.hpp"

namespace fg {

// Self-describing JSON container: named parameter arrays, horizon list,
// config hash, directional buffers and the factor names the model was fit on.
struct Checkpoint {
    ModelConfig config;
    ModelParams params;
    std::vector<std::string> factor_names;
    std::vector<double> factor_buffer;
    std::array<double, kNumHorizons> deep_buffer{};
    std::string config_hash;
    int best_epoch = 0;

    Directions directions() const;  // sign of each buffer, +1 at exactly 0
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);

// Throws DataError on a malformed file or a horizon list other than kHorizons.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace fg
