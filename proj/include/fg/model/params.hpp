#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "fg/diffcore/tensor.hpp"
#include "fg/model/config.hpp"

namespace fg {

// Row-wise affine layer y = x W + b.
struct Dense {
    diff::Tensor w;
    diff::Tensor b;

    static Dense init(std::size_t in, std::size_t out, std::mt19937_64& rng);
    diff::Tensor apply(diff::Tape& tape, const diff::Tensor& x) const;
};

// Single-head graph attention: h = C W, e_ij = a_dst . h_i + a_src . h_j.
struct GatParams {
    diff::Tensor w;      // m1 x m1
    diff::Tensor a_dst;  // m1 x 1
    diff::Tensor a_src;  // m1 x 1

    static GatParams init(std::size_t dim, std::mt19937_64& rng);
};

struct ModelParams {
    Dense selection_hidden;
    Dense selection_out;
    Dense encoder_hidden;
    Dense encoder_out;
    GatParams gat_industry;
    GatParams gat_universe;
    std::array<Dense, kNumHorizons> head;
    std::array<Dense, kNumHorizons> attention;
    std::array<Dense, kNumHorizons> portfolio;

    // Weights uniform in +-sqrt(1/fan_in), biases zero.
    static ModelParams init(const ModelConfig& config, std::uint64_t seed);

    // Stable names used by checkpoints and optimizers.
    std::vector<std::pair<std::string, diff::Tensor>> named() const;
    std::vector<diff::Tensor> tensors() const;
    ModelParams clone() const;
    void zero_grad();
};

}  // namespace fg
