#pragma once

#include <array>
#include <span>
#include <vector>

#include "fg/core/matrix.hpp"
#include "fg/model/config.hpp"
#include "fg/model/network.hpp"

namespace fg {

// Signed IC accumulators. Direction = sign(accumulator), +1 at exactly 0, so
// a fresh buffer (1e-6) reads +1.
class DirectionalBuffer {
public:
    static constexpr double kInit = 1e-6;

    explicit DirectionalBuffer(std::size_t n_factors = 0);

    void reset();
    void add_factor(std::size_t i, double ic_sum) { factor_.at(i) += ic_sum; }
    void add_deep(std::size_t k, double ic_sum) { deep_.at(k) += ic_sum; }

    const std::vector<double>& factor() const { return factor_; }
    const std::array<double, kNumHorizons>& deep() const { return deep_; }
    std::size_t n_factors() const { return factor_.size(); }

    Directions directions() const;

    static DirectionalBuffer from(std::vector<double> factor, const std::array<double, kNumHorizons>& deep);

private:
    std::vector<double> factor_;
    std::array<double, kNumHorizons> deep_{};
};

// One date of a batch. Horizons without a usable label have a null return pointer.
struct BufferSample {
    const Matrix* raw = nullptr;                                     // n x m exposures
    std::array<std::vector<double>, kNumHorizons> deep;              // deep factor values per horizon
    std::array<const std::vector<double>*, kNumHorizons> returns{};  // r_{t+k}
};

// b_f[k] += sum_t IC(r_{t+k}, f_k^t); b_i += sum_t sum_k IC(r_{t+k}, F_i^t).
// Degenerate ICs contribute 0.
void update_directional_buffers(DirectionalBuffer& buffer, std::span<const BufferSample> batch);

}  // namespace fg
