#include "fg/training/buffers.hpp"

#include "fg/core/errors.hpp"
#include "fg/training/ic.hpp"

namespace fg {

DirectionalBuffer::DirectionalBuffer(std::size_t n_factors) : factor_(n_factors, kInit) { deep_.fill(kInit); }

void DirectionalBuffer::reset() {
    std::fill(factor_.begin(), factor_.end(), kInit);
    deep_.fill(kInit);
}

Directions DirectionalBuffer::directions() const {
    Directions d;
    d.factor.reserve(factor_.size());
    for (double b : factor_) d.factor.push_back(b >= 0.0 ? 1.0 : -1.0);
    for (std::size_t k = 0; k < kNumHorizons; ++k) d.deep[k] = deep_[k] >= 0.0 ? 1.0 : -1.0;
    return d;
}

DirectionalBuffer DirectionalBuffer::from(std::vector<double> factor, const std::array<double, kNumHorizons>& deep) {
    DirectionalBuffer b;
    b.factor_ = std::move(factor);
    b.deep_ = deep;
    return b;
}

void update_directional_buffers(DirectionalBuffer& buffer, std::span<const BufferSample> batch) {
    const std::size_t m = buffer.n_factors();
    for (const auto& s : batch) {
        if (s.raw->cols != m) throw DimensionError("buffer tracks " + std::to_string(m) + " factors, sample has " +
                                                   std::to_string(s.raw->cols));
        for (std::size_t k = 0; k < kNumHorizons; ++k) {
            const auto* r = s.returns[k];
            if (!r) continue;
            buffer.add_deep(k, information_coefficient(*r, s.deep[k]).value);
            for (std::size_t i = 0; i < m; ++i) {
                const auto col = s.raw->column(i);
                buffer.add_factor(i, information_coefficient(*r, col).value);
            }
        }
    }
}

}  // namespace fg
