#include "fg/model/params.hpp"

#include <cmath>

#include "fg/diffcore/ops.hpp"

namespace fg {
namespace {

diff::Tensor uniform(std::size_t rows, std::size_t cols, std::size_t fan_in, std::mt19937_64& rng) {
    const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-bound, bound);
    std::vector<double> v(rows * cols);
    for (auto& x : v) x = u(rng);
    return diff::Tensor::from(rows, cols, std::move(v), true);
}

Dense clone(const Dense& d) { return {d.w.clone(), d.b.clone()}; }
GatParams clone(const GatParams& g) { return {g.w.clone(), g.a_dst.clone(), g.a_src.clone()}; }

}  // namespace

Dense Dense::init(std::size_t in, std::size_t out, std::mt19937_64& rng) {
    return {uniform(in, out, in, rng), diff::Tensor::zeros(1, out, true)};
}

diff::Tensor Dense::apply(diff::Tape& tape, const diff::Tensor& x) const { return diff::linear_map(tape, x, w, b); }

GatParams GatParams::init(std::size_t dim, std::mt19937_64& rng) {
    GatParams g;
    g.w = uniform(dim, dim, dim, rng);
    g.a_dst = uniform(dim, 1, dim, rng);
    g.a_src = uniform(dim, 1, dim, rng);
    return g;
}

ModelParams ModelParams::init(const ModelConfig& config, std::uint64_t seed) {
    config.validate();
    std::mt19937_64 rng(seed);
    const std::size_t m = config.n_factors, m1 = config.context_dim;
    ModelParams p;
    p.selection_hidden = Dense::init(m, config.selection_hidden, rng);
    p.selection_out = Dense::init(config.selection_hidden, m, rng);
    p.encoder_hidden = Dense::init(m, config.encoder_hidden, rng);
    p.encoder_out = Dense::init(config.encoder_hidden, m1, rng);
    p.gat_industry = GatParams::init(m1, rng);
    p.gat_universe = GatParams::init(m1, rng);
    for (std::size_t k = 0; k < kNumHorizons; ++k) p.head[k] = Dense::init(3 * m1, 1, rng);
    for (std::size_t k = 0; k < kNumHorizons; ++k) p.attention[k] = Dense::init(m, m, rng);
    for (std::size_t k = 0; k < kNumHorizons; ++k) p.portfolio[k] = Dense::init(m1 + 1, 1, rng);
    return p;
}

std::vector<std::pair<std::string, diff::Tensor>> ModelParams::named() const {
    std::vector<std::pair<std::string, diff::Tensor>> out;
    auto dense = [&](const std::string& name, const Dense& d) {
        out.emplace_back(name + ".w", d.w);
        out.emplace_back(name + ".b", d.b);
    };
    auto gat = [&](const std::string& name, const GatParams& g) {
        out.emplace_back(name + ".w", g.w);
        out.emplace_back(name + ".a_dst", g.a_dst);
        out.emplace_back(name + ".a_src", g.a_src);
    };
    dense("selection_hidden", selection_hidden);
    dense("selection_out", selection_out);
    dense("encoder_hidden", encoder_hidden);
    dense("encoder_out", encoder_out);
    gat("gat_industry", gat_industry);
    gat("gat_universe", gat_universe);
    for (std::size_t k = 0; k < kNumHorizons; ++k) dense("head_" + std::to_string(kHorizons[k]), head[k]);
    for (std::size_t k = 0; k < kNumHorizons; ++k) dense("attn_" + std::to_string(kHorizons[k]), attention[k]);
    for (std::size_t k = 0; k < kNumHorizons; ++k) dense("port_" + std::to_string(kHorizons[k]), portfolio[k]);
    return out;
}

std::vector<diff::Tensor> ModelParams::tensors() const {
    std::vector<diff::Tensor> out;
    for (auto& [_, t] : named()) out.push_back(t);
    return out;
}

ModelParams ModelParams::clone() const {
    ModelParams p;
    p.selection_hidden = fg::clone(selection_hidden);
    p.selection_out = fg::clone(selection_out);
    p.encoder_hidden = fg::clone(encoder_hidden);
    p.encoder_out = fg::clone(encoder_out);
    p.gat_industry = fg::clone(gat_industry);
    p.gat_universe = fg::clone(gat_universe);
    for (std::size_t k = 0; k < kNumHorizons; ++k) {
        p.head[k] = fg::clone(head[k]);
        p.attention[k] = fg::clone(attention[k]);
        p.portfolio[k] = fg::clone(portfolio[k]);
    }
    return p;
}

void ModelParams::zero_grad() {
    for (auto& t : tensors()) t.zero_grad();
}

}  // namespace fg
