#include "fg/model/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "fg/core/errors.hpp"

namespace fg {

using diff::Axis;
using diff::Tape;
using diff::Tensor;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_gat_adjacency(const Tensor& context, const Matrix& adj) {
    const std::size_t n = context.rows();
    if (adj.rows != n || adj.cols != n) {
        throw DimensionError("adjacency is " + std::to_string(adj.rows) + "x" + std::to_string(adj.cols) +
                             " but context has " + std::to_string(n) + " rows");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (adj(i, i) != 1.0) throw ValidationError("adjacency diagonal must be 1 (row " + std::to_string(i) + ")");
    }
}

}  // namespace

SelectionResult apply_factor_gate(Tape& tape, const Tensor& raw, const Tensor& scores, double gamma_f,
                                  diff::GateGradient mode) {
    const std::size_t m = raw.cols();
    if (m == 0) throw ValidationError("empty-factor: raw factor matrix has no columns");
    if (scores.rows() != 1 || scores.cols() != m) {
        throw DimensionError("factor scores " + scores.shape_string() + " do not match " + std::to_string(m) +
                             " factors");
    }
    if (!(gamma_f >= 0.0 && gamma_f < 1.0)) throw ValidationError("gamma_f must lie in [0, 1)");
    Tensor mask = diff::gate_mask(tape, scores, gamma_f, mode);
    auto mv = mask.values();
    if (std::none_of(mv.begin(), mv.end(), [](double v) { return v != 0.0; })) {
        auto sv = scores.values();
        const auto best = static_cast<std::size_t>(std::max_element(sv.begin(), sv.end()) - sv.begin());
        std::vector<double> keep(m, 0.0);
        keep[best] = 1.0;
        mask = Tensor::row(std::move(keep));
    }
    SelectionResult r;
    r.scores = scores;
    r.mask = mask.to_vector();
    r.selected = diff::mul(tape, raw, mask);
    return r;
}

SelectionResult select_factors(Tape& tape, const Tensor& raw, double gamma_f, const Dense& hidden,
                               const Dense& out, double slope, diff::GateGradient mode) {
    if (raw.cols() == 0) throw ValidationError("empty-factor: raw factor matrix has no columns");
    Tensor logits = out.apply(tape, diff::leaky_relu(tape, hidden.apply(tape, raw), slope));
    Tensor pooled = diff::mean_axis(tape, logits, Axis::rows);
    Tensor scores = diff::softmax_axis(tape, pooled, Axis::cols);
    return apply_factor_gate(tape, raw, scores, gamma_f, mode);
}

Tensor encode_context(Tape& tape, const Tensor& selected, const Dense& hidden, const Dense& out, double slope) {
    Tensor z = diff::crosssec_norm(tape, selected);
    return out.apply(tape, diff::leaky_relu(tape, hidden.apply(tape, z), slope));
}

Tensor gat_layer(Tape& tape, const Tensor& context, const Matrix& adjacency, const GatParams& params,
                 double slope) {
    check_gat_adjacency(context, adjacency);
    Tensor h = diff::matmul(tape, context, params.w);
    Tensor s_dst = diff::matmul(tape, h, params.a_dst);
    Tensor s_src = diff::matmul(tape, h, params.a_src);
    Tensor e = diff::leaky_relu(tape, diff::add(tape, s_dst, diff::transpose(tape, s_src)), slope);
    std::vector<char> keep(adjacency.data.size());
    std::transform(adjacency.data.begin(), adjacency.data.end(), keep.begin(),
                   [](double a) { return static_cast<char>(a != 0.0); });
    Tensor alpha = diff::softmax_axis(tape, diff::mask_fill(tape, e, keep, kNegInf), Axis::cols);
    return diff::matmul(tape, alpha, h);
}

Tensor relational_neutralize(Tape& tape, const Tensor& context, const Matrix& adjacency, const GatParams& params,
                             double slope) {
    return diff::sub(tape, context, gat_layer(tape, context, adjacency, params, slope));
}

std::array<Tensor, kNumHorizons> deep_factor_heads(Tape& tape, const Tensor& c, const Tensor& c_ind,
                                                    const Tensor& c_uni, const std::array<Dense, kNumHorizons>& heads,
                                                    double slope) {
    Tensor x = diff::concat_cols(tape, {c, c_ind, c_uni});
    std::array<Tensor, kNumHorizons> out;
    for (std::size_t k = 0; k < kNumHorizons; ++k) out[k] = diff::leaky_relu(tape, heads[k].apply(tape, x), slope);
    return out;
}

AttentionEstimate directional_attention_estimate(Tape& tape, const Tensor& raw_selected, std::span<const double> d,
                                                 const Dense& map, double slope) {
    const std::size_t m = raw_selected.cols();
    if (d.size() != m) {
        throw DimensionError("direction vector has " + std::to_string(d.size()) + " entries, expected " +
                             std::to_string(m));
    }
    for (double v : d) {
        if (v != 1.0 && v != -1.0) throw ValidationError("factor directions must be +1 or -1");
    }
    AttentionEstimate r;
    r.attention = diff::softmax_axis(tape, diff::leaky_relu(tape, map.apply(tape, raw_selected), slope), Axis::cols);
    r.a_bar = diff::mean_axis(tape, r.attention, Axis::rows);
    Tensor directed = diff::mul(tape, r.a_bar, Tensor::row(std::vector<double>(d.begin(), d.end())));
    r.f_hat = diff::matmul(tape, raw_selected, diff::transpose(tape, directed));
    return r;
}

PortfolioResult gated_allocation(Tape& tape, const Tensor& scores, double gamma_p) {
    const std::size_t n = scores.rows();
    if (n == 0) throw ValidationError("empty universe: no stocks to allocate");
    if (scores.cols() != 1) throw DimensionError("portfolio scores must be n x 1, got " + scores.shape_string());
    if (!(gamma_p > 0.0 && gamma_p <= 1.0)) throw ValidationError("gamma_p must lie in (0, 1]");

    Tape off(false);
    PortfolioResult r;
    r.scores = scores;
    r.attention = diff::softmax_axis(off, scores, Axis::rows).to_vector();
    const double tau = gamma_p / static_cast<double>(n);
    r.survivors.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) r.survivors[i] = r.attention[i] >= tau;
    if (std::none_of(r.survivors.begin(), r.survivors.end(), [](char c) { return c != 0; })) {
        const auto keep = static_cast<std::size_t>(std::ceil(0.05 * static_cast<double>(n)));
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return r.attention[a] > r.attention[b]; });
        for (std::size_t i = 0; i < keep; ++i) r.survivors[order[i]] = 1;
    }
    r.weights = diff::softmax_axis(tape, diff::mask_fill(tape, scores, r.survivors, kNegInf), Axis::rows);
    return r;
}

PortfolioResult construct_portfolio(Tape& tape, const Tensor& context, const Tensor& deep_factor, double d_f,
                                    double gamma_p, const Dense& scorer, double slope) {
    if (context.rows() == 0) throw ValidationError("empty universe: no stocks to allocate");
    Tensor x = diff::concat_cols(tape, {context, diff::scale(tape, deep_factor, d_f)});
    Tensor scores = diff::leaky_relu(tape, scorer.apply(tape, x), slope);
    return gated_allocation(tape, scores, gamma_p);
}

Directions Directions::positive(std::size_t n_factors) {
    Directions d;
    d.factor.assign(n_factors, 1.0);
    d.deep.fill(1.0);
    return d;
}

FactorStage forward_factors(Tape& tape, const ModelParams& params, const ModelConfig& config, const Matrix& raw,
                            const Matrix& industry, const Matrix& universe) {
    if (raw.cols != config.n_factors) {
        throw DimensionError("panel has " + std::to_string(raw.cols) + " factors, model expects " +
                             std::to_string(config.n_factors));
    }
    FactorStage s;
    s.raw = Tensor::from(raw);
    s.selection = select_factors(tape, s.raw, config.factor_threshold(), params.selection_hidden,
                                 params.selection_out, config.leaky_slope, config.selection_gradient);
    s.context = encode_context(tape, s.selection.selected, params.encoder_hidden, params.encoder_out,
                               config.leaky_slope);
    s.ctx_industry = relational_neutralize(tape, s.context, industry, params.gat_industry, config.gat_slope);
    s.ctx_universe = relational_neutralize(tape, s.ctx_industry, universe, params.gat_universe, config.gat_slope);
    s.deep = deep_factor_heads(tape, s.context, s.ctx_industry, s.ctx_universe, params.head, config.leaky_slope);
    return s;
}

DirectionalStage forward_directional(Tape& tape, const ModelParams& params, const ModelConfig& config,
                                     const FactorStage& stage, const Directions& directions) {
    DirectionalStage out;
    for (std::size_t k = 0; k < kNumHorizons; ++k) {
        out.estimate[k] = directional_attention_estimate(tape, stage.selection.selected, directions.factor,
                                                         params.attention[k], config.leaky_slope);
        out.portfolio[k] = construct_portfolio(tape, stage.context, stage.deep[k], directions.deep[k],
                                               config.gamma_p, params.portfolio[k], config.leaky_slope);
    }
    return out;
}

ForwardOutputs forward(Tape& tape, const ModelParams& params, const ModelConfig& config, const Matrix& raw,
                       const Matrix& industry, const Matrix& universe, const Directions& directions) {
    ForwardOutputs out;
    out.factors = forward_factors(tape, params, config, raw, industry, universe);
    out.directional = forward_directional(tape, params, config, out.factors, directions);
    return out;
}

}  // namespace fg
