#pragma once

#include <array>
#include <span>
#include <vector>

#include "fg/core/matrix.hpp"
#include "fg/diffcore/ops.hpp"
#include "fg/model/config.hpp"
#include "fg/model/params.hpp"

namespace fg {

struct SelectionResult {
    diff::Tensor selected;     // n x m, non-surviving columns zero
    diff::Tensor scores;       // 1 x m softmax over factors
    std::vector<double> mask;  // m entries in {0, 1}, at least one 1
};

// Gate on precomputed factor scores (1 x m). Keeps the argmax when nothing
// reaches the threshold, lowest index on ties.
SelectionResult apply_factor_gate(diff::Tape& tape, const diff::Tensor& raw, const diff::Tensor& scores,
                                  double gamma_f, diff::GateGradient mode = diff::GateGradient::constant);

SelectionResult select_factors(diff::Tape& tape, const diff::Tensor& raw, double gamma_f, const Dense& hidden,
                               const Dense& out, double slope = 0.01,
                               diff::GateGradient mode = diff::GateGradient::constant);

diff::Tensor encode_context(diff::Tape& tape, const diff::Tensor& selected, const Dense& hidden, const Dense& out,
                            double slope = 0.01);

// adjacency(i, j) != 0 means stock i attends to stock j. The diagonal must be 1.
diff::Tensor gat_layer(diff::Tape& tape, const diff::Tensor& context, const Matrix& adjacency,
                       const GatParams& params, double slope = 0.2);

// context - gat_layer(context, adjacency).
diff::Tensor relational_neutralize(diff::Tape& tape, const diff::Tensor& context, const Matrix& adjacency,
                                   const GatParams& params, double slope = 0.2);

std::array<diff::Tensor, kNumHorizons> deep_factor_heads(diff::Tape& tape, const diff::Tensor& c,
                                                          const diff::Tensor& c_ind, const diff::Tensor& c_uni,
                                                          const std::array<Dense, kNumHorizons>& heads,
                                                          double slope = 0.01);

struct AttentionEstimate {
    diff::Tensor attention;  // n x m, rows sum to 1
    diff::Tensor a_bar;      // 1 x m, column mean of attention
    diff::Tensor f_hat;      // n x 1, raw_selected (a_bar o d)
};

// d entries must be +-1.
AttentionEstimate directional_attention_estimate(diff::Tape& tape, const diff::Tensor& raw_selected,
                                                 std::span<const double> d, const Dense& map,
                                                 double slope = 0.01);

struct PortfolioResult {
    diff::Tensor scores;          // n x 1 pre-softmax logits
    std::vector<double> attention;  // softmax of scores over all stocks
    std::vector<char> survivors;
    diff::Tensor weights;  // n x 1, softmax over survivors, exactly 0 elsewhere
};

// Gate with tau = gamma_p / n; if nothing survives keep the top ceil(0.05 n)
// stocks by attention (lowest index on ties).
PortfolioResult gated_allocation(diff::Tape& tape, const diff::Tensor& scores, double gamma_p);

PortfolioResult construct_portfolio(diff::Tape& tape, const diff::Tensor& context, const diff::Tensor& deep_factor,
                                    double d_f, double gamma_p, const Dense& scorer, double slope = 0.01);

// Directions used by the directional stage: one sign per original factor,
// shared across horizons, and one sign per horizon for the deep factor.
struct Directions {
    std::vector<double> factor;
    std::array<double, kNumHorizons> deep{};

    static Directions positive(std::size_t n_factors);
};

// Direction-independent part of the forward pass.
struct FactorStage {
    diff::Tensor raw;
    SelectionResult selection;
    diff::Tensor context;
    diff::Tensor ctx_industry;
    diff::Tensor ctx_universe;
    std::array<diff::Tensor, kNumHorizons> deep;
};

struct DirectionalStage {
    std::array<AttentionEstimate, kNumHorizons> estimate;
    std::array<PortfolioResult, kNumHorizons> portfolio;
};

struct ForwardOutputs {
    FactorStage factors;
    DirectionalStage directional;
};

FactorStage forward_factors(diff::Tape& tape, const ModelParams& params, const ModelConfig& config,
                            const Matrix& raw, const Matrix& industry, const Matrix& universe);

DirectionalStage forward_directional(diff::Tape& tape, const ModelParams& params, const ModelConfig& config,
                                     const FactorStage& stage, const Directions& directions);

ForwardOutputs forward(diff::Tape& tape, const ModelParams& params, const ModelConfig& config, const Matrix& raw,
                       const Matrix& industry, const Matrix& universe, const Directions& directions);

}  // namespace fg
