#pragma once

#include <array>
#include <span>
#include <vector>

#include "fg/backtest/analysis.hpp"
#include "fg/backtest/baselines.hpp"
#include "fg/backtest/engine.hpp"
#include "fg/model/network.hpp"
#include "fg/stockgraph/graph.hpp"

namespace fg {

// Model outputs on one test date, one entry per horizon.
struct DateEvaluation {
    std::size_t date_index = 0;
    std::array<std::vector<double>, kNumHorizons> weights;           // automatic portfolio
    std::array<std::vector<double>, kNumHorizons> deep;              // deep factor
    std::array<std::vector<double>, kNumHorizons> approx;            // attention estimate f_hat
    std::array<std::vector<double>, kNumHorizons> signed_attention;  // a_bar o d, length m
    std::array<double, kNumHorizons> deep_direction{};
};

// Forward-only pass of one fold's model over the given dates.
std::vector<DateEvaluation> evaluate_fold(const FactorPanel& panel, const GraphSet& graphs,
                                          const ModelConfig& config, const ModelParams& params,
                                          const Directions& directions, std::span<const std::size_t> dates);

// Dates each fold trades: its test dates minus those claimed by a later fold.
std::vector<std::vector<std::size_t>> owned_test_dates(std::span<const CvSplit> splits);

struct E2EStrategies {
    std::vector<WeightSnapshot> automatic;
    std::vector<WeightSnapshot> deep_decile;    // top group of the deep factor along its direction
    std::vector<WeightSnapshot> approx_decile;  // same rule on the attention estimate
    std::vector<DatedScore> deep_scores;        // direction-signed, every evaluated date
    std::vector<DatedScore> approx_scores;
    std::vector<SignedAttention> attention;
};

// Rebalances every k-th evaluated date (evals sorted by date), matching
// rebalance_schedule over the same splits.
E2EStrategies assemble_e2e(std::span<const DateEvaluation> evals, const FactorPanel& panel, int k,
                           std::size_t n_groups = 10);

// Keeps the scores dated on the rebalance dates of horizon k.
std::vector<DatedScore> rebalance_scores(std::span<const DatedScore> scores, int k);

}  // namespace fg
