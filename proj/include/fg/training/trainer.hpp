#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fg/marketdata/cv.hpp"
#include "fg/marketdata/forward_returns.hpp"
#include "fg/marketdata/panel.hpp"
#include "fg/model/network.hpp"
#include "fg/stockgraph/graph.hpp"
#include "fg/training/buffers.hpp"

namespace fg {

enum class LocalMode { closed_form, iterative };

struct TrainingConfig {
    double lambda_s = 0.1;
    double lambda_f = 0.1;
    double lambda_e = 0.1;
    double theta = 0.10;
    std::string optimizer = "sgd";
    double learning_rate = 1e-3;
    double momentum = 0.9;
    double grad_clip = 0.0;  // 0 disables clipping
    LocalMode local_mode = LocalMode::closed_form;
    double local_step = 1.0;
    int local_iterations = 200;
    std::size_t batch_dates = 8;
    std::size_t max_epochs = 50;
    std::size_t patience = 10;
    std::uint64_t seed = 1;

    void validate() const;  // throws ConfigError
};

// total = l_p + lambda_s l_s + lambda_f l_f + lambda_e l_e with l_p = l_ret + l_up.
struct LossBreakdown {
    double l_p = 0.0, l_ret = 0.0, l_up = 0.0, l_s = 0.0, l_f = 0.0, l_e = 0.0, total = 0.0;
    double lambda_s = 0.0, lambda_f = 0.0, lambda_e = 0.0;
};

// Throws TrainingError naming the first non-finite term and the epoch.
void check_losses_finite(const LossBreakdown& values, std::size_t epoch);

struct EpochLog {
    std::size_t epoch = 0;
    double l_ret = 0.0, l_up = 0.0, l_s = 0.0, l_f = 0.0, l_e = 0.0, total = 0.0;
    double val_l_ret = 0.0;  // NaN without validation labels
};

// One date with its graphs and the labels usable under the split's embargo.
struct BatchDate {
    std::size_t date_index = 0;
    const Matrix* raw = nullptr;
    Matrix industry;
    Matrix universe;
    std::array<const std::vector<double>*, kNumHorizons> returns{};

    bool labelled() const;
};

// Labels for (t, k) are kept only when t + k <= last_usable, so no term reads
// a price beyond the end of its split.
BatchDate make_batch_date(const FactorPanel& panel, const GraphSet& graphs, const ForwardReturns& returns,
                          std::size_t t, std::size_t last_usable);

struct BatchLoss {
    diff::Tensor total;
    LossBreakdown values;
    std::array<std::vector<double>, kNumHorizons> ics;  // this batch's deep-factor ICs, detached
    std::size_t n_terms = 0;                            // labelled (t, k) pairs
};

// Eq. 12 over one batch with fixed directions. ic_history holds the detached
// ICs of earlier batches in the epoch; ICIR runs over history plus this batch.
// Requires at least one labelled pair.
BatchLoss batch_loss(diff::Tape& tape, const ModelParams& params, const ModelConfig& model,
                     const TrainingConfig& config, std::span<const FactorStage> stages,
                     std::span<const BatchDate> dates, const Directions& directions,
                     const std::array<std::vector<double>, kNumHorizons>& ic_history);

// -mean W . R over labelled pairs; NaN when there are none.
double evaluate_l_ret(const ModelParams& params, const ModelConfig& model, std::span<const BatchDate> dates,
                      const Directions& directions);

struct TrainingData {
    const FactorPanel& panel;
    const GraphSet& graphs;
    const ForwardReturns& returns;  // must cover kHorizons
};

struct TrainingResult {
    ModelParams params;        // best-validation parameters
    DirectionalBuffer buffer;  // buffer at the best epoch
    std::vector<EpochLog> log;
    std::size_t best_epoch = 0;
    std::vector<std::string> warnings;
};

using EpochCallback = std::function<void(const EpochLog&)>;

TrainingResult train(const TrainingData& data, const CvSplit& split, const ModelConfig& model,
                     const TrainingConfig& config, const EpochCallback& on_epoch = {});

}  // namespace fg
