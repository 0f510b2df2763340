#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fg/backtest/engine.hpp"
#include "fg/core/matrix.hpp"
#include "fg/marketdata/cv.hpp"
#include "fg/model/config.hpp"

namespace fg {

// A rebalance date and the position in `splits` of the fold whose model trades it.
struct ScheduledDate {
    std::size_t fold = 0;
    std::size_t date_index = 0;
};

// Every k-th date of the union of test ranges. A date covered by several
// folds goes to the latest one.
std::vector<ScheduledDate> rebalance_schedule(std::span<const CvSplit> splits, int k);

// History a fold may fit on: its train and validation dates.
std::vector<std::size_t> fit_window(const CvSplit& split);

// Mean IC of each raw factor at each horizon over the window, using only
// labels that end inside the window. Throws ValidationError when no date is labelled.
std::vector<std::array<double, kNumHorizons>> mean_factor_ics(const FactorPanel& panel, const ForwardReturns& returns,
                                                              std::span<const std::size_t> window);

enum class StepwiseCriterion { best, avg, t20 };
StepwiseCriterion parse_stepwise(std::string_view s);  // "best" | "avg" | "t20"

// Ascending factor indices. q defaults to ceil(m / 3).
std::vector<std::size_t> stepwise_select(const FactorPanel& panel, const ForwardReturns& returns,
                                         std::span<const std::size_t> window, StepwiseCriterion criterion,
                                         std::optional<std::size_t> q = std::nullopt);

// Pooled cross-sectional OLS of r_{t+k} on [1, F_S] over the window.
struct LinearModel {
    std::vector<std::size_t> factors;
    std::vector<double> beta;  // intercept first

    std::vector<double> score(const Matrix& raw) const;
};

LinearModel fit_linear_model(const FactorPanel& panel, const ForwardReturns& returns,
                             std::span<const std::size_t> window, int k, std::vector<std::size_t> factors = {});

enum class BaselineKind { linear, ew, mlp, s_best, s_avg, s_t20 };
BaselineKind parse_baseline(std::string_view s);  // linear | ew | mlp | s_best | s_avg | s_t20
std::string baseline_name(BaselineKind kind);     // Linear | EW | MLP | S-Best | S-Avg | S-T20

struct BaselineConfig {
    std::size_t n_groups = 10;
    std::optional<std::size_t> stepwise_q;
    std::size_t mlp_hidden = 64;
    std::size_t mlp_context = 32;
    std::size_t mlp_epochs = 20;
    double mlp_learning_rate = 1e-3;
    std::uint64_t seed = 1;

    void validate() const;  // throws ConfigError
};

// Row-wise MLP on cross-sectionally normalized factors fitted by MSE to
// per-date z-scored returns.
struct MlpScorer {
    std::vector<double> score(const Matrix& raw) const;
    struct Impl;
    std::shared_ptr<const Impl> impl;
};

MlpScorer fit_mlp_baseline(const FactorPanel& panel, const ForwardReturns& returns,
                           std::span<const std::size_t> window, int k, const BaselineConfig& config);

std::vector<WeightSnapshot> baseline_weights(BaselineKind kind, const FactorPanel& panel,
                                             const ForwardReturns& returns, std::span<const CvSplit> splits,
                                             std::span<const ScheduledDate> schedule, int k,
                                             const BaselineConfig& config);

BacktestReport baseline_models(BaselineKind kind, const FactorPanel& panel, const ForwardReturns& returns,
                               std::span<const CvSplit> splits, int k, const BaselineConfig& config);

}  // namespace fg
