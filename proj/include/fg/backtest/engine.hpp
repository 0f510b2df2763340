#pragma once

#include <span>
#include <string>
#include <vector>

#include "fg/marketdata/forward_returns.hpp"
#include "fg/marketdata/panel.hpp"

namespace fg {

// Holdings decided at the close of date_index, keyed by stock id.
struct WeightSnapshot {
    std::size_t date_index = 0;
    std::vector<std::string> stock_ids;
    std::vector<double> weights;
};

struct BacktestMetrics {
    double alpha = 0.0;  // mean active return x periods per year
    double ir = 0.0;     // mean / sample std x sqrt(periods per year); 0 when std < 1e-12
    double md = 0.0;     // max fractional drawdown of the cumulative active-wealth curve
    double tt = 0.0;     // mean over rebalances of sum |w_new - w_old|
    double n_avg = 0.0;  // mean count of weights > 0
};

struct BacktestReport {
    std::string strategy;
    int horizon = 0;
    std::vector<WeightSnapshot> weights;  // evaluated rebalances only
    std::vector<double> portfolio_returns;
    std::vector<double> benchmark_returns;
    std::vector<double> active_returns;  // one per evaluated rebalance
    BacktestMetrics metrics;
    std::vector<std::string> warnings;
};

// Peak-to-trough drawdown of prod(1 + active) starting from wealth 1, in [0, 1].
double max_drawdown(std::span<const double> active);

// Requires at least two periods (ValidationError).
BacktestMetrics compute_metrics(std::span<const double> active, std::span<const WeightSnapshot> weights,
                                double periods_per_year);

// Every k-th date of `dates` (which must be sorted), starting with the first.
std::vector<std::size_t> rebalance_dates(std::span<const std::size_t> dates, int k);

// Portfolio return per snapshot from r_{t+k}; benchmark is the equal-weight
// universe over the same window. Snapshots without labels are skipped with a
// warning. Sums run in stock-id order so results do not depend on row order.
BacktestReport run_backtest(std::span<const WeightSnapshot> weights, const FactorPanel& panel,
                            const ForwardReturns& returns, int k, std::string strategy = {});

}  // namespace fg
