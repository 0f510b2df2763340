#include "fg/backtest/engine.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "fg/core/errors.hpp"

namespace fg {

double max_drawdown(std::span<const double> active) {
    double wealth = 1.0, peak = 1.0, md = 0.0;
    for (double a : active) {
        wealth *= 1.0 + a;
        peak = std::max(peak, wealth);
        md = std::max(md, (peak - wealth) / peak);
    }
    return std::clamp(md, 0.0, 1.0);
}

BacktestMetrics compute_metrics(std::span<const double> active, std::span<const WeightSnapshot> weights,
                                double periods_per_year) {
    if (active.size() < 2) {
        throw ValidationError("metrics need at least 2 periods, got " + std::to_string(active.size()));
    }
    if (!(periods_per_year > 0.0)) throw ValidationError("periods_per_year must be > 0");
    BacktestMetrics m;
    const double n = static_cast<double>(active.size());
    const double mean = std::accumulate(active.begin(), active.end(), 0.0) / n;
    double ss = 0.0;
    for (double a : active) ss += (a - mean) * (a - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    m.alpha = mean * periods_per_year;
    m.ir = sd < 1e-12 ? 0.0 : mean / sd * std::sqrt(periods_per_year);
    m.md = max_drawdown(active);

    double turnover = 0.0, held = 0.0;
    for (std::size_t s = 0; s < weights.size(); ++s) {
        held += static_cast<double>(std::count_if(weights[s].weights.begin(), weights[s].weights.end(),
                                                  [](double w) { return w > 0.0; }));
        if (s == 0) continue;
        std::map<std::string, double> delta;
        for (std::size_t i = 0; i < weights[s].stock_ids.size(); ++i)
            delta[weights[s].stock_ids[i]] += weights[s].weights[i];
        for (std::size_t i = 0; i < weights[s - 1].stock_ids.size(); ++i)
            delta[weights[s - 1].stock_ids[i]] -= weights[s - 1].weights[i];
        for (const auto& [_, d] : delta) turnover += std::abs(d);
    }
    m.tt = weights.size() > 1 ? turnover / static_cast<double>(weights.size() - 1) : 0.0;
    m.n_avg = weights.empty() ? 0.0 : held / static_cast<double>(weights.size());
    return m;
}

std::vector<std::size_t> rebalance_dates(std::span<const std::size_t> dates, int k) {
    if (k < 1) throw ValidationError("rebalance horizon must be >= 1");
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < dates.size(); i += static_cast<std::size_t>(k)) out.push_back(dates[i]);
    return out;
}

BacktestReport run_backtest(std::span<const WeightSnapshot> weights, const FactorPanel& panel,
                            const ForwardReturns& returns, int k, std::string strategy) {
    BacktestReport rep;
    rep.strategy = std::move(strategy);
    rep.horizon = k;
    for (const auto& snap : weights) {
        if (snap.weights.size() != snap.stock_ids.size()) throw DimensionError("one weight per stock id required");
        if (snap.date_index >= panel.n_dates()) throw LookupError("rebalance date index outside the panel");
        if (!returns.has(k, snap.date_index)) {
            rep.warnings.push_back("no " + std::to_string(k) + "-day returns for " +
                                   panel.dates[snap.date_index].iso() + "; rebalance skipped");
            continue;
        }
        const auto& cs = panel.sections[snap.date_index];
        const auto& r = returns.at(k, snap.date_index);
        std::map<std::string, double> by_id;
        for (std::size_t i = 0; i < cs.size(); ++i) by_id.emplace(cs.stock_ids[i], r[i]);

        std::map<std::string, double> held;
        for (std::size_t i = 0; i < snap.stock_ids.size(); ++i) held[snap.stock_ids[i]] += snap.weights[i];
        double port = 0.0;
        for (const auto& [id, w] : held) {
            auto it = by_id.find(id);
            if (it == by_id.end()) {
                throw LookupError("stock " + id + " is not in the universe on " + panel.dates[snap.date_index].iso());
            }
            port += w * it->second;
        }
        // Same accumulation as an equal-weight portfolio, so EW active is exactly 0.
        const double w_bench = 1.0 / static_cast<double>(by_id.size());
        double bench = 0.0;
        for (const auto& [_, v] : by_id) bench += w_bench * v;

        rep.weights.push_back(snap);
        rep.portfolio_returns.push_back(port);
        rep.benchmark_returns.push_back(bench);
        rep.active_returns.push_back(port - bench);
    }
    rep.metrics = compute_metrics(rep.active_returns, rep.weights, 252.0 / static_cast<double>(k));
    return rep;
}

}  // namespace fg
