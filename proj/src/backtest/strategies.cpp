#include "fg/backtest/strategies.hpp"

#include <map>

#include "fg/backtest/stratify.hpp"
#include "fg/core/errors.hpp"

namespace fg {

std::vector<DateEvaluation> evaluate_fold(const FactorPanel& panel, const GraphSet& graphs,
                                          const ModelConfig& config, const ModelParams& params,
                                          const Directions& directions, std::span<const std::size_t> dates) {
    std::vector<DateEvaluation> out;
    out.reserve(dates.size());
    for (std::size_t t : dates) {
        diff::Tape tape(false);
        const auto fwd = forward(tape, params, config, panel.sections.at(t).factors,
                                 graphs.graph(t, Relation::industry).adjacency,
                                 graphs.graph(t, Relation::universe).adjacency, directions);
        DateEvaluation e;
        e.date_index = t;
        for (std::size_t h = 0; h < kNumHorizons; ++h) {
            const auto& est = fwd.directional.estimate[h];
            e.weights[h] = fwd.directional.portfolio[h].weights.to_vector();
            e.deep[h] = fwd.factors.deep[h].to_vector();
            e.approx[h] = est.f_hat.to_vector();
            e.signed_attention[h] = est.a_bar.to_vector();
            for (std::size_t j = 0; j < e.signed_attention[h].size(); ++j)
                e.signed_attention[h][j] *= directions.factor[j];
            e.deep_direction[h] = directions.deep[h];
        }
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<std::vector<std::size_t>> owned_test_dates(std::span<const CvSplit> splits) {
    std::vector<std::vector<std::size_t>> out(splits.size());
    for (const auto& sd : rebalance_schedule(splits, 1)) out[sd.fold].push_back(sd.date_index);
    return out;
}

E2EStrategies assemble_e2e(std::span<const DateEvaluation> evals, const FactorPanel& panel, int k,
                           std::size_t n_groups) {
    const std::size_t h = horizon_index(k);
    E2EStrategies s;
    for (std::size_t i = 0; i < evals.size(); ++i) {
        const auto& e = evals[i];
        if (i > 0 && e.date_index <= evals[i - 1].date_index) throw ValidationError("evaluations are not sorted by date");
        const auto& ids = panel.sections.at(e.date_index).stock_ids;
        const double d = e.deep_direction[h];
        std::vector<double> deep_signed(e.deep[h]), approx_signed(e.approx[h]);
        for (auto& v : deep_signed) v *= d;
        for (auto& v : approx_signed) v *= d;
        s.deep_scores.push_back({e.date_index, std::move(deep_signed)});
        s.approx_scores.push_back({e.date_index, std::move(approx_signed)});
        s.attention.push_back({e.date_index, e.signed_attention[h]});
        if (i % static_cast<std::size_t>(k) != 0) continue;
        s.automatic.push_back({e.date_index, ids, e.weights[h]});
        s.deep_decile.push_back({e.date_index, ids, adhoc_portfolio(e.deep[h], ids, d, n_groups)});
        s.approx_decile.push_back({e.date_index, ids, adhoc_portfolio(e.approx[h], ids, d, n_groups)});
    }
    return s;
}

std::vector<DatedScore> rebalance_scores(std::span<const DatedScore> scores, int k) {
    if (k < 1) throw ValidationError("rebalance horizon must be >= 1");
    std::vector<DatedScore> out;
    for (std::size_t i = 0; i < scores.size(); i += static_cast<std::size_t>(k)) out.push_back(scores[i]);
    return out;
}

}  // namespace fg
