#include "fg/backtest/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fg/backtest/stratify.hpp"
#include "fg/core/errors.hpp"

namespace fg {
namespace {

std::vector<double> average_ranks(std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> rank(v.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j);
        for (std::size_t t = i; t <= j; ++t) rank[order[t]] = avg;
        i = j + 1;
    }
    return rank;
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DimensionError("spearman inputs differ in length");
    if (x.size() < 2) return 0.0;
    const auto rx = average_ranks(x), ry = average_ranks(y);
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx <= 0.0 || syy <= 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

MonotonicityReport monotonicity_report(std::span<const DatedScore> scores, const FactorPanel& panel,
                                       const ForwardReturns& returns, int k, std::size_t n_groups) {
    MonotonicityReport rep;
    rep.horizon = k;
    rep.decile_mean.assign(n_groups, 0.0);
    for (const auto& s : scores) {
        if (!returns.has(k, s.date_index)) continue;
        const auto& cs = panel.sections.at(s.date_index);
        if (s.values.size() != cs.size()) throw DimensionError("score length does not match the cross-section");
        const auto& r = returns.at(k, s.date_index);
        const auto group = stratify_decile(s.values, cs.stock_ids, n_groups);
        std::vector<double> sum(n_groups, 0.0), count(n_groups, 0.0);
        for (std::size_t i = 0; i < group.size(); ++i) {
            sum[group[i]] += r[i];
            count[group[i]] += 1.0;
        }
        for (std::size_t g = 0; g < n_groups; ++g) rep.decile_mean[g] += sum[g] / count[g];
        ++rep.n_dates;
    }
    if (rep.n_dates == 0) throw ValidationError("monotonicity report has no labelled dates");
    for (auto& v : rep.decile_mean) v /= static_cast<double>(rep.n_dates);
    std::vector<double> rank(n_groups);
    for (std::size_t g = 0; g < n_groups; ++g) rank[g] = static_cast<double>(n_groups - 1 - g);
    rep.spearman = spearman(rank, rep.decile_mean);
    return rep;
}

Heatmap attention_heatmap(std::span<const SignedAttention> attention, const FactorPanel& panel,
                          std::size_t bucket_dates) {
    if (bucket_dates < 1) throw ValidationError("heatmap bucket must hold at least one date");
    Heatmap h;
    h.groups = panel.group_names();
    const std::size_t m = panel.n_factors(), G = h.groups.size();
    std::vector<std::size_t> group_of(m);
    std::vector<double> members(G, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
        group_of[j] = static_cast<std::size_t>(
            std::find(h.groups.begin(), h.groups.end(), panel.factors[j].group) - h.groups.begin());
        members[group_of[j]] += 1.0;
    }
    for (std::size_t start = 0; start < attention.size(); start += bucket_dates) {
        const std::size_t end = std::min(start + bucket_dates, attention.size());
        HeatmapRow row;
        row.bucket_start = panel.dates.at(attention[start].date_index).iso();
        row.bucket_end = panel.dates.at(attention[end - 1].date_index).iso();
        row.values.assign(G, 0.0);
        for (std::size_t i = start; i < end; ++i) {
            if (attention[i].values.size() != m) throw DimensionError("signed attention must have one entry per factor");
            for (std::size_t j = 0; j < m; ++j) row.values[group_of[j]] += attention[i].values[j] / members[group_of[j]];
        }
        for (auto& v : row.values) v /= static_cast<double>(end - start);
        h.rows.push_back(std::move(row));
    }
    return h;
}

}  // namespace fg
