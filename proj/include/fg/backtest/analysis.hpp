#pragma once

#include <span>
#include <string>
#include <vector>

#include "fg/marketdata/forward_returns.hpp"
#include "fg/marketdata/panel.hpp"

namespace fg {

// A signed per-stock score on one date, aligned with that date's cross-section.
struct DatedScore {
    std::size_t date_index = 0;
    std::vector<double> values;
};

struct MonotonicityReport {
    int horizon = 0;
    std::vector<double> decile_mean;  // index = group, group 0 holds the highest scores
    double spearman = 0.0;            // decile rank (high score = high rank) vs mean return
    std::size_t n_dates = 0;
};

// Spearman correlation with average ranks for ties; 0 when either side is constant.
double spearman(std::span<const double> x, std::span<const double> y);

// Stratifies each date's scores into n_groups and averages group-mean forward
// returns over dates. Dates without r_{t+k} are skipped.
MonotonicityReport monotonicity_report(std::span<const DatedScore> scores, const FactorPanel& panel,
                                       const ForwardReturns& returns, int k, std::size_t n_groups = 10);

// One evaluation date of signed factor attention a_bar o d (length m).
struct SignedAttention {
    std::size_t date_index = 0;
    std::vector<double> values;
};

struct HeatmapRow {
    std::string bucket_start;
    std::string bucket_end;
    std::vector<double> values;  // one per group
};

struct Heatmap {
    std::vector<std::string> groups;
    std::vector<HeatmapRow> rows;
};

// Columns are factor groups (mean over member factors), rows are consecutive
// buckets of bucket_dates evaluation dates (mean over dates in the bucket).
Heatmap attention_heatmap(std::span<const SignedAttention> attention, const FactorPanel& panel,
                          std::size_t bucket_dates = 126);

}  // namespace fg
