#include "fg/marketdata/cv.hpp"

#include <algorithm>
#include <cmath>

#include "fg/core/errors.hpp"

namespace fg {

std::vector<CvSplit> make_cv_splits(std::size_t n_dates, std::size_t n_folds, double valid_fraction,
                                    std::size_t test_span) {
    if (test_span < 1) throw SplitError("test_span must be >= 1");
    if (n_folds < 2) throw SplitError("need at least 2 chronological groups, got " + std::to_string(n_folds));
    if (valid_fraction < 0.0 || valid_fraction >= 1.0) throw SplitError("valid_fraction must be in [0, 1)");
    if (n_dates < n_folds) {
        throw SplitError("too few dates for " + std::to_string(n_folds) + " folds: need at least " +
                         std::to_string(n_folds) + ", got " + std::to_string(n_dates));
    }
    // Group g covers [start[g], start[g+1]); the first (n_dates % n_folds) groups get one extra date.
    std::vector<std::size_t> start(n_folds + 1, 0);
    const std::size_t base = n_dates / n_folds, extra = n_dates % n_folds;
    for (std::size_t g = 0; g < n_folds; ++g) start[g + 1] = start[g] + base + (g < extra ? 1 : 0);

    std::vector<CvSplit> out;
    for (std::size_t fold = 1; fold < n_folds; ++fold) {
        CvSplit s;
        s.fold_index = fold;
        const std::size_t pool = start[fold];
        auto n_valid = static_cast<std::size_t>(std::llround(valid_fraction * static_cast<double>(pool)));
        n_valid = std::min(n_valid, pool - 1);
        for (std::size_t t = 0; t < pool - n_valid; ++t) s.train_dates.push_back(t);
        for (std::size_t t = pool - n_valid; t < pool; ++t) s.valid_dates.push_back(t);
        for (std::size_t t = start[fold]; t < start[std::min(fold + test_span, n_folds)]; ++t) s.test_dates.push_back(t);
        // Validation never shares dates with the fold's test range.
        std::erase_if(s.valid_dates, [&](std::size_t t) {
            return std::binary_search(s.test_dates.begin(), s.test_dates.end(), t);
        });
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<CvSplit> make_cv_splits(const FactorPanel& panel, std::size_t n_folds, double valid_fraction,
                                    std::size_t test_span) {
    return make_cv_splits(panel.n_dates(), n_folds, valid_fraction, test_span);
}

}  // namespace fg
