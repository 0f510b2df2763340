#pragma once

#include <cstddef>
#include <vector>

#include "fg/marketdata/panel.hpp"

namespace fg {

// Date indices into the panel calendar.
struct CvSplit {
    std::size_t fold_index = 0;
    std::vector<std::size_t> train_dates;
    std::vector<std::size_t> valid_dates;
    std::vector<std::size_t> test_dates;
};

// Splits the calendar into n_folds contiguous chronological groups. Fold i
// tests on group i and trains on groups before it, with the trailing
// valid_fraction of that range held out for validation. Fold 0 has no history
// and is not returned. With test_span > 1 fold i tests on groups i .. i+span-1
// (clipped at the last group).
std::vector<CvSplit> make_cv_splits(std::size_t n_dates, std::size_t n_folds = 14,
                                    double valid_fraction = 0.2, std::size_t test_span = 1);
std::vector<CvSplit> make_cv_splits(const FactorPanel& panel, std::size_t n_folds = 14,
                                    double valid_fraction = 0.2, std::size_t test_span = 1);

}  // namespace fg
