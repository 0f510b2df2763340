#pragma once

#include <span>
#include <string>
#include <vector>

namespace fg {

// Group index per stock: stocks sorted by exposure descending (ties by id
// ascending) and cut into n_groups contiguous groups; with remainder r the
// first r groups hold one extra stock. Throws ValidationError when n < n_groups.
std::vector<std::size_t> stratify_decile(std::span<const double> factor, std::span<const std::string> ids,
                                         std::size_t n_groups = 10);

// Equal weights on group 0 for direction +1, on the last group for -1.
std::vector<double> adhoc_portfolio(std::span<const double> factor, std::span<const std::string> ids,
                                    double direction, std::size_t n_groups = 10);

}  // namespace fg
