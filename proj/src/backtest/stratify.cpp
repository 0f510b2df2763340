#include "fg/backtest/stratify.hpp"

#include <algorithm>
#include <numeric>

#include "fg/core/errors.hpp"

namespace fg {

std::vector<std::size_t> stratify_decile(std::span<const double> factor, std::span<const std::string> ids,
                                         std::size_t n_groups) {
    const std::size_t n = factor.size();
    if (ids.size() != n) throw DimensionError("stratification needs one id per exposure");
    if (n_groups < 1) throw ValidationError("stratification error: n_groups must be >= 1");
    if (n < n_groups) {
        throw ValidationError("stratification error: " + std::to_string(n) + " stocks cannot fill " +
                              std::to_string(n_groups) + " groups");
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (factor[a] != factor[b]) return factor[a] > factor[b];
        return ids[a] < ids[b];
    });
    const std::size_t base = n / n_groups, extra = n % n_groups;
    std::vector<std::size_t> group(n);
    std::size_t pos = 0;
    for (std::size_t g = 0; g < n_groups; ++g) {
        const std::size_t size = base + (g < extra ? 1 : 0);
        for (std::size_t i = 0; i < size; ++i) group[order[pos++]] = g;
    }
    return group;
}

std::vector<double> adhoc_portfolio(std::span<const double> factor, std::span<const std::string> ids,
                                    double direction, std::size_t n_groups) {
    if (direction != 1.0 && direction != -1.0) throw ValidationError("direction must be +1 or -1");
    const auto group = stratify_decile(factor, ids, n_groups);
    const std::size_t target = direction > 0 ? 0 : n_groups - 1;
    const auto members = static_cast<double>(std::count(group.begin(), group.end(), target));
    std::vector<double> w(factor.size(), 0.0);
    for (std::size_t i = 0; i < w.size(); ++i)
        if (group[i] == target) w[i] = 1.0 / members;
    return w;
}

}  // namespace fg
