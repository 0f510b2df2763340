#include "fg/marketdata/forward_returns.hpp"

#include <unordered_map>

#include "fg/core/errors.hpp"

namespace fg {

void ForwardReturns::set(int horizon, std::size_t date_index, std::vector<double> values) {
    by_horizon_[horizon][date_index] = std::move(values);
}

bool ForwardReturns::has(int horizon, std::size_t date_index) const {
    auto h = by_horizon_.find(horizon);
    return h != by_horizon_.end() && h->second.count(date_index) > 0;
}

const std::vector<double>& ForwardReturns::at(int horizon, std::size_t date_index) const {
    auto h = by_horizon_.find(horizon);
    if (h == by_horizon_.end()) throw LookupError("no forward returns for horizon " + std::to_string(horizon));
    auto d = h->second.find(date_index);
    if (d == h->second.end()) {
        throw LookupError("no " + std::to_string(horizon) + "-day forward return for date index " +
                          std::to_string(date_index));
    }
    return d->second;
}

std::vector<std::size_t> ForwardReturns::dates(int horizon) const {
    std::vector<std::size_t> out;
    auto h = by_horizon_.find(horizon);
    if (h == by_horizon_.end()) return out;
    for (const auto& [t, _] : h->second) out.push_back(t);
    return out;
}

std::vector<int> ForwardReturns::horizons() const {
    std::vector<int> out;
    for (const auto& [k, _] : by_horizon_) out.push_back(k);
    return out;
}

ForwardReturns compute_forward_returns(const FactorPanel& panel, std::span<const int> horizons) {
    const std::size_t T = panel.n_dates();
    for (int k : horizons) {
        if (k < 1 || static_cast<std::size_t>(k) > T) {
            throw ValidationError("horizon " + std::to_string(k) + " outside 1.." + std::to_string(T));
        }
    }
    std::vector<std::unordered_map<std::string, std::size_t>> index(T);
    for (std::size_t t = 0; t < T; ++t) {
        const auto& ids = panel.sections[t].stock_ids;
        for (std::size_t i = 0; i < ids.size(); ++i) index[t].emplace(ids[i], i);
    }
    // Last known price of `id` on or before date `t`, searching back to `floor`.
    auto price = [&](const std::string& id, std::size_t t, std::size_t floor) {
        for (std::size_t s = t + 1; s-- > floor;) {
            auto it = index[s].find(id);
            if (it != index[s].end()) return std::pair{panel.sections[s].prices[it->second], s};
        }
        return std::pair{0.0, floor};
    };

    ForwardReturns out;
    for (int k : horizons) {
        const auto ku = static_cast<std::size_t>(k);
        for (std::size_t t = 0; t + ku < T; ++t) {
            const auto& cs = panel.sections[t];
            std::vector<double> r(cs.size());
            for (std::size_t i = 0; i < cs.size(); ++i) {
                const auto& id = cs.stock_ids[i];
                const auto [p1, d1] = price(id, t + 1, t);
                const auto [pk, dk] = price(id, t + ku, t);
                if (!(p1 > 0.0)) {
                    throw DataError("degenerate price " + std::to_string(p1) + " for stock " + id + " on " +
                                    panel.dates[d1].iso());
                }
                (void)dk;
                r[i] = (pk - p1) / p1;
            }
            out.set(k, t, std::move(r));
        }
    }
    return out;
}

}  // namespace fg
