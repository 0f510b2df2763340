#include "fg/marketdata/panel.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "fg/core/errors.hpp"

namespace fg {

bool is_factor_group(std::string_view name) {
    return std::find(kFactorGroups.begin(), kFactorGroups.end(), name) != kFactorGroups.end();
}

std::vector<std::string> FactorPanel::factor_names() const {
    std::vector<std::string> out;
    out.reserve(factors.size());
    for (const auto& f : factors) out.push_back(f.name);
    return out;
}

std::vector<std::string> FactorPanel::group_names() const {
    std::vector<std::string> out;
    for (const auto& f : factors) {
        if (std::find(out.begin(), out.end(), f.group) == out.end()) out.push_back(f.group);
    }
    return out;
}

std::optional<std::size_t> FactorPanel::find_date(Date d) const {
    auto it = std::lower_bound(dates.begin(), dates.end(), d);
    if (it == dates.end() || *it != d) return std::nullopt;
    return static_cast<std::size_t>(it - dates.begin());
}

std::size_t FactorPanel::date_index(Date d) const {
    auto idx = find_date(d);
    if (!idx) throw LookupError("date " + d.iso() + " is not in the panel");
    return *idx;
}

void FactorPanel::validate() const {
    if (dates.size() != sections.size()) throw DataError("panel has mismatched date and section counts");
    const std::size_t m = factors.size();
    if (m == 0) throw DataError("panel has no factors");
    for (std::size_t t = 0; t < dates.size(); ++t) {
        if (t > 0 && !(dates[t - 1] < dates[t])) {
            throw DataError("panel dates not strictly increasing at " + dates[t].iso());
        }
        const auto& cs = sections[t];
        const std::size_t n = cs.stock_ids.size();
        if (n < 2) throw DataError("date " + dates[t].iso() + " has fewer than 2 stocks");
        if (cs.factors.rows != n || cs.factors.cols != m || cs.prices.size() != n || cs.sectors.size() != n) {
            throw DataError("cross-section shapes disagree on " + dates[t].iso());
        }
        std::unordered_set<std::string> seen;
        for (const auto& id : cs.stock_ids) {
            if (!seen.insert(id).second) throw DataError("duplicate stock " + id + " on " + dates[t].iso());
        }
        for (double v : cs.factors.data) {
            if (!std::isfinite(v)) throw DataError("non-finite factor value on " + dates[t].iso());
        }
    }
}

}  // namespace fg
