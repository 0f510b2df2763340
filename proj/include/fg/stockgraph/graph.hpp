#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "fg/core/matrix.hpp"
#include "fg/marketdata/panel.hpp"

namespace fg {

enum class Relation { industry, universe };

std::string_view relation_name(Relation r);
Relation parse_relation(std::string_view s);  // throws DataError

// Dense 0/1 adjacency aligned to one date's stock order. adjacency(i, j) = 1
// means stock j relates to stock i, so row i lists the neighbours stock i
// attends to. The diagonal is always 1.
struct StockGraph {
    Date date;
    Relation relation = Relation::universe;
    Matrix adjacency;

    std::size_t size() const { return adjacency.rows; }
};

StockGraph build_industry_graph(const FactorPanel& panel, Date date);
StockGraph build_universe_graph(const FactorPanel& panel, Date date);

// Graph source for every panel date: builders by default, replaced per
// (date, relation) by explicit edges when an adjacency file is loaded.
class GraphSet {
public:
    explicit GraphSet(const FactorPanel& panel) : panel_(&panel) {}

    // CSV header `date,src_stock,dst_stock,relation`.
    void load_overrides(const std::filesystem::path& path);

    StockGraph graph(std::size_t date_index, Relation r) const;

private:
    const FactorPanel* panel_;
    // (date index, relation) -> directed edges (src, dst) by stock id.
    std::map<std::pair<std::size_t, Relation>, std::vector<std::pair<std::string, std::string>>> overrides_;
};

}  // namespace fg
