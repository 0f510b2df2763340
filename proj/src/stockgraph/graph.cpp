#include "fg/stockgraph/graph.hpp"

#include <fstream>
#include <unordered_map>

#include "fg/core/csv.hpp"
#include "fg/core/errors.hpp"

namespace fg {
namespace {

const CrossSection& section_for(const FactorPanel& panel, Date date) {
    return panel.sections[panel.date_index(date)];
}

}  // namespace

std::string_view relation_name(Relation r) { return r == Relation::industry ? "industry" : "universe"; }

Relation parse_relation(std::string_view s) {
    if (s == "industry") return Relation::industry;
    if (s == "universe") return Relation::universe;
    throw DataError("unknown relation '" + std::string(s) + "'");
}

StockGraph build_industry_graph(const FactorPanel& panel, Date date) {
    const auto& cs = section_for(panel, date);
    const std::size_t n = cs.size();
    StockGraph g{date, Relation::industry, Matrix(n, n)};
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) g.adjacency(i, j) = cs.sectors[i] == cs.sectors[j] ? 1.0 : 0.0;
    return g;
}

StockGraph build_universe_graph(const FactorPanel& panel, Date date) {
    const std::size_t n = section_for(panel, date).size();
    return StockGraph{date, Relation::universe, Matrix(n, n, 1.0)};
}

void GraphSet::load_overrides(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || csv::split(line) != std::vector<std::string>{"date", "src_stock", "dst_stock", "relation"}) {
        throw DataError("column error: " + path.string() + " header must be 'date,src_stock,dst_stock,relation'");
    }
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        const auto cells = csv::split(line);
        if (cells.size() != 4) throw DataError("column error: malformed adjacency row '" + line + "'");
        const auto idx = panel_->find_date(Date::parse(cells[0]));
        if (!idx) throw LookupError("adjacency row for date " + cells[0] + " not in panel");
        overrides_[{*idx, parse_relation(cells[3])}].emplace_back(cells[1], cells[2]);
    }
}

StockGraph GraphSet::graph(std::size_t date_index, Relation r) const {
    if (date_index >= panel_->n_dates()) throw LookupError("date index out of range");
    const Date d = panel_->dates[date_index];
    auto it = overrides_.find({date_index, r});
    if (it == overrides_.end()) {
        return r == Relation::industry ? build_industry_graph(*panel_, d) : build_universe_graph(*panel_, d);
    }
    const auto& cs = panel_->sections[date_index];
    std::unordered_map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < cs.size(); ++i) pos.emplace(cs.stock_ids[i], i);
    StockGraph g{d, r, Matrix(cs.size(), cs.size())};
    for (std::size_t i = 0; i < cs.size(); ++i) g.adjacency(i, i) = 1.0;
    for (const auto& [src, dst] : it->second) {
        auto s = pos.find(src), t = pos.find(dst);
        if (s == pos.end() || t == pos.end()) {
            throw DataError("adjacency edge " + src + "->" + dst + " names a stock absent on " + d.iso());
        }
        g.adjacency(t->second, s->second) = 1.0;
    }
    return g;
}

}  // namespace fg
