#include "fg/marketdata/csv_io.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <unordered_map>

#include "fg/core/csv.hpp"
#include "fg/core/errors.hpp"

namespace fg {
namespace {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

Table read_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    Table t;
    std::string line;
    if (!std::getline(in, line)) throw DataError("column error: " + path.string() + " is empty");
    t.header = csv::split(line);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto cells = csv::split(line);
        if (cells.size() != t.header.size()) {
            throw DataError("column error: " + path.string() + " line " + std::to_string(line_no) + " has " +
                            std::to_string(cells.size()) + " cells, header has " +
                            std::to_string(t.header.size()));
        }
        t.rows.push_back(std::move(cells));
    }
    return t;
}

void expect_header(const Table& t, const std::vector<std::string>& expected, const std::filesystem::path& path) {
    if (t.header != expected) {
        std::string want;
        for (const auto& h : expected) want += (want.empty() ? "" : ",") + h;
        throw DataError("column error: " + path.string() + " header must be '" + want + "'");
    }
}

using Keyed = std::map<Date, std::unordered_map<std::string, std::string>>;

Keyed key_by_date_stock(const Table& t) {
    Keyed out;
    for (const auto& r : t.rows) {
        auto& day = out[Date::parse(r[0])];
        if (!day.emplace(r[1], r[2]).second) {
            throw DataError("duplicate row for stock " + r[1] + " on " + r[0]);
        }
    }
    return out;
}

void check_same_dates(const std::set<Date>& a, const Keyed& b, const std::string& what) {
    std::vector<std::string> offending;
    for (const auto& d : a) {
        if (!b.count(d)) offending.push_back(d.iso());
    }
    for (const auto& [d, _] : b) {
        if (!a.count(d)) offending.push_back(d.iso());
    }
    if (!offending.empty()) {
        std::sort(offending.begin(), offending.end());
        std::string list;
        for (const auto& s : offending) list += (list.empty() ? "" : ", ") + s;
        throw AlignmentError("alignment error: " + what + " dates differ from factor dates: " + list);
    }
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

FactorPanel load_panel(const PanelFiles& files) {
    const Table ft = read_table(files.factors);
    if (ft.header.size() < 3 || ft.header[0] != "date" || ft.header[1] != "stock_id") {
        throw DataError("column error: " + files.factors.string() +
                        " header must be 'date,stock_id,<factor_1>,...'");
    }
    const Table pt = read_table(files.prices);
    expect_header(pt, {"date", "stock_id", "vwap"}, files.prices);
    const Table st = read_table(files.sectors);
    expect_header(st, {"date", "stock_id", "sector"}, files.sectors);

    FactorPanel panel;
    const std::size_t m = ft.header.size() - 2;
    for (std::size_t j = 0; j < m; ++j) panel.factors.push_back({ft.header[j + 2], ft.header[j + 2]});

    if (files.groups) {
        const Table gt = read_table(*files.groups);
        expect_header(gt, {"factor_name", "group"}, *files.groups);
        for (const auto& r : gt.rows) {
            auto it = std::find_if(panel.factors.begin(), panel.factors.end(),
                                   [&](const FactorInfo& f) { return f.name == r[0]; });
            if (it == panel.factors.end()) throw DataError("group mapping names unknown factor " + r[0]);
            if (!is_factor_group(r[1])) throw DataError("unknown factor group '" + r[1] + "' for " + r[0]);
            it->group = r[1];
        }
    }

    // Rows per date in file order.
    std::map<Date, std::vector<const std::vector<std::string>*>> by_date;
    for (const auto& r : ft.rows) by_date[Date::parse(r[0])].push_back(&r);
    std::set<Date> factor_dates;
    for (const auto& [d, _] : by_date) factor_dates.insert(d);

    const Keyed prices = key_by_date_stock(pt);
    const Keyed sectors = key_by_date_stock(st);
    check_same_dates(factor_dates, prices, "prices");
    check_same_dates(factor_dates, sectors, "sectors");

    for (const auto& [d, rows] : by_date) {
        CrossSection cs;
        const std::size_t n = rows.size();
        cs.factors = Matrix(n, m);
        std::vector<std::vector<char>> missing(m, std::vector<char>(n, 0));
        const auto& pday = prices.at(d);
        const auto& sday = sectors.at(d);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& r = *rows[i];
            const auto& id = r[1];
            cs.stock_ids.push_back(id);
            auto p = pday.find(id);
            auto s = sday.find(id);
            if (p == pday.end() || s == sday.end()) {
                throw AlignmentError("alignment error: stock " + id + " on " + d.iso() + " lacks a " +
                                     (p == pday.end() ? "price" : "sector") + " row");
            }
            auto pv = csv::parse_double(p->second);
            if (!pv) throw DataError("unparseable vwap '" + p->second + "' for " + id + " on " + d.iso());
            cs.prices.push_back(*pv);
            cs.sectors.push_back(s->second);
            for (std::size_t j = 0; j < m; ++j) {
                const auto& cell = r[j + 2];
                if (csv::is_missing(cell)) {
                    missing[j][i] = 1;
                    continue;
                }
                auto v = csv::parse_double(cell);
                if (!v) throw DataError("unparseable factor '" + cell + "' for " + id + " on " + d.iso());
                if (std::isnan(*v)) {
                    missing[j][i] = 1;
                } else {
                    cs.factors(i, j) = *v;
                }
            }
        }
        for (std::size_t j = 0; j < m; ++j) {
            std::vector<double> present;
            for (std::size_t i = 0; i < n; ++i)
                if (!missing[j][i]) present.push_back(cs.factors(i, j));
            const double fill = present.empty() ? 0.0 : median(std::move(present));
            for (std::size_t i = 0; i < n; ++i)
                if (missing[j][i]) cs.factors(i, j) = fill;
        }
        panel.dates.push_back(d);
        panel.sections.push_back(std::move(cs));
    }
    panel.validate();
    return panel;
}

FactorPanel load_panel(const std::filesystem::path& factors, const std::filesystem::path& prices,
                       const std::filesystem::path& sectors) {
    return load_panel(PanelFiles{factors, prices, sectors, std::nullopt});
}

void write_panel(const FactorPanel& panel, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto open = [&](const char* name) {
        std::ofstream out(dir / name);
        if (!out) throw DataError("cannot write " + (dir / name).string());
        return out;
    };
    auto f = open("factors.csv");
    auto p = open("prices.csv");
    auto s = open("sectors.csv");
    auto g = open("factor_groups.csv");
    f << "date,stock_id";
    for (const auto& fi : panel.factors) f << ',' << fi.name;
    f << '\n';
    p << "date,stock_id,vwap\n";
    s << "date,stock_id,sector\n";
    for (std::size_t t = 0; t < panel.n_dates(); ++t) {
        const auto iso = panel.dates[t].iso();
        const auto& cs = panel.sections[t];
        for (std::size_t i = 0; i < cs.size(); ++i) {
            f << iso << ',' << cs.stock_ids[i];
            for (double v : cs.factors.row(i)) f << ',' << csv::format(v);
            f << '\n';
            p << iso << ',' << cs.stock_ids[i] << ',' << csv::format(cs.prices[i]) << '\n';
            s << iso << ',' << cs.stock_ids[i] << ',' << cs.sectors[i] << '\n';
        }
    }
    g << "factor_name,group\n";
    for (const auto& fi : panel.factors)
        if (is_factor_group(fi.group)) g << fi.name << ',' << fi.group << '\n';
}

}  // namespace fg
