#include "fg/marketdata/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "fg/core/errors.hpp"

namespace fg {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Independent stream per (seed, stream id) so each stock's draws do not depend
// on how many other stocks exist or in what order they are listed.
std::mt19937_64 stream(std::uint64_t seed, std::uint64_t id) {
    return std::mt19937_64(splitmix64(splitmix64(seed) ^ splitmix64(id + 0x5151)));
}

constexpr std::uint64_t kMarketStream = 0xFFFF'FFFFULL;

std::string padded(const char* prefix, std::size_t v, int width) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, v);
    return buf;
}

}  // namespace

void SyntheticSpec::validate() const {
    if (n_sectors < 1) throw ConfigError("n_sectors must be >= 1");
    if (n_stocks < n_sectors) {
        throw ConfigError("n_sectors (" + std::to_string(n_sectors) + ") exceeds n_stocks (" +
                          std::to_string(n_stocks) + ")");
    }
    if (n_stocks < 2) throw ConfigError("n_stocks must be >= 2");
    if (n_factors < 1) throw ConfigError("n_factors must be >= 1");
    if (n_days < 2) throw ConfigError("n_days must be >= 2");
    if (!(signal_strength >= 0.0)) throw ConfigError("signal_strength must be >= 0");
    if (n_negative > std::min(n_planted, n_factors)) throw ConfigError("n_negative exceeds planted factors");
    if (signal_window < 1) throw ConfigError("signal_window must be >= 1");
    if (!stock_order.empty()) {
        std::vector<std::size_t> sorted = stock_order;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            if (sorted[i] != i || sorted.size() != n_stocks) throw ConfigError("stock_order is not a permutation");
        }
    }
}

SyntheticMarket generate_synthetic_market(const SyntheticSpec& spec) {
    spec.validate();
    const std::size_t n = spec.n_stocks, m = spec.n_factors, T = spec.n_days, G = spec.n_sectors;
    const std::size_t n_planted = std::min(spec.n_planted, m);

    SyntheticMarket out;
    auto market = stream(spec.seed, kMarketStream);
    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), market);
    out.planted.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_planted));
    std::sort(out.planted.begin(), out.planted.end());
    for (std::size_t j = 0; j < n_planted; ++j) out.planted_signs.push_back(j < spec.n_negative ? -1 : 1);
    out.quadratic_factor = n_planted > 0 ? out.planted.back() : 0;

    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> market_shock(T), sector_shock(T * G);
    for (std::size_t t = 0; t < T; ++t) {
        market_shock[t] = normal(market);
        for (std::size_t g = 0; g < G; ++g) sector_shock[t * G + g] = normal(market);
    }

    const double q = n_planted > 0 ? spec.quadratic_weight : 0.0;
    const double norm = n_planted > 0 ? std::sqrt(static_cast<double>(n_planted) + q * q) : 1.0;
    const double drift = spec.signal_strength * spec.signal_scale / static_cast<double>(spec.signal_window);

    // Per stock: factors[t][j], prices[t], sector.
    std::vector<std::vector<double>> factors(n, std::vector<double>(T * m));
    std::vector<std::vector<double>> prices(n, std::vector<double>(T));
    std::vector<std::size_t> sector(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto rng = stream(spec.seed, i);
        sector[i] = i < G ? i : std::uniform_int_distribution<std::size_t>(0, G - 1)(rng);
        double log_p = std::log(10.0) + 0.3 * normal(rng);
        auto& f = factors[i];
        std::vector<double> score(T, 0.0);
        for (std::size_t t = 0; t < T; ++t) {
            for (std::size_t j = 0; j < m; ++j) f[t * m + j] = normal(rng);
            double s = 0.0;
            for (std::size_t j = 0; j < n_planted; ++j) s += out.planted_signs[j] * f[t * m + out.planted[j]];
            if (n_planted > 0) {
                const double x = f[t * m + out.quadratic_factor];
                s += q * (x * x - 1.0) / std::sqrt(2.0);
            }
            score[t] = s / norm;
        }
        for (std::size_t t = 0; t < T; ++t) {
            if (t > 0) {
                // Increment from t-1 to t carries the signal of dates t-2 .. t-1-window.
                double sig = 0.0;
                for (std::size_t h = 2; h <= spec.signal_window + 1 && h <= t; ++h) sig += score[t - h];
                log_p += drift * sig + spec.market_vol * market_shock[t] +
                         spec.sector_vol * sector_shock[t * G + sector[i]] + spec.idio_vol * normal(rng);
            }
            prices[i][t] = std::exp(log_p);
        }
    }

    std::vector<std::size_t> order = spec.stock_order;
    if (order.empty()) {
        order.resize(n);
        std::iota(order.begin(), order.end(), 0);
    }

    auto& panel = out.panel;
    for (std::size_t j = 0; j < m; ++j) {
        panel.factors.push_back({padded("f", j + 1, 2), std::string(kFactorGroups[j % kFactorGroups.size()])});
    }
    Date d = Date::from_ymd(2015, 1, 5);
    for (std::size_t t = 0; t < T; ++t) {
        panel.dates.push_back(d);
        d = d.next_business_day();
        CrossSection cs;
        cs.factors = Matrix(n, m);
        for (std::size_t r = 0; r < n; ++r) {
            const std::size_t i = order[r];
            cs.stock_ids.push_back(padded("S", i + 1, 4));
            cs.prices.push_back(prices[i][t]);
            cs.sectors.push_back(padded("SEC", sector[i] + 1, 2));
            std::copy_n(factors[i].begin() + static_cast<std::ptrdiff_t>(t * m), m, cs.factors.row(r).begin());
        }
        panel.sections.push_back(std::move(cs));
    }
    panel.validate();
    return out;
}

FactorPanel generate_synthetic_market(std::size_t n_stocks, std::size_t n_factors, std::size_t n_days,
                                      std::size_t n_sectors, double signal_strength, std::uint64_t seed) {
    SyntheticSpec spec;
    spec.n_stocks = n_stocks;
    spec.n_factors = n_factors;
    spec.n_days = n_days;
    spec.n_sectors = n_sectors;
    spec.signal_strength = signal_strength;
    spec.seed = seed;
    return generate_synthetic_market(spec).panel;
}

}  // namespace fg
