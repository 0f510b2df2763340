#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "doctest.h"
#include "fg/backtest/analysis.hpp"
#include "fg/backtest/baselines.hpp"
#include "fg/backtest/engine.hpp"
#include "fg/backtest/strategies.hpp"
#include "fg/backtest/stratify.hpp"
#include "fg/core/errors.hpp"
#include "fg/model/params.hpp"

using namespace fg;

namespace {

std::vector<std::string> make_ids(std::size_t n) {
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "S%03zu", i);
        ids.push_back(buf);
    }
    return ids;
}

// Panel of gaussian factors; prices are irrelevant because tests set returns directly.
FactorPanel random_panel(std::size_t n, std::size_t m, std::size_t T, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    FactorPanel p;
    for (std::size_t j = 0; j < m; ++j) p.factors.push_back({"f" + std::to_string(j), "f" + std::to_string(j)});
    Date d = Date::from_ymd(2020, 1, 6);
    for (std::size_t t = 0; t < T; ++t) {
        p.dates.push_back(d);
        d = d.next_business_day();
        CrossSection cs;
        cs.stock_ids = make_ids(n);
        cs.factors = Matrix(n, m);
        for (auto& v : cs.factors.data) v = g(rng);
        cs.prices.assign(n, 10.0);
        cs.sectors.assign(n, "A");
        p.sections.push_back(std::move(cs));
    }
    p.validate();
    return p;
}

std::vector<double> normals(std::mt19937_64& rng, std::size_t n) {
    std::normal_distribution<double> g;
    std::vector<double> v(n);
    for (auto& x : v) x = g(rng);
    return v;
}

WeightSnapshot snap(std::size_t t, std::vector<std::string> ids, std::vector<double> w) {
    return {t, std::move(ids), std::move(w)};
}

std::vector<double> column(const Matrix& m, std::size_t j) {
    std::vector<double> c(m.rows);
    for (std::size_t i = 0; i < m.rows; ++i) c[i] = m(i, j);
    return c;
}

}  // namespace

TEST_CASE("stratify: one stock per group, remainder rule, ties by id") {
    const auto ids10 = make_ids(10);
    std::vector<double> f{0.3, 0.9, -1.0, 0.1, 0.5, 0.2, 0.0, -0.5, 0.7, 0.4};
    const auto g = stratify_decile(f, ids10);
    CHECK(g[1] == 0);  // max exposure
    CHECK(g[2] == 9);
    std::vector<std::size_t> sorted = g;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < 10; ++i) CHECK(sorted[i] == i);

    const auto ids12 = make_ids(12);
    std::vector<double> f12(12);
    std::iota(f12.begin(), f12.end(), 0.0);
    const auto g12 = stratify_decile(f12, ids12);
    std::vector<std::size_t> sizes(10, 0);
    for (auto x : g12) ++sizes[x];
    CHECK(sizes == std::vector<std::size_t>{2, 2, 1, 1, 1, 1, 1, 1, 1, 1});

    // Equal exposures: grouping follows id order regardless of row order.
    std::vector<std::string> shuffled{"S004", "S001", "S009", "S000", "S007", "S002", "S005", "S008", "S003", "S006"};
    const auto ge = stratify_decile(std::vector<double>(10, 1.0), shuffled);
    for (std::size_t i = 0; i < 10; ++i) CHECK(ge[i] == static_cast<std::size_t>(shuffled[i][3] - '0'));

    CHECK_THROWS_AS(stratify_decile(std::vector<double>(9, 0.0), make_ids(9)), ValidationError);
}

TEST_CASE("stratify: every stock lands in exactly one group") {
    std::mt19937_64 rng(3);
    for (std::size_t n : {10, 11, 37, 100, 101}) {
        const auto g = stratify_decile(normals(rng, n), make_ids(n));
        REQUIRE(g.size() == n);
        std::vector<std::size_t> sizes(10, 0);
        for (auto x : g) {
            REQUIRE(x < 10);
            ++sizes[x];
        }
        CHECK(std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}) == n);
        CHECK(*std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()) <= 1);
    }
}

TEST_CASE("adhoc portfolio: top stock, direction flip, sums to one") {
    const auto ids = make_ids(10);
    std::vector<double> f{0.3, 0.9, -1.0, 0.1, 0.5, 0.2, 0.0, -0.5, 0.7, 0.4};
    const auto up = adhoc_portfolio(f, ids, 1.0);
    CHECK(up[1] == 1.0);
    CHECK(std::accumulate(up.begin(), up.end(), 0.0) == 1.0);
    const auto down = adhoc_portfolio(f, ids, -1.0);
    CHECK(down[2] == 1.0);
    CHECK(std::count(down.begin(), down.end(), 0.0) == 9);

    std::mt19937_64 rng(5);
    for (std::size_t n : {20, 30, 100}) {
        const auto w = adhoc_portfolio(normals(rng, n), make_ids(n), 1.0);
        const double held = static_cast<double>(std::count_if(w.begin(), w.end(), [](double x) { return x > 0; }));
        CHECK(std::accumulate(w.begin(), w.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-15));
        for (double x : w) CHECK((x == 0.0 || x == 1.0 / held));
    }
}

TEST_CASE("max drawdown examples") {
    const std::vector<double> swing{0.10, -0.10};
    CHECK(max_drawdown(swing) == doctest::Approx((1.10 - 0.99) / 1.10).epsilon(1e-14));
    CHECK(max_drawdown(std::vector<double>(20, 0.01)) == 0.0);
    CHECK(max_drawdown(std::vector<double>{0.0, 0.0}) == 0.0);
    // Single peak, then down to the end.
    const std::vector<double> peak_then_fall{0.05, 0.05, -0.02, -0.03, -0.04};
    double w = 1.0, peak = 1.0;
    for (double a : peak_then_fall) {
        w *= 1.0 + a;
        peak = std::max(peak, w);
    }
    CHECK(max_drawdown(peak_then_fall) == doctest::Approx((peak - w) / peak).epsilon(1e-14));
    CHECK(max_drawdown(std::vector<double>{-1.5, 0.1}) <= 1.0);
}

TEST_CASE("metrics examples") {
    const auto ids = make_ids(2);
    std::vector<WeightSnapshot> sw{snap(0, ids, {1.0, 0.0}), snap(1, ids, {0.0, 1.0})};
    auto m = compute_metrics(std::vector<double>{0.01, -0.01}, sw, 50.4);
    CHECK(m.ir == 0.0);
    CHECK(m.alpha == doctest::Approx(0.0).epsilon(1e-18));
    CHECK(m.tt == 2.0);
    CHECK(m.n_avg == 1.0);

    const auto ids10 = make_ids(10);
    std::vector<double> five(10, 0.0);
    std::fill(five.begin(), five.begin() + 5, 0.2);
    std::vector<double> other(10, 0.0);
    std::fill(other.begin() + 5, other.end(), 0.2);
    std::vector<WeightSnapshot> s5{snap(0, ids10, five), snap(1, ids10, other), snap(2, ids10, five)};
    m = compute_metrics(std::vector<double>{0.01, 0.02, 0.03}, s5, 50.4);
    CHECK(m.n_avg == 5.0);
    CHECK(m.tt == doctest::Approx(2.0));
    CHECK(m.alpha == doctest::Approx(0.02 * 50.4));
    CHECK(m.ir == doctest::Approx(0.02 / 0.01 * std::sqrt(50.4)));
    CHECK(m.md == 0.0);

    CHECK_THROWS_AS(compute_metrics(std::vector<double>{0.01}, s5, 50.4), ValidationError);
}

TEST_CASE("run backtest: benchmark identity, missing labels, permutation invariance") {
    std::mt19937_64 rng(7);
    const std::size_t n = 20, T = 30;
    const int k = 5;
    FactorPanel panel = random_panel(n, 2, T, rng);
    ForwardReturns fr;
    for (std::size_t t = 0; t + k < T; ++t) fr.set(k, t, normals(rng, n));

    std::vector<WeightSnapshot> ew, top;
    for (std::size_t t = 0; t < T; t += k) {
        ew.push_back(snap(t, panel.sections[t].stock_ids, std::vector<double>(n, 1.0 / n)));
        top.push_back(snap(t, panel.sections[t].stock_ids,
                           adhoc_portfolio(column(panel.sections[t].factors, 0), panel.sections[t].stock_ids, 1.0)));
    }
    const auto rep = run_backtest(ew, panel, fr, k, "EW");
    for (double a : rep.active_returns) CHECK(a == 0.0);
    CHECK(rep.metrics.alpha == 0.0);
    CHECK(rep.metrics.md == 0.0);
    CHECK(rep.metrics.ir == 0.0);
    // Date 25 has no label.
    CHECK(rep.active_returns.size() == 5);
    CHECK(rep.warnings.size() == 1);
    CHECK(rep.metrics.n_avg == 20.0);

    const auto a = run_backtest(top, panel, fr, k, "top");
    const auto b = run_backtest(top, panel, fr, k, "top");
    CHECK(a.active_returns == b.active_returns);
    CHECK(a.active_returns.size() == rep.active_returns.size());
    CHECK(a.metrics.md >= 0.0);
    CHECK(a.metrics.md <= 1.0);
    CHECK(a.metrics.n_avg >= 1.0);

    // Reverse the row order of every cross-section, with labels and weights.
    FactorPanel rev = panel;
    ForwardReturns rfr;
    std::vector<WeightSnapshot> rtop = top;
    for (std::size_t t = 0; t < T; ++t) {
        auto& cs = rev.sections[t];
        std::reverse(cs.stock_ids.begin(), cs.stock_ids.end());
        if (fr.has(k, t)) {
            auto r = fr.at(k, t);
            std::reverse(r.begin(), r.end());
            rfr.set(k, t, r);
        }
    }
    for (auto& s : rtop) {
        std::reverse(s.stock_ids.begin(), s.stock_ids.end());
        std::reverse(s.weights.begin(), s.weights.end());
    }
    const auto c = run_backtest(rtop, rev, rfr, k, "top");
    CHECK(c.active_returns == a.active_returns);
    CHECK(c.metrics.alpha == a.metrics.alpha);
    CHECK(c.metrics.ir == a.metrics.ir);
    CHECK(c.metrics.tt == a.metrics.tt);
}

TEST_CASE("oracle factor: top decile has the highest alpha") {
    std::mt19937_64 rng(11);
    const std::size_t n = 50, T = 200;
    const int k = 5;
    FactorPanel panel = random_panel(n, 1, T, rng);
    ForwardReturns fr;
    for (std::size_t t = 0; t + k < T; ++t) fr.set(k, t, normals(rng, n));

    std::vector<double> alphas;
    for (std::size_t g = 0; g < 10; ++g) {
        std::vector<WeightSnapshot> w;
        for (std::size_t t = 0; t + k < T; t += k) {
            const auto& r = fr.at(k, t);
            const auto grp = stratify_decile(r, panel.sections[t].stock_ids);
            std::vector<double> x(n, 0.0);
            for (std::size_t i = 0; i < n; ++i)
                if (grp[i] == g) x[i] = 1.0 / 5.0;
            w.push_back(snap(t, panel.sections[t].stock_ids, x));
        }
        alphas.push_back(run_backtest(w, panel, fr, k).metrics.alpha);
    }
    for (std::size_t g = 1; g < 10; ++g) CHECK(alphas[0] >= alphas[g]);

    std::vector<DatedScore> oracle;
    for (std::size_t t = 0; t + k < T; ++t) oracle.push_back({t, fr.at(k, t)});
    const auto rep = monotonicity_report(oracle, panel, fr, k);
    CHECK(rep.spearman == 1.0);
    CHECK(rep.decile_mean.size() == 10);
    CHECK(rep.n_dates == oracle.size());
}

TEST_CASE("spearman: average ranks and constant input") {
    CHECK(spearman(std::vector<double>{1, 2, 3, 4}, std::vector<double>{10, 20, 30, 40}) == doctest::Approx(1.0));
    CHECK(spearman(std::vector<double>{1, 2, 3, 4}, std::vector<double>{4, 3, 2, 1}) == doctest::Approx(-1.0));
    CHECK(spearman(std::vector<double>{1, 2, 3}, std::vector<double>{5, 5, 5}) == 0.0);
    // Pearson of ranks [1,2,3,4] and [1.5,1.5,3,4].
    CHECK(spearman(std::vector<double>{1, 2, 3, 4}, std::vector<double>{7, 7, 8, 9}) ==
          doctest::Approx(0.9486832980505138));
}

TEST_CASE("monotonicity under the null: |spearman| < 0.6 with probability >= 0.95") {
    // Decile means of an independent factor are exchangeable, so the report's
    // Spearman follows the permutation distribution of rank correlation on 10 points.
    std::mt19937_64 rng(2024);
    const std::size_t n = 100, T = 200, trials = 400;
    const int k = 5;
    FactorPanel panel = random_panel(n, 1, T + k, rng);
    std::size_t small = 0;
    for (std::size_t trial = 0; trial < trials; ++trial) {
        ForwardReturns fr;
        std::vector<DatedScore> scores;
        for (std::size_t t = 0; t < T; ++t) {
            fr.set(k, t, normals(rng, n));
            scores.push_back({t, normals(rng, n)});
        }
        if (std::abs(monotonicity_report(scores, panel, fr, k).spearman) < 0.6) ++small;
    }
    const double rate = static_cast<double>(small) / static_cast<double>(trials);
    MESSAGE("null rate of |spearman| < 0.6: " << rate);
    CHECK(rate >= 0.95);
}

TEST_CASE("attention estimate of an exactly linear deep factor gives the same deciles") {
    std::mt19937_64 rng(13);
    const std::size_t n = 60, m = 4;
    Matrix raw(n, m);
    for (auto& v : raw.data) v = normals(rng, 1)[0];
    const std::vector<double> a{0.4, 0.3, 0.2, 0.1};
    const std::vector<double> d{1.0, -1.0, 1.0, -1.0};
    // Deep factor F (a o d).
    std::vector<double> deep(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) deep[i] += raw(i, j) * a[j] * d[j];
    // Attention map whose every row equals a: zero weights, leaky(b) = log a.
    const double slope = 0.01;
    Dense map = Dense::init(m, m, rng);
    std::fill(map.w.mutable_values().begin(), map.w.mutable_values().end(), 0.0);
    for (std::size_t j = 0; j < m; ++j) map.b.mutable_values()[j] = std::log(a[j]) / slope;
    diff::Tape off(false);
    const auto est = directional_attention_estimate(off, diff::Tensor::from(raw), d, map, slope);
    const auto approx = est.f_hat.to_vector();
    for (std::size_t i = 0; i < n; ++i) CHECK(approx[i] == doctest::Approx(deep[i]).epsilon(1e-12));
    const auto ids = make_ids(n);
    CHECK(stratify_decile(approx, ids) == stratify_decile(deep, ids));
}

TEST_CASE("heatmap: single factor equals its direction, one row per bucket, group means") {
    std::mt19937_64 rng(17);
    const std::size_t T = 300;
    FactorPanel panel = random_panel(8, 1, T, rng);
    GraphSet graphs(panel);
    ModelConfig mc;
    mc.n_factors = 1;
    const auto params = ModelParams::init(mc, 3);
    Directions dirs = Directions::positive(1);
    dirs.factor[0] = -1.0;
    std::vector<std::size_t> dates(T);
    std::iota(dates.begin(), dates.end(), 0);
    const auto evals = evaluate_fold(panel, graphs, mc, params, dirs, dates);
    const auto s = assemble_e2e(evals, panel, 5, 4);
    const auto h = attention_heatmap(s.attention, panel, 126);
    REQUIRE(h.groups.size() == 1);
    CHECK(h.rows.size() == 3);
    for (const auto& row : h.rows) CHECK(row.values[0] == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(h.rows[0].bucket_start == panel.dates[0].iso());
    CHECK(h.rows[2].bucket_end == panel.dates[T - 1].iso());

    // Two groups: mean of member columns, then mean over dates.
    FactorPanel p3 = random_panel(4, 3, 4, rng);
    p3.factors[0].group = "Value";
    p3.factors[1].group = "Momentum";
    p3.factors[2].group = "Value";
    std::vector<SignedAttention> att{{0, {0.2, 0.5, 0.4}}, {1, {-0.2, 0.1, 0.0}}, {2, {0.6, 0.3, 0.2}}};
    const auto h3 = attention_heatmap(att, p3, 2);
    REQUIRE(h3.groups == std::vector<std::string>{"Value", "Momentum"});
    REQUIRE(h3.rows.size() == 2);
    CHECK(h3.rows[0].values[0] == doctest::Approx((0.3 + -0.1) / 2));
    CHECK(h3.rows[0].values[1] == doctest::Approx((0.5 + 0.1) / 2));
    CHECK(h3.rows[1].values[0] == doctest::Approx(0.4));
    CHECK_THROWS_AS(attention_heatmap(att, p3, 0), ValidationError);
}

TEST_CASE("schedule and fit window") {
    CvSplit a{1, {0, 1, 2}, {3}, {4, 5, 6, 7}};
    CvSplit b{2, {0, 1, 2, 3}, {4, 5}, {6, 7, 8, 9}};
    std::vector<CvSplit> splits{a, b};
    const auto s = rebalance_schedule(splits, 2);
    REQUIRE(s.size() == 3);
    CHECK(s[0].date_index == 4);
    CHECK(s[0].fold == 0);
    CHECK(s[1].date_index == 6);
    CHECK(s[1].fold == 1);  // shared date goes to the later fold
    CHECK(s[2].date_index == 8);
    CHECK(fit_window(b) == std::vector<std::size_t>{0, 1, 2, 3, 4, 5});
    const auto owned = owned_test_dates(splits);
    CHECK(owned[0] == std::vector<std::size_t>{4, 5});
    CHECK(owned[1] == std::vector<std::size_t>{6, 7, 8, 9});
    CHECK_THROWS_AS(rebalance_schedule(splits, 0), ValidationError);
}

namespace {

// Returns at horizon h are (factor signal for h) + small noise.
ForwardReturns planted_returns(const FactorPanel& panel, std::mt19937_64& rng,
                               const std::array<std::size_t, kNumHorizons>& driver, double noise) {
    ForwardReturns fr;
    for (std::size_t h = 0; h < kNumHorizons; ++h) {
        for (std::size_t t = 0; t < panel.n_dates(); ++t) {
            const auto& cs = panel.sections[t];
            auto r = normals(rng, cs.size());
            for (std::size_t i = 0; i < cs.size(); ++i) r[i] = cs.factors(i, driver[h]) + noise * r[i];
            fr.set(kHorizons[h], t, r);
        }
    }
    return fr;
}

}  // namespace

TEST_CASE("stepwise selection") {
    std::mt19937_64 rng(19);
    FactorPanel panel = random_panel(40, 6, 80, rng);
    std::vector<std::size_t> window(60);
    std::iota(window.begin(), window.end(), 0);

    const auto dominant = planted_returns(panel, rng, {2, 2, 2, 2, 2}, 0.5);
    for (auto c : {StepwiseCriterion::best, StepwiseCriterion::avg, StepwiseCriterion::t20})
        CHECK(stepwise_select(panel, dominant, window, c, 1) == std::vector<std::size_t>{2});

    const auto split = planted_returns(panel, rng, {0, 0, 0, 0, 4}, 0.5);
    CHECK(stepwise_select(panel, split, window, StepwiseCriterion::t20, 1) == std::vector<std::size_t>{4});
    CHECK(stepwise_select(panel, split, window, StepwiseCriterion::avg, 1) == std::vector<std::size_t>{0});
    CHECK(stepwise_select(panel, split, window, StepwiseCriterion::best, 1) == std::vector<std::size_t>{0, 4});

    const std::vector<std::size_t> everything{0, 1, 2, 3, 4, 5};
    for (auto c : {StepwiseCriterion::best, StepwiseCriterion::avg, StepwiseCriterion::t20})
        CHECK(stepwise_select(panel, split, window, c, 6) == everything);
    // Default q = ceil(6 / 3).
    CHECK(stepwise_select(panel, split, window, StepwiseCriterion::avg).size() == 2);

    CHECK_THROWS_AS(stepwise_select(panel, split, std::vector<std::size_t>{}, StepwiseCriterion::avg),
                    ValidationError);
    CHECK_THROWS_AS(stepwise_select(panel, split, window, StepwiseCriterion::avg, 7), ValidationError);
    CHECK(parse_stepwise("t20") == StepwiseCriterion::t20);
    CHECK_THROWS_AS(parse_stepwise("worst"), ValidationError);
}

TEST_CASE("mean factor ICs respect the window end") {
    std::mt19937_64 rng(23);
    FactorPanel panel = random_panel(30, 2, 40, rng);
    const auto fr = planted_returns(panel, rng, {0, 0, 0, 0, 0}, 0.0);
    std::vector<std::size_t> window(30);
    std::iota(window.begin(), window.end(), 0);
    const auto ics = mean_factor_ics(panel, fr, window);
    for (std::size_t h = 0; h < kNumHorizons; ++h) CHECK(ics[0][h] == doctest::Approx(1.0));
    // A window shorter than the longest horizon has no usable k = 20 label.
    std::vector<std::size_t> short_window(10);
    std::iota(short_window.begin(), short_window.end(), 0);
    CHECK_THROWS_AS(mean_factor_ics(panel, fr, short_window), ValidationError);
}

TEST_CASE("linear baseline on noiseless returns recovers the true ordering") {
    std::mt19937_64 rng(29);
    const std::size_t n = 50, m = 3, T = 120;
    const int k = 5;
    FactorPanel panel = random_panel(n, m, T, rng);
    const std::vector<double> beta{0.01, 0.5, -0.3, 0.2};
    ForwardReturns fr;
    for (std::size_t t = 0; t + k < T; ++t) {
        std::vector<double> r(n, beta[0]);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j) r[i] += beta[j + 1] * panel.sections[t].factors(i, j);
        fr.set(k, t, r);
    }
    std::vector<std::size_t> window(80);
    std::iota(window.begin(), window.end(), 0);
    const auto lm = fit_linear_model(panel, fr, window, k);
    REQUIRE(lm.beta.size() == 4);
    for (std::size_t j = 0; j < 4; ++j) CHECK(lm.beta[j] == doctest::Approx(beta[j]).epsilon(1e-9));

    std::vector<DatedScore> scores;
    for (std::size_t t = 80; t + k < T; ++t) scores.push_back({t, lm.score(panel.sections[t].factors)});
    CHECK(monotonicity_report(scores, panel, fr, k).spearman == 1.0);

    const auto sub = fit_linear_model(panel, fr, window, k, {1});
    CHECK(sub.factors == std::vector<std::size_t>{1});
    CHECK(sub.beta.size() == 2);
}

TEST_CASE("baseline reports: EW is zero active, kinds parse, MLP validation") {
    std::mt19937_64 rng(31);
    FactorPanel panel = random_panel(30, 3, 90, rng);
    const auto fr = planted_returns(panel, rng, {1, 1, 1, 1, 1}, 1.0);
    CvSplit split{1, {}, {}, {}};
    for (std::size_t t = 0; t < 50; ++t) split.train_dates.push_back(t);
    for (std::size_t t = 50; t < 60; ++t) split.valid_dates.push_back(t);
    for (std::size_t t = 60; t < 90; ++t) split.test_dates.push_back(t);
    std::vector<CvSplit> splits{split};
    BaselineConfig bc;
    bc.mlp_hidden = 8;
    bc.mlp_context = 4;
    bc.mlp_epochs = 3;

    const auto ew = baseline_models(BaselineKind::ew, panel, fr, splits, 5, bc);
    CHECK(ew.strategy == "EW");
    CHECK(ew.metrics.alpha == 0.0);
    for (double a : ew.active_returns) CHECK(a == 0.0);

    const auto lin = baseline_models(BaselineKind::linear, panel, fr, splits, 5, bc);
    const auto sb = baseline_models(BaselineKind::s_best, panel, fr, splits, 5, bc);
    const auto mlp = baseline_models(BaselineKind::mlp, panel, fr, splits, 5, bc);
    const auto mlp2 = baseline_models(BaselineKind::mlp, panel, fr, splits, 5, bc);
    CHECK(lin.active_returns.size() == ew.active_returns.size());
    CHECK(sb.active_returns.size() == ew.active_returns.size());
    CHECK(mlp.active_returns == mlp2.active_returns);
    CHECK(lin.metrics.alpha > 0.0);  // factor 1 drives returns
    for (const auto& w : lin.weights) CHECK(std::count_if(w.weights.begin(), w.weights.end(), [](double x) {
                                                return x > 0;
                                            }) == 3);

    CHECK(parse_baseline("s_avg") == BaselineKind::s_avg);
    CHECK(baseline_name(parse_baseline("ew")) == "EW");
    CHECK(baseline_name(BaselineKind::s_t20) == "S-T20");
    CHECK_THROWS_AS(parse_baseline("ridge"), ValidationError);

    BaselineConfig zero;
    zero.mlp_hidden = 0;
    CHECK_THROWS_AS(zero.validate(), ConfigError);
    CHECK_THROWS_AS(fit_mlp_baseline(panel, fr, split.train_dates, 5, zero), ConfigError);
}

TEST_CASE("assemble e2e: rebalance cadence and deep-factor direction") {
    std::mt19937_64 rng(37);
    FactorPanel panel = random_panel(10, 2, 12, rng);
    std::vector<DateEvaluation> evals;
    for (std::size_t t = 0; t < 12; ++t) {
        DateEvaluation e;
        e.date_index = t;
        for (std::size_t h = 0; h < kNumHorizons; ++h) {
            e.weights[h].assign(10, 0.1);
            e.deep[h] = {9, 8, 7, 6, 5, 4, 3, 2, 1, 0};
            e.approx[h] = e.deep[h];
            e.signed_attention[h] = {0.5, -0.5};
            e.deep_direction[h] = -1.0;
        }
        evals.push_back(e);
    }
    const auto s = assemble_e2e(evals, panel, 5);
    REQUIRE(s.automatic.size() == 3);
    CHECK(s.automatic[1].date_index == 5);
    CHECK(s.deep_scores.size() == 12);
    CHECK(s.deep_decile[0].weights[9] == 1.0);  // direction -1 holds the lowest exposure
    CHECK(s.approx_decile[0].weights == s.deep_decile[0].weights);
    CHECK(s.deep_scores[0].values[0] == -9.0);
    CHECK(rebalance_scores(s.deep_scores, 5).size() == 3);
    std::swap(evals[0], evals[1]);
    CHECK_THROWS_AS(assemble_e2e(evals, panel, 5), ValidationError);
    CHECK_THROWS_AS(assemble_e2e(evals, panel, 4), ValidationError);
}
