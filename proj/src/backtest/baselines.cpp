#include "fg/backtest/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "fg/backtest/stratify.hpp"
#include "fg/core/errors.hpp"
#include "fg/diffcore/ops.hpp"
#include "fg/model/params.hpp"
#include "fg/training/ic.hpp"
#include "fg/training/optimizer.hpp"

namespace fg {

using diff::Tape;
using diff::Tensor;

namespace {

bool label_inside(const ForwardReturns& returns, int k, std::size_t t, std::size_t last) {
    return t + static_cast<std::size_t>(k) <= last && returns.has(k, t);
}

// Solves A x = b for symmetric positive semi-definite A with a tiny ridge.
std::vector<double> solve_normal(std::vector<double> a, std::vector<double> b) {
    const std::size_t n = b.size();
    double trace = 0.0;
    for (std::size_t i = 0; i < n; ++i) trace += a[i * n + i];
    const double ridge = 1e-12 * std::max(trace / static_cast<double>(n), 1.0);
    for (std::size_t i = 0; i < n; ++i) a[i * n + i] += ridge;
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t p = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(a[r * n + c]) > std::abs(a[p * n + c])) p = r;
        if (std::abs(a[p * n + c]) < 1e-300) throw NumericError("singular normal equations in linear fit");
        for (std::size_t j = 0; j < n; ++j) std::swap(a[c * n + j], a[p * n + j]);
        std::swap(b[c], b[p]);
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = a[r * n + c] / a[c * n + c];
            for (std::size_t j = c; j < n; ++j) a[r * n + j] -= f * a[c * n + j];
            b[r] -= f * b[c];
        }
    }
    std::vector<double> x(n);
    for (std::size_t c = n; c-- > 0;) {
        double s = b[c];
        for (std::size_t j = c + 1; j < n; ++j) s -= a[c * n + j] * x[j];
        x[c] = s / a[c * n + c];
    }
    return x;
}

}  // namespace

std::vector<ScheduledDate> rebalance_schedule(std::span<const CvSplit> splits, int k) {
    if (k < 1) throw ValidationError("rebalance horizon must be >= 1");
    std::map<std::size_t, std::size_t> owner;
    for (std::size_t f = 0; f < splits.size(); ++f)
        for (std::size_t t : splits[f].test_dates) owner[t] = f;
    std::vector<ScheduledDate> out;
    std::size_t i = 0;
    for (const auto& [t, f] : owner) {
        if (i++ % static_cast<std::size_t>(k) == 0) out.push_back({f, t});
    }
    return out;
}

std::vector<std::size_t> fit_window(const CvSplit& split) {
    std::vector<std::size_t> w = split.train_dates;
    w.insert(w.end(), split.valid_dates.begin(), split.valid_dates.end());
    std::sort(w.begin(), w.end());
    return w;
}

std::vector<std::array<double, kNumHorizons>> mean_factor_ics(const FactorPanel& panel, const ForwardReturns& returns,
                                                              std::span<const std::size_t> window) {
    if (window.empty()) throw ValidationError("selection error: empty fit window");
    const std::size_t m = panel.n_factors();
    const std::size_t last = *std::max_element(window.begin(), window.end());
    std::vector<std::array<double, kNumHorizons>> out(m);
    for (std::size_t k = 0; k < kNumHorizons; ++k) {
        std::vector<double> sum(m, 0.0);
        std::size_t count = 0;
        for (std::size_t t : window) {
            if (!label_inside(returns, kHorizons[k], t, last)) continue;
            const auto& r = returns.at(kHorizons[k], t);
            for (std::size_t j = 0; j < m; ++j) sum[j] += information_coefficient(panel.sections[t].factors.column(j), r).value;
            ++count;
        }
        if (count == 0) {
            throw ValidationError("selection error: no labelled dates for horizon " + std::to_string(kHorizons[k]));
        }
        for (std::size_t j = 0; j < m; ++j) out[j][k] = sum[j] / static_cast<double>(count);
    }
    return out;
}

StepwiseCriterion parse_stepwise(std::string_view s) {
    if (s == "best") return StepwiseCriterion::best;
    if (s == "avg") return StepwiseCriterion::avg;
    if (s == "t20") return StepwiseCriterion::t20;
    throw ValidationError("unknown stepwise criterion '" + std::string(s) + "'");
}

std::vector<std::size_t> stepwise_select(const FactorPanel& panel, const ForwardReturns& returns,
                                         std::span<const std::size_t> window, StepwiseCriterion criterion,
                                         std::optional<std::size_t> q) {
    const std::size_t m = panel.n_factors();
    const std::size_t keep = q ? *q : (m + 2) / 3;
    if (keep < 1 || keep > m) throw ValidationError("stepwise q must lie in [1, m]");
    const auto ics = mean_factor_ics(panel, returns, window);

    auto top = [&](const std::vector<double>& strength) {
        std::vector<std::size_t> order(m);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return strength[a] > strength[b]; });
        order.resize(keep);
        return order;
    };
    std::vector<std::size_t> chosen;
    std::vector<double> strength(m);
    switch (criterion) {
        case StepwiseCriterion::best:
            for (std::size_t k = 0; k < kNumHorizons; ++k) {
                for (std::size_t j = 0; j < m; ++j) strength[j] = std::abs(ics[j][k]);
                for (std::size_t j : top(strength)) chosen.push_back(j);
            }
            break;
        case StepwiseCriterion::avg:
            for (std::size_t j = 0; j < m; ++j) {
                double s = 0.0;
                for (std::size_t k = 0; k < kNumHorizons; ++k) s += ics[j][k];
                strength[j] = std::abs(s / static_cast<double>(kNumHorizons));
            }
            chosen = top(strength);
            break;
        case StepwiseCriterion::t20:
            for (std::size_t j = 0; j < m; ++j) strength[j] = std::abs(ics[j][horizon_index(20)]);
            chosen = top(strength);
            break;
    }
    std::sort(chosen.begin(), chosen.end());
    chosen.erase(std::unique(chosen.begin(), chosen.end()), chosen.end());
    return chosen;
}

std::vector<double> LinearModel::score(const Matrix& raw) const {
    std::vector<double> s(raw.rows, beta.at(0));
    for (std::size_t i = 0; i < raw.rows; ++i)
        for (std::size_t j = 0; j < factors.size(); ++j) s[i] += beta[j + 1] * raw(i, factors[j]);
    return s;
}

LinearModel fit_linear_model(const FactorPanel& panel, const ForwardReturns& returns,
                             std::span<const std::size_t> window, int k, std::vector<std::size_t> factors) {
    if (window.empty()) throw ValidationError("linear fit needs a non-empty window");
    if (factors.empty()) {
        factors.resize(panel.n_factors());
        std::iota(factors.begin(), factors.end(), 0);
    }
    const std::size_t p = factors.size() + 1;
    const std::size_t last = *std::max_element(window.begin(), window.end());
    std::vector<double> xtx(p * p, 0.0), xty(p, 0.0), x(p);
    std::size_t rows = 0;
    for (std::size_t t : window) {
        if (!label_inside(returns, k, t, last)) continue;
        const auto& cs = panel.sections[t];
        const auto& r = returns.at(k, t);
        for (std::size_t i = 0; i < cs.size(); ++i) {
            x[0] = 1.0;
            for (std::size_t j = 0; j < factors.size(); ++j) x[j + 1] = cs.factors(i, factors[j]);
            for (std::size_t a = 0; a < p; ++a) {
                xty[a] += x[a] * r[i];
                for (std::size_t b = 0; b < p; ++b) xtx[a * p + b] += x[a] * x[b];
            }
            ++rows;
        }
    }
    if (rows < p) throw ValidationError("linear fit has fewer labelled rows than coefficients");
    return {std::move(factors), solve_normal(std::move(xtx), std::move(xty))};
}

BaselineKind parse_baseline(std::string_view s) {
    if (s == "linear") return BaselineKind::linear;
    if (s == "ew") return BaselineKind::ew;
    if (s == "mlp") return BaselineKind::mlp;
    if (s == "s_best") return BaselineKind::s_best;
    if (s == "s_avg") return BaselineKind::s_avg;
    if (s == "s_t20") return BaselineKind::s_t20;
    throw ValidationError("unknown baseline '" + std::string(s) + "'");
}

std::string baseline_name(BaselineKind kind) {
    switch (kind) {
        case BaselineKind::linear: return "Linear";
        case BaselineKind::ew: return "EW";
        case BaselineKind::mlp: return "MLP";
        case BaselineKind::s_best: return "S-Best";
        case BaselineKind::s_avg: return "S-Avg";
        case BaselineKind::s_t20: return "S-T20";
    }
    return "?";
}

void BaselineConfig::validate() const {
    if (n_groups < 2) throw ConfigError("evaluation.n_groups must be >= 2");
    if (stepwise_q && *stepwise_q < 1) throw ConfigError("baselines.stepwise_q must be >= 1");
    if (mlp_hidden < 1 || mlp_context < 1) throw ConfigError("baselines.mlp hidden widths must be >= 1");
    if (mlp_epochs < 1) throw ConfigError("baselines.mlp_epochs must be >= 1");
    if (!(mlp_learning_rate > 0.0)) throw ConfigError("baselines.mlp_learning_rate must be > 0");
}

struct MlpScorer::Impl {
    Dense hidden, context, head;

    Tensor forward(Tape& tape, const Matrix& raw) const {
        Tensor z = diff::crosssec_norm(tape, Tensor::from(raw));
        Tensor h = diff::leaky_relu(tape, hidden.apply(tape, z));
        Tensor c = diff::leaky_relu(tape, context.apply(tape, h));
        return head.apply(tape, c);
    }
};

std::vector<double> MlpScorer::score(const Matrix& raw) const {
    Tape off(false);
    return impl->forward(off, raw).to_vector();
}

MlpScorer fit_mlp_baseline(const FactorPanel& panel, const ForwardReturns& returns,
                           std::span<const std::size_t> window, int k, const BaselineConfig& config) {
    config.validate();
    if (window.empty()) throw ValidationError("mlp fit needs a non-empty window");
    std::mt19937_64 rng(config.seed);
    auto impl = std::make_shared<MlpScorer::Impl>();
    const std::size_t m = panel.n_factors();
    impl->hidden = Dense::init(m, config.mlp_hidden, rng);
    impl->context = Dense::init(config.mlp_hidden, config.mlp_context, rng);
    impl->head = Dense::init(config.mlp_context, 1, rng);
    const std::vector<Tensor> params{impl->hidden.w, impl->hidden.b, impl->context.w,
                                     impl->context.b, impl->head.w,   impl->head.b};

    const std::size_t last = *std::max_element(window.begin(), window.end());
    std::vector<std::pair<std::size_t, std::vector<double>>> targets;
    for (std::size_t t : window) {
        if (!label_inside(returns, k, t, last)) continue;
        std::vector<double> z = returns.at(k, t);
        const double n = static_cast<double>(z.size());
        const double mean = std::accumulate(z.begin(), z.end(), 0.0) / n;
        double ss = 0.0;
        for (double v : z) ss += (v - mean) * (v - mean);
        const double sd = std::sqrt(ss / n);
        if (sd < 1e-12) continue;
        for (auto& v : z) v = (v - mean) / sd;
        targets.emplace_back(t, std::move(z));
    }
    if (targets.empty()) throw ValidationError("mlp fit window has no labelled dates");

    Adam opt(config.mlp_learning_rate);
    constexpr std::size_t kBatch = 8;
    for (std::size_t epoch = 0; epoch < config.mlp_epochs; ++epoch) {
        for (std::size_t start = 0; start < targets.size(); start += kBatch) {
            Tape tape;
            std::vector<Tensor> losses;
            for (std::size_t i = start; i < std::min(start + kBatch, targets.size()); ++i) {
                Tensor pred = impl->forward(tape, panel.sections[targets[i].first].factors);
                Tensor diffs = diff::sub(tape, pred, Tensor::column(targets[i].second));
                losses.push_back(diff::mean(tape, diff::square(tape, diffs)));
            }
            tape.backward(diff::mean(tape, diff::concat_cols(tape, losses)));
            opt.step(params);
        }
    }
    return MlpScorer{impl};
}

std::vector<WeightSnapshot> baseline_weights(BaselineKind kind, const FactorPanel& panel,
                                             const ForwardReturns& returns, std::span<const CvSplit> splits,
                                             std::span<const ScheduledDate> schedule, int k,
                                             const BaselineConfig& config) {
    config.validate();
    std::vector<WeightSnapshot> out;
    std::size_t fitted_fold = splits.size();
    LinearModel linear;
    MlpScorer mlp;
    for (const auto& sd : schedule) {
        const auto& cs = panel.sections.at(sd.date_index);
        if (kind != BaselineKind::ew && sd.fold != fitted_fold) {
            const auto window = fit_window(splits[sd.fold]);
            switch (kind) {
                case BaselineKind::linear: linear = fit_linear_model(panel, returns, window, k); break;
                case BaselineKind::mlp: mlp = fit_mlp_baseline(panel, returns, window, k, config); break;
                case BaselineKind::s_best:
                case BaselineKind::s_avg:
                case BaselineKind::s_t20: {
                    const auto crit = kind == BaselineKind::s_best  ? StepwiseCriterion::best
                                      : kind == BaselineKind::s_avg ? StepwiseCriterion::avg
                                                                    : StepwiseCriterion::t20;
                    linear = fit_linear_model(panel, returns, window, k,
                                              stepwise_select(panel, returns, window, crit, config.stepwise_q));
                    break;
                }
                case BaselineKind::ew: break;
            }
            fitted_fold = sd.fold;
        }
        WeightSnapshot snap{sd.date_index, cs.stock_ids, {}};
        if (kind == BaselineKind::ew) {
            snap.weights.assign(cs.size(), 1.0 / static_cast<double>(cs.size()));
        } else {
            const auto score = kind == BaselineKind::mlp ? mlp.score(cs.factors) : linear.score(cs.factors);
            snap.weights = adhoc_portfolio(score, cs.stock_ids, 1.0, config.n_groups);
        }
        out.push_back(std::move(snap));
    }
    return out;
}

BacktestReport baseline_models(BaselineKind kind, const FactorPanel& panel, const ForwardReturns& returns,
                               std::span<const CvSplit> splits, int k, const BaselineConfig& config) {
    const auto schedule = rebalance_schedule(splits, k);
    const auto weights = baseline_weights(kind, panel, returns, splits, schedule, k, config);
    return run_backtest(weights, panel, returns, k, baseline_name(kind));
}

}  // namespace fg
