#include "fg/training/trainer.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "fg/core/errors.hpp"
#include "fg/diffcore/ops.hpp"
#include "fg/training/ic.hpp"
#include "fg/training/losses.hpp"
#include "fg/training/optimizer.hpp"

namespace fg {

using diff::Tape;
using diff::Tensor;

void TrainingConfig::validate() const {
    for (double l : {lambda_s, lambda_f, lambda_e}) {
        if (!(l >= 0.0)) throw ConfigError("training lambdas must be >= 0");
    }
    if (!(theta > 0.0 && theta <= 1.0)) throw ConfigError("training.theta must lie in (0, 1]");
    if (!(learning_rate > 0.0)) throw ConfigError("training.learning_rate must be > 0");
    if (optimizer != "sgd" && optimizer != "adam") throw ConfigError("training.optimizer must be sgd or adam");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("training.momentum must lie in [0, 1)");
    if (!(grad_clip >= 0.0)) throw ConfigError("training.grad_clip must be >= 0");
    if (!(local_step > 0.0 && local_step <= 1.0)) throw ConfigError("training.local_step must lie in (0, 1]");
    if (local_iterations < 1) throw ConfigError("training.local_iterations must be >= 1");
    if (batch_dates < 1) throw ConfigError("training.batch_dates must be >= 1");
    if (max_epochs < 1) throw ConfigError("training.max_epochs must be >= 1");
}

bool BatchDate::labelled() const {
    for (const auto* r : returns)
        if (r) return true;
    return false;
}

BatchDate make_batch_date(const FactorPanel& panel, const GraphSet& graphs, const ForwardReturns& returns,
                          std::size_t t, std::size_t last_usable) {
    BatchDate b;
    b.date_index = t;
    b.raw = &panel.sections.at(t).factors;
    b.industry = graphs.graph(t, Relation::industry).adjacency;
    b.universe = graphs.graph(t, Relation::universe).adjacency;
    for (std::size_t k = 0; k < kNumHorizons; ++k) {
        const int h = kHorizons[k];
        if (t + static_cast<std::size_t>(h) <= last_usable && returns.has(h, t)) b.returns[k] = &returns.at(h, t);
    }
    return b;
}

BatchLoss batch_loss(Tape& tape, const ModelParams& params, const ModelConfig& model, const TrainingConfig& config,
                     std::span<const FactorStage> stages, std::span<const BatchDate> dates,
                     const Directions& directions, const std::array<std::vector<double>, kNumHorizons>& ic_history) {
    if (stages.size() != dates.size()) throw DimensionError("one factor stage per batch date required");
    BatchLoss out;
    std::vector<PortfolioTerm> port_terms;
    std::vector<Tensor> psi, f_all, f_hat_all;
    std::vector<double> psi_dir;
    std::vector<std::vector<Tensor>> ic_series(kNumHorizons);
    for (std::size_t k = 0; k < kNumHorizons; ++k)
        for (double v : ic_history[k]) ic_series[k].push_back(Tensor::scalar(v));

    for (std::size_t i = 0; i < dates.size(); ++i) {
        const DirectionalStage dir = forward_directional(tape, params, model, stages[i], directions);
        for (std::size_t k = 0; k < kNumHorizons; ++k) {
            const Tensor& f = stages[i].deep[k];
            f_all.push_back(f);
            f_hat_all.push_back(dir.estimate[k].f_hat);
            const auto* r = dates[i].returns[k];
            if (!r) continue;
            ++out.n_terms;
            port_terms.push_back({dir.portfolio[k].weights, r});
            PsiTensor p = cross_sectional_fit(tape, f, *r);
            if (config.local_mode == LocalMode::iterative && !p.degenerate) {
                // Iterative value, closed-form gradient.
                const double it = cross_sectional_fit_iterative(f.values(), *r, config.local_step,
                                                                config.local_iterations);
                p.value = diff::add_scalar(tape, p.value, it - p.value.item());
            }
            psi.push_back(p.value);
            psi_dir.push_back(directions.deep[k]);
            IcTensor ic = information_coefficient(tape, f, *r);
            out.ics[k].push_back(ic.value.item());
            ic_series[k].push_back(ic.value);
        }
    }
    if (out.n_terms == 0) throw ValidationError("batch has no labelled (date, horizon) pairs");

    const PortfolioLoss lp = portfolio_loss(tape, port_terms, config.theta);
    const Tensor l_s = stability_loss(tape, ic_series, directions.deep);
    const Tensor l_f = factor_return_loss(tape, psi, psi_dir);
    const Tensor l_e = attention_estimate_loss(tape, f_all, f_hat_all);
    Tensor total = diff::add(tape, lp.l_ret, lp.l_up);
    total = diff::add(tape, total, diff::scale(tape, l_s, config.lambda_s));
    total = diff::add(tape, total, diff::scale(tape, l_f, config.lambda_f));
    total = diff::add(tape, total, diff::scale(tape, l_e, config.lambda_e));

    auto& v = out.values;
    v.l_ret = lp.l_ret.item();
    v.l_up = lp.l_up.item();
    v.l_p = v.l_ret + v.l_up;
    v.l_s = l_s.item();
    v.l_f = l_f.item();
    v.l_e = l_e.item();
    v.total = total.item();
    v.lambda_s = config.lambda_s;
    v.lambda_f = config.lambda_f;
    v.lambda_e = config.lambda_e;
    out.total = total;
    return out;
}

double evaluate_l_ret(const ModelParams& params, const ModelConfig& model, std::span<const BatchDate> dates,
                      const Directions& directions) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& d : dates) {
        if (!d.labelled()) continue;
        Tape off(false);
        const FactorStage stage = forward_factors(off, params, model, *d.raw, d.industry, d.universe);
        const DirectionalStage dir = forward_directional(off, params, model, stage, directions);
        for (std::size_t k = 0; k < kNumHorizons; ++k) {
            const auto* r = d.returns[k];
            if (!r) continue;
            auto w = dir.portfolio[k].weights.values();
            double dot = 0.0;
            for (std::size_t i = 0; i < w.size(); ++i) dot += w[i] * (*r)[i];
            sum -= dot;
            ++count;
        }
    }
    return count ? sum / static_cast<double>(count) : std::numeric_limits<double>::quiet_NaN();
}

namespace {

std::uint64_t fold_seed(std::uint64_t seed, std::size_t fold) {
    return seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(fold);
}

}  // namespace

void check_losses_finite(const LossBreakdown& v, std::size_t epoch) {
    const std::pair<const char*, double> terms[] = {{"l_ret", v.l_ret}, {"l_up", v.l_up}, {"l_s", v.l_s},
                                                    {"l_f", v.l_f},     {"l_e", v.l_e},   {"total", v.total}};
    for (const auto& [name, value] : terms) {
        if (!std::isfinite(value)) {
            throw TrainingError("loss term " + std::string(name) + " is not finite (" + std::to_string(value) +
                                ") at epoch " + std::to_string(epoch));
        }
    }
}

TrainingResult train(const TrainingData& data, const CvSplit& split, const ModelConfig& model,
                     const TrainingConfig& config, const EpochCallback& on_epoch) {
    model.validate();
    config.validate();
    if (data.panel.n_factors() != model.n_factors) {
        throw ConfigError("model expects " + std::to_string(model.n_factors) + " factors, panel has " +
                          std::to_string(data.panel.n_factors()));
    }
    if (split.train_dates.empty()) throw SplitError("fold " + std::to_string(split.fold_index) + " has no training dates");

    std::vector<BatchDate> train_dates, valid_dates;
    for (std::size_t t : split.train_dates)
        train_dates.push_back(make_batch_date(data.panel, data.graphs, data.returns, t, split.train_dates.back()));
    if (!split.valid_dates.empty()) {
        for (std::size_t t : split.valid_dates)
            valid_dates.push_back(make_batch_date(data.panel, data.graphs, data.returns, t, split.valid_dates.back()));
    }

    TrainingResult result;
    ModelParams params = ModelParams::init(model, fold_seed(config.seed, split.fold_index));
    const std::vector<Tensor> tensors = params.tensors();
    auto optimizer = make_optimizer(config.optimizer, config.learning_rate, config.momentum);
    DirectionalBuffer buffer(model.n_factors);

    double best = std::numeric_limits<double>::infinity();
    std::size_t since_best = 0;
    result.params = params.clone();
    result.buffer = buffer;

    std::array<std::vector<double>, kNumHorizons> ic_history;
    // Forward, buffer update, Eq. 12, backward and one optimizer step.
    auto run_batch = [&](std::span<const BatchDate> batch, std::size_t epoch) {
        Tape tape;
        std::vector<FactorStage> stages;
        std::vector<BufferSample> samples;
        for (const auto& d : batch) {
            stages.push_back(forward_factors(tape, params, model, *d.raw, d.industry, d.universe));
            BufferSample s;
            s.raw = d.raw;
            for (std::size_t k = 0; k < kNumHorizons; ++k) {
                s.deep[k] = stages.back().deep[k].to_vector();
                s.returns[k] = d.returns[k];
            }
            samples.push_back(std::move(s));
        }
        update_directional_buffers(buffer, samples);
        BatchLoss bl = batch_loss(tape, params, model, config, stages, batch, buffer.directions(), ic_history);
        check_losses_finite(bl.values, epoch);
        tape.backward(bl.total);
        if (config.grad_clip > 0.0) clip_grad_norm(tensors, config.grad_clip);
        optimizer->step(tensors);
        return bl;
    };

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        buffer.reset();
        for (auto& h : ic_history) h.clear();
        LossBreakdown sum;
        std::size_t n_batches = 0;

        for (std::size_t start = 0; start < train_dates.size(); start += config.batch_dates) {
            const std::size_t end = std::min(start + config.batch_dates, train_dates.size());
            std::span<const BatchDate> batch(train_dates.data() + start, end - start);
            bool any = false;
            for (const auto& d : batch) any = any || d.labelled();
            if (!any) {
                if (epoch == 1) {
                    result.warnings.push_back("skipping empty batch at date index " +
                                              std::to_string(batch.front().date_index));
                }
                continue;
            }

            BatchLoss bl;
            try {
                bl = run_batch(batch, epoch);
            } catch (const NumericError& e) {
                throw TrainingError("forward pass produced non-finite values at epoch " + std::to_string(epoch) +
                                    ": " + e.what());
            }
            for (std::size_t k = 0; k < kNumHorizons; ++k)
                ic_history[k].insert(ic_history[k].end(), bl.ics[k].begin(), bl.ics[k].end());
            sum.l_ret += bl.values.l_ret;
            sum.l_up += bl.values.l_up;
            sum.l_s += bl.values.l_s;
            sum.l_f += bl.values.l_f;
            sum.l_e += bl.values.l_e;
            sum.total += bl.values.total;
            ++n_batches;
        }
        if (n_batches == 0) throw TrainingError("no labelled training dates in fold " + std::to_string(split.fold_index));

        const double nb = static_cast<double>(n_batches);
        EpochLog row{epoch, sum.l_ret / nb, sum.l_up / nb, sum.l_s / nb, sum.l_f / nb, sum.l_e / nb, sum.total / nb,
                     evaluate_l_ret(params, model, valid_dates, buffer.directions())};
        result.log.push_back(row);
        if (on_epoch) on_epoch(row);

        // Without validation labels the training total drives model selection.
        const double score = std::isnan(row.val_l_ret) ? row.total : row.val_l_ret;
        if (score < best) {
            best = score;
            since_best = 0;
            result.params = params.clone();
            result.buffer = buffer;
            result.best_epoch = epoch;
        } else if (config.patience > 0 && ++since_best >= config.patience) {
            break;
        }
    }
    return result;
}

}  // namespace fg
