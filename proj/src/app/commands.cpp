#include "fg/app/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>

#include "fg/backtest/analysis.hpp"
#include "fg/core/csv.hpp"
#include "fg/core/errors.hpp"
#include "fg/marketdata/csv_io.hpp"
#include "fg/model/checkpoint.hpp"

namespace fg {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string padded(const char* prefix, std::size_t v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%02zu", prefix, v);
    return buf;
}

std::string fold_dir(std::size_t fold) { return padded("fold_", fold); }
std::string horizon_dir(int k) { return padded("k", static_cast<std::size_t>(k)); }

std::string slug(const std::string& strategy) {
    std::string s;
    for (char c : strategy) s += c == '-' ? '_' : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

void prepare_out(const fs::path& out, bool force) {
    if (fs::exists(out) && !fs::is_directory(out)) throw ValidationError("--out " + out.string() + " is not a directory");
    if (fs::exists(out) && !fs::is_empty(out) && !force) {
        throw ValidationError("output directory " + out.string() + " is not empty; pass --force to overwrite");
    }
    fs::create_directories(out);
}

void write_text(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write " + path.string());
    f << text;
}

std::string read_text(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot read " + path.string());
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

// Runs fn(0..n-1) on up to `jobs` threads; the first exception wins.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
    jobs = std::max<std::size_t>(1, std::min(jobs, n));
    if (jobs == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < jobs; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

json manifest_base(const char* command, const RunConfig& config) {
    return {{"command", command},
            {"config_hash", config_hash(config)},
            {"training_hash", training_hash(config)},
            {"config", to_json(config)}};
}

ModelConfig model_config(const RunConfig& config, const FactorPanel& panel) {
    ModelConfig m = config.model;
    m.n_factors = panel.n_factors();
    m.validate();
    return m;
}

std::string metrics_csv(const BacktestReport& r) {
    std::string s = "metric,value\n";
    s += "alpha," + csv::format(r.metrics.alpha) + "\n";
    s += "ir," + csv::format(r.metrics.ir) + "\n";
    s += "md," + csv::format(r.metrics.md) + "\n";
    s += "tt," + csv::format(r.metrics.tt) + "\n";
    s += "n_avg," + csv::format(r.metrics.n_avg) + "\n";
    s += "periods," + std::to_string(r.active_returns.size()) + "\n";
    return s;
}

std::string active_csv(const BacktestReport& r, const FactorPanel& panel) {
    std::string s = "date,active_return\n";
    for (std::size_t i = 0; i < r.active_returns.size(); ++i)
        s += panel.dates[r.weights[i].date_index].iso() + "," + csv::format(r.active_returns[i]) + "\n";
    return s;
}

std::string weights_csv(const BacktestReport& r, const FactorPanel& panel) {
    std::string s = "date,stock_id,weight\n";
    for (const auto& w : r.weights) {
        const auto iso = panel.dates[w.date_index].iso();
        for (std::size_t i = 0; i < w.stock_ids.size(); ++i)
            s += iso + "," + w.stock_ids[i] + "," + csv::format(w.weights[i]) + "\n";
    }
    return s;
}

std::string monotonicity_csv(const MonotonicityReport& r) {
    std::string s = "decile,mean_return\n";
    for (std::size_t g = 0; g < r.decile_mean.size(); ++g)
        s += std::to_string(g + 1) + "," + csv::format(r.decile_mean[g]) + "\n";
    s += "spearman," + csv::format(r.spearman) + "\n";
    return s;
}

std::string heatmap_csv(const Heatmap& h) {
    std::string s = "bucket_start,bucket_end";
    for (const auto& g : h.groups) s += "," + g;
    s += "\n";
    for (const auto& row : h.rows) {
        s += row.bucket_start + "," + row.bucket_end;
        for (double v : row.values) s += "," + csv::format(v);
        s += "\n";
    }
    return s;
}

std::vector<std::string> report_dates(const BacktestReport& r) {
    std::vector<std::string> d;
    for (const auto& w : r.weights) d.push_back(std::to_string(w.date_index));
    return d;
}

struct Evaluated {
    RunConfig config;
    std::unique_ptr<LoadedData> data;
    std::vector<CvSplit> splits;
    std::vector<DateEvaluation> evals;
};

Evaluated evaluate_run(const GlobalOptions& options) {
    if (!options.checkpoint) throw ValidationError("--checkpoint DIR (a train output directory) is required");
    Evaluated e;
    e.config = resolve_config(options);
    e.data = load_data(e.config);
    e.splits = selected_splits(e.config, e.data->panel);
    e.evals = evaluate_checkpoints(e.config, *e.data, e.splits, *options.checkpoint, options.jobs);
    if (e.evals.empty()) throw ValidationError("the selected folds have no test dates");
    return e;
}

}  // namespace

RunConfig resolve_config(const GlobalOptions& options) {
    json j = json::object();
    std::optional<fs::path> path = options.config;
    if (!path && options.checkpoint) path = *options.checkpoint / "resolved_config.json";
    if (path) {
        std::ifstream in(*path);
        if (!in) throw ConfigError("config: cannot open " + path->string());
        try {
            j = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ConfigError("config: " + path->string() + " is not valid JSON: " + e.what());
        }
    }
    if (options.seed) j["seed"] = *options.seed;
    return run_config_from_json(j);
}

LoadedData::LoadedData(FactorPanel p)
    : panel(std::move(p)),
      returns(compute_forward_returns(panel, std::vector<int>(kHorizons.begin(), kHorizons.end()))),
      graphs(panel) {}

std::unique_ptr<LoadedData> load_data(const RunConfig& config) {
    if (config.data.source == "synthetic") {
        return std::make_unique<LoadedData>(generate_synthetic_market(config.data.synthetic).panel);
    }
    const auto& c = config.data.csv;
    PanelFiles files{c.factors, c.prices, c.sectors, std::nullopt};
    if (c.groups) files.groups = fs::path(*c.groups);
    auto data = std::make_unique<LoadedData>(load_panel(files));
    if (c.graph) data->graphs.load_overrides(*c.graph);
    return data;
}

std::vector<CvSplit> selected_splits(const RunConfig& config, const FactorPanel& panel) {
    auto all = make_cv_splits(panel, config.cv.n_folds, config.cv.valid_fraction, config.cv.test_span);
    if (config.cv.folds.empty()) return all;
    std::vector<std::size_t> wanted = config.cv.folds;
    std::sort(wanted.begin(), wanted.end());
    wanted.erase(std::unique(wanted.begin(), wanted.end()), wanted.end());
    std::vector<CvSplit> out;
    for (auto f : wanted) {
        auto it = std::find_if(all.begin(), all.end(), [&](const CvSplit& s) { return s.fold_index == f; });
        if (it == all.end()) throw ConfigError("config: cv.folds names fold " + std::to_string(f) + " which does not exist");
        out.push_back(*it);
    }
    return out;
}

std::vector<DateEvaluation> evaluate_checkpoints(const RunConfig& config, const LoadedData& data,
                                                 std::span<const CvSplit> splits, const fs::path& run_dir,
                                                 std::size_t jobs) {
    const auto owned = owned_test_dates(splits);
    const auto expected = training_hash(config);
    std::vector<std::vector<DateEvaluation>> per_fold(splits.size());
    parallel_for(splits.size(), jobs, [&](std::size_t i) {
        const auto path = run_dir / fold_dir(splits[i].fold_index) / "checkpoint.json";
        if (!fs::exists(path)) throw DataError("missing checkpoint " + path.string());
        const auto ckpt = load_checkpoint(path);
        if (ckpt.config_hash != expected) {
            throw ValidationError("refusing " + path.string() + ": trained under config hash " + ckpt.config_hash +
                                  " but the current config hashes to " + expected);
        }
        if (ckpt.factor_names != data.panel.factor_names()) {
            throw ValidationError("refusing " + path.string() + ": factor names differ from the panel");
        }
        per_fold[i] = evaluate_fold(data.panel, data.graphs, ckpt.config, ckpt.params, ckpt.directions(), owned[i]);
    });
    std::vector<DateEvaluation> out;
    for (auto& f : per_fold) std::move(f.begin(), f.end(), std::back_inserter(out));
    std::sort(out.begin(), out.end(),
              [](const DateEvaluation& a, const DateEvaluation& b) { return a.date_index < b.date_index; });
    return out;
}

void cmd_gen_data(const GlobalOptions& options, std::ostream& log) {
    const RunConfig config = resolve_config(options);
    if (config.data.source != "synthetic") throw ConfigError("gen-data needs data.source = 'synthetic'");
    prepare_out(options.out, options.force);
    const auto market = generate_synthetic_market(config.data.synthetic);
    const auto& panel = market.panel;
    write_panel(panel, options.out);

    json planted = json::array();
    for (std::size_t j = 0; j < market.planted.size(); ++j)
        planted.push_back({{"factor", panel.factors[market.planted[j]].name}, {"sign", market.planted_signs[j]}});
    json files = json::object();
    for (const char* name : {"factors.csv", "prices.csv", "sectors.csv", "factor_groups.csv"})
        files[name] = fnv1a_hex(read_text(options.out / name));
    json manifest = manifest_base("gen-data", config);
    manifest["summary"] = {{"n_stocks", config.data.synthetic.n_stocks},
                           {"n_factors", panel.n_factors()},
                           {"n_dates", panel.n_dates()},
                           {"first_date", panel.dates.front().iso()},
                           {"last_date", panel.dates.back().iso()},
                           {"planted", planted},
                           {"quadratic_factor", panel.factors[market.quadratic_factor].name}};
    manifest["files"] = files;
    write_text(options.out / "manifest.json", manifest.dump(2) + "\n");

    log << "wrote " << options.out.string() << ": " << config.data.synthetic.n_stocks << " stocks, "
        << panel.n_factors() << " factors, " << panel.n_dates() << " dates (" << panel.dates.front().iso() << " to "
        << panel.dates.back().iso() << ")\n";
    log << "planted signal:";
    for (std::size_t j = 0; j < market.planted.size(); ++j)
        log << " " << (market.planted_signs[j] > 0 ? "+" : "-") << panel.factors[market.planted[j]].name;
    if (!market.planted.empty() && config.data.synthetic.quadratic_weight != 0.0)
        log << ", quadratic in " << panel.factors[market.quadratic_factor].name;
    log << "\n";
}

void cmd_train(const GlobalOptions& options, std::ostream& log) {
    const RunConfig config = resolve_config(options);
    prepare_out(options.out, options.force);
    const auto data = load_data(config);
    const auto model = model_config(config, data->panel);
    const auto splits = selected_splits(config, data->panel);
    const auto hash = training_hash(config);

    std::vector<std::optional<TrainingResult>> results(splits.size());
    parallel_for(splits.size(), options.jobs, [&](std::size_t i) {
        results[i] = train({data->panel, data->graphs, data->returns}, splits[i], model, config.training);
    });

    write_text(options.out / "resolved_config.json", to_json(config).dump(2) + "\n");
    json folds = json::array();
    for (std::size_t i = 0; i < splits.size(); ++i) {
        const auto& r = *results[i];
        const fs::path dir = options.out / fold_dir(splits[i].fold_index);
        Checkpoint ckpt{model,
                        r.params,
                        data->panel.factor_names(),
                        r.buffer.factor(),
                        r.buffer.deep(),
                        hash,
                        static_cast<int>(r.best_epoch)};
        fs::create_directories(dir);
        save_checkpoint(ckpt, dir / "checkpoint.json");

        std::string log_csv = "epoch,l_ret,l_up,l_s,l_f,l_e,total,val_l_ret\n";
        for (const auto& e : r.log) {
            log_csv += std::to_string(e.epoch);
            for (double v : {e.l_ret, e.l_up, e.l_s, e.l_f, e.l_e, e.total, e.val_l_ret}) log_csv += "," + csv::format(v);
            log_csv += "\n";
        }
        write_text(dir / "train_log.csv", log_csv);

        const auto dirs = r.buffer.directions();
        std::string dir_csv = "factor,direction,accumulator\n";
        for (std::size_t j = 0; j < dirs.factor.size(); ++j)
            dir_csv += data->panel.factors[j].name + "," + (dirs.factor[j] > 0 ? "1" : "-1") + "," +
                       csv::format(r.buffer.factor()[j]) + "\n";
        for (std::size_t k = 0; k < kNumHorizons; ++k)
            dir_csv += padded("deep_k", static_cast<std::size_t>(kHorizons[k])) + "," + (dirs.deep[k] > 0 ? "1" : "-1") +
                       "," + csv::format(r.buffer.deep()[k]) + "\n";
        write_text(dir / "directions.csv", dir_csv);

        folds.push_back({{"fold", splits[i].fold_index},
                         {"train_dates", splits[i].train_dates.size()},
                         {"valid_dates", splits[i].valid_dates.size()},
                         {"test_dates", splits[i].test_dates.size()},
                         {"epochs", r.log.size()},
                         {"best_epoch", r.best_epoch},
                         {"warnings", r.warnings}});
        log << "fold " << splits[i].fold_index << ": " << r.log.size() << " epochs, best epoch " << r.best_epoch
            << ", final total loss " << csv::format(r.log.back().total) << "\n";
        for (const auto& w : r.warnings) log << "  warning: " << w << "\n";
    }
    json manifest = manifest_base("train", config);
    manifest["folds"] = folds;
    write_text(options.out / "manifest.json", manifest.dump(2) + "\n");
}

void cmd_backtest(const GlobalOptions& options, std::ostream& log) {
    prepare_out(options.out, options.force);
    const Evaluated run = evaluate_run(options);
    const auto& config = run.config;
    const auto& panel = run.data->panel;
    const auto& returns = run.data->returns;

    json horizons = json::array();
    for (int k : config.evaluation.horizons) {
        const auto e2e = assemble_e2e(run.evals, panel, k, config.evaluation.n_groups);
        std::vector<BacktestReport> reports;
        reports.push_back(run_backtest(e2e.automatic, panel, returns, k, "E2E"));
        reports.push_back(run_backtest(e2e.deep_decile, panel, returns, k, "E2E_d"));
        reports.push_back(run_backtest(e2e.approx_decile, panel, returns, k, "E2E_l"));
        for (const auto& b : config.evaluation.baselines)
            reports.push_back(baseline_models(parse_baseline(b), panel, returns, run.splits, k, config.baselines));

        const auto dates = report_dates(reports.front());
        for (const auto& r : reports) {
            if (report_dates(r) != dates) {
                throw RuntimeError("alignment error: strategy " + r.strategy + " was evaluated on different dates");
            }
        }

        const fs::path dir = options.out / horizon_dir(k);
        std::string comparison = "strategy,alpha,ir,md,tt,n_avg\n";
        json strategies = json::array();
        log << "horizon " << k << " (" << dates.size() << " rebalances)\n";
        for (const auto& r : reports) {
            const auto s = slug(r.strategy);
            write_text(dir / ("report_" + s + ".csv"), metrics_csv(r));
            write_text(dir / ("returns_" + s + ".csv"), active_csv(r, panel));
            write_text(dir / ("weights_" + s + ".csv"), weights_csv(r, panel));
            const auto& m = r.metrics;
            comparison += r.strategy + "," + csv::format(m.alpha) + "," + csv::format(m.ir) + "," + csv::format(m.md) +
                          "," + csv::format(m.tt) + "," + csv::format(m.n_avg) + "\n";
            strategies.push_back({{"strategy", r.strategy}, {"warnings", r.warnings}});
            char line[160];
            std::snprintf(line, sizeof line, "  %-8s alpha %8.4f  ir %7.3f  md %6.4f  tt %6.3f  n %6.1f\n",
                          r.strategy.c_str(), m.alpha, m.ir, m.md, m.tt, m.n_avg);
            log << line;
        }
        write_text(dir / "comparison.csv", comparison);
        horizons.push_back({{"horizon", k}, {"rebalances", dates.size()}, {"strategies", strategies}});
    }
    json manifest = manifest_base("backtest", config);
    manifest["horizons"] = horizons;
    write_text(options.out / "manifest.json", manifest.dump(2) + "\n");
}

void cmd_interpret(const GlobalOptions& options, std::ostream& log) {
    prepare_out(options.out, options.force);
    const Evaluated run = evaluate_run(options);
    const auto& config = run.config;
    const auto& panel = run.data->panel;

    json horizons = json::array();
    for (int k : config.evaluation.horizons) {
        const auto e2e = assemble_e2e(run.evals, panel, k, config.evaluation.n_groups);
        const auto heatmap = attention_heatmap(e2e.attention, panel, config.evaluation.heatmap_bucket);
        const auto deep = monotonicity_report(rebalance_scores(e2e.deep_scores, k), panel, run.data->returns, k,
                                              config.evaluation.n_groups);
        const auto approx = monotonicity_report(rebalance_scores(e2e.approx_scores, k), panel, run.data->returns, k,
                                                config.evaluation.n_groups);
        const auto tag = horizon_dir(k);
        write_text(options.out / ("heatmap_" + tag + ".csv"), heatmap_csv(heatmap));
        write_text(options.out / ("monotonicity_deep_" + tag + ".csv"), monotonicity_csv(deep));
        write_text(options.out / ("monotonicity_approx_" + tag + ".csv"), monotonicity_csv(approx));
        horizons.push_back({{"horizon", k},
                            {"heatmap_rows", heatmap.rows.size()},
                            {"spearman_deep", deep.spearman},
                            {"spearman_approx", approx.spearman},
                            {"monotonicity_dates", deep.n_dates}});
        log << "horizon " << k << ": spearman deep " << csv::format(deep.spearman) << ", approx "
            << csv::format(approx.spearman) << ", heatmap " << heatmap.rows.size() << " x " << heatmap.groups.size()
            << "\n";
    }
    json manifest = manifest_base("interpret", config);
    manifest["horizons"] = horizons;
    write_text(options.out / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace fg
