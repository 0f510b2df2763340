#include <exception>
#include <string>

#include "CLI11.hpp"

#include "fg/app/commands.hpp"
#include "fg/core/errors.hpp"

namespace fg {

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Factor-graph portfolio research tool: synthetic data, training, backtests, interpretation"};
    app.require_subcommand(1);
    GlobalOptions opt;
    std::string config, out_dir = "out", checkpoint;
    std::uint64_t seed = 0;
    auto* config_opt = app.add_option("--config", config, "JSON run config; omitted keys keep their defaults");
    auto* seed_opt = app.add_option("--seed", seed, "Overrides the config's seed");
    app.add_option("--out", out_dir, "Output directory")->capture_default_str();
    app.add_flag("--force", opt.force, "Write into a non-empty output directory");
    app.add_option("--jobs", opt.jobs, "Folds processed in parallel")->capture_default_str()->check(CLI::PositiveNumber);
    auto* ckpt_opt = app.add_option("--checkpoint", checkpoint, "Directory written by `train`");

    std::function<void(const GlobalOptions&, std::ostream&)> command;
    app.add_subcommand("gen-data", "Write a synthetic panel as CSVs plus a manifest")->fallthrough()->callback([&] {
        command = cmd_gen_data;
    });
    app.add_subcommand("train", "Train every configured fold; checkpoints, logs and directions per fold")
        ->fallthrough()
        ->callback([&] { command = cmd_train; });
    app.add_subcommand("backtest", "Backtest the trained model and the baselines on the test folds")
        ->fallthrough()
        ->callback([&] { command = cmd_backtest; });
    app.add_subcommand("interpret", "Attention heatmaps and decile monotonicity of the trained model")
        ->fallthrough()
        ->callback([&] { command = cmd_interpret; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }
    if (*config_opt) opt.config = config;
    if (*seed_opt) opt.seed = seed;
    if (*ckpt_opt) opt.checkpoint = checkpoint;
    opt.out = out_dir;

    try {
        command(opt, out);
        return 0;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace fg
